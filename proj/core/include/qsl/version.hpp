#pragma once

#include <string_view>

namespace qsl {

/// Project version baked in at build time, echoed into every provenance block.
std::string_view library_version();

} // namespace qsl
