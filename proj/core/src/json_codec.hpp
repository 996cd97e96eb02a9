#pragma once

// nlohmann/json conversions shared by the pulse, sweep and config writers.

#include "qsl/grape.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace qsl::detail {

using json = nlohmann::json;

json to_json(const ModelParams &params);
/// Reads the object written by to_json(ModelParams); `where` prefixes error
/// messages (e.g. "meta.params").
ModelParams params_from_json(const json &j, std::string_view where);

json to_json(const PulseSequence &pulse);
json to_json(const GrapeConfig &cfg);

/// Number member `key` of object `j`, or ValidationError naming where.key.
double require_number(const json &j, std::string_view key, std::string_view where);

void write_text_file(const std::filesystem::path &path, std::string_view content);
std::string read_text_file(const std::filesystem::path &path);

} // namespace qsl::detail
