#pragma once

#include "qsl/grape.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace qsl {

/// A pulse profile plus optional metadata, serialized as
///
///   {"n_steps": N, "dt": dt, "u1": [...], "u2": [...],
///    "meta": {"params": {...}, "transfer": {"from": "+X", "to": "-X"},
///             "fidelity": F}}
///
/// Doubles round-trip bit-exactly. Absent metadata fields are omitted.
struct PulseDocument {
    PulseSequence pulse;
    std::optional<ModelParams> params;
    std::optional<Transfer> transfer;
    std::optional<double> fidelity;
};

std::string to_json_string(const PulseDocument &doc);
/// Throws ValidationError naming the offending key on schema violations.
PulseDocument pulse_document_from_json(std::string_view text);

/// File wrappers; I/O failures raise IoError with the path.
void write_pulse_file(const std::filesystem::path &path, const PulseDocument &doc);
PulseDocument read_pulse_file(const std::filesystem::path &path);

} // namespace qsl
