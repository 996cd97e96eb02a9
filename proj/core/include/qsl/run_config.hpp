#pragma once

#include "qsl/grape.hpp"
#include "qsl/sweeps.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qsl {

enum class Subcommand { Optimize, Propagate, SweepTime, SweepDetuning, SweepChi, Contour, States };

std::string_view to_string(Subcommand cmd);
/// Throws ValidationError listing the valid subcommands.
Subcommand parse_subcommand(std::string_view text);

/// Fully resolved run configuration. Built by parse_config; every field is
/// set, including sweep grids that default per subcommand.
struct RunConfig {
    Subcommand subcommand = Subcommand::Optimize;
    Transfer transfer;
    ModelParams params = ModelParams::flux_qubit();
    GrapeConfig grape;
    /// "constant", "random", "file" or "warm_start"
    std::string initial_guess = "constant";
    std::string initial_file;
    /// Transfer whose optimum seeds this run, e.g. "+X->+Z".
    std::optional<Transfer> warm_start_from;

    std::vector<GridAxis> sweep_axes;
    bool reoptimize = true;
    bool warm_chain = true;

    std::string pulse_file;
    int sample_stride = 1;

    std::string output_root;  ///< empty: $QSL_OUTPUT_ROOT, else ./runs
    std::string output_dir;   ///< explicit run directory, overrides root/label
    std::string output_label; ///< empty: the subcommand name
    bool force = false;

    std::uint64_t seed = 0;
    int workers = 1;
};

/// Inputs to parse_config, lowest precedence first: defaults, the file,
/// `sets` in order, then positional transfer labels.
struct ConfigSources {
    std::optional<std::filesystem::path> file;
    std::vector<std::pair<std::string, std::string>> sets; ///< dotted key, value text
    std::vector<std::string> positionals;                 ///< [from [to]]
};

/// Strict: unknown keys, type mismatches and invariant violations raise
/// ValidationError naming the key path. Values in `sets` are read as JSON;
/// string keys also take unquoted text verbatim.
RunConfig parse_config(const ConfigSources &sources);
RunConfig parse_config_text(std::string_view json_text);

/// Canonical flat JSON (sorted keys, indent 2). Parses back to an equal
/// configuration.
std::string to_canonical_json(const RunConfig &cfg);

/// Executes the subcommand and returns the process exit code: 0, or 2/3/4
/// for validation, numerical and I/O failures. One summary line goes to
/// `out`, diagnostics to `err`.
int run(const RunConfig &cfg, std::ostream &out, std::ostream &err);

/// All named states with amplitudes and Bloch vectors.
std::string list_states();

} // namespace qsl
