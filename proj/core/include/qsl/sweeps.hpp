#pragma once

#include "qsl/grape.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qsl {

enum class SweepParam { StepDuration, StepCount, Detuning, Chi };
enum class Spacing { Linear, Log };

std::string_view to_string(SweepParam param);
std::string_view to_string(Spacing spacing);

struct GridAxis {
    SweepParam param = SweepParam::StepDuration;
    double min = 0.0;
    double max = 0.0;
    int count = 2;
    Spacing spacing = Spacing::Linear;

    /// count >= 2, min < max, positive bounds for log spacing, distinct
    /// integers for a StepCount axis.
    void validate() const;
    /// Grid values in order, min and max included. StepCount values are
    /// rounded to integers.
    std::vector<double> values() const;
};

struct SweepSpec {
    Transfer transfer;
    std::vector<GridAxis> axes;
    GrapeConfig grape;
    ModelParams params = ModelParams::flux_qubit();
    /// Re-run GRAPE at every grid point; otherwise propagate `fixed_pulse`
    /// (optimized once at the base configuration when absent).
    bool reoptimize = true;
    /// Also start each point from its neighbour's optimum, rescaled to the
    /// point's step count and duration; the better result is kept.
    bool warm_chain = true;
    int workers = 1;
    std::optional<PulseSequence> fixed_pulse;
};

struct SweepRecord {
    std::vector<double> coords; ///< one value per axis
    int n_steps = 0;
    double dt = 0.0;
    double total_time = 0.0;
    double chi = 0.0;
    double delta_minus = 0.0;
    double fidelity = 0.0;
    bool ok = false;
    std::string status; ///< "ok" or "failed: <reason>"
    std::optional<PulseSequence> pulse;
    std::optional<PulseSequence> chain_seed; ///< neighbour optimum used as an extra start
    BlochVector final_bloch;
    int iterations = 0;
    std::string convergence;
};

struct Provenance {
    std::string config_json; ///< canonical echo of the SweepSpec
    std::string version;
    std::uint64_t seed = 0;
    std::string created_at; ///< the only non-reproducible field
};

struct PulseBand {
    std::vector<double> u1_min, u1_max, u2_min, u2_max;
};

struct SweepResult {
    std::string kind; ///< time | detuning | chi | contour
    SweepSpec spec;   ///< as run, with fixed_pulse filled in when used
    std::vector<SweepRecord> records;
    Provenance provenance;

    /// Index of the highest-fidelity successful record.
    std::optional<std::size_t> argmax() const;
    /// Rows follow axes[0], columns axes[1]; failed points are NaN.
    std::vector<std::vector<double>> fidelity_matrix() const;
    /// Pointwise min/max of every optimized pulse (all must share n_steps).
    PulseBand band() const;
};

/// Piecewise-constant resampling of `pulse` onto n_steps x dt, scaled by
/// the ratio of total durations so the pulse area is preserved.
PulseSequence rescale_pulse(const PulseSequence &pulse, int n_steps, double dt);

/// Runs one grid point. Exposed so any record can be re-run from its
/// provenance: pass the same spec, coords and the record's chain_seed.
SweepRecord run_sweep_point(const SweepSpec &spec, const std::vector<double> &coords,
                            const std::optional<PulseSequence> &chain_seed);

/// One axis over StepDuration (fixed N) or StepCount (fixed dt).
SweepResult sweep_time(const SweepSpec &spec);
/// One Detuning axis, symmetric about and including zero.
SweepResult sweep_detuning(const SweepSpec &spec);
/// One log-spaced Chi axis.
SweepResult sweep_chi(const SweepSpec &spec);
/// Axes [Chi (log), StepDuration (linear)], records row-major.
SweepResult contour_chi_time(const SweepSpec &spec);

std::string sweep_spec_json(const SweepSpec &spec);

/// Creates `root/<stamp>_<label>` (or `explicit_dir` when non-empty).
/// An existing directory is an IoError unless `force`.
std::filesystem::path create_run_directory(const std::filesystem::path &root, const std::string &label,
                                           const std::filesystem::path &explicit_dir, bool force);

/// sweep.csv (+ band.csv for chi sweeps), point_NNNN.json per record and
/// index.json with the provenance block.
void write_sweep_outputs(const SweepResult &result, const std::filesystem::path &dir);
void write_sweep_csv(const SweepResult &result, const std::filesystem::path &path);

struct BlochExport {
    Trajectory trajectory;
    double fidelity; ///< final state against transfer.to
};

/// CSV of t,x,y,z,purity at the given stride; one header row.
BlochExport bloch_trajectory_export(const Transfer &transfer, const PulseSequence &pulse,
                                    const ModelParams &params, const std::filesystem::path &path,
                                    const PropagationOptions &options = {});
BlochExport bloch_trajectory_export(const DensityMatrix &rho0, const DensityMatrix &target,
                                    const PulseSequence &pulse, const ModelParams &params,
                                    const std::filesystem::path &path, const PropagationOptions &options = {});

/// Formats with 17 significant digits.
std::string format_double(double value);

} // namespace qsl
