#pragma once

#include "qsl/frqme.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qsl {

struct InitialGuess {
    enum class Kind { Constant, Pulse, Random };

    Kind kind = Kind::Constant;
    double u1 = 0.1;
    double u2 = 0.1;
    PulseSequence pulse;          ///< Kind::Pulse (file or warm start)
    double random_amplitude = 1.0; ///< Kind::Random draws uniform in [-a, a]

    static InitialGuess constant(double u1, double u2);
    static InitialGuess from_pulse(PulseSequence pulse);
    static InitialGuess random(double amplitude);
};

struct GrapeConfig {
    int n_steps = 20;
    double dt = 0.075;
    int max_iterations = 2000;
    double f_tol = 1e-8;  ///< on F(k) - F(k - f_tol_window)
    int f_tol_window = 5;
    double g_tol = 1e-8;  ///< on the projected gradient's max norm
    double h_fd = 1e-4;
    double h0 = 100.0;    ///< upper bound on the line-search step length
    double shrink = 0.5;
    int max_shrinks = 60;
    double u_max = 50.0;
    int substeps = PropagationOptions::kDefaultSubsteps;
    InitialGuess initial_guess;
    /// For a constant seed (a, b), also ascend from (a, -b), (-a, b) and
    /// (-a, -b) and keep the best result.
    bool sign_restarts = true;
    std::uint64_t seed = 0;
    int workers = 1;

    double total_time() const { return n_steps * dt; }
    void validate() const;
    /// The starting pulse this configuration describes.
    PulseSequence initial_pulse() const;
};

enum class ConvergenceReason { FTol, GTol, MaxIterations, Stall };

std::string_view to_string(ConvergenceReason reason);

struct Transfer {
    StateLabel from = StateLabel::PlusX;
    StateLabel to = StateLabel::MinusX;

    friend bool operator==(const Transfer &, const Transfer &) = default;
};

/// "+X->-X"
std::string to_string(const Transfer &transfer);

struct OptimizationReport {
    PulseSequence pulse;
    /// Accepted-iterate fidelities from the transfer-map evaluator; entry 0
    /// is the starting pulse.
    std::vector<double> fidelity_history;
    /// Fidelity of `trajectory`'s final state (direct RK4 propagation).
    double final_fidelity = 0.0;
    int iterations = 0;
    ConvergenceReason reason = ConvergenceReason::MaxIterations;
    Trajectory trajectory;
    double wall_time_seconds = 0.0;
};

/// Uhlmann fidelity of the propagated final state against `target`.
double objective(const PulseSequence &pulse, const DensityMatrix &rho0, const DensityMatrix &target,
                 const ModelParams &params, int substeps = PropagationOptions::kDefaultSubsteps);

/// Central finite-difference gradient of objective(). Layout: entries
/// [0, N) are dF/du1[j], entries [N, 2N) are dF/du2[j].
std::vector<double> gradient(const PulseSequence &pulse, const DensityMatrix &rho0,
                             const DensityMatrix &target, const ModelParams &params, double h_fd,
                             int substeps = PropagationOptions::kDefaultSubsteps, int workers = 1);

/// Projected gradient ascent on F with a monotone backtracking line search.
/// The fidelity history belongs to the winning start when sign restarts
/// are enabled.
OptimizationReport optimize(const GrapeConfig &cfg, const DensityMatrix &rho0, const DensityMatrix &target,
                            const ModelParams &params);

/// The optimized amplitudes of `from`, as an initial guess for `cfg`.
/// Throws ValidationError unless n_steps and dt match.
InitialGuess warm_start(const OptimizationReport &from, const GrapeConfig &cfg);

} // namespace qsl
