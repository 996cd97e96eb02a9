#include "qsl/grape.hpp"

#include "qsl/errors.hpp"
#include "transfer_map.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace qsl {

namespace {

template <typename... Args>
[[noreturn]] void fail_validation(const Args &...parts)
{
    std::ostringstream os;
    (os << ... << parts);
    throw ValidationError(os.str());
}

std::vector<double> flatten(const PulseSequence &p)
{
    std::vector<double> x(p.u1);
    x.insert(x.end(), p.u2.begin(), p.u2.end());
    return x;
}

PulseSequence unflatten(const std::vector<double> &x, double dt)
{
    const auto n = static_cast<std::ptrdiff_t>(x.size() / 2);
    return {dt, {x.begin(), x.begin() + n}, {x.begin() + n, x.end()}};
}

// Zeroes components that point out of the box at an active bound.
double projected_max_norm(const std::vector<double> &x, const std::vector<double> &g, double u_max)
{
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool pinned = (x[i] >= u_max && g[i] > 0.0) || (x[i] <= -u_max && g[i] < 0.0);
        if (!pinned) m = std::max(m, std::abs(g[i]));
    }
    return m;
}

} // namespace

InitialGuess InitialGuess::constant(double u1, double u2)
{
    InitialGuess g;
    g.kind = Kind::Constant;
    g.u1 = u1;
    g.u2 = u2;
    return g;
}

InitialGuess InitialGuess::from_pulse(PulseSequence pulse)
{
    InitialGuess g;
    g.kind = Kind::Pulse;
    g.pulse = std::move(pulse);
    return g;
}

InitialGuess InitialGuess::random(double amplitude)
{
    InitialGuess g;
    g.kind = Kind::Random;
    g.random_amplitude = amplitude;
    return g;
}

void GrapeConfig::validate() const
{
    if (n_steps < 1) fail_validation("grape.n_steps must be >= 1, got ", n_steps);
    if (!std::isfinite(dt) || dt <= 0.0) fail_validation("grape.dt must be positive, got ", dt);
    if (max_iterations < 0) fail_validation("grape.max_iterations must be >= 0, got ", max_iterations);
    if (!(f_tol >= 0.0)) fail_validation("grape.f_tol must be >= 0, got ", f_tol);
    if (f_tol_window < 1) fail_validation("grape.f_tol_window must be >= 1, got ", f_tol_window);
    if (!(g_tol >= 0.0)) fail_validation("grape.g_tol must be >= 0, got ", g_tol);
    if (!(h_fd > 0.0) || !std::isfinite(h_fd)) fail_validation("grape.h_fd must be positive, got ", h_fd);
    if (!(h0 > 0.0) || !std::isfinite(h0)) fail_validation("grape.h0 must be positive, got ", h0);
    if (!(shrink > 0.0 && shrink < 1.0)) fail_validation("grape.shrink must lie in (0, 1), got ", shrink);
    if (max_shrinks < 1) fail_validation("grape.max_shrinks must be >= 1, got ", max_shrinks);
    if (!(u_max > 0.0) || !std::isfinite(u_max)) fail_validation("grape.u_max must be positive, got ", u_max);
    if (substeps < 1) fail_validation("grape.substeps must be >= 1, got ", substeps);
    if (workers < 1) fail_validation("workers must be >= 1, got ", workers);
    if (initial_guess.kind == InitialGuess::Kind::Pulse) {
        initial_guess.pulse.validate();
        if (initial_guess.pulse.n_steps() != n_steps) {
            fail_validation("initial pulse has ", initial_guess.pulse.n_steps(), " steps, config expects ",
                            n_steps);
        }
    }
    if (initial_guess.kind == InitialGuess::Kind::Random && !(initial_guess.random_amplitude >= 0.0)) {
        fail_validation("grape.random_amplitude must be >= 0");
    }
}

PulseSequence GrapeConfig::initial_pulse() const
{
    validate();
    switch (initial_guess.kind) {
    case InitialGuess::Kind::Constant:
        return PulseSequence::constant(n_steps, dt, initial_guess.u1, initial_guess.u2);
    case InitialGuess::Kind::Pulse: {
        PulseSequence p = initial_guess.pulse;
        p.dt = dt;
        return p;
    }
    case InitialGuess::Kind::Random: {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> dist(-initial_guess.random_amplitude,
                                                    initial_guess.random_amplitude);
        PulseSequence p = PulseSequence::constant(n_steps, dt, 0.0, 0.0);
        for (double &u : p.u1) u = dist(rng);
        for (double &u : p.u2) u = dist(rng);
        return p;
    }
    }
    return PulseSequence::constant(n_steps, dt, 0.0, 0.0);
}

std::string_view to_string(ConvergenceReason reason)
{
    switch (reason) {
    case ConvergenceReason::FTol: return "f_tol";
    case ConvergenceReason::GTol: return "g_tol";
    case ConvergenceReason::MaxIterations: return "max_iter";
    case ConvergenceReason::Stall: return "stall";
    }
    return "?";
}

std::string to_string(const Transfer &transfer)
{
    return std::string(to_string(transfer.from)) + "->" + std::string(to_string(transfer.to));
}

double objective(const PulseSequence &pulse, const DensityMatrix &rho0, const DensityMatrix &target,
                 const ModelParams &params, int substeps)
{
    const double f = effective_final_state(rho0, pulse, params, target, substeps).fidelity;
    if (!std::isfinite(f)) throw NumericalError("objective: non-finite fidelity");
    return f;
}

std::vector<double> gradient(const PulseSequence &pulse, const DensityMatrix &rho0,
                             const DensityMatrix &target, const ModelParams &params, double h_fd,
                             int substeps, int workers)
{
    pulse.validate();
    if (!(h_fd > 0.0)) fail_validation("gradient: h_fd must be positive, got ", h_fd);
    if (substeps < 1) fail_validation("gradient: substeps must be >= 1, got ", substeps);
    const detail::TransferEvaluator eval(rho0, target, params, pulse.dt, substeps);
    return eval.gradient(flatten(pulse), h_fd, workers);
}

namespace {

OptimizationReport ascend(const GrapeConfig &cfg, std::vector<double> x, const detail::TransferEvaluator &eval)
{
    for (double &u : x) u = std::clamp(u, -cfg.u_max, cfg.u_max);

    OptimizationReport report;
    double f = eval.fidelity(x);
    report.fidelity_history.push_back(f);

    double step = cfg.h0;
    std::vector<double> prev_x, prev_g;
    std::vector<double> trial(x.size());
    report.reason = ConvergenceReason::MaxIterations;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        const std::vector<double> g = eval.gradient(x, cfg.h_fd, cfg.workers);
        if (projected_max_norm(x, g, cfg.u_max) < cfg.g_tol) {
            report.reason = ConvergenceReason::GTol;
            break;
        }

        // Trial length: Barzilai-Borwein estimate from the last accepted
        // move when F looked concave along it, otherwise twice the last
        // accepted length; capped at h0. Backtrack until F improves.
        double h = std::min(cfg.h0, 2.0 * step);
        if (!prev_g.empty()) {
            double ss = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double s = x[i] - prev_x[i];
                ss += s * s;
                sy += s * (g[i] - prev_g[i]);
            }
            if (sy < 0.0 && ss > 0.0) h = std::min(cfg.h0, ss / -sy);
        }

        bool accepted = false;
        double f_trial = f;
        for (int shrinks = 0; shrinks <= cfg.max_shrinks; ++shrinks, h *= cfg.shrink) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                trial[i] = std::clamp(x[i] + h * g[i], -cfg.u_max, cfg.u_max);
            }
            if (trial == x) break;
            try {
                f_trial = eval.fidelity(trial);
            } catch (const NumericalError &) {
                continue; // a step long enough to break positivity is just rejected
            }
            if (f_trial > f) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            report.reason = ConvergenceReason::Stall;
            break;
        }

        step = h;
        prev_x = x;
        prev_g = g;
        x.swap(trial);
        f = f_trial;
        report.fidelity_history.push_back(f);
        report.iterations = iter + 1;

        const auto k = report.fidelity_history.size() - 1;
        const auto w = static_cast<std::size_t>(cfg.f_tol_window);
        if (k >= w && report.fidelity_history[k] - report.fidelity_history[k - w] < cfg.f_tol) {
            report.reason = ConvergenceReason::FTol;
            break;
        }
    }
    report.pulse = unflatten(x, cfg.dt);
    report.final_fidelity = f;
    return report;
}

// The seeds optimize() tries: the configured start and, for a constant seed
// with sign_restarts on, its mirror images under u1 -> -u1 and u2 -> -u2.
std::vector<std::vector<double>> starting_points(const GrapeConfig &cfg)
{
    std::vector<std::vector<double>> starts{flatten(cfg.initial_pulse())};
    if (!cfg.sign_restarts || cfg.initial_guess.kind != InitialGuess::Kind::Constant) return starts;
    const double a = cfg.initial_guess.u1, b = cfg.initial_guess.u2;
    for (const auto &[s1, s2] : {std::pair{1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}) {
        if ((s1 < 0.0 && a == 0.0) || (s2 < 0.0 && b == 0.0)) continue;
        starts.push_back(flatten(PulseSequence::constant(cfg.n_steps, cfg.dt, s1 * a, s2 * b)));
    }
    return starts;
}

} // namespace

OptimizationReport optimize(const GrapeConfig &cfg, const DensityMatrix &rho0, const DensityMatrix &target,
                            const ModelParams &params)
{
    const auto started = std::chrono::steady_clock::now();
    cfg.validate();
    const detail::TransferEvaluator eval(rho0, target, params, cfg.dt, cfg.substeps);

    std::optional<OptimizationReport> best;
    for (std::vector<double> &start : starting_points(cfg)) {
        OptimizationReport r = ascend(cfg, std::move(start), eval);
        if (!best || r.final_fidelity > best->final_fidelity) best = std::move(r);
    }

    OptimizationReport report = std::move(*best);
    report.trajectory = propagate(rho0, report.pulse, params, {cfg.substeps, 1});
    // Report the fidelity of the reference integrator so it agrees exactly
    // with objective() and with re-propagating the returned pulse.
    report.final_fidelity = uhlmann_fidelity(target, report.trajectory.final_state());
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

InitialGuess warm_start(const OptimizationReport &from, const GrapeConfig &cfg)
{
    const PulseSequence &p = from.pulse;
    if (p.n_steps() != cfg.n_steps) {
        fail_validation("warm_start: source pulse has ", p.n_steps(), " steps, target config has ",
                        cfg.n_steps);
    }
    if (std::abs(p.dt - cfg.dt) > 1e-12 * std::max(1.0, std::abs(cfg.dt))) {
        fail_validation("warm_start: source dt ", p.dt, " differs from target dt ", cfg.dt);
    }
    return InitialGuess::from_pulse(p);
}

} // namespace qsl
