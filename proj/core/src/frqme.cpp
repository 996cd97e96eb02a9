#include "qsl/frqme.hpp"

#include "generator_kernel.hpp"
#include "qsl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsl {

namespace {

using detail::apply_generator;
using detail::step_rates;
using detail::StepRates;

constexpr double kProbabilitySumTolerance = 1e-12;
constexpr double kTraceFailure = 1e-6;

template <typename... Args>
[[noreturn]] void fail_validation(const Args &...parts)
{
    std::ostringstream os;
    (os << ... << parts);
    throw ValidationError(os.str());
}

// RK4 over every control interval; `observe(step_index, micro_index, rho)`
// is called after each micro-step.
template <typename Observer>
CMat2 integrate(const CMat2 &rho0, const PulseSequence &pulse, const ModelParams &params,
                int substeps, TrajectoryDiagnostics &diag, Observer &&observe)
{
    CMat2 rho = rho0;
    const double h = pulse.dt / substeps;
    const int n = pulse.n_steps();
    for (int j = 0; j < n; ++j) {
        const StepRates rates = step_rates(pulse.u1[j], pulse.u2[j], params);
        const double step_start = j * pulse.dt;
        for (int s = 0; s < substeps; ++s) {
            const double t = step_start + s * h;
            const CMat2 k1 = apply_generator(rho, t, rates);
            const CMat2 k2 = apply_generator(rho + (0.5 * h) * k1, t + 0.5 * h, rates);
            const CMat2 k3 = apply_generator(rho + (0.5 * h) * k2, t + 0.5 * h, rates);
            const CMat2 k4 = apply_generator(rho + h * k3, t + h, rates);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            if (!rho.is_finite()) {
                std::ostringstream os;
                os << "propagate: non-finite state at t' = " << t + h << " (control step " << j << ")";
                throw NumericalError(os.str());
            }
            const CMat2 adj = rho.adjoint();
            diag.max_hermiticity_deviation =
                std::max(diag.max_hermiticity_deviation, (rho - adj).max_abs());
            rho = 0.5 * (rho + adj);

            const DensityMatrix view = DensityMatrix::unchecked(rho);
            const double trace_dev = view.trace_deviation();
            diag.max_trace_deviation = std::max(diag.max_trace_deviation, trace_dev);
            if (trace_dev > kTraceFailure) {
                std::ostringstream os;
                os << "propagate: trace drifted by " << trace_dev << " at t' = " << t + h
                   << "; reduce the step size (increase substeps)";
                throw IntegrationError(os.str());
            }
            diag.min_eigenvalue = std::min(diag.min_eigenvalue, view.min_eigenvalue());
            observe(j, s, rho);
        }
    }
    return rho;
}

} // namespace

double spectral_density(double frequency, double chi)
{
    const double x = frequency * chi;
    return chi / (1.0 + x * x);
}

ModelParams ModelParams::flux_qubit() { return ModelParams(572.3, 0.0, 0.033, 0.8, 0.2); }

ModelParams::ModelParams(double omega_ratio, double delta_minus, double chi, double p1, double p2,
                         Channels channels)
    : omega_ratio_(omega_ratio),
      delta_minus_(delta_minus),
      delta_plus_(delta_minus + 2.0 * omega_ratio),
      chi_(chi),
      p1_(p1),
      p2_(p2),
      channels_(channels),
      beta1_(0.0),
      beta2_(0.0)
{
    if (!std::isfinite(omega_ratio) || omega_ratio <= 0.0) {
        fail_validation("params.omega_ratio must be positive and finite, got ", omega_ratio);
    }
    if (!std::isfinite(delta_minus)) {
        fail_validation("params.delta_minus must be finite, got ", delta_minus);
    }
    if (!std::isfinite(chi) || chi <= 0.0) {
        fail_validation("params.chi must be positive and finite, got ", chi);
    }
    if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0)) {
        fail_validation("params.p1/params.p2 must lie in [0, 1], got ", p1, ", ", p2);
    }
    if (std::abs(p1 + p2 - 1.0) >= kProbabilitySumTolerance) {
        fail_validation("params.p1 + params.p2 must equal 1, got ", p1 + p2);
    }
    beta1_ = spectral_density(delta_plus_, chi_);
    beta2_ = spectral_density(delta_minus_, chi_);
}

ModelParams ModelParams::from_lab_frame(double drive_frequency, double qubit_frequency, double coupling, double chi,
                                        double p1, double p2, Channels channels)
{
    if (!std::isfinite(coupling) || coupling <= 0.0) fail_validation("coupling frequency must be positive, got ", coupling);
    return ModelParams(qubit_frequency / coupling, (drive_frequency - qubit_frequency) / coupling, chi, p1, p2,
                       channels);
}

ModelParams ModelParams::with_detuning(double delta_minus) const
{
    return ModelParams(omega_ratio_, delta_minus, chi_, p1_, p2_, channels_);
}

ModelParams ModelParams::with_chi(double chi) const
{
    return ModelParams(omega_ratio_, delta_minus_, chi, p1_, p2_, channels_);
}

ModelParams ModelParams::with_channels(Channels channels) const
{
    return ModelParams(omega_ratio_, delta_minus_, chi_, p1_, p2_, channels);
}

PulseSequence PulseSequence::constant(int n_steps, double dt, double u1, double u2)
{
    if (n_steps < 1) fail_validation("pulse needs at least one step, got ", n_steps);
    PulseSequence p{dt, std::vector<double>(n_steps, u1), std::vector<double>(n_steps, u2)};
    p.validate();
    return p;
}

Complex PulseSequence::alpha(int step) const { return {u1.at(step) / 4.0, -u2.at(step) / 4.0}; }

void PulseSequence::validate() const
{
    if (u1.empty()) fail_validation("pulse has no steps");
    if (u1.size() != u2.size()) {
        fail_validation("pulse u1/u2 length mismatch: ", u1.size(), " vs ", u2.size());
    }
    if (!std::isfinite(dt) || dt <= 0.0) fail_validation("pulse dt must be positive, got ", dt);
    for (std::size_t j = 0; j < u1.size(); ++j) {
        if (!std::isfinite(u1[j]) || !std::isfinite(u2[j])) {
            fail_validation("pulse amplitude at step ", j, " is not finite");
        }
    }
}

CMat2 generator(const CMat2 &rho, double t, double u1, double u2, const ModelParams &params)
{
    return apply_generator(rho, t, step_rates(u1, u2, params));
}

CMat2 generator(const DensityMatrix &rho, double t, double u1, double u2, const ModelParams &params)
{
    return generator(rho.matrix(), t, u1, u2, params);
}

void PropagationOptions::validate() const
{
    if (substeps < 1) fail_validation("substeps must be >= 1, got ", substeps);
    if (sample_stride < 1) fail_validation("sample_stride must be >= 1, got ", sample_stride);
}

void TrajectoryDiagnostics::merge(const TrajectoryDiagnostics &other)
{
    max_trace_deviation = std::max(max_trace_deviation, other.max_trace_deviation);
    max_hermiticity_deviation = std::max(max_hermiticity_deviation, other.max_hermiticity_deviation);
    min_eigenvalue = std::min(min_eigenvalue, other.min_eigenvalue);
}

Trajectory propagate(const DensityMatrix &rho0, const PulseSequence &pulse, const ModelParams &params,
                     const PropagationOptions &options)
{
    pulse.validate();
    options.validate();

    Trajectory traj;
    traj.diagnostics.min_eigenvalue = rho0.min_eigenvalue();
    traj.samples.push_back({0.0, rho0, bloch_vector(rho0)});

    const int n = pulse.n_steps();
    const int substeps = options.substeps;
    const double h = pulse.dt / substeps;
    long counter = 0;
    integrate(rho0.matrix(), pulse, params, substeps, traj.diagnostics,
              [&](int j, int s, const CMat2 &rho) {
                  ++counter;
                  const bool last = (j == n - 1 && s == substeps - 1);
                  if (!last && counter % options.sample_stride != 0) return;
                  // The final time is pinned to N dt exactly.
                  const double t = last ? pulse.total_time() : j * pulse.dt + (s + 1) * h;
                  const DensityMatrix state = DensityMatrix::unchecked(rho);
                  traj.samples.push_back({t, state, bloch_vector(state)});
              });
    return traj;
}

FinalState final_state(const DensityMatrix &rho0, const PulseSequence &pulse, const ModelParams &params,
                       int substeps)
{
    pulse.validate();
    PropagationOptions{substeps, 1}.validate();
    TrajectoryDiagnostics diag;
    diag.min_eigenvalue = rho0.min_eigenvalue();
    const CMat2 rho = integrate(rho0.matrix(), pulse, params, substeps, diag, [](int, int, const CMat2 &) {});
    return {DensityMatrix::unchecked(rho), diag};
}

EffectiveFinalState effective_final_state(const DensityMatrix &rho0, const PulseSequence &pulse,
                                          const ModelParams &params, const DensityMatrix &target,
                                          int substeps)
{
    FinalState fs = final_state(rho0, pulse, params, substeps);
    const double f = uhlmann_fidelity(target, fs.rho);
    return {fs.rho, f};
}

} // namespace qsl
