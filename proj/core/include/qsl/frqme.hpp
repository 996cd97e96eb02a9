#pragma once

#include "qsl/qops.hpp"

#include <limits>
#include <vector>

namespace qsl {

/// Switches for the individual dissipation channels. Everything on is the
/// physical model; the others exist for analytic checks and for attributing
/// loss to the drive-induced versus environmental parts.
struct Channels {
    bool environment = true;
    bool did_lindblad = true; ///< |alpha|^2 beta Lindblad pair
    bool did_cross = true;    ///< (alpha^2 + alpha*^2)/2 beta2 double commutators

    static constexpr Channels all() { return {}; }
    static constexpr Channels none() { return {false, false, false}; }
    friend bool operator==(const Channels &, const Channels &) = default;
};

/// Lorentzian spectral density chi / (1 + (x chi)^2) (real part only).
double spectral_density(double frequency, double chi);

/// Dimensionless constants of the scaled master equation. Every frequency is
/// in units of the system-bath coupling; the counter-rotating frequency is
/// always derived as delta_minus + 2 omega_ratio, and beta1/beta2 are
/// recomputed from it on construction.
class ModelParams {
public:
    /// Superconducting flux qubit set: omega_ratio 572.3, resonant drive,
    /// chi 0.033, P1 0.8, P2 0.2.
    static ModelParams flux_qubit();

    ModelParams(double omega_ratio, double delta_minus, double chi, double p1, double p2,
                Channels channels = Channels::all());
    /// Scales lab-frame drive frequency, qubit frequency and coupling
    /// strength into omega_ratio and delta_minus.
    static ModelParams from_lab_frame(double drive_frequency, double qubit_frequency, double coupling, double chi,
                                      double p1, double p2, Channels channels = Channels::all());

    double omega_ratio() const { return omega_ratio_; }
    double delta_minus() const { return delta_minus_; }
    double delta_plus() const { return delta_plus_; }
    double chi() const { return chi_; }
    double p1() const { return p1_; }
    double p2() const { return p2_; }
    const Channels &channels() const { return channels_; }

    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }
    double beta() const { return beta1_ + beta2_; }

    ModelParams with_detuning(double delta_minus) const;
    ModelParams with_chi(double chi) const;
    ModelParams with_channels(Channels channels) const;

    friend bool operator==(const ModelParams &, const ModelParams &) = default;

private:
    double omega_ratio_;
    double delta_minus_;
    double delta_plus_;
    double chi_;
    double p1_;
    double p2_;
    Channels channels_;
    double beta1_;
    double beta2_;
};

/// Piecewise-constant controls: step j holds (u1[j], u2[j]) for dt, giving
/// alpha = (u1 - i u2) / 4 over that step.
struct PulseSequence {
    double dt = 0.0;
    std::vector<double> u1;
    std::vector<double> u2;

    static PulseSequence constant(int n_steps, double dt, double u1, double u2);

    int n_steps() const { return static_cast<int>(u1.size()); }
    double total_time() const { return dt * static_cast<double>(u1.size()); }
    Complex alpha(int step) const;

    /// Throws ValidationError on empty/mismatched arrays, dt <= 0 or
    /// non-finite amplitudes.
    void validate() const;

    friend bool operator==(const PulseSequence &, const PulseSequence &) = default;
};

/// Time derivative of the state under the scaled equation: first-order drive,
/// drive-induced Lindblad pair, drive-induced double commutators and the
/// environment dissipator. Hermitian and traceless for Hermitian input.
CMat2 generator(const CMat2 &rho, double t, double u1, double u2, const ModelParams &params);
CMat2 generator(const DensityMatrix &rho, double t, double u1, double u2, const ModelParams &params);

struct PropagationOptions {
    static constexpr int kDefaultSubsteps = 16;

    int substeps = kDefaultSubsteps; ///< RK4 micro-steps per control interval
    int sample_stride = 1;           ///< micro-steps between stored samples

    void validate() const;
};

struct TrajectorySample {
    double t;
    DensityMatrix rho;
    BlochVector bloch;
};

struct TrajectoryDiagnostics {
    double max_trace_deviation = 0.0;
    /// Anti-Hermitian residue after each micro-step, before re-symmetrizing.
    double max_hermiticity_deviation = 0.0;
    double min_eigenvalue = std::numeric_limits<double>::infinity();

    void merge(const TrajectoryDiagnostics &other);
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    TrajectoryDiagnostics diagnostics;

    const DensityMatrix &final_state() const { return samples.back().rho; }
};

/// Fixed-step RK4 through every control interval. Samples start at t = 0 and
/// end at the pulse's total time. Throws IntegrationError once the trace
/// drifts beyond 1e-6 and NumericalError on NaN/Inf.
Trajectory propagate(const DensityMatrix &rho0, const PulseSequence &pulse,
                     const ModelParams &params, const PropagationOptions &options = {});

struct FinalState {
    DensityMatrix rho;
    TrajectoryDiagnostics diagnostics;
};

/// Same integration as propagate() without storing samples.
FinalState final_state(const DensityMatrix &rho0, const PulseSequence &pulse,
                       const ModelParams &params, int substeps = PropagationOptions::kDefaultSubsteps);

struct EffectiveFinalState {
    DensityMatrix rho;
    double fidelity;
};

EffectiveFinalState effective_final_state(const DensityMatrix &rho0, const PulseSequence &pulse,
                                          const ModelParams &params, const DensityMatrix &target,
                                          int substeps = PropagationOptions::kDefaultSubsteps);

} // namespace qsl
