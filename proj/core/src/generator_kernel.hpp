#pragma once

// Closed-form evaluation of the master-equation right-hand side, shared by
// the direct RK4 integrator and the transfer-map evaluator.

#include "qsl/frqme.hpp"

namespace qsl::detail {

/// Coefficients that stay fixed over one control interval.
struct StepRates {
    Complex alpha;
    double did_lindblad; // 2 |alpha|^2 beta
    double did_cross;    // Re(alpha^2) beta2
    double env_up;       // chi P1
    double env_down;     // chi P2
    double detuning;
};

inline StepRates step_rates(double u1, double u2, const ModelParams &p)
{
    const Complex alpha{u1 / 4.0, -u2 / 4.0};
    const Channels &ch = p.channels();
    return {
        alpha,
        ch.did_lindblad ? 2.0 * std::norm(alpha) * p.beta() : 0.0,
        ch.did_cross ? (alpha * alpha).real() * p.beta2() : 0.0,
        ch.environment ? p.chi() * p.p1() : 0.0,
        ch.environment ? p.chi() * p.p2() : 0.0,
        p.delta_minus(),
    };
}

// With sigma_+ = [[0,2],[0,0]] and rho = [[a,b],[c,d]]:
//   [s+, rho]          = [[2c, 2d-2a], [0, -2c]]
//   [s-, rho]          = [[-2b, 0], [2a-2d, 2b]]
//   s+ rho s- - {s-s+, rho}/2 = [[4d, -2b], [-2c, -4d]]
//   s- rho s+ - {s+s-, rho}/2 = [[-4a, -2b], [-2c, 4a]]
//   [s+, [s+, rho]]    = [[0, -8c], [0, 0]]
//   [s-, [s-, rho]]    = [[0, 0], [-8b, 0]]
inline CMat2 apply_generator(const CMat2 &rho, double t, const StepRates &k)
{
    using namespace std::complex_literals;
    const Complex a = rho.a00, b = rho.a01, c = rho.a10, d = rho.a11;

    Complex phase = 1.0;  // e^{-i detuning t}
    Complex phase2 = 1.0; // e^{-2i detuning t}
    if (k.detuning != 0.0) {
        phase = std::polar(1.0, -k.detuning * t);
        phase2 = phase * phase;
    }
    const Complex drive = k.alpha * phase;
    const Complex drive_conj = std::conj(drive);

    // first-order drive
    const Complex d00 = -2.0i * (drive * c - drive_conj * b);
    Complex g01 = -1i * drive * (2.0 * d - 2.0 * a);
    Complex g10 = -1i * drive_conj * (2.0 * a - 2.0 * d);

    // drive-induced Lindblad pair, equal raising and lowering weight
    const Complex l00 = k.did_lindblad * (4.0 * d - 4.0 * a);
    g01 += k.did_lindblad * (-4.0 * b);
    g10 += k.did_lindblad * (-4.0 * c);

    // drive-induced double commutators
    g01 += k.did_cross * phase2 * (-8.0 * c);
    g10 += k.did_cross * std::conj(phase2) * (-8.0 * b);

    // environment
    const Complex e00 = 4.0 * (k.env_up * d - k.env_down * a);
    const double env_total = k.env_up + k.env_down;
    g01 += -2.0 * env_total * b;
    g10 += -2.0 * env_total * c;

    const Complex g00 = d00 + l00 + e00;
    return {g00, g01, g10, -g00};
}

} // namespace qsl::detail
