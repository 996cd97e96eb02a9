#pragma once

// Independent reference implementations used only by the tests. Nothing
// here shares code with the closed-form paths in the library.

#include "qsl/frqme.hpp"
#include "qsl/grape.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using qsl::CMat2;
using qsl::Complex;
using qsl::DensityMatrix;
using qsl::ModelParams;
using qsl::PulseSequence;

inline Eigen::Matrix2cd to_eigen(const CMat2 &m)
{
    Eigen::Matrix2cd e;
    e << m.a00, m.a01, m.a10, m.a11;
    return e;
}

inline CMat2 from_eigen(const Eigen::Matrix2cd &e) { return {e(0, 0), e(0, 1), e(1, 0), e(1, 1)}; }

using Real50 = boost::multiprecision::cpp_bin_float_50;
using Complex50 = boost::multiprecision::cpp_complex_50;

struct Herm50 {
    Real50 a, d;
    Complex50 b; ///< upper off-diagonal
};

struct Eig50 {
    Real50 value[2];
    Complex50 vec[2][2]; ///< vec[k] is the unit eigenvector of value[k]
};

inline Herm50 to_mp(const CMat2 &m)
{
    const Complex b = 0.5 * (m.a01 + std::conj(m.a10));
    return {Real50(m.a00.real()), Real50(m.a11.real()), Complex50(b.real(), b.imag())};
}

// Eigenpairs of [[a, b], [b*, d]] in 50-digit arithmetic.
inline Eig50 eig(const Herm50 &h)
{
    Eig50 e;
    const Real50 mean = (h.a + h.d) / 2;
    const Real50 half = (h.a - h.d) / 2;
    const Real50 radius = sqrt(half * half + norm(h.b));
    e.value[0] = mean - radius;
    e.value[1] = mean + radius;
    for (int k = 0; k < 2; ++k) {
        // Two candidate null vectors of H - lambda; take the longer one.
        const Complex50 u0 = h.b, u1 = Complex50(e.value[k] - h.a);
        const Complex50 w0 = Complex50(e.value[k] - h.d), w1 = conj(h.b);
        const Real50 nu = sqrt(norm(u0) + norm(u1)), nw = sqrt(norm(w0) + norm(w1));
        if (nu == 0 && nw == 0) {
            e.vec[k][0] = Complex50(k == 0 ? (h.a <= h.d ? 1 : 0) : (h.a <= h.d ? 0 : 1));
            e.vec[k][1] = Complex50(k == 0 ? (h.a <= h.d ? 0 : 1) : (h.a <= h.d ? 1 : 0));
        } else if (nu >= nw) {
            e.vec[k][0] = u0 / nu;
            e.vec[k][1] = u1 / nu;
        } else {
            e.vec[k][0] = w0 / nw;
            e.vec[k][1] = w1 / nw;
        }
    }
    return e;
}

/// [Tr sqrt(sqrt(a) b sqrt(a))]^2 through eigendecompositions, carried in
/// 50-digit arithmetic so rank-deficient inputs stay resolved.
inline double fidelity(const DensityMatrix &a, const DensityMatrix &b)
{
    const Eig50 ea = eig(to_mp(a.matrix()));
    // s = sqrt(a) = sum_k sqrt(lambda_k) v_k v_k^dagger
    Complex50 s[2][2] = {};
    for (int k = 0; k < 2; ++k) {
        const Real50 r = ea.value[k] > 0 ? Real50(sqrt(ea.value[k])) : Real50(0);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) s[i][j] += r * ea.vec[k][i] * conj(ea.vec[k][j]);
    }
    const Herm50 hb = to_mp(b.matrix());
    const Complex50 bm[2][2] = {{Complex50(hb.a), hb.b}, {conj(hb.b), Complex50(hb.d)}};
    Complex50 m[2][2] = {};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) m[i][j] += s[i][k] * bm[k][l] * s[l][j];
    const Eig50 em = eig({real(m[0][0]), real(m[1][1]), (m[0][1] + conj(m[1][0])) / 2});
    Real50 t = 0;
    for (const Real50 &v : em.value) {
        if (v > 0) t += sqrt(v);
    }
    return static_cast<double>(t * t);
}

inline CMat2 dissipator(const CMat2 &l, const CMat2 &rho)
{
    const CMat2 ld = l.adjoint();
    return l * rho * ld - 0.5 * qsl::anticommutator(ld * l, rho);
}

/// Right-hand side assembled term by term from operator products.
inline CMat2 generator(const CMat2 &rho, double t, double u1, double u2, const ModelParams &p)
{
    using namespace std::complex_literals;
    const CMat2 sp = qsl::pauli(qsl::Pauli::Plus);
    const CMat2 sm = qsl::pauli(qsl::Pauli::Minus);
    const Complex alpha(u1 / 4.0, -u2 / 4.0);
    const double dm = p.delta_minus();
    const Complex ph = std::exp(-1i * dm * t);

    CMat2 out = (-1i * alpha * ph) * qsl::commutator(sp, rho) +
                (-1i * std::conj(alpha) * std::conj(ph)) * qsl::commutator(sm, rho);
    if (p.channels().did_lindblad) {
        out += (2.0 * std::norm(alpha) * p.beta()) * (dissipator(sp, rho) + dissipator(sm, rho));
    }
    if (p.channels().did_cross) {
        const double c = 0.5 * (alpha * alpha + std::conj(alpha) * std::conj(alpha)).real() * p.beta2();
        out += (c * ph * ph) * qsl::commutator(sp, qsl::commutator(sp, rho)) +
               (c * std::conj(ph * ph)) * qsl::commutator(sm, qsl::commutator(sm, rho));
    }
    if (p.channels().environment) {
        out += (p.chi() * p.p1()) * dissipator(sp, rho) + (p.chi() * p.p2()) * dissipator(sm, rho);
    }
    return out;
}

/// Classical RK4 on the reference generator with `substeps` per interval.
inline CMat2 integrate(const CMat2 &rho0, const PulseSequence &pulse, const ModelParams &p, int substeps)
{
    CMat2 rho = rho0;
    const double h = pulse.dt / substeps;
    for (int j = 0; j < pulse.n_steps(); ++j) {
        for (int s = 0; s < substeps; ++s) {
            const double t = j * pulse.dt + s * h;
            const auto f = [&](const CMat2 &r, double tt) { return oracle::generator(r, tt, pulse.u1[j], pulse.u2[j], p); };
            const CMat2 k1 = f(rho, t);
            const CMat2 k2 = f(rho + (0.5 * h) * k1, t + 0.5 * h);
            const CMat2 k3 = f(rho + (0.5 * h) * k2, t + 0.5 * h);
            const CMat2 k4 = f(rho + h * k3, t + h);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return rho;
}

/// Exact propagation at zero detuning: each interval's generator is
/// constant, so the interval map is exp(L dt) on (1, x, y, z) coordinates.
inline CMat2 exact_resonant(const CMat2 &rho0, const PulseSequence &pulse, const ModelParams &p)
{
    const std::array<CMat2, 4> basis{CMat2::identity(), qsl::pauli(qsl::Pauli::X), qsl::pauli(qsl::Pauli::Y),
                                     qsl::pauli(qsl::Pauli::Z)};
    const auto coords = [&](const CMat2 &m) {
        Eigen::Vector4d v;
        for (int k = 0; k < 4; ++k) v(k) = (basis[k] * m).trace().real();
        return v;
    };
    Eigen::Vector4d v = coords(rho0);
    for (int j = 0; j < pulse.n_steps(); ++j) {
        Eigen::Matrix4d l;
        for (int k = 0; k < 4; ++k) {
            l.col(k) = coords(oracle::generator(Complex(0.5) * basis[k], 0.0, pulse.u1[j], pulse.u2[j], p));
        }
        v = (l * pulse.dt).exp() * v;
    }
    CMat2 out;
    for (int k = 0; k < 4; ++k) out += Complex(0.5 * v(k)) * basis[k];
    return out;
}

/// Fourth-order five-point derivative.
inline double five_point(const std::function<double(double)> &f, double x, double h)
{
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

inline DensityMatrix random_state(std::mt19937_64 &rng, bool pure)
{
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = n(rng), y = n(rng), z = n(rng);
    const double norm = std::sqrt(x * x + y * y + z * z);
    const double r = pure ? 1.0 : std::cbrt(u(rng));
    return DensityMatrix::from_bloch({r * x / norm, r * y / norm, r * z / norm});
}

inline double max_abs_diff(const CMat2 &a, const CMat2 &b) { return (a - b).max_abs(); }

} // namespace oracle
