#include "transfer_map.hpp"

#include "generator_kernel.hpp"
#include "qsl/errors.hpp"
#include "qsl/parallel.hpp"

#include <cmath>

namespace qsl::detail {

namespace {

// rho = (I + x sx + y sy + z sz) / 2; basis[k] is the matrix whose Bloch
// coordinates are the k-th unit vector of (1, x, y, z).
const CMat2 kBasis[4] = {
    CMat2::diag(0.5, 0.5),
    0.5 * pauli(Pauli::X),
    0.5 * pauli(Pauli::Y),
    0.5 * pauli(Pauli::Z),
};

Mat4 generator_matrix(double t, const StepRates &rates)
{
    Mat4 a = Mat4::Zero();
    for (int k = 0; k < 4; ++k) {
        const CMat2 g = apply_generator(kBasis[k], t, rates);
        // traceless image, so the (1) row stays zero
        a(1, k) = (g.a01 + g.a10).real();
        a(2, k) = (Complex(0.0, 1.0) * (g.a01 - g.a10)).real();
        a(3, k) = (g.a00 - g.a11).real();
    }
    return a;
}

// One classical RK4 step of dv/dt = A(t) v written as a matrix.
Mat4 rk4_step(const Mat4 &a_start, const Mat4 &a_mid, const Mat4 &a_end, double h)
{
    const Mat4 id = Mat4::Identity();
    const Mat4 k1 = a_start;
    const Mat4 k2 = a_mid * (id + 0.5 * h * k1);
    const Mat4 k3 = a_mid * (id + 0.5 * h * k2);
    const Mat4 k4 = a_end * (id + h * k3);
    return id + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

Vec4 to_bloch4(const DensityMatrix &rho)
{
    const BlochVector r = bloch_vector(rho);
    return {1.0, r.x, r.y, r.z};
}

DensityMatrix from_bloch4(const Vec4 &v)
{
    if (!v.allFinite()) throw NumericalError("transfer map produced a non-finite state");
    return DensityMatrix::from_bloch({v(1), v(2), v(3)});
}

Mat4 generator_matrix(double t, double u1, double u2, const ModelParams &params)
{
    return generator_matrix(t, step_rates(u1, u2, params));
}

Mat4 interval_map(int step, double dt, int substeps, double u1, double u2, const ModelParams &params)
{
    const StepRates rates = step_rates(u1, u2, params);
    const double h = dt / substeps;
    const double start = step * dt;
    if (params.delta_minus() == 0.0) {
        const Mat4 a = generator_matrix(0.0, rates);
        const Mat4 micro = rk4_step(a, a, a, h);
        Mat4 m = micro;
        for (int s = 1; s < substeps; ++s) m = micro * m;
        return m;
    }
    Mat4 m = Mat4::Identity();
    for (int s = 0; s < substeps; ++s) {
        const double t = start + s * h;
        m = rk4_step(generator_matrix(t, rates), generator_matrix(t + 0.5 * h, rates),
                     generator_matrix(t + h, rates), h) *
            m;
    }
    return m;
}

TransferEvaluator::TransferEvaluator(const DensityMatrix &rho0, const DensityMatrix &target,
                                     const ModelParams &params, double dt, int substeps)
    : initial_(to_bloch4(rho0)), target_(target), params_(params), dt_(dt), substeps_(substeps)
{
}

Vec4 TransferEvaluator::final_bloch(const std::vector<double> &x) const
{
    const int n = static_cast<int>(x.size() / 2);
    Vec4 v = initial_;
    for (int j = 0; j < n; ++j) {
        v = interval_map(j, dt_, substeps_, x[j], x[n + j], params_) * v;
    }
    return v;
}

double TransferEvaluator::fidelity_of(const Vec4 &v) const
{
    const double f = uhlmann_fidelity(target_, from_bloch4(v));
    if (!std::isfinite(f)) throw NumericalError("objective: non-finite fidelity");
    return f;
}

double TransferEvaluator::fidelity(const std::vector<double> &x) const { return fidelity_of(final_bloch(x)); }

std::vector<double> TransferEvaluator::gradient(const std::vector<double> &x, double h_fd, int workers) const
{
    const int n = static_cast<int>(x.size() / 2);

    // states[j] is the state entering interval j; suffix[j] maps the state
    // leaving interval j to the final state.
    std::vector<Mat4> maps(n);
    std::vector<Vec4> states(n + 1);
    states[0] = initial_;
    for (int j = 0; j < n; ++j) {
        maps[j] = interval_map(j, dt_, substeps_, x[j], x[n + j], params_);
        states[j + 1] = maps[j] * states[j];
    }
    std::vector<Mat4> suffix(n);
    suffix[n - 1] = Mat4::Identity();
    for (int j = n - 2; j >= 0; --j) suffix[j] = suffix[j + 1] * maps[j + 1];

    std::vector<double> g(x.size());
    parallel_for(x.size(), workers, [&](std::size_t i) {
        const int j = static_cast<int>(i) % n;
        const bool second = static_cast<int>(i) >= n;
        const auto probe = [&](double delta) {
            const double u1 = x[j] + (second ? 0.0 : delta);
            const double u2 = x[n + j] + (second ? delta : 0.0);
            const Mat4 m = interval_map(j, dt_, substeps_, u1, u2, params_);
            return fidelity_of(suffix[j] * (m * states[j]));
        };
        g[i] = (probe(h_fd) - probe(-h_fd)) / (2.0 * h_fd);
    });
    return g;
}

} // namespace qsl::detail
