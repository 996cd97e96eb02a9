#pragma once

// The scaled equation is linear in rho, so one RK4 micro-step is a linear
// map on the real Bloch coordinates (1, x, y, z). Composing the micro-step
// maps of a control interval gives that interval's transfer map; the
// optimizer works with these instead of re-integrating the whole pulse for
// every finite-difference probe.

#include "qsl/frqme.hpp"

#include <Eigen/Core>

#include <vector>

namespace qsl::detail {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

Vec4 to_bloch4(const DensityMatrix &rho);
DensityMatrix from_bloch4(const Vec4 &v);

/// Generator at time t as a 4x4 real matrix acting on (1, x, y, z).
Mat4 generator_matrix(double t, double u1, double u2, const ModelParams &params);

/// Exact composition of the `substeps` RK4 micro-steps of control interval
/// `step` with amplitudes (u1, u2).
Mat4 interval_map(int step, double dt, int substeps, double u1, double u2, const ModelParams &params);

/// Fidelity and finite-difference gradient for a fixed transfer problem,
/// with amplitudes flattened as [u1[0..N), u2[0..N)].
class TransferEvaluator {
public:
    TransferEvaluator(const DensityMatrix &rho0, const DensityMatrix &target, const ModelParams &params,
                      double dt, int substeps);

    Vec4 final_bloch(const std::vector<double> &x) const;
    double fidelity(const std::vector<double> &x) const;
    std::vector<double> gradient(const std::vector<double> &x, double h_fd, int workers) const;

private:
    double fidelity_of(const Vec4 &v) const;

    Vec4 initial_;
    DensityMatrix target_;
    ModelParams params_;
    double dt_;
    int substeps_;
};

} // namespace qsl::detail
