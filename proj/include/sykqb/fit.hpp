#pragma once

// Small damped least-squares kernel shared by the OTOC window fit and the
// power-law scaling fits.

#include <functional>
#include <span>

#include <Eigen/Dense>

#include "sykqb/errors.hpp"

namespace sykqb {

struct LevMarOptions {
    int max_iter = 200;
    double step_tol = 1e-10;   // relative step size declaring convergence
    double lambda0 = 1e-3;     // initial damping
};

struct LevMarResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // sigma^2 (J^T J)^{-1} at the optimum
    double rms = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling. `eval` fills the
/// residual vector and its Jacobian at the given parameters.
LevMarResult levmar_fit(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& eval,
    Eigen::VectorXd p0, const LevMarOptions& opts = {});

struct PowerLawFit {
    double a = 0.0, b = 0.0, c = 0.0;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double rms = 0.0;
    bool degenerate = false;  // constant data, exponent unidentifiable
};

/// Fit y = a + b x^c after discarding the `discard_smallest` smallest x.
/// Initialization by log-log regression on (y - min(y) + eps). Throws
/// RankDeficient with fewer than 4 points after the discard, NoConvergence
/// if the iteration stalls.
PowerLawFit power_law_fit(std::span<const double> xs, std::span<const double> ys,
                          int discard_smallest = 3);

}  // namespace sykqb
