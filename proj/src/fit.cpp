#include "sykqb/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace sykqb {

LevMarResult levmar_fit(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& eval,
    Eigen::VectorXd p0, const LevMarOptions& opts) {
    LevMarResult result;
    Eigen::VectorXd p = std::move(p0);
    const auto n_par = p.size();

    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    eval(p, r, jac);
    double cost = r.squaredNorm();
    double damping = opts.lambda0;

    Eigen::VectorXd r_try;
    Eigen::MatrixXd jac_try;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;

        bool accepted = false;
        Eigen::VectorXd step;
        for (int bump = 0; bump < 40; ++bump) {
            Eigen::MatrixXd lhs = jtj;
            for (Eigen::Index d = 0; d < n_par; ++d)
                lhs(d, d) += damping * std::max(jtj(d, d), 1e-12);
            step = lhs.ldlt().solve(-g);
            if (!step.allFinite()) {
                damping *= 10.0;
                continue;
            }
            const Eigen::VectorXd p_try = p + step;
            eval(p_try, r_try, jac_try);
            const double cost_try = r_try.squaredNorm();
            if (std::isfinite(cost_try) && cost_try < cost) {
                p = p_try;
                r = r_try;
                jac = jac_try;
                cost = cost_try;
                damping = std::max(damping / 3.0, 1e-14);
                accepted = true;
                break;
            }
            damping *= 10.0;
            if (damping > 1e14) break;
        }
        if (!accepted) break;

        double rel_step = 0.0;
        for (Eigen::Index d = 0; d < n_par; ++d)
            rel_step = std::max(rel_step, std::abs(step[d]) / std::max(std::abs(p[d]), 1e-12));
        if (rel_step < opts.step_tol) {
            result.converged = true;
            break;
        }
    }

    result.params = p;
    result.iterations = iter + 1;
    const auto n_res = r.size();
    result.rms = n_res > 0 ? std::sqrt(cost / static_cast<double>(n_res)) : 0.0;
    // Covariance from the Gauss-Newton approximation at the solution.
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const auto dof = n_res - n_par;
    const double sigma2 = dof > 0 ? cost / static_cast<double>(dof) : 0.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    result.covariance = lu.isInvertible()
                            ? Eigen::MatrixXd(sigma2 * lu.inverse())
                            : Eigen::MatrixXd::Constant(n_par, n_par,
                                                        std::numeric_limits<double>::quiet_NaN());
    // A stalled iteration that already sits at a tiny gradient counts as
    // converged; otherwise callers see converged = false.
    if (!result.converged) {
        const double gnorm = (jac.transpose() * r).cwiseAbs().maxCoeff();
        result.converged = gnorm < 1e-12 * std::max(1.0, cost);
    }
    return result;
}

PowerLawFit power_law_fit(std::span<const double> xs, std::span<const double> ys,
                          int discard_smallest) {
    if (xs.size() != ys.size()) throw DimensionMismatch("power_law_fit: xs/ys length mismatch");
    if (discard_smallest < 0) throw Error("power_law_fit: negative discard count");

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

    std::vector<double> x, y;
    for (std::size_t idx = static_cast<std::size_t>(discard_smallest); idx < order.size(); ++idx) {
        x.push_back(xs[order[idx]]);
        y.push_back(ys[order[idx]]);
    }
    const auto n = x.size();
    if (n < 4) throw RankDeficient("power_law_fit: fewer than 4 points after discard");
    for (double v : x)
        if (!(v > 0.0)) throw Error("power_law_fit: x values must be positive");

    PowerLawFit fit;
    const double y_min = *std::min_element(y.begin(), y.end());
    const double y_max = *std::max_element(y.begin(), y.end());
    const double range = y_max - y_min;
    const double scale = std::max(std::abs(y_min), std::abs(y_max));
    if (range < 1e-14 * std::max(scale, 1.0)) {
        fit.a = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
        fit.b = 0.0;
        fit.c = 0.0;
        fit.degenerate = true;
        return fit;
    }

    // log-log regression for the starting point
    const double eps = 1e-3 * range;
    const double a0 = y_min - eps;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i] - a0);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    double c0 = denom != 0.0 ? (static_cast<double>(n) * sxy - sx * sy) / denom : 1.0;
    double b0 = std::exp((sy - c0 * sx) / static_cast<double>(n));
    if (!std::isfinite(c0)) c0 = 1.0;
    if (!std::isfinite(b0) || b0 == 0.0) b0 = range;

    const auto eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        r.resize(static_cast<Eigen::Index>(n));
        jac.resize(static_cast<Eigen::Index>(n), 3);
        for (std::size_t i = 0; i < n; ++i) {
            const double xc = std::pow(x[i], p[2]);
            r[static_cast<Eigen::Index>(i)] = p[0] + p[1] * xc - y[i];
            jac(static_cast<Eigen::Index>(i), 0) = 1.0;
            jac(static_cast<Eigen::Index>(i), 1) = xc;
            jac(static_cast<Eigen::Index>(i), 2) = p[1] * std::log(x[i]) * xc;
        }
    };

    Eigen::VectorXd p0(3);
    p0 << a0, b0, c0;
    const LevMarResult lm = levmar_fit(eval, p0);
    if (!lm.converged) throw NoConvergence("power_law_fit: iteration did not converge");

    fit.a = lm.params[0];
    fit.b = lm.params[1];
    fit.c = lm.params[2];
    fit.covariance = lm.covariance;
    fit.rms = lm.rms;
    return fit;
}

}  // namespace sykqb
