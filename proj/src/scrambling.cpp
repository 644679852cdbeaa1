#include "sykqb/scrambling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sykqb/fit.hpp"

namespace sykqb {

OtocTrace otoc_trace(const SparseHamiltonian& h1, const StateVector& psi0,
                     const LadderOperator& v, const LadderOperator& w, const TimeGrid& grid) {
    if (!h1.hermitian()) throw NotHermitian("otoc_trace: Hermitian charger required");
    if (v.kind != LadderOperator::Kind::majorana_sum ||
        w.kind != LadderOperator::Kind::majorana_sum)
        throw Error("otoc_trace: V and W must be Hermitian unitary (majorana_sum kind)");
    if (psi0.size() != h1.dim() || v.matrix.rows() != h1.dim() || w.matrix.rows() != h1.dim())
        throw DimensionMismatch("otoc_trace: operator dimensions disagree");
    if (grid.t0 != 0.0) throw Error("otoc_trace: grid must start at t = 0");

    OtocTrace trace{grid, {}, v.n_sites, ChargerVariant::raw};
    trace.values.resize(static_cast<std::size_t>(grid.n_steps));

    // Forward pair [psi(t), V-kicked psi(t)] advanced one grid step at a
    // time; at every point the W-kicked pair is evolved back to t = 0 in a
    // single shot. C(t) = <e^{iHt} W psi(t) | V | e^{iHt} W phi(t)>.
    Eigen::MatrixXcd forward(h1.dim(), 2);
    forward.col(0) = psi0;
    forward.col(1) = v.matrix * psi0;

    TaylorPropagator step(h1, grid.dt(), -1);
    Eigen::MatrixXcd kicked(h1.dim(), 2);
    for (int k = 0; k < grid.n_steps; ++k) {
        if (k > 0) step.apply(forward);
        kicked.col(0) = w.matrix * forward.col(0);
        kicked.col(1) = w.matrix * forward.col(1);
        const double t = grid.time(k);
        if (t != 0.0) {
            TaylorPropagator back(h1, t, +1, 8.0);
            back.apply(kicked);
        }
        const Complex corr = kicked.col(0).dot(v.matrix * kicked.col(1));
        trace.values[static_cast<std::size_t>(k)] =
            std::clamp(1.0 - std::norm(corr), 0.0, 1.0);
    }
    return trace;
}

LyapunovFit fit_lyapunov(const OtocTrace& trace, double f0, double f1) {
    if (!(0.0 < f0 && f0 < f1 && f1 <= 1.0))
        throw Error("fit_lyapunov: window must satisfy 0 < F0 < F1 <= 1");

    const auto& f = trace.values;
    const auto n = f.size();
    std::size_t start = 0;
    while (start < n && f[start] < f0) ++start;
    if (start == n) throw NoGrowth("fit_lyapunov: the OTOC never reaches F0");
    std::size_t stop = start;
    while (stop < n && f[stop] <= f1) ++stop;  // first exit ends the window

    std::vector<double> ts, fs;
    for (std::size_t k = start; k < stop; ++k) {
        if (f[k] < f0 || f[k] > f1) continue;
        ts.push_back(trace.grid.time(static_cast<int>(k)));
        fs.push_back(f[k]);
    }
    if (ts.size() < 5)
        throw WindowTooSparse("fit_lyapunov: only " + std::to_string(ts.size()) +
                              " points inside the window; refine the grid");

    // log-linear start: slope of log(F - Fmin + eps)
    const double f_min = *std::min_element(fs.begin(), fs.end());
    const double f_max = *std::max_element(fs.begin(), fs.end());
    const double eps = 1e-3 * std::max(f_max - f_min, 1e-12);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double ly = std::log(fs[i] - f_min + eps);
        sx += ts[i];
        sy += ly;
        sxx += ts[i] * ts[i];
        sxy += ts[i] * ly;
    }
    const double m = static_cast<double>(ts.size());
    const double denom = m * sxx - sx * sx;
    double lambda0 = denom != 0.0 ? (m * sxy - sx * sy) / denom : 1.0;
    if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) lambda0 = 1.0 / std::max(ts.back() - ts.front(), 1e-6);
    double b0 = std::exp((sy - lambda0 * sx) / m);
    if (!std::isfinite(b0) || b0 <= 0.0) b0 = f_min + eps;

    const auto eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
        r.resize(static_cast<Eigen::Index>(ts.size()));
        jac.resize(static_cast<Eigen::Index>(ts.size()), 3);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double e = std::exp(p[2] * ts[i]);
            r[static_cast<Eigen::Index>(i)] = p[0] + p[1] * e - fs[i];
            jac(static_cast<Eigen::Index>(i), 0) = 1.0;
            jac(static_cast<Eigen::Index>(i), 1) = e;
            jac(static_cast<Eigen::Index>(i), 2) = p[1] * ts[i] * e;
        }
    };
    Eigen::VectorXd p0(3);
    p0 << f_min - b0 * std::exp(lambda0 * ts.front()), b0, lambda0;
    const LevMarResult lm = levmar_fit(eval, p0);

    LyapunovFit fit;
    fit.a = lm.params[0];
    fit.b = lm.params[1];
    fit.lambda = lm.params[2];
    fit.f0 = f0;
    fit.f1 = f1;
    fit.fit_points = static_cast<int>(ts.size());
    fit.residual = lm.rms;
    fit.converged = lm.converged && fit.lambda > 0.0;
    return fit;
}

LyapunovExpansion lyapunov_expansion(const std::vector<std::pair<int, double>>& points) {
    std::vector<int> distinct;
    for (const auto& [n, lam] : points)
        if (std::find(distinct.begin(), distinct.end(), n) == distinct.end()) distinct.push_back(n);
    if (distinct.size() < 3)
        throw RankDeficient("lyapunov_expansion: need at least 3 distinct system sizes");

    Eigen::MatrixXd basis(points.size(), 3);
    Eigen::VectorXd rhs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double n = points[i].first;
        basis(static_cast<Eigen::Index>(i), 0) = 1.0;
        basis(static_cast<Eigen::Index>(i), 1) = 1.0 / n;
        basis(static_cast<Eigen::Index>(i), 2) = 1.0 / (n * n);
        rhs[static_cast<Eigen::Index>(i)] = points[i].second;
    }
    const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(rhs);
    return {coef[0], coef[1], coef[2]};
}

double ehrenfest_time(double n_sites, double lambda) {
    if (!(lambda > 0.0)) throw NonpositiveLambda("ehrenfest_time: lambda must be positive");
    if (!(n_sites >= 1.0)) throw Error("ehrenfest_time: system size must be at least 1");
    return std::log(n_sites) / lambda;
}

std::vector<double> nested_commutator_norms(const SparseHamiltonian& h1, const LadderOperator& w,
                                            int k_max, std::size_t nnz_budget) {
    if (k_max < 1) throw Error("nested_commutator_norms: k_max must be at least 1");
    if (!h1.hermitian()) throw NotHermitian("nested_commutator_norms: Hermitian charger required");
    if (w.matrix.rows() != h1.dim())
        throw DimensionMismatch("nested_commutator_norms: dimensions disagree");

    // Track B_k = i^k C_k, which stays Hermitian, so each norm is an
    // extremal-eigenvalue problem instead of a singular-value one.
    const SparseMatrixCd& h = h1.matrix();
    SparseMatrixCd b = w.matrix;
    std::vector<double> norms;
    norms.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        SparseMatrixCd next = Complex(0.0, 1.0) * (SparseMatrixCd(h * b) - SparseMatrixCd(b * h));
        next.prune([](const Eigen::Index&, const Eigen::Index&, const Complex& v) {
            return std::abs(v) > 1e-300;
        });
        next.makeCompressed();
        if (static_cast<std::size_t>(next.nonZeros()) > nnz_budget)
            throw FillInOverflow("nested_commutator_norms: order " + std::to_string(k) +
                                 " exceeds the nonzero budget");
        b = std::move(next);
        norms.push_back(spectral_norm(from_sparse_matrix(b, true)));
    }
    return norms;
}

}  // namespace sykqb
