#include "sykqb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "sykqb/rng.hpp"

namespace sykqb {

namespace {

constexpr double kAssemblyDropTol = 1e-15;
constexpr double kHermitianRelTol = 1e-12;
constexpr Eigen::Index kDenseEigThreshold = 512;
constexpr Eigen::Index kDenseOracleMaxDim = 4096;

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

double max_abs_coeff(const SparseMatrixCd& m) {
    double mx = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrixCd::InnerIterator it(m, k); it; ++it)
            mx = std::max(mx, std::abs(it.value()));
    return mx;
}

void check_hermitian(const SparseMatrixCd& m) {
    const SparseMatrixCd diff = m - SparseMatrixCd(m.adjoint());
    const double scale = max_abs_coeff(m);
    const double dev = max_abs_coeff(diff);
    if (dev > kHermitianRelTol * std::max(scale, 1e-300))
        throw NotHermitian("matrix deviates from H = H^dagger by " + std::to_string(dev) +
                           " (largest entry " + std::to_string(scale) + ")");
}

SparseMatrixCd pruned(SparseMatrixCd m) {
    m.prune([](const Eigen::Index&, const Eigen::Index&, const Complex& v) {
        return std::abs(v) > kAssemblyDropTol;
    });
    m.makeCompressed();
    return m;
}

}  // namespace

TimeGrid::TimeGrid(double start, double stop, int points) : t0(start), t1(stop), n_steps(points) {
    if (!(t1 > t0) || t0 < 0.0)
        throw Error("TimeGrid requires t1 > t0 >= 0");
    if (n_steps < 2)
        throw Error("TimeGrid requires at least 2 points");
}

std::vector<double> TimeGrid::times() const {
    std::vector<double> ts(n_steps);
    for (int i = 0; i < n_steps; ++i) ts[i] = time(i);
    return ts;
}

double SparseHamiltonian::inf_norm() const {
    std::vector<double> row_sum(static_cast<std::size_t>(mat_.rows()), 0.0);
    for (int k = 0; k < mat_.outerSize(); ++k)
        for (SparseMatrixCd::InnerIterator it(mat_, k); it; ++it)
            row_sum[static_cast<std::size_t>(it.row())] += std::abs(it.value());
    double mx = 0.0;
    for (double s : row_sum) mx = std::max(mx, s);
    return mx;
}

SparseHamiltonian assemble(const std::vector<TripletCd>& entries, Eigen::Index dim,
                           bool require_hermitian) {
    if (!is_power_of_two(dim))
        throw Error("assemble: dimension must be a power of two");
    for (const auto& t : entries)
        if (t.row() < 0 || t.col() < 0 || t.row() >= dim || t.col() >= dim)
            throw IndexOutOfRange("assemble: entry (" + std::to_string(t.row()) + ", " +
                                  std::to_string(t.col()) + ") outside dim " + std::to_string(dim));
    SparseMatrixCd m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    m = pruned(std::move(m));
    if (require_hermitian) check_hermitian(m);
    return SparseHamiltonian(std::move(m), require_hermitian);
}

SparseHamiltonian from_sparse_matrix(SparseMatrixCd m, bool require_hermitian) {
    if (!is_power_of_two(m.rows()) || m.rows() != m.cols())
        throw Error("from_sparse_matrix: need a square power-of-two matrix");
    m = pruned(std::move(m));
    if (require_hermitian) check_hermitian(m);
    return SparseHamiltonian(std::move(m), require_hermitian);
}

TaylorPropagator::TaylorPropagator(const SparseHamiltonian& h, double step, int sign,
                                   double theta) {
    if (sign != 1 && sign != -1) throw Error("TaylorPropagator: sign must be +1 or -1");
    if (theta <= 0.0) throw Error("TaylorPropagator: theta must be positive");
    const double norm = h.inf_norm();
    if (!std::isfinite(norm) || !std::isfinite(step))
        throw ConvergenceFailure("TaylorPropagator: non-finite norm or step");
    const double weight = norm * std::abs(step);
    const double s = std::ceil(weight / theta);
    if (s > double(1 << 24))
        throw ConvergenceFailure("TaylorPropagator: pathological input norm, " +
                                 std::to_string(weight) + " substeps required");
    substeps_ = std::max(1, static_cast<int>(s));
    mat_ = &h.matrix();
    alpha_sub_ = Complex(0.0, sign * step / substeps_);
}

void TaylorPropagator::apply(Eigen::MatrixXcd& block) const {
    // Per substep: accumulate sum_m (alpha M)^m / m! * B, stopping when the
    // last term is at roundoff relative to the accumulated result. With
    // |alpha|*||M|| <= theta the series is safely convergent in double
    // precision well before kMaxTerms.
    constexpr int kMaxTerms = 96;
    constexpr double kTermTol = 1e-16;
    for (int s = 0; s < substeps_; ++s) {
        acc_ = block;
        term_ = block;
        bool converged = false;
        for (int m = 1; m <= kMaxTerms; ++m) {
            term_ = (alpha_sub_ / double(m)) * (*mat_ * term_).eval();
            acc_ += term_;
            if (term_.norm() <= kTermTol * acc_.norm()) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw ConvergenceFailure("TaylorPropagator: truncation did not reach tolerance");
        block = acc_;
        for (Eigen::Index c = 0; c < block.cols(); ++c) {
            const double n = block.col(c).norm();
            if (n <= 0.0 || !std::isfinite(n))
                throw ConvergenceFailure("TaylorPropagator: state norm collapsed");
            block.col(c) /= n;
        }
    }
}

void TaylorPropagator::apply(StateVector& psi) const {
    Eigen::MatrixXcd block = psi;
    apply(block);
    psi = block.col(0);
}

std::vector<StateVector> expm_action_grid(const SparseHamiltonian& h, const StateVector& psi0,
                                          const TimeGrid& grid, int sign) {
    if (!h.hermitian()) throw NotHermitian("expm_action_grid: Hermitian input required");
    if (psi0.size() != h.dim())
        throw DimensionMismatch("expm_action_grid: state length does not match matrix dim");
    if (std::abs(psi0.norm() - 1.0) > 1e-6)
        throw Error("expm_action_grid: psi0 must be normalized");

    std::vector<StateVector> out;
    out.reserve(static_cast<std::size_t>(grid.n_steps));

    StateVector psi = psi0;
    if (grid.t0 > 0.0) {
        TaylorPropagator jump(h, grid.t0, sign, 8.0);
        jump.apply(psi);
    }
    out.push_back(psi);

    TaylorPropagator step(h, grid.dt(), sign);
    for (int k = 1; k < grid.n_steps; ++k) {
        step.apply(psi);
        out.push_back(psi);
    }
    return out;
}

StateVector expm_action(const SparseHamiltonian& h, const StateVector& psi, double t, int sign) {
    if (!h.hermitian()) throw NotHermitian("expm_action: Hermitian input required");
    if (psi.size() != h.dim())
        throw DimensionMismatch("expm_action: state length does not match matrix dim");
    StateVector out = psi;
    if (t != 0.0) {
        TaylorPropagator prop(h, t, sign, 8.0);
        prop.apply(out);
    }
    return out;
}

StateVector dense_evolve_oracle(const SparseHamiltonian& h, const StateVector& psi0, double t) {
    if (h.dim() > kDenseOracleMaxDim)
        throw DimensionTooLarge("dense_evolve_oracle: dim " + std::to_string(h.dim()) +
                                " exceeds " + std::to_string(kDenseOracleMaxDim));
    if (!h.hermitian()) throw NotHermitian("dense_evolve_oracle: Hermitian input required");
    if (psi0.size() != h.dim())
        throw DimensionMismatch("dense_evolve_oracle: state length does not match matrix dim");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(h.matrix()));
    if (es.info() != Eigen::Success)
        throw ConvergenceFailure("dense_evolve_oracle: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    Eigen::VectorXcd phases(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        phases[i] = std::exp(Complex(0.0, -ev[i] * t));
    return es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * psi0));
}

namespace {

// Lanczos with full (twice-applied) reorthogonalization. Extremal Ritz
// values converge first; residual bounds |beta_m * s_last| decide
// convergence of both ends. The start vector is a fixed pseudo-random
// state so repeated runs are bit-identical.
std::pair<double, double> lanczos_extremes(const SparseMatrixCd& m, double rel_tol) {
    const Eigen::Index dim = m.rows();
    const int max_iter = static_cast<int>(std::min<Eigen::Index>(dim, 400));

    Xoshiro256 rng(0x53594b4c414e435aULL);
    StateVector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex(rng.normal(), rng.normal());
    v /= v.norm();

    Eigen::MatrixXcd basis(dim, max_iter);
    Eigen::VectorXd alpha(max_iter), beta(max_iter);
    basis.col(0) = v;

    StateVector w(dim);
    for (int j = 0; j < max_iter; ++j) {
        w = m * basis.col(j);
        if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
        alpha[j] = std::real(basis.col(j).dot(w));
        w -= alpha[j] * basis.col(j);
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXcd coeff = basis.leftCols(j + 1).adjoint() * w;
            w -= basis.leftCols(j + 1) * coeff;
        }
        beta[j] = w.norm();
        const int built = j + 1;

        const bool breakdown =
            beta[j] < 1e-13 * std::max(1.0, alpha.head(built).cwiseAbs().maxCoeff());
        const bool exhausted = built == dim || j == max_iter - 1;
        if (built % 8 == 0 || breakdown || exhausted) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
            tri.computeFromTridiagonal(alpha.head(built), beta.head(std::max(built - 1, 0)));
            if (tri.info() != Eigen::Success)
                throw ConvergenceFailure("lanczos: tridiagonal solve failed");
            const Eigen::VectorXd& theta = tri.eigenvalues();
            const double lo = theta[0];
            const double hi = theta[built - 1];
            const double scale = std::max({std::abs(lo), std::abs(hi), 1e-30});
            const double res_lo = std::abs(beta[j] * tri.eigenvectors()(built - 1, 0));
            const double res_hi = std::abs(beta[j] * tri.eigenvectors()(built - 1, built - 1));
            if (res_lo <= rel_tol * scale && res_hi <= rel_tol * scale) return {lo, hi};
            // Exact invariant subspace or a complete basis: Ritz values exact.
            if (breakdown || built == dim) return {lo, hi};
            if (exhausted)
                throw ConvergenceFailure("lanczos: extremal eigenvalues did not converge in " +
                                         std::to_string(max_iter) + " iterations");
        }
        basis.col(j + 1) = w / beta[j];
    }
    throw ConvergenceFailure("lanczos: iteration limit reached");
}

}  // namespace

std::pair<double, double> extremal_eigenvalues(const SparseHamiltonian& h) {
    if (!h.hermitian()) throw NotHermitian("extremal_eigenvalues: Hermitian input required");
    if (h.dim() <= kDenseEigThreshold) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(h.matrix()),
                                                           Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw ConvergenceFailure("extremal_eigenvalues: dense solve failed");
        return {es.eigenvalues()[0], es.eigenvalues()[h.dim() - 1]};
    }
    return lanczos_extremes(h.matrix(), 1e-11);
}

double spectral_norm(const SparseHamiltonian& h) {
    const auto [lo, hi] = extremal_eigenvalues(h);
    return std::max(std::abs(lo), std::abs(hi));
}

double simpson_integrate(std::span<const double> samples, double dt) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    if (n < 3) throw TooFewSamples("simpson_integrate: need at least 3 samples");
    if (!(dt > 0.0)) throw Error("simpson_integrate: spacing must be positive");

    const Eigen::Index last_simpson = (n % 2 == 1) ? n - 1 : n - 2;
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 2 <= last_simpson; i += 2)
        acc += dt / 3.0 * (samples[i] + 4.0 * samples[i + 1] + samples[i + 2]);
    if (n % 2 == 0) acc += 0.5 * dt * (samples[n - 2] + samples[n - 1]);
    return acc;
}

std::vector<double> simpson_prefix(std::span<const double> samples, double dt) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    if (n < 2) throw TooFewSamples("simpson_prefix: need at least 2 samples");
    if (!(dt > 0.0)) throw Error("simpson_prefix: spacing must be positive");

    std::vector<double> prefix(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index k = 1; k < n; ++k) {
        if (k % 2 == 0)
            prefix[k] = prefix[k - 2] + dt / 3.0 * (samples[k - 2] + 4.0 * samples[k - 1] + samples[k]);
        else
            prefix[k] = prefix[k - 1] + 0.5 * dt * (samples[k - 1] + samples[k]);
    }
    return prefix;
}

}  // namespace sykqb
