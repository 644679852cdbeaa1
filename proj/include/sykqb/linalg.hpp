#pragma once

// Sparse complex Hermitian storage, matrix-exponential action over a time
// grid, extremal eigenvalues, and composite Simpson quadrature.

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "sykqb/errors.hpp"

namespace sykqb {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using SparseMatrixCd = Eigen::SparseMatrix<Complex>;
using TripletCd = Eigen::Triplet<Complex>;

/// Equally spaced time grid with inclusive endpoints.
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    int n_steps = 2;

    TimeGrid() = default;
    TimeGrid(double start, double stop, int points);

    double dt() const { return (t1 - t0) / (n_steps - 1); }
    double time(int i) const { return t0 + i * dt(); }
    std::vector<double> times() const;
};

/// Compressed sparse complex matrix over the 2^N computational basis.
/// Assembly drops entries below 1e-15 in magnitude and, when requested,
/// verifies Hermiticity to 1e-12 relative to the largest entry.
class SparseHamiltonian {
public:
    SparseHamiltonian() = default;

    const SparseMatrixCd& matrix() const { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }
    Eigen::Index nonzeros() const { return mat_.nonZeros(); }
    bool hermitian() const { return hermitian_; }

    // Max absolute row sum. For a Hermitian matrix this bounds the spectral
    // norm from above; the evolution kernel uses it to pick substep counts.
    double inf_norm() const;

    friend SparseHamiltonian assemble(const std::vector<TripletCd>&, Eigen::Index, bool);
    friend SparseHamiltonian from_sparse_matrix(SparseMatrixCd, bool);

private:
    SparseHamiltonian(SparseMatrixCd m, bool herm)
        : mat_(std::move(m)), hermitian_(herm) {}

    SparseMatrixCd mat_;
    bool hermitian_ = false;
};

/// Assemble from (row, col, value) entries. Duplicate positions are summed,
/// magnitudes below 1e-15 dropped. Throws IndexOutOfRange or NotHermitian.
SparseHamiltonian assemble(const std::vector<TripletCd>& entries, Eigen::Index dim,
                           bool require_hermitian = true);

/// Wrap an already-built Eigen sparse matrix, applying the same pruning and
/// Hermiticity policy as assemble().
SparseHamiltonian from_sparse_matrix(SparseMatrixCd m, bool require_hermitian = true);

/// Fixed-step propagator applying e^{sign*i*H*step} by an error-controlled
/// truncated Taylor expansion with scaling. The substep count is chosen once
/// from the inf-norm of H and reused for every application, which is what
/// makes stepping along an equally spaced grid cheap. Columns are
/// renormalized after every substep, so inputs must be unit-norm states.
/// Holds scratch buffers; construct one instance per thread.
class TaylorPropagator {
public:
    TaylorPropagator(const SparseHamiltonian& h, double step, int sign, double theta = 1.0);

    void apply(Eigen::MatrixXcd& block) const;
    void apply(StateVector& psi) const;

    int substeps() const { return substeps_; }

private:
    const SparseMatrixCd* mat_ = nullptr;
    Complex alpha_sub_{};  // sign * i * step / substeps
    int substeps_ = 1;
    mutable Eigen::MatrixXcd acc_, term_;
};

/// e^{sign*i*H*t_k}|psi0> for every grid point t_k. sign = -1 is forward
/// Schroedinger evolution, +1 the reverse. Each returned state is normalized
/// to within 1e-10; accuracy against the dense oracle is better than
/// 1 - 1e-9 in fidelity for the sizes this library targets.
std::vector<StateVector> expm_action_grid(const SparseHamiltonian& h, const StateVector& psi0,
                                          const TimeGrid& grid, int sign);

/// Single-shot e^{sign*i*H*t}|psi>.
StateVector expm_action(const SparseHamiltonian& h, const StateVector& psi, double t, int sign);

/// Exact e^{-iHt}|psi0> through a full Hermitian eigendecomposition.
/// Test oracle; dim must not exceed 4096.
StateVector dense_evolve_oracle(const SparseHamiltonian& h, const StateVector& psi0, double t);

/// Smallest and largest eigenvalues of a Hermitian matrix. Dense
/// decomposition for small dimensions, Lanczos with full
/// reorthogonalization above; relative tolerance 1e-10.
std::pair<double, double> extremal_eigenvalues(const SparseHamiltonian& h);

/// Largest singular value; for Hermitian input this is max(|l_min|, |l_max|).
double spectral_norm(const SparseHamiltonian& h);

/// Composite Simpson's 1/3 rule on equally spaced samples. An even sample
/// count is handled with Simpson over the first n-1 points and a trapezoid
/// on the final interval.
double simpson_integrate(std::span<const double> samples, double dt);

/// Running integral: prefix[k] approximates the integral over [t_0, t_k]
/// with the same rule as simpson_integrate applied to the first k+1 samples
/// (prefix[1] is a plain trapezoid).
std::vector<double> simpson_prefix(std::span<const double> samples, double dt);

}  // namespace sykqb
