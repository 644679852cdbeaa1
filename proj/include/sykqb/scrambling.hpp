#pragma once

// OTOC dynamics, windowed exponential fits for the quantum Lyapunov
// exponent, the 1/N expansion, Ehrenfest times, and nested-commutator norm
// diagnostics.

#include <cstddef>
#include <utility>
#include <vector>

#include "sykqb/charging.hpp"
#include "sykqb/fermion.hpp"
#include "sykqb/linalg.hpp"

namespace sykqb {

struct OtocTrace {
    TimeGrid grid;
    std::vector<double> values;  // F(t), clamped to [0, 1]
    int n_sites = 0;
    ChargerVariant variant = ChargerVariant::raw;
};

/// F(t) = 1 - |<W(t) V W(t) V>_0|^2 with W(t) = e^{iH1 t} W e^{-iH1 t}.
/// The two forward chains advance incrementally along the grid; the two
/// reverse evolutions per time point run stacked as one block.
OtocTrace otoc_trace(const SparseHamiltonian& h1, const StateVector& psi0,
                     const LadderOperator& v, const LadderOperator& w, const TimeGrid& grid);

struct LyapunovFit {
    double a = 0.0, b = 0.0, lambda = 0.0;
    double f0 = 0.02, f1 = 0.2;
    int fit_points = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Fit a + b e^{lambda t} on the contiguous run of points from the first
/// crossing of f0 up to the first crossing of f1 (later re-entries are
/// ignored). Needs at least 5 points inside the window.
LyapunovFit fit_lyapunov(const OtocTrace& trace, double f0 = 0.02, double f1 = 0.2);

struct LyapunovExpansion {
    double lambda0 = 0.0, lambda1 = 0.0, lambda2 = 0.0;
};

/// Least squares of lambda_fit(N) = lambda0 + lambda1/N + lambda2/N^2.
LyapunovExpansion lyapunov_expansion(const std::vector<std::pair<int, double>>& points);

/// t_E = log(N)/lambda.
double ehrenfest_time(double n_sites, double lambda);

/// Spectral norms of the nested commutators C_k = [H1, C_{k-1}], C_0 = W,
/// for k = 1..k_max, computed as sparse products. Throws FillInOverflow
/// when a product exceeds the nonzero budget.
std::vector<double> nested_commutator_norms(const SparseHamiltonian& h1, const LadderOperator& w,
                                            int k_max, std::size_t nnz_budget = std::size_t{1} << 24);

}  // namespace sykqb
