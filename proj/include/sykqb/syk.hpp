#pragma once

// Complex SYK couplings: sampling with the Hermiticity/antisymmetry
// constraints, sparse assembly of the quartic charger, bandwidth, and
// bandwidth regularization.

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "sykqb/linalg.hpp"

namespace sykqb {

/// One disorder realization. Only canonical quadruples are stored: i < j,
/// k < l, with the pair (i,j) not after (k,l) lexicographically. Every
/// other index combination is reconstructed through
///   J_ijkl = J*_klij = -J_jikl = -J_ijlk.
/// Entries with (i,j) = (k,l) are real. The complex entries draw real and
/// imaginary parts i.i.d. Normal(0, J^2/(2 N^3)) so the complex variance is
/// J^2/N^3; the forced-real entries draw Normal(0, J^2/N^3).
class CouplingTensor {
public:
    struct Entry {
        int i, j, k, l;
        Complex value;
    };

    CouplingTensor() = default;
    CouplingTensor(int n_sites, double j_energy, std::uint64_t seed,
                   std::vector<Complex> pair_values);

    int n_sites() const { return n_sites_; }
    double j_energy() const { return j_energy_; }
    std::uint64_t seed() const { return seed_; }

    /// Number of unordered site pairs i < j.
    int pair_count() const { return n_sites_ * (n_sites_ - 1) / 2; }

    /// Reconstructed J_ijkl for arbitrary indices (zero when i == j or k == l).
    Complex coupling(int i, int j, int k, int l) const;

    /// Stored value for ordered pairs given by pair indices (any order).
    Complex pair_value(int p1, int p2) const {
        return pair_values_[static_cast<std::size_t>(p1) * pair_count() + p2];
    }

    /// Canonical entries in deterministic order (p1 <= p2).
    std::vector<Entry> canonical_entries() const;

    /// Lexicographic index of the pair (i < j), both 1-based.
    int pair_index(int i, int j) const;
    std::pair<int, int> pair_sites(int p) const { return pairs_[static_cast<std::size_t>(p)]; }

private:
    int n_sites_ = 0;
    double j_energy_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<Complex> pair_values_;  // row-major pair_count x pair_count, Hermitian
};

/// Draw a coupling realization. Deterministic in (N, J, seed); N >= 4.
CouplingTensor sample_couplings(int n_sites, double j_energy, std::uint64_t seed);

/// Which interaction classes to assemble; `all` is the physical charger.
enum class SykTerms { all, distinct_quartic, pair_mixed, density_density };

/// H1 = sum_{ijkl} J_ijkl c+_i c+_j c_k c_l over all index quadruples,
/// assembled as 4x the canonical representatives (the four sign flips of
/// each canonical quadruple contribute identically).
SparseHamiltonian build_syk_hamiltonian(const CouplingTensor& c, SykTerms terms = SykTerms::all);

/// lambda_max - lambda_min.
double bandwidth(const SparseHamiltonian& h);

/// Charger with its spectrum mapped affinely onto [0, 1]:
/// matrix = (H1 - lambda_min I) / (lambda_max - lambda_min).
struct RegularizedCharger {
    SparseHamiltonian matrix;
    double shift = 0.0;               // lambda_min subtracted
    double scale = 1.0;               // divisor, equals bandwidth_original
    double bandwidth_original = 0.0;
};

RegularizedCharger regularize(const SparseHamiltonian& h1);

/// Same mapping with precomputed extremal eigenvalues (the ensemble runner
/// computes them once per realization).
RegularizedCharger regularize_with(const SparseHamiltonian& h1, double lambda_min,
                                   double lambda_max);

/// Canonical JSON serialization of a realization, for reproducing single
/// disorder samples outside a full run.
void save_couplings(const CouplingTensor& c, const std::filesystem::path& file);
CouplingTensor load_couplings(const std::filesystem::path& file);

}  // namespace sykqb
