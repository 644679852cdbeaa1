#pragma once

// Jordan-Wigner ladder operators, the local battery Hamiltonian and its
// analytically known spectrum, and energy-level populations.
//
// Site convention: sites are 1-based; site 1 is the leftmost tensor factor,
// i.e. the most significant bit of the computational-basis index. The
// annihilator carries the sigma^z string on sites l < site and acts as
// (sigma^x + i sigma^y)/2 at the site.

#include <cstdint>
#include <vector>

#include "sykqb/linalg.hpp"

namespace sykqb {

struct LadderOperator {
    enum class Kind { annihilation, creation, majorana_sum };

    int site = 1;
    int n_sites = 1;
    Kind kind = Kind::annihilation;
    SparseMatrixCd matrix;  // not Hermitian for the ladder kinds
};

/// c_site on N sites; 2^{N-1} nonzeros.
LadderOperator jw_annihilation(int site, int n_sites);

/// c_site^dagger on N sites.
LadderOperator jw_creation(int site, int n_sites);

/// c_site + c_site^dagger: Hermitian, unitary, squares to the identity.
LadderOperator majorana_local(int site, int n_sites);

/// Shifted battery Hamiltonian (omega0/2) sum_j sigma^y_j + (N omega0/2) I,
/// so the ground energy is exactly 0 and the spectrum is {k omega0}.
SparseHamiltonian battery_hamiltonian(int n_sites, double omega0);

/// The bare (omega0/2) sum_j sigma^y_j part; exactly N 2^N nonzeros.
SparseHamiltonian battery_hamiltonian_unshifted(int n_sites, double omega0);

/// Product of single-site sigma^y eigenvectors with eigenvalue -1, phase
/// fixed so the first amplitude is real positive. Ground state of the
/// shifted battery with energy 0.
StateVector battery_ground_state(int n_sites);

/// Level populations p_0..p_N: the state is rotated site-by-site from the
/// sigma^y eigenbasis into the computational basis and binned by Hamming
/// weight. O(N 2^N), no projectors.
Eigen::VectorXd populations(const StateVector& psi, int n_sites);

struct BatterySpectrum {
    int n_sites = 0;
    double omega0 = 1.0;
    std::vector<double> levels;                    // epsilon_k = k omega0
    std::vector<std::uint64_t> multiplicities;     // binomial(N, k)
    Eigen::Matrix2cd site_rotation;                // columns: down-y, up-y eigenvectors
};

BatterySpectrum battery_spectrum(int n_sites, double omega0);

/// binomial(n, k) as an exact integer (n <= 62).
std::uint64_t binomial(int n, int k);

/// <psi| sigma^y_site |psi>, computed in place in O(2^N).
double sigma_y_expectation(const StateVector& psi, int site, int n_sites);

/// <psi| sigma^y_i sigma^y_j |psi> for distinct sites, O(2^N).
double sigma_yy_expectation(const StateVector& psi, int site_i, int site_j, int n_sites);

}  // namespace sykqb
