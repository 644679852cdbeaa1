#include "sykqb/fermion.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace sykqb {

namespace {

constexpr int kMaxSites = 14;

void check_site(int site, int n_sites) {
    if (n_sites < 1 || n_sites > kMaxSites)
        throw SizeTooLarge("site count " + std::to_string(n_sites) + " outside [1, " +
                           std::to_string(kMaxSites) + "]");
    if (site < 1 || site > n_sites)
        throw SiteOutOfRange("site " + std::to_string(site) + " outside [1, " +
                             std::to_string(n_sites) + "]");
}

// Site s occupies bit (N - s): site 1 is the most significant bit.
inline std::uint64_t site_mask(int site, int n_sites) {
    return std::uint64_t{1} << (n_sites - site);
}

// Parity of the occupation on sites l < site (the sigma^z string).
inline int jw_sign(std::uint64_t basis, int site, int n_sites) {
    const std::uint64_t string_bits = basis >> (n_sites - site + 1);
    return (std::popcount(string_bits) & 1) ? -1 : 1;
}

}  // namespace

LadderOperator jw_annihilation(int site, int n_sites) {
    check_site(site, n_sites);
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    const std::uint64_t mask = site_mask(site, n_sites);

    std::vector<TripletCd> entries;
    entries.reserve(static_cast<std::size_t>(dim / 2));
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        if (!(b & mask)) continue;
        const double sign = jw_sign(b, site, n_sites);
        entries.emplace_back(static_cast<Eigen::Index>(b ^ mask), static_cast<Eigen::Index>(b),
                             Complex(sign, 0.0));
    }
    SparseMatrixCd m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return {site, n_sites, LadderOperator::Kind::annihilation, std::move(m)};
}

LadderOperator jw_creation(int site, int n_sites) {
    LadderOperator c = jw_annihilation(site, n_sites);
    c.kind = LadderOperator::Kind::creation;
    c.matrix = c.matrix.adjoint();
    return c;
}

LadderOperator majorana_local(int site, int n_sites) {
    LadderOperator c = jw_annihilation(site, n_sites);
    SparseMatrixCd sum = c.matrix + SparseMatrixCd(c.matrix.adjoint());
    sum.makeCompressed();
    return {site, n_sites, LadderOperator::Kind::majorana_sum, std::move(sum)};
}

SparseHamiltonian battery_hamiltonian_unshifted(int n_sites, double omega0) {
    check_site(1, n_sites);
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    std::vector<TripletCd> entries;
    entries.reserve(static_cast<std::size_t>(n_sites) * static_cast<std::size_t>(dim));
    for (int site = 1; site <= n_sites; ++site) {
        const std::uint64_t mask = site_mask(site, n_sites);
        for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
            // sigma^y: |0> -> i|1>, |1> -> -i|0>
            const Complex v = (b & mask) ? Complex(0.0, -omega0 / 2.0) : Complex(0.0, omega0 / 2.0);
            entries.emplace_back(static_cast<Eigen::Index>(b ^ mask), static_cast<Eigen::Index>(b), v);
        }
    }
    return assemble(entries, dim, true);
}

SparseHamiltonian battery_hamiltonian(int n_sites, double omega0) {
    check_site(1, n_sites);
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    SparseMatrixCd shifted = battery_hamiltonian_unshifted(n_sites, omega0).matrix();
    SparseMatrixCd eye(dim, dim);
    eye.setIdentity();
    shifted += (n_sites * omega0 / 2.0) * eye;
    return from_sparse_matrix(std::move(shifted), true);
}

StateVector battery_ground_state(int n_sites) {
    check_site(1, n_sites);
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    const double scale = std::pow(2.0, -0.5 * n_sites);
    // Per-site |down-y> = (|0> - i|1>)/sqrt(2): the amplitude of basis state b
    // is scale * (-i)^{popcount(b)}.
    const Complex phases[4] = {Complex(1, 0), Complex(0, -1), Complex(-1, 0), Complex(0, 1)};
    StateVector psi(dim);
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b)
        psi[static_cast<Eigen::Index>(b)] = scale * phases[std::popcount(b) & 3];
    return psi;
}

Eigen::VectorXd populations(const StateVector& psi, int n_sites) {
    check_site(1, n_sites);
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    if (psi.size() != dim)
        throw DimensionMismatch("populations: state length " + std::to_string(psi.size()) +
                                " does not match 2^" + std::to_string(n_sites));

    // Apply S^dagger = [[1, i], [1, -i]]/sqrt(2) on every site, mapping the
    // sigma^y eigenbasis onto the computational basis (down-y -> |0>).
    StateVector rot = psi;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int site = 1; site <= n_sites; ++site) {
        const std::uint64_t mask = site_mask(site, n_sites);
        for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
            if (b & mask) continue;
            const Complex a0 = rot[static_cast<Eigen::Index>(b)];
            const Complex a1 = rot[static_cast<Eigen::Index>(b | mask)];
            rot[static_cast<Eigen::Index>(b)] = inv_sqrt2 * (a0 + Complex(0, 1) * a1);
            rot[static_cast<Eigen::Index>(b | mask)] = inv_sqrt2 * (a0 - Complex(0, 1) * a1);
        }
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_sites + 1);
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b)
        p[std::popcount(b)] += std::norm(rot[static_cast<Eigen::Index>(b)]);
    return p;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t acc = 1;
    for (int i = 1; i <= k; ++i) acc = acc * static_cast<std::uint64_t>(n - k + i) / i;
    return acc;
}

BatterySpectrum battery_spectrum(int n_sites, double omega0) {
    check_site(1, n_sites);
    BatterySpectrum spec;
    spec.n_sites = n_sites;
    spec.omega0 = omega0;
    spec.levels.resize(static_cast<std::size_t>(n_sites) + 1);
    spec.multiplicities.resize(static_cast<std::size_t>(n_sites) + 1);
    for (int k = 0; k <= n_sites; ++k) {
        spec.levels[k] = k * omega0;
        spec.multiplicities[k] = binomial(n_sites, k);
    }
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    spec.site_rotation << Complex(inv_sqrt2, 0), Complex(inv_sqrt2, 0),
        Complex(0, -inv_sqrt2), Complex(0, inv_sqrt2);
    return spec;
}

double sigma_y_expectation(const StateVector& psi, int site, int n_sites) {
    check_site(site, n_sites);
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    if (psi.size() != dim) throw DimensionMismatch("sigma_y_expectation: state length mismatch");
    const std::uint64_t mask = site_mask(site, n_sites);
    double acc = 0.0;
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        if (b & mask) continue;
        // <psi| sigma^y |psi> restricted to the (b, b|mask) pair.
        acc += 2.0 * std::imag(std::conj(psi[static_cast<Eigen::Index>(b)]) *
                               psi[static_cast<Eigen::Index>(b | mask)]);
    }
    return acc;
}

double sigma_yy_expectation(const StateVector& psi, int site_i, int site_j, int n_sites) {
    check_site(site_i, n_sites);
    check_site(site_j, n_sites);
    if (site_i == site_j) return 1.0;  // sigma^y squares to the identity
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    if (psi.size() != dim) throw DimensionMismatch("sigma_yy_expectation: state length mismatch");
    const std::uint64_t mi = site_mask(site_i, n_sites);
    const std::uint64_t mj = site_mask(site_j, n_sites);
    Complex acc = 0.0;
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        Complex phase(1.0, 0.0);
        phase *= (b & mi) ? Complex(0, -1) : Complex(0, 1);
        phase *= (b & mj) ? Complex(0, -1) : Complex(0, 1);
        acc += std::conj(psi[static_cast<Eigen::Index>(b ^ mi ^ mj)]) * phase *
               psi[static_cast<Eigen::Index>(b)];
    }
    return std::real(acc);
}

}  // namespace sykqb
