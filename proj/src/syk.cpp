#include "sykqb/syk.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sykqb/rng.hpp"

namespace sykqb {

namespace {

std::vector<std::pair<int, int>> make_pairs(int n_sites) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n_sites) * (n_sites - 1) / 2);
    for (int i = 1; i <= n_sites; ++i)
        for (int j = i + 1; j <= n_sites; ++j) pairs.emplace_back(i, j);
    return pairs;
}

}  // namespace

CouplingTensor::CouplingTensor(int n_sites, double j_energy, std::uint64_t seed,
                               std::vector<Complex> pair_values)
    : n_sites_(n_sites),
      j_energy_(j_energy),
      seed_(seed),
      pairs_(make_pairs(n_sites)),
      pair_values_(std::move(pair_values)) {
    const std::size_t p = pairs_.size();
    if (pair_values_.size() != p * p)
        throw DimensionMismatch("CouplingTensor: pair-value table has wrong size");
}

int CouplingTensor::pair_index(int i, int j) const {
    // pairs (i < j) in lexicographic order, 1-based sites
    return (i - 1) * n_sites_ - i * (i - 1) / 2 + (j - i - 1);
}

Complex CouplingTensor::coupling(int i, int j, int k, int l) const {
    if (i == j || k == l) return Complex(0.0, 0.0);
    double sign = 1.0;
    if (i > j) {
        std::swap(i, j);
        sign = -sign;
    }
    if (k > l) {
        std::swap(k, l);
        sign = -sign;
    }
    return sign * pair_value(pair_index(i, j), pair_index(k, l));
}

std::vector<CouplingTensor::Entry> CouplingTensor::canonical_entries() const {
    std::vector<Entry> entries;
    const int p = pair_count();
    entries.reserve(static_cast<std::size_t>(p) * (p + 1) / 2);
    for (int p1 = 0; p1 < p; ++p1)
        for (int p2 = p1; p2 < p; ++p2) {
            const auto [i, j] = pairs_[static_cast<std::size_t>(p1)];
            const auto [k, l] = pairs_[static_cast<std::size_t>(p2)];
            entries.push_back({i, j, k, l, pair_value(p1, p2)});
        }
    return entries;
}

CouplingTensor sample_couplings(int n_sites, double j_energy, std::uint64_t seed) {
    if (n_sites < 4)
        throw SizeTooSmall("sample_couplings: need at least 4 sites, got " +
                           std::to_string(n_sites));

    const int p = n_sites * (n_sites - 1) / 2;
    const double sigma =
        j_energy / std::sqrt(static_cast<double>(n_sites) * n_sites * n_sites);
    const double sigma_part = sigma / std::sqrt(2.0);

    Xoshiro256 rng(seed);
    std::vector<Complex> values(static_cast<std::size_t>(p) * p);
    // Canonical draw order: outer pair index p1, inner p2 >= p1. Entries on
    // the pair diagonal are forced real by J_ijij = J*_ijij.
    for (int p1 = 0; p1 < p; ++p1) {
        for (int p2 = p1; p2 < p; ++p2) {
            Complex v;
            if (p1 == p2)
                v = Complex(sigma * rng.normal(), 0.0);
            else
                v = Complex(sigma_part * rng.normal(), sigma_part * rng.normal());
            values[static_cast<std::size_t>(p1) * p + p2] = v;
            values[static_cast<std::size_t>(p2) * p + p1] = std::conj(v);
        }
    }
    return CouplingTensor(n_sites, j_energy, seed, std::move(values));
}

namespace {

inline std::uint64_t site_mask(int site, int n_sites) {
    return std::uint64_t{1} << (n_sites - site);
}

inline int string_parity(std::uint64_t basis, int site, int n_sites) {
    return (std::popcount(basis >> (n_sites - site + 1)) & 1) ? -1 : 1;
}

// Apply c+_i c+_j c_k c_l to |basis>, tracking Jordan-Wigner signs on the
// evolving bit string. Returns false when the term annihilates the state.
bool apply_quartic(std::uint64_t basis, int i, int j, int k, int l, int n_sites,
                   std::uint64_t& out, double& sign) {
    std::uint64_t b = basis;
    double s = 1.0;
    const std::uint64_t ml = site_mask(l, n_sites);
    if (!(b & ml)) return false;
    s *= string_parity(b, l, n_sites);
    b ^= ml;
    const std::uint64_t mk = site_mask(k, n_sites);
    if (!(b & mk)) return false;
    s *= string_parity(b, k, n_sites);
    b ^= mk;
    const std::uint64_t mj = site_mask(j, n_sites);
    if (b & mj) return false;
    s *= string_parity(b, j, n_sites);
    b |= mj;
    const std::uint64_t mi = site_mask(i, n_sites);
    if (b & mi) return false;
    s *= string_parity(b, i, n_sites);
    b |= mi;
    out = b;
    sign = s;
    return true;
}

bool term_selected(SykTerms terms, int i, int j, int k, int l) {
    if (terms == SykTerms::all) return true;
    const int shared = (i == k || i == l ? 1 : 0) + (j == k || j == l ? 1 : 0);
    switch (terms) {
        case SykTerms::distinct_quartic: return shared == 0;
        case SykTerms::pair_mixed: return shared == 1;
        case SykTerms::density_density: return shared == 2;
        default: return true;
    }
}

}  // namespace

SparseHamiltonian build_syk_hamiltonian(const CouplingTensor& c, SykTerms terms) {
    const int n = c.n_sites();
    const int p = c.pair_count();
    const Eigen::Index dim = Eigen::Index{1} << n;

    std::vector<TripletCd> entries;
    entries.reserve(static_cast<std::size_t>(p) * p * (static_cast<std::size_t>(dim) >> 4));

    for (int p1 = 0; p1 < p; ++p1) {
        const auto [i, j] = c.pair_sites(p1);
        for (int p2 = 0; p2 < p; ++p2) {
            const auto [k, l] = c.pair_sites(p2);
            if (!term_selected(terms, i, j, k, l)) continue;
            const Complex coeff = 4.0 * c.pair_value(p1, p2);
            if (std::abs(coeff) == 0.0) continue;
            for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
                std::uint64_t row;
                double sign;
                if (!apply_quartic(b, i, j, k, l, n, row, sign)) continue;
                entries.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(b),
                                     sign * coeff);
            }
        }
    }
    // NotHermitian here would mean the sampling symmetries are broken.
    return assemble(entries, dim, true);
}

double bandwidth(const SparseHamiltonian& h) {
    const auto [lo, hi] = extremal_eigenvalues(h);
    return hi - lo;
}

RegularizedCharger regularize_with(const SparseHamiltonian& h1, double lambda_min,
                                   double lambda_max) {
    const double bw = lambda_max - lambda_min;
    const double scale_ref = std::max({std::abs(lambda_min), std::abs(lambda_max), 1.0});
    if (!(bw > 1e-12 * scale_ref))
        throw ZeroBandwidth("regularize: spectrum is degenerate, bandwidth " + std::to_string(bw));

    SparseMatrixCd m = h1.matrix();
    SparseMatrixCd eye(h1.dim(), h1.dim());
    eye.setIdentity();
    m -= lambda_min * eye;
    m *= 1.0 / bw;
    RegularizedCharger reg;
    reg.matrix = from_sparse_matrix(std::move(m), true);
    reg.shift = lambda_min;
    reg.scale = bw;
    reg.bandwidth_original = bw;
    return reg;
}

RegularizedCharger regularize(const SparseHamiltonian& h1) {
    const auto [lo, hi] = extremal_eigenvalues(h1);
    return regularize_with(h1, lo, hi);
}

void save_couplings(const CouplingTensor& c, const std::filesystem::path& file) {
    nlohmann::json doc;
    doc["format"] = "sykqb-couplings-v1";
    doc["n_sites"] = c.n_sites();
    doc["j_energy"] = c.j_energy();
    doc["seed"] = c.seed();
    auto& list = doc["entries"] = nlohmann::json::array();
    for (const auto& e : c.canonical_entries())
        list.push_back({e.i, e.j, e.k, e.l, e.value.real(), e.value.imag()});
    std::ofstream out(file);
    if (!out) throw Error("save_couplings: cannot open " + file.string());
    out << doc.dump(2) << "\n";
}

CouplingTensor load_couplings(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("load_couplings: cannot open " + file.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "sykqb-couplings-v1")
        throw Error("load_couplings: unrecognized format field");

    const int n = doc.at("n_sites").get<int>();
    if (n < 4) throw SizeTooSmall("load_couplings: n_sites below 4");
    const int p = n * (n - 1) / 2;
    std::vector<Complex> values(static_cast<std::size_t>(p) * p, Complex(0, 0));

    const auto index_of = [n](int i, int j) { return (i - 1) * n - i * (i - 1) / 2 + (j - i - 1); };
    for (const auto& item : doc.at("entries")) {
        const int i = item.at(0).get<int>();
        const int j = item.at(1).get<int>();
        const int k = item.at(2).get<int>();
        const int l = item.at(3).get<int>();
        if (!(i >= 1 && i < j && j <= n && k >= 1 && k < l && l <= n))
            throw Error("load_couplings: non-canonical index quadruple");
        const Complex v(item.at(4).get<double>(), item.at(5).get<double>());
        const int p1 = index_of(i, j);
        const int p2 = index_of(k, l);
        if (p1 > p2) throw Error("load_couplings: non-canonical pair order");
        if (p1 == p2 && v.imag() != 0.0)
            throw Error("load_couplings: diagonal-pair entry must be real");
        values[static_cast<std::size_t>(p1) * p + p2] = v;
        values[static_cast<std::size_t>(p2) * p + p1] = std::conj(v);
    }
    return CouplingTensor(n, doc.at("j_energy").get<double>(), doc.at("seed").get<std::uint64_t>(),
                          std::move(values));
}

}  // namespace sykqb
