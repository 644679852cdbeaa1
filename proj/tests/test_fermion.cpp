#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "sykqb/fermion.hpp"
#include "sykqb/linalg.hpp"
#include "sykqb/syk.hpp"

using namespace sykqb;
namespace oracle = sykqb::test;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("single-mode annihilator") {
    const LadderOperator c = jw_annihilation(1, 1);
    Eigen::MatrixXcd expected(2, 2);
    expected << 0, 1, 0, 0;
    CHECK(max_abs(Eigen::MatrixXcd(c.matrix) - expected) < 1e-15);
}

TEST_CASE("jw operators match the dense kronecker chain") {
    for (int n = 1; n <= 5; ++n)
        for (int site = 1; site <= n; ++site) {
            const LadderOperator c = jw_annihilation(site, n);
            CHECK(c.matrix.nonZeros() == (Eigen::Index{1} << (n - 1)));
            CHECK(max_abs(Eigen::MatrixXcd(c.matrix) - oracle::dense_jw_annihilation(site, n)) <
                  1e-14);
        }
}

TEST_CASE("canonical anticommutation relations at N <= 5") {
    for (int n = 2; n <= 5; ++n) {
        const Eigen::Index dim = Eigen::Index{1} << n;
        const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(dim, dim);
        std::vector<Eigen::MatrixXcd> c;
        c.emplace_back();
        for (int s = 1; s <= n; ++s) c.push_back(Eigen::MatrixXcd(jw_annihilation(s, n).matrix));
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                const Eigen::MatrixXcd anti_cc = c[i] * c[j] + c[j] * c[i];
                CHECK(max_abs(anti_cc) < 1e-13);
                const Eigen::MatrixXcd anti_ccd =
                    c[i] * c[j].adjoint() + c[j].adjoint() * c[i];
                if (i == j)
                    CHECK(max_abs(anti_ccd - eye) < 1e-13);
                else
                    CHECK(max_abs(anti_ccd) < 1e-13);
            }
    }
}

TEST_CASE("majorana sums are hermitian involutions") {
    for (int n : {1, 4}) {
        for (int site = 1; site <= n; ++site) {
            const LadderOperator v = majorana_local(site, n);
            const Eigen::MatrixXcd m(v.matrix);
            CHECK(max_abs(m - m.adjoint()) < 1e-14);
            CHECK(max_abs(m * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols())) < 1e-13);
        }
    }
    SUBCASE("no string on a single site") {
        CHECK(max_abs(Eigen::MatrixXcd(majorana_local(1, 1).matrix) - oracle::pauli_x()) < 1e-15);
    }
}

TEST_CASE("battery hamiltonian structure") {
    SUBCASE("N = 1 spectrum {0, omega0}") {
        const auto [lo, hi] = extremal_eigenvalues(battery_hamiltonian(1, 0.7));
        CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(hi == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("unshifted nonzero count is N 2^N") {
        CHECK(battery_hamiltonian_unshifted(4, 1.0).nonzeros() == 4 * 16);
        CHECK(battery_hamiltonian_unshifted(6, 1.0).nonzeros() == 6 * 64);
    }
    SUBCASE("the shift adds a full diagonal") {
        CHECK(battery_hamiltonian(4, 1.0).nonzeros() == 4 * 16 + 16);
    }
    SUBCASE("matches the dense battery") {
        CHECK(max_abs(Eigen::MatrixXcd(battery_hamiltonian(3, 1.3).matrix()) -
                      oracle::dense_battery(3, 1.3)) < 1e-13);
    }
    SUBCASE("size cap") { CHECK_THROWS_AS(battery_hamiltonian(15, 1.0), SizeTooLarge); }
}

TEST_CASE("battery spectrum multiplicities are binomial") {
    for (int n = 2; n <= 8; ++n) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
            Eigen::MatrixXcd(battery_hamiltonian(n, 1.0).matrix()), Eigen::EigenvaluesOnly);
        std::vector<int> counts(static_cast<std::size_t>(n) + 1, 0);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double ev = es.eigenvalues()[i];
            const int level = static_cast<int>(std::llround(ev));
            REQUIRE(std::abs(ev - level) < 1e-9);
            counts[static_cast<std::size_t>(level)]++;
        }
        std::uint64_t total = 0;
        for (int k = 0; k <= n; ++k) {
            CHECK(counts[static_cast<std::size_t>(k)] ==
                  static_cast<int>(binomial(n, k)));
            total += binomial(n, k);
        }
        CHECK(total == (std::uint64_t{1} << n));
    }
}

TEST_CASE("battery ground state") {
    SUBCASE("single site (1, -i)/sqrt(2)") {
        const StateVector psi = battery_ground_state(1);
        const double s = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(psi[0] - Complex(s, 0)) < 1e-15);
        CHECK(std::abs(psi[1] - Complex(0, -s)) < 1e-15);
    }
    SUBCASE("annihilated by the shifted battery") {
        for (int n : {3, 6}) {
            const StateVector psi = battery_ground_state(n);
            CHECK((battery_hamiltonian(n, 1.0).matrix() * psi).norm() < 1e-12);
        }
    }
    SUBCASE("every site fully polarized down in y") {
        const StateVector psi = battery_ground_state(4);
        CHECK(std::abs(psi.norm() - 1.0) < 1e-14);
        for (int site = 1; site <= 4; ++site)
            CHECK(sigma_y_expectation(psi, site, 4) == doctest::Approx(-1.0).epsilon(1e-12));
    }
}

TEST_CASE("populations") {
    SUBCASE("ground state occupies only k = 0") {
        for (int n : {1, 4, 6}) {
            const Eigen::VectorXd p = populations(battery_ground_state(n), n);
            CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("fully up-in-y product state occupies the top level") {
        const int n = 4;
        // up-y per site is (|0> + i|1>)/sqrt(2): amplitudes i^{popcount}.
        const Eigen::Index dim = Eigen::Index{1} << n;
        StateVector psi(dim);
        const Complex phases[4] = {Complex(1, 0), Complex(0, 1), Complex(-1, 0), Complex(0, -1)};
        for (Eigen::Index b = 0; b < dim; ++b)
            psi[b] = 0.25 * phases[__builtin_popcountll(static_cast<unsigned long long>(b)) & 3];
        const Eigen::VectorXd p = populations(psi, n);
        CHECK(p[n] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("matches the eigenprojector oracle on an evolved state") {
        const int n = 4;
        const SparseHamiltonian h1 = build_syk_hamiltonian(sample_couplings(n, 1.0, 99));
        const StateVector psi = expm_action(h1, battery_ground_state(n), 1.0, -1);
        const Eigen::VectorXd fast = populations(psi, n);
        const Eigen::VectorXd ref = oracle::projector_populations(psi, n);
        CHECK(fast.sum() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("invariant under a global phase") {
        const int n = 3;
        const StateVector psi = oracle::random_state(8, 17);
        const Eigen::VectorXd a = populations(psi, n);
        const Eigen::VectorXd b = populations(std::exp(Complex(0, 1.234)) * psi, n);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("conserved under battery evolution") {
        const int n = 4;
        const SparseHamiltonian h0 = battery_hamiltonian(n, 1.0);
        StateVector psi = oracle::random_state(16, 5);
        const Eigen::VectorXd before = populations(psi, n);
        const Eigen::VectorXd after = populations(expm_action(h0, psi, 2.1, -1), n);
        CHECK((before - after).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(populations(StateVector::Zero(8), 4), DimensionMismatch);
    }
}

TEST_CASE("sigma-y pair expectation matches dense algebra") {
    const int n = 4;
    const StateVector psi = oracle::random_state(16, 33);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            if (i == j) continue;
            const Eigen::MatrixXcd op =
                oracle::embed_at(oracle::pauli_y(), i, n) * oracle::embed_at(oracle::pauli_y(), j, n);
            const double ref = std::real((psi.adjoint() * op * psi)(0, 0));
            CHECK(sigma_yy_expectation(psi, i, j, n) == doctest::Approx(ref).epsilon(1e-12));
        }
    for (int i = 1; i <= n; ++i) {
        const Eigen::MatrixXcd op = oracle::embed_at(oracle::pauli_y(), i, n);
        const double ref = std::real((psi.adjoint() * op * psi)(0, 0));
        CHECK(sigma_y_expectation(psi, i, n) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("site range errors") {
    CHECK_THROWS_AS(jw_annihilation(0, 4), SiteOutOfRange);
    CHECK_THROWS_AS(jw_annihilation(5, 4), SiteOutOfRange);
    CHECK_THROWS_AS(majorana_local(7, 6), SiteOutOfRange);
}
