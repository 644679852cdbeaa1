// Python bindings over the main operations: operator construction, charging
// traces, OTOC dynamics, and the small numerical utilities, enough to drive
// the library from numpy/scipy.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sykqb/ensemble.hpp"
#include "sykqb/io.hpp"
#include "sykqb/rng.hpp"

namespace py = pybind11;
using namespace sykqb;

namespace {

py::tuple sparse_triplets(const SparseMatrixCd& m) {
    const auto nnz = m.nonZeros();
    Eigen::VectorXi rows(nnz), cols(nnz);
    Eigen::VectorXcd values(nnz);
    Eigen::Index idx = 0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMatrixCd::InnerIterator it(m, k); it; ++it) {
            rows[idx] = static_cast<int>(it.row());
            cols[idx] = static_cast<int>(it.col());
            values[idx] = it.value();
            ++idx;
        }
    return py::make_tuple(rows, cols, values, static_cast<int>(m.rows()));
}

SparseHamiltonian hamiltonian_from_triplets(const Eigen::VectorXi& rows,
                                            const Eigen::VectorXi& cols,
                                            const Eigen::VectorXcd& values, int dim,
                                            bool hermitian) {
    if (rows.size() != cols.size() || rows.size() != values.size())
        throw DimensionMismatch("triplet arrays must have equal length");
    std::vector<TripletCd> entries;
    entries.reserve(static_cast<std::size_t>(rows.size()));
    for (Eigen::Index i = 0; i < rows.size(); ++i)
        entries.emplace_back(rows[i], cols[i], values[i]);
    return assemble(entries, dim, hermitian);
}

ChargerVariant variant_of(const std::string& s) { return charger_variant_from_string(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "complex-SYK quantum battery simulation kernels";
    m.attr("__version__") = kVersionString;

    py::register_exception<Error>(m, "SykqbError");

    m.def("battery_ground_state", &battery_ground_state, py::arg("n_sites"));
    m.def(
        "battery_hamiltonian",
        [](int n, double omega0, bool shifted) {
            return sparse_triplets((shifted ? battery_hamiltonian(n, omega0)
                                            : battery_hamiltonian_unshifted(n, omega0))
                                       .matrix());
        },
        py::arg("n_sites"), py::arg("omega0") = 1.0, py::arg("shifted") = true,
        "COO triplets (rows, cols, values, dim) of the battery Hamiltonian");
    m.def(
        "syk_hamiltonian",
        [](int n, double j, std::uint64_t seed) {
            return sparse_triplets(build_syk_hamiltonian(sample_couplings(n, j, seed)).matrix());
        },
        py::arg("n_sites"), py::arg("j_energy") = 1.0, py::arg("seed") = 0,
        "COO triplets of one charger realization");
    m.def(
        "majorana",
        [](int site, int n) { return sparse_triplets(majorana_local(site, n).matrix); },
        py::arg("site"), py::arg("n_sites"));

    m.def("populations", &populations, py::arg("psi"), py::arg("n_sites"));
    m.def("hellinger_to_binomial", &hellinger_to_binomial, py::arg("p"), py::arg("n_sites"));
    m.def(
        "simpson",
        [](const std::vector<double>& samples, double dt) {
            return simpson_integrate(samples, dt);
        },
        py::arg("samples"), py::arg("dt"));
    m.def("realization_schedule", &realization_schedule, py::arg("n_sites"));
    m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("n"), py::arg("r"));
    m.def("ehrenfest_time", &ehrenfest_time, py::arg("n_sites"), py::arg("lambda_"));

    m.def(
        "evolve_state",
        [](const Eigen::VectorXi& rows, const Eigen::VectorXi& cols,
           const Eigen::VectorXcd& values, int dim, const StateVector& psi0, double t) {
            return expm_action(hamiltonian_from_triplets(rows, cols, values, dim, true), psi0, t,
                               -1);
        },
        py::arg("rows"), py::arg("cols"), py::arg("values"), py::arg("dim"), py::arg("psi0"),
        py::arg("t"), "e^{-iHt} psi0 for a Hermitian COO matrix");
    m.def(
        "extremal_eigenvalues",
        [](const Eigen::VectorXi& rows, const Eigen::VectorXi& cols,
           const Eigen::VectorXcd& values, int dim) {
            return extremal_eigenvalues(hamiltonian_from_triplets(rows, cols, values, dim, true));
        },
        py::arg("rows"), py::arg("cols"), py::arg("values"), py::arg("dim"));

    m.def(
        "charger_bandwidth",
        [](int n, double j, std::uint64_t seed) {
            return bandwidth(build_syk_hamiltonian(sample_couplings(n, j, seed)));
        },
        py::arg("n_sites"), py::arg("j_energy") = 1.0, py::arg("seed") = 0);

    m.def(
        "charge_trace",
        [](int n, double j, double omega0, const std::string& variant, std::uint64_t seed,
           double t1, int points) {
            const TimeGrid grid(0.0, t1, points);
            const ChargerSetup charger = make_charger(n, j, seed, variant_of(variant));
            const auto states = charge(charger, n, grid);
            const SparseHamiltonian h0 = battery_hamiltonian(n, omega0);
            const ObservableTrace energy = energy_trace(states, grid, h0);
            const ObservableTrace power = power_trace(energy);
            const PopulationsTrace pops = populations_trace(states, grid, n);
            py::dict out;
            out["t"] = grid.times();
            out["energy"] = energy.values;
            out["power"] = power.values;
            out["populations"] = pops.values;
            out["bandwidth"] = charger.bandwidth;
            return out;
        },
        py::arg("n_sites"), py::arg("j_energy"), py::arg("omega0"), py::arg("variant"),
        py::arg("seed"), py::arg("t1"), py::arg("points"));

    m.def(
        "otoc",
        [](int n, double j, const std::string& variant, std::uint64_t seed, double t1,
           int points) {
            const TimeGrid grid(0.0, t1, points);
            const ChargerSetup charger = make_charger(n, j, seed, variant_of(variant));
            const OtocTrace trace =
                otoc_trace(charger.generator, battery_ground_state(n), majorana_local(n, n),
                           majorana_local(n - 1, n), grid);
            return py::make_tuple(grid.times(), trace.values);
        },
        py::arg("n_sites"), py::arg("j_energy"), py::arg("variant"), py::arg("seed"),
        py::arg("t1"), py::arg("points"));

    m.def(
        "nested_commutator_norms",
        [](int n, double j, std::uint64_t seed, int k_max) {
            const ChargerSetup charger =
                make_charger(n, j, seed, ChargerVariant::regularized);
            return nested_commutator_norms(charger.generator, majorana_local(n - 1, n), k_max);
        },
        py::arg("n_sites"), py::arg("j_energy"), py::arg("seed"), py::arg("k_max") = 6);
}
