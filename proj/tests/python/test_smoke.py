"""Smoke tests for the python module: cross-checks against numpy/scipy."""

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse

import sykqb


def coo(triplets):
    rows, cols, values, dim = triplets
    return scipy.sparse.coo_matrix((values, (rows, cols)), shape=(dim, dim)).tocsr()


def test_version():
    assert sykqb.__version__.startswith("sykqb")


def test_ground_state_is_annihilated_by_the_battery():
    for n in (2, 4):
        psi = sykqb.battery_ground_state(n)
        h0 = coo(sykqb.battery_hamiltonian(n, 1.0))
        assert np.linalg.norm(h0 @ psi) < 1e-12
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-14


def test_battery_spectrum_is_integer_levels():
    h0 = coo(sykqb.battery_hamiltonian(3, 1.0)).toarray()
    levels = np.sort(np.linalg.eigvalsh(h0))
    expected = np.sort(np.repeat([0, 1, 2, 3], [1, 3, 3, 1]))
    assert np.allclose(levels, expected, atol=1e-12)


def test_unshifted_battery_nonzero_count():
    rows, _, _, _ = sykqb.battery_hamiltonian(4, 1.0, shifted=False)
    assert len(rows) == 4 * 2**4


def test_evolution_matches_scipy_expm():
    n = 3
    triplets = sykqb.battery_hamiltonian(n, 1.0)
    h = coo(triplets).toarray()
    psi0 = np.zeros(2**n, dtype=complex)
    psi0[0] = 1.0
    t = 0.8
    expected = scipy.linalg.expm(-1j * t * h) @ psi0
    rows, cols, values, dim = triplets
    out = sykqb.evolve_state(rows, cols, values, dim, psi0, t)
    fidelity = abs(np.vdot(expected, out)) ** 2
    assert fidelity > 1 - 1e-9


def test_syk_charger_is_hermitian_and_seeded():
    a = coo(sykqb.syk_hamiltonian(5, 1.0, seed=3))
    b = coo(sykqb.syk_hamiltonian(5, 1.0, seed=3))
    assert (a != b).nnz == 0
    dense = a.toarray()
    assert np.allclose(dense, dense.conj().T, atol=1e-12)


def test_extremal_eigenvalues_match_numpy():
    triplets = sykqb.syk_hamiltonian(4, 1.0, seed=9)
    lo, hi = sykqb.extremal_eigenvalues(*triplets)
    ev = np.linalg.eigvalsh(coo(triplets).toarray())
    assert abs(lo - ev[0]) < 1e-10
    assert abs(hi - ev[-1]) < 1e-10


def test_hellinger_closed_forms():
    n = 4
    binom = np.array([1, 4, 6, 4, 1]) / 16.0
    assert sykqb.hellinger_to_binomial(binom, n) == pytest.approx(0.0, abs=1e-12)
    ground = np.array([1.0, 0, 0, 0, 0])
    assert sykqb.hellinger_to_binomial(ground, n) == pytest.approx(0.75, abs=1e-12)


def test_simpson_is_exact_for_quadratics():
    xs = np.linspace(0.0, 1.0, 101)
    assert sykqb.simpson(xs**2, xs[1] - xs[0]) == pytest.approx(1 / 3, abs=1e-15)


def test_charge_trace_populations_are_normalized():
    out = sykqb.charge_trace(4, 1.0, 1.0, "regularized", 11, 4.0, 41)
    pops = np.asarray(out["populations"])
    assert pops.shape == (41, 5)
    assert np.allclose(pops.sum(axis=1), 1.0, atol=1e-10)
    energy = np.asarray(out["energy"])
    assert energy[0] == pytest.approx(0.0, abs=1e-10)
    assert (energy >= -1e-10).all() and (energy <= 4.0 + 1e-10).all()


def test_otoc_starts_at_zero_and_is_bounded():
    _, f = sykqb.otoc(4, 1.0, "regularized", 5, 6.0, 31)
    f = np.asarray(f)
    assert abs(f[0]) < 1e-10
    assert (f >= 0).all() and (f <= 1 + 1e-10).all()


def test_populations_of_an_evolved_state_match_projectors():
    n = 3
    triplets = sykqb.syk_hamiltonian(4, 1.0, seed=2)  # n=4 charger
    rows, cols, values, dim = triplets
    psi = sykqb.evolve_state(rows, cols, values, dim, sykqb.battery_ground_state(4), 1.0)
    p = sykqb.populations(psi, 4)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)

    h0 = coo(sykqb.battery_hamiltonian(4, 1.0)).toarray()
    ev, vec = np.linalg.eigh(h0)
    ref = np.zeros(5)
    for i, e in enumerate(ev):
        ref[int(round(e))] += abs(np.vdot(vec[:, i], psi)) ** 2
    assert np.allclose(p, ref, atol=1e-10)


def test_schedule_and_seeds():
    assert sykqb.realization_schedule(8) == 1000
    assert sykqb.realization_schedule(12) == 500
    assert sykqb.realization_schedule(15) == 200
    assert sykqb.derive_seed(1, 8, 0) != sykqb.derive_seed(1, 8, 1)


def test_nested_commutator_norms_decay_bound():
    norms = sykqb.nested_commutator_norms(5, 1.0, seed=1, k_max=4)
    prev = 1.0
    for k, v in enumerate(norms, start=1):
        assert v <= 2.0 * prev + 1e-12
        assert v <= 2.0**k + 1e-12
        prev = v


def test_errors_are_typed():
    with pytest.raises(sykqb.SykqbError):
        sykqb.realization_schedule(3)
