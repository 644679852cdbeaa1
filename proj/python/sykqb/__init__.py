"""Complex-SYK quantum battery simulation kernels."""

from sykqb._core import (
    SykqbError,
    __version__,
    battery_ground_state,
    battery_hamiltonian,
    charge_trace,
    charger_bandwidth,
    derive_seed,
    ehrenfest_time,
    evolve_state,
    extremal_eigenvalues,
    hellinger_to_binomial,
    majorana,
    nested_commutator_norms,
    otoc,
    populations,
    realization_schedule,
    simpson,
    syk_hamiltonian,
)

__all__ = [
    "SykqbError",
    "__version__",
    "battery_ground_state",
    "battery_hamiltonian",
    "charge_trace",
    "charger_bandwidth",
    "derive_seed",
    "ehrenfest_time",
    "evolve_state",
    "extremal_eigenvalues",
    "hellinger_to_binomial",
    "majorana",
    "nested_commutator_norms",
    "otoc",
    "populations",
    "realization_schedule",
    "simpson",
    "syk_hamiltonian",
]
