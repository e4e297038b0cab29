"""Optimal group-covariant estimation of unknown unitary actions.

Modules: :mod:`~covest.matcore` (linear algebra), :mod:`~covest.groups`
(finite groups, U(1) quadrature, projective reps), :mod:`~covest.irreps`
(isotypic decomposition), :mod:`~covest.gpovm` (generalized measurements,
risks, covariantization), :mod:`~covest.combs` (sequential strategies),
:mod:`~covest.optimal` (optimal seeds and parallel strategies) and
:mod:`~covest.cli`.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CovestError,
    DimensionError,
    InfeasibleError,
    NumericalDegeneracyError,
    UnsupportedError,
    ValidationError,
)
from .groups import (  # noqa: E402
    characters_rep,
    cyclic,
    defining_rep,
    dihedral,
    heisenberg_weyl_group,
    heisenberg_weyl_rep,
    rep_power,
    rep_tensor,
    u1,
    u1_rep,
)
from .gpovm import bayes_risk, covariant_gpovm, delta_error, gate_infidelity, sine_squared, worst_risk  # noqa: E402
from .irreps import decompose  # noqa: E402
from .optimal import (  # noqa: E402
    build_parallel_scheme,
    optimal_parallel_input,
    psi_from_seed,
    solve_optimal_seed,
    verify_simulation,
)
