"""Kernel backend selection.

The compiled extension ``conehedge.kernels._fast`` is preferred when the
build produced it; otherwise the pure-Python reference ``_pure`` is used.
Both expose the same two functions with identical exact-arithmetic
results (enforced by tests), so the choice only affects speed.
"""

from __future__ import annotations

try:  # pragma: no cover - depends on how the package was built
    from conehedge.kernels import _fast as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover
    from conehedge.kernels import _pure as _impl

    BACKEND = "pure"

LP_OPTIMAL = _impl.LP_OPTIMAL
LP_INFEASIBLE = _impl.LP_INFEASIBLE
LP_UNBOUNDED = _impl.LP_UNBOUNDED
REL_LE = _impl.REL_LE
REL_EQ = _impl.REL_EQ
REL_GE = _impl.REL_GE

dual_description = _impl.dual_description
simplex_two_phase = _impl.simplex_two_phase
