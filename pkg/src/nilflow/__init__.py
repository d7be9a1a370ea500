"""Ricci flow of left-invariant metrics on nilpotent Lie groups.

Structure-constant curvature, diagonal and full-metric Ricci flow, long-time
asymptotics on Heisenberg groups, explicit self-similar solutions and the
nilsoliton certificate ``Ric = cI + D``.
"""
__version__ = "0.1.0"

from .algebra import (  # noqa: E402
    IndexMap,
    LieAlgebraSpec,
    abelian,
    detect_family,
    heisenberg,
    unitriangular,
    validate,
)
from .curvature import curvature_bundle, ricci_general, riemann_general, sectional  # noqa: E402
from .errors import (  # noqa: E402
    DegeneratePlaneError,
    DomainError,
    FlowBreakdownError,
    NilflowError,
    NotPositiveDefiniteError,
    StructureError,
    UnsupportedAlgebraError,
)
from .flow import FlowProblem, FlowTrajectory, conserved, integrate, nil3_closed_form, rhs  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .metric import MetricState  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "IndexMap",
    "LieAlgebraSpec",
    "MetricState",
    "FlowProblem",
    "FlowTrajectory",
    "abelian",
    "heisenberg",
    "unitriangular",
    "detect_family",
    "validate",
    "curvature_bundle",
    "ricci_general",
    "riemann_general",
    "sectional",
    "rhs",
    "integrate",
    "conserved",
    "nil3_closed_form",
    "NilflowError",
    "StructureError",
    "DomainError",
    "NotPositiveDefiniteError",
    "DegeneratePlaneError",
    "UnsupportedAlgebraError",
    "FlowBreakdownError",
]
