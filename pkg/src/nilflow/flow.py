"""Ricci flow ``dg/dt = -2 Ric`` on left-invariant metrics.

Three right-hand sides are available:

``general``
    Full symmetric metric, Ricci from the general contraction. The state is
    the lower triangle of g.
``heisenberg_diag``
    Diagonal metrics on the Heisenberg algebra,
    ``g_i' = g_N/g_{i+n}``, ``g_{i+n}' = g_N/g_i``, ``g_N' = -g_N^2 Sigma``.
``unitriangular_diag``
    Diagonal metrics on strictly upper-triangular matrices,
    ``g_ij' = sum_{p<i} g_pj/g_pi - g_ij^2 sum_{i<q<j} 1/(g_iq g_qj) + sum_{r>j} g_ir/g_jr``.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .algebra import LieAlgebraSpec, detect_family, family_size
from .curvature import ricci_general
from .errors import (
    DomainError,
    FlowBreakdownError,
    NotPositiveDefiniteError,
    StructureError,
    UnsupportedAlgebraError,
)
from .metric import MetricState, as_metric
from .ode import dopri5

__all__ = [
    "MODES",
    "FlowProblem",
    "FlowTrajectory",
    "ConservedSet",
    "DriftReport",
    "rhs",
    "integrate",
    "integrate_many",
    "conserved_quantities",
    "conserved",
    "nil3_closed_form",
    "nil3_trajectory",
    "heisenberg_gN_lower_bound",
    "sample_times",
]

MODES = ("general", "heisenberg_diag", "unitriangular_diag")
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class FlowProblem:
    algebra: LieAlgebraSpec
    g0: MetricState
    t_span: tuple
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    max_step: float = np.inf
    rhs_mode: str = "general"

    def __post_init__(self):
        object.__setattr__(self, "g0", as_metric(self.g0))
        t0, t1 = (float(x) for x in self.t_span)
        object.__setattr__(self, "t_span", (t0, t1))
        if not t1 > t0:
            raise DomainError(f"t_span must satisfy t1 > t0, got {self.t_span}")
        if self.g0.dim != self.algebra.dim:
            raise StructureError(f"g0 has dimension {self.g0.dim}, algebra has {self.algebra.dim}")
        if self.rtol <= 0 or self.atol <= 0 or self.max_step <= 0:
            raise DomainError("rtol, atol and max_step must be positive")
        if self.rhs_mode not in MODES:
            raise DomainError(f"rhs_mode must be one of {MODES}, got {self.rhs_mode!r}")
        if self.rhs_mode != "general":
            want = self.rhs_mode.removesuffix("_diag")
            if family_size(self.algebra, want) is None:
                raise UnsupportedAlgebraError(f"rhs_mode {self.rhs_mode!r} needs the {want} family")
            if not self.g0.is_diagonal:
                raise StructureError(f"rhs_mode {self.rhs_mode!r} needs a diagonal g0")

    @property
    def family(self):
        """``(name, n)`` of the family the right-hand side is specialized to, if any."""
        if self.rhs_mode == "general":
            return detect_family(self.algebra)
        name = self.rhs_mode.removesuffix("_diag")
        return (name, family_size(self.algebra, name))

    @property
    def diagonal_state(self) -> bool:
        return self.rhs_mode != "general"

    def initial_state(self) -> np.ndarray:
        if self.diagonal_state:
            return self.g0.diag.copy()
        return _tril_pack(self.g0.matrix)

    def metric_of_state(self, y) -> MetricState:
        if self.diagonal_state:
            return MetricState.diagonal(y)
        return MetricState.full(_tril_unpack(y, self.algebra.dim))


def _tril_pack(m):
    return m[np.tril_indices(m.shape[0])].copy()


def _tril_unpack(v, N):
    m = np.zeros((N, N))
    m[np.tril_indices(N)] = v
    return m + np.tril(m, -1).T


def _state_rhs(problem: FlowProblem, y) -> np.ndarray:
    """-2 Ric in state coordinates. Raises NotPositiveDefiniteError on bad states."""
    if problem.diagonal_state:
        if np.any(y <= 0) or not np.all(np.isfinite(y)):
            raise NotPositiveDefiniteError("diagonal state left the positive cone")
        n = problem.family[1]
        if problem.rhs_mode == "heisenberg_diag":
            return -2.0 * kernels.heisenberg_ricci_diag(n, y)
        return -2.0 * kernels.unitriangular_ricci_diag(n, y)
    g = MetricState.full(_tril_unpack(y, problem.algebra.dim))
    return _tril_pack(-2.0 * ricci_general(problem.algebra, g))


def rhs(problem: FlowProblem, t: float, g) -> np.ndarray:
    """``dg/dt`` at state ``g``.

    Diagonal modes return the vector of diagonal derivatives; the general mode
    returns the full matrix ``-2 Ric``.
    """
    try:
        if isinstance(g, MetricState):
            if problem.diagonal_state:
                if not g.is_diagonal:
                    raise StructureError(f"rhs_mode {problem.rhs_mode!r} needs a diagonal metric")
                y = g.diag
            else:
                y = _tril_pack(g.matrix)
        else:
            arr = np.asarray(g, dtype=float)
            if problem.diagonal_state:
                y = arr
            else:
                y = _tril_pack(as_metric(arr).matrix)
        if y.size != (problem.algebra.dim if problem.diagonal_state else
                      problem.algebra.dim * (problem.algebra.dim + 1) // 2):
            raise StructureError("state has the wrong size for this problem")
        out = _state_rhs(problem, y)
    except NotPositiveDefiniteError as exc:
        raise FlowBreakdownError(f"state is not positive definite: {exc}", t) from None
    if problem.diagonal_state:
        return out
    return _tril_unpack(out, problem.algebra.dim)


@dataclass(frozen=True)
class ConservedSet:
    """Heisenberg conserved quantities of a diagonal metric."""

    A: np.ndarray
    B: np.ndarray
    C1: float
    C2: float

    @property
    def C(self) -> float:
        return self.C1 * self.C2

    def as_dict(self) -> dict:
        out = {}
        n = len(self.A)
        for i in range(n):
            out[f"A_{i + 1}"] = float(self.A[i])
        for i in range(n):
            out[f"B_{i + 1 + n}"] = float(self.B[i])
        out["C1"] = float(self.C1)
        out["C2"] = float(self.C2)
        out["C"] = float(self.C)
        return out


def conserved_quantities(n: int, gdiag) -> ConservedSet:
    g = np.asarray(gdiag, dtype=float)
    if g.shape != (2 * n + 1,):
        raise StructureError(f"expected {2 * n + 1} diagonal entries")
    lo, hi, gN = g[:n], g[n:2 * n], g[-1]
    return ConservedSet(A=lo / hi, B=hi / lo, C1=float(np.prod(lo) * gN), C2=float(np.prod(hi) * gN))


@dataclass
class FlowTrajectory:
    """Sampled Ricci flow solution.

    ``values`` is ``(T, N)`` for diagonal trajectories and ``(T, N, N)`` for
    full ones.
    """

    algebra: LieAlgebraSpec
    times: np.ndarray
    values: np.ndarray
    kind: str = "diagonal"
    conserved: list | None = None
    step_stats: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.values):
            raise StructureError("times and values must have matching length")
        if np.any(np.diff(self.times) <= 0):
            raise StructureError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def states(self) -> list:
        if self.kind == "diagonal":
            return [MetricState.diagonal(v) for v in self.values]
        return [MetricState.full(v) for v in self.values]

    @property
    def diagonals(self) -> np.ndarray:
        if self.kind == "diagonal":
            return self.values
        return np.diagonal(self.values, axis1=1, axis2=2)

    def column_names(self) -> list:
        labels = self.algebra.basis_labels
        if self.kind == "diagonal":
            return [f"g_{s}" for s in labels]
        N = self.algebra.dim
        return [f"g_{labels[i]}_{labels[j]}" for i, j in zip(*np.tril_indices(N))]

    def rows(self) -> np.ndarray:
        if self.kind == "diagonal":
            flat = self.values
        else:
            N = self.algebra.dim
            flat = self.values[:, np.tril_indices(N)[0], np.tril_indices(N)[1]]
        return np.column_stack([self.times, flat])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + self.column_names())
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])

    def to_dict(self) -> dict:
        out = {
            "algebra": self.algebra.to_dict(),
            "kind": self.kind,
            "times": self.times.tolist(),
            "states": self.values.tolist(),
            "step_stats": dict(self.step_stats),
        }
        if self.conserved is not None:
            out["conserved"] = [c.as_dict() for c in self.conserved]
        return out


def sample_times(t0: float, t1: float, samples: int, spacing: str = "linear") -> np.ndarray:
    """Output grid. Log spacing starting at t0 = 0 puts the first positive sample at 1e-3 * min(1, t1)."""
    if samples < 2:
        raise DomainError("need at least two samples")
    if spacing == "linear":
        return np.linspace(t0, t1, samples)
    if spacing == "log":
        if t0 > 0:
            return np.geomspace(t0, t1, samples)
        start = 1e-3 * min(1.0, t1)
        return np.concatenate([[t0], np.geomspace(start, t1, samples - 1)])
    raise DomainError(f"unknown spacing {spacing!r}")


def _positive_definite(problem):
    if problem.diagonal_state:
        return lambda y: bool(np.all(y > 0))
    N = problem.algebra.dim

    def check(y):
        try:
            np.linalg.cholesky(_tril_unpack(y, N))
        except np.linalg.LinAlgError:
            return False
        return True

    return check


def integrate(problem: FlowProblem, t_eval=None) -> FlowTrajectory:
    """Adaptive Dormand-Prince 5(4) integration of the problem.

    Without ``t_eval`` every accepted step is recorded.
    """
    res = dopri5(
        lambda t, y: _state_rhs(problem, y),
        problem.t_span,
        problem.initial_state(),
        rtol=problem.rtol,
        atol=problem.atol,
        max_step=problem.max_step,
        t_eval=t_eval,
        is_valid=_positive_definite(problem),
    )
    stats = {"accepted": res.accepted, "rejected": res.rejected,
             "positivity_rejections": res.invalid, "nfev": res.nfev}
    if problem.diagonal_state:
        values, kind = res.y, "diagonal"
    else:
        N = problem.algebra.dim
        values, kind = np.array([_tril_unpack(v, N) for v in res.y]), "full"
    cons = None
    fam = problem.family
    if fam is not None and fam[0] == "heisenberg" and kind == "diagonal":
        cons = [conserved_quantities(fam[1], v) for v in values]
    return FlowTrajectory(problem.algebra, res.t, values, kind, cons, stats)


def _integrate_args(args):
    problem, t_eval = args
    return integrate(problem, t_eval)


def integrate_many(problems, t_eval=None, max_workers=None) -> list:
    """Integrate independent problems, in worker processes when ``max_workers > 1``."""
    jobs = [(p, t_eval) for p in problems]
    if not max_workers or max_workers <= 1:
        return [_integrate_args(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=max_workers) as ex:
        return list(ex.map(_integrate_args, jobs))


@dataclass
class DriftReport:
    drift: dict
    max_drift: float

    def to_dict(self) -> dict:
        return {"drift": dict(self.drift), "max_drift": self.max_drift}


def conserved(trajectory: FlowTrajectory) -> DriftReport:
    """Max over samples of ``|Q(t)/Q(t0) - 1|`` for each conserved quantity.

    Heisenberg trajectories report A_i, B_{i+n}, C1, C2 and C. On an abelian
    algebra the flow is stationary and every metric component is reported.
    """
    fam = detect_family(trajectory.algebra)
    diag = trajectory.diagonals
    if not trajectory.algebra.entries:
        vals = trajectory.values.reshape(len(trajectory), -1)
        ref = vals[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(ref != 0, np.abs(vals / ref - 1.0), np.abs(vals - ref))
        drift = {f"g_{k + 1}": float(rel[:, k].max()) for k in range(vals.shape[1])}
        return DriftReport(drift, max(drift.values(), default=0.0))
    if fam is None or fam[0] != "heisenberg" or trajectory.kind != "diagonal":
        raise UnsupportedAlgebraError("conserved quantities are defined for diagonal Heisenberg trajectories")
    n = fam[1]
    recs = trajectory.conserved or [conserved_quantities(n, v) for v in diag]
    table = [r.as_dict() for r in recs]
    drift = {}
    for key, q0 in table[0].items():
        drift[key] = float(max(abs(row[key] / q0 - 1.0) for row in table))
    return DriftReport(drift, max(drift.values()))


def nil3_closed_form(A0, B0, C0, t):
    """Exact diagonal Ricci flow on the 3-dimensional Heisenberg group.

    ``A = A0 K^{-1/3} (t+K)^{1/3}``, ``B`` likewise, ``C = C0 K^{1/3} (t+K)^{-1/3}``
    with ``K = A0 B0 / (3 C0)``.
    """
    if min(A0, B0, C0) <= 0:
        raise DomainError("initial components must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("closed form is used for t >= 0")
    K = A0 * B0 / (3.0 * C0)
    x = np.cbrt((t + K) / K)
    return A0 * x, B0 * x, C0 / x


def nil3_trajectory(A0, B0, C0, times) -> FlowTrajectory:
    from .algebra import heisenberg

    A, B, C = nil3_closed_form(A0, B0, C0, times)
    values = np.column_stack([A, B, C])
    return FlowTrajectory(heisenberg(1), times, values, "diagonal",
                          [conserved_quantities(1, v) for v in values])


def heisenberg_gN_lower_bound(n: int, g0diag, t):
    """``1 / (1/g_N(0) + Sigma(0) t)``, a lower bound for g_N(t)."""
    g0 = np.asarray(g0diag, dtype=float)
    sigma0 = np.sum(1.0 / (g0[:n] * g0[n:2 * n]))
    return 1.0 / (1.0 / g0[-1] + sigma0 * np.asarray(t, dtype=float))
