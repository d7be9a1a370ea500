"""Self-similar solutions and the nilsoliton certificate.

Diffeomorphisms here are diagonal scalings of the coframe,
``theta^I -> f_I(s) theta^I`` with ``f_I(s) = k_I s^{e_I}``, so a metric
component ``g_IJ`` picks up ``f_I f_J``.

A metric is a nilsoliton when its Ricci endomorphism ``g^{-1} Ric`` equals
``c I + D`` for a real c and a derivation D. :func:`lauret_certify` finds the
best such pair and reports how far the metric is from satisfying it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse

from .algebra import IndexMap, LieAlgebraSpec, is_derivation
from .asymptotics import AsymptoticProfile
from .curvature import ricci_endomorphism
from .errors import DomainError, NilflowError, StructureError
from .metric import MetricState, as_metric

__all__ = [
    "ScalingDiffeo",
    "SolitonCertificate",
    "CERTIFICATE_TOL",
    "heisenberg_exponents",
    "heisenberg_exponents_solved",
    "heisenberg_eta",
    "unitriangular_eta",
    "pullback",
    "soliton_heisenberg",
    "soliton_heisenberg_rate",
    "soliton_unitriangular",
    "soliton_unitriangular_rate",
    "blowdown_diffeo",
    "blowdown",
    "blowdown_limit",
    "derivation_basis",
    "lauret_certify",
]

CERTIFICATE_TOL = 1e-10
BLOWDOWN_S = (1.0, 10.0, 1e3, 1e6)


@dataclass(frozen=True)
class ScalingDiffeo:
    """Coframe scaling ``theta^I -> coefficients[I] * s**exponents[I] * theta^I``."""

    exponents: np.ndarray
    coefficients: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.exponents, dtype=float)
        object.__setattr__(self, "exponents", e)
        if self.coefficients is not None:
            k = np.asarray(self.coefficients, dtype=float)
            if k.shape != e.shape or np.any(k <= 0):
                raise StructureError("coefficients must be positive and match the exponents")
            object.__setattr__(self, "coefficients", k)

    @property
    def dim(self) -> int:
        return self.exponents.size

    def factors(self, s: float) -> np.ndarray:
        if s <= 0:
            raise DomainError(f"scaling parameter must be positive, got {s}")
        f = s ** self.exponents
        return f if self.coefficients is None else self.coefficients * f


def heisenberg_exponents(n: int) -> tuple:
    """``(a, b)`` with ``a = -(n+1)/(2(n+2))`` and ``b = 2a``."""
    if n < 1:
        raise DomainError("Heisenberg algebras need n >= 1")
    a = -0.5 * (n + 1) / (n + 2)
    return a, 2.0 * a


def heisenberg_exponents_solved(n: int) -> tuple:
    """Same exponents from ``1/(n+2) = 2a + 1`` and ``-n/(n+2) = 2b + 1``."""
    M = np.array([[2.0, 0.0], [0.0, 2.0]])
    rhs = np.array([1.0 / (n + 2) - 1.0, -n / (n + 2) - 1.0])
    a, b = np.linalg.solve(M, rhs)
    return float(a), float(b)


def heisenberg_eta(n: int) -> ScalingDiffeo:
    a, b = heisenberg_exponents(n)
    return ScalingDiffeo(np.concatenate([np.full(2 * n, a), [b]]))


def unitriangular_eta(n: int) -> ScalingDiffeo:
    """Exponents ``-(j - i)/n`` in the flat (j - i, i) order."""
    if n < 2:
        raise DomainError("unitriangular algebras need n >= 2")
    return ScalingDiffeo(np.array([-(j - i) / n for i, j in IndexMap.unitriangular(n).pairs]))


def pullback(g, diffeo: ScalingDiffeo, s: float) -> MetricState:
    g = as_metric(g)
    if g.dim != diffeo.dim:
        raise StructureError(f"metric has dimension {g.dim}, diffeomorphism has {diffeo.dim}")
    f = diffeo.factors(s)
    if g.is_diagonal:
        return MetricState.diagonal(g.diag * f * f)
    return MetricState.full(g.matrix * np.outer(f, f))


def _check_t(t):
    if t <= 0:
        raise DomainError(f"t must be positive, got {t}")


def soliton_heisenberg(n: int, t: float = 1.0) -> MetricState:
    """``diag(t^{1/(n+2)}, ..., t^{1/(n+2)}, t^{-n/(n+2)}/(n+2))``."""
    if n < 1:
        raise DomainError("Heisenberg algebras need n >= 1")
    _check_t(t)
    m = n + 2.0
    return MetricState.diagonal(np.concatenate([np.full(2 * n, t ** (1 / m)), [t ** (-n / m) / m]]))


def soliton_heisenberg_rate(n: int, t: float) -> np.ndarray:
    """Exact time derivative of :func:`soliton_heisenberg`."""
    _check_t(t)
    m = n + 2.0
    return np.concatenate([np.full(2 * n, t ** (1 / m - 1) / m), [-n / m * t ** (-n / m - 1) / m]])


def _ut_steps(n):
    return np.array([j - i for i, j in IndexMap.unitriangular(n).pairs], dtype=float)


def soliton_unitriangular(n: int, t: float = 1.0, A: float = 1.0) -> MetricState:
    """``g_ij = A^{j-i} n^{-(j-i-1)} t^{1 - 2(j-i)/n}`` in flat (j - i, i) order."""
    if n < 2:
        raise DomainError("unitriangular algebras need n >= 2")
    _check_t(t)
    if A <= 0:
        raise DomainError(f"A must be positive, got {A}")
    k = _ut_steps(n)
    return MetricState.diagonal(A ** k * float(n) ** (1 - k) * t ** (1 - 2 * k / n))


def soliton_unitriangular_rate(n: int, t: float, A: float = 1.0) -> np.ndarray:
    """Exact time derivative of :func:`soliton_unitriangular`."""
    _check_t(t)
    k = _ut_steps(n)
    return A ** k * float(n) ** (1 - k) * (1 - 2 * k / n) * t ** (-2 * k / n)


def blowdown_diffeo(profile: AsymptoticProfile) -> ScalingDiffeo:
    """``alpha^I(s)`` taking the predicted power law to the soliton.

    ``alpha^i = (n+2)^{-1/(2(n+2))} A_i^{-1/4} C^{-1/(4(n+2))} s^{(n+1)/(2(n+2))}``,
    ``alpha^{i+n}`` the same with ``B_{i+n}``, ``alpha^N = alpha^i alpha^{i+n}``.
    """
    n, m = profile.n, profile.n + 2.0
    base = m ** (-1 / (2 * m)) * profile.C ** (-1 / (4 * m))
    lo = base * profile.A ** -0.25
    hi = base * (1 / profile.A) ** -0.25
    kN = lo[0] * hi[0]
    e = (n + 1) / (2 * m)
    return ScalingDiffeo(np.concatenate([np.full(2 * n, e), [2 * e]]), np.concatenate([lo, hi, [kN]]))


def blowdown(profile: AsymptoticProfile, t: float, s: float) -> MetricState:
    """``(1/s) phi_s^* g(s t)`` with g the predicted power law."""
    _check_t(t)
    g = MetricState.diagonal(profile.evaluate(s * t))
    return pullback(g, blowdown_diffeo(profile), s).scaled(1.0 / s)


def blowdown_limit(profile: AsymptoticProfile, t: float, s_values=BLOWDOWN_S, tol: float = 1e-12) -> MetricState:
    """Blowdown limit of the predicted power law.

    The rescaled family does not depend on s, so the limit is attained at
    every s. This is checked over ``s_values``; a relative spread above
    ``tol`` raises.
    """
    outs = np.array([blowdown(profile, t, s).diag for s in s_values])
    spread = float(np.max(np.abs(outs / outs[0] - 1.0)))
    if spread > tol:
        raise NilflowError(f"blowdown depends on s: relative spread {spread:.3e}")
    return MetricState.diagonal(outs[0])


@dataclass
class SolitonCertificate:
    c: float
    D: np.ndarray
    ricci_residual: float
    derivation_residual: float
    tol: float = CERTIFICATE_TOL

    @property
    def valid(self) -> bool:
        return self.ricci_residual < self.tol and self.derivation_residual < self.tol

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "D": self.D.tolist(),
            "ricci_residual": self.ricci_residual,
            "derivation_residual": self.derivation_residual,
            "tol": self.tol,
            "pass": self.valid,
        }


def _constraint_matrix(spec: LieAlgebraSpec):
    """Sparse M with ``M vec(D) = 0`` iff D is a derivation; vec is row-major.

    Row (i<j, l), column (a, b):
    ``delta_la C[i,j,b] - delta_bi C[a,j,l] - delta_bj C[i,a,l]``.
    """
    N = spec.dim
    C = spec.structure_tensor
    rows, cols, vals = [], [], []
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    for r, (i, j) in enumerate(pairs):
        base = r * N
        for b in np.nonzero(C[i, j])[0]:
            for l in range(N):  # noqa: E741
                rows.append(base + l); cols.append(l * N + b); vals.append(C[i, j, b])
        for a, l in zip(*np.nonzero(C[:, j, :])):
            rows.append(base + l); cols.append(a * N + i); vals.append(-C[a, j, l])
        for a, l in zip(*np.nonzero(C[i, :, :])):
            rows.append(base + l); cols.append(a * N + j); vals.append(-C[i, a, l])
    shape = (max(len(pairs), 1) * N, N * N)
    return scipy.sparse.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()


@lru_cache(maxsize=32)
def _derivation_basis_cached(spec: LieAlgebraSpec) -> np.ndarray:
    M = _constraint_matrix(spec)
    G = (M.T @ M).toarray()
    w, V = np.linalg.eigh(G)
    cut = 1e-9 * max(1.0, float(w[-1]))
    basis = V[:, w < cut]
    basis.flags.writeable = False
    return basis


def derivation_basis(spec: LieAlgebraSpec) -> np.ndarray:
    """Orthonormal basis (columns, row-major vec) of the derivation algebra."""
    return _derivation_basis_cached(spec)


def lauret_certify(spec: LieAlgebraSpec, g, tol: float = CERTIFICATE_TOL) -> SolitonCertificate:
    """Best fit of ``g^{-1} Ric = c I + D`` over reals c and derivations D.

    D is searched in the null space of the derivation constraints, so it is a
    derivation up to round-off; the least-squares fit over (c, D) is
    minimal-norm when not unique.
    """
    g = as_metric(g)
    if g.dim != spec.dim:
        raise StructureError(f"metric has dimension {g.dim}, algebra has {spec.dim}")
    N = spec.dim
    E = ricci_endomorphism(spec, g)
    Nb = derivation_basis(spec)
    A = np.column_stack([np.eye(N).ravel(), Nb])
    x, *_ = np.linalg.lstsq(A, E.ravel(), rcond=None)
    c = float(x[0])
    D = (Nb @ x[1:]).reshape(N, N)
    resid = float(np.abs(E - c * np.eye(N) - D).max())
    return SolitonCertificate(c, D, resid, is_derivation(spec, D), tol)
