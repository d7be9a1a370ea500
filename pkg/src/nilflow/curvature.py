"""Curvature of left-invariant metrics from structure constants.

All index arguments and array axes here are 0-based. ``R[i, j, k, l]`` is
``<R(e_i, e_j) e_k, e_l>`` with ``R(X, Y) = [D_X, D_Y] - D_[X,Y]``, so the
sectional curvature of an orthonormal pair is ``R[i, j, j, i]`` and the Ricci
tensor is ``R_ij = g^km R[k, i, j, m]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .algebra import LieAlgebraSpec
from .errors import DegeneratePlaneError, DomainError, StructureError
from .metric import MetricState, as_metric

__all__ = [
    "CurvatureBundle",
    "adjoint_constants",
    "christoffel",
    "ricci_general",
    "ricci_endomorphism",
    "riemann_general",
    "sectional",
    "sectional_matrix",
    "scalar",
    "ricci_heisenberg_diag",
    "ricci_heisenberg_full",
    "ricci_unitriangular_diag",
    "curvature_bundle",
]

TOL = 1e-12
DEGENERATE_TOL = 1e-14


def _prepare(spec: LieAlgebraSpec, g) -> tuple:
    g = as_metric(g)
    if g.dim != spec.dim:
        raise StructureError(f"metric has dimension {g.dim}, algebra has {spec.dim}")
    return spec.structure_tensor, g


def adjoint_constants(spec, g, backend=None) -> np.ndarray:
    """``a[i, j, k] = a_ij^k`` with ``(ad_{e_i})^* e_j = a_ij^k e_k``."""
    C, g = _prepare(spec, g)
    return kernels.adjoint_constants(C, g.matrix, g.inverse, kernels.get_backend(backend))


def christoffel(spec, g) -> np.ndarray:
    """``gamma[i, j, k]`` with ``D_{e_i} e_j = gamma_ij^k e_k``."""
    C, g = _prepare(spec, g)
    Cg = C @ g.matrix  # Cg[i, j, l] = c_ij^m g_ml
    T = Cg - Cg.transpose(0, 2, 1) - np.einsum("jli->ijl", Cg)
    return 0.5 * np.tensordot(T, g.inverse, axes=([2], [0]))


def ricci_general(spec, g, backend=None) -> np.ndarray:
    """Ricci (0,2) tensor of an arbitrary left-invariant metric."""
    C, g = _prepare(spec, g)
    return kernels.ricci_tensor(C, g.matrix, g.inverse, kernels.get_backend(backend))


def ricci_endomorphism(spec, g, backend=None) -> np.ndarray:
    """``g^{-1} Ric``."""
    g = as_metric(g)
    return g.inverse @ ricci_general(spec, g, backend)


def scalar(spec, g, backend=None) -> float:
    g = as_metric(g)
    R = ricci_general(spec, g, backend)
    return float(np.sum(g.inverse * R))


def riemann_general(spec, g) -> np.ndarray:
    """Full (4,0) Riemann tensor; memory is dim**4."""
    C, g = _prepare(spec, g)
    G = g.matrix
    a = adjoint_constants(spec, g)
    S = a + a.transpose(1, 0, 2)
    e = lambda sub, *ops: np.einsum(sub, *ops, optimize=True)  # noqa: E731
    R4 = (
        2.0 * e("ijp,klq,pq->ijkl", C, C, G)
        + e("ikp,jlq,pq->ijkl", C, C, G)
        - e("ilp,jkq,pq->ijkl", C, C, G)
        - e("ijp,pkq,ql->ijkl", C, C, G)
        + e("ijp,plq,qk->ijkl", C, C, G)
        - e("klp,piq,qj->ijkl", C, C, G)
        + e("klp,pjq,qi->ijkl", C, C, G)
        + e("ikp,jlq,pq->ijkl", S, S, G)
        - e("ilp,jkq,pq->ijkl", S, S, G)
    )
    return 0.25 * R4


def sectional(spec, g, i: int, j: int) -> float:
    """Sectional curvature of the plane spanned by e_i, e_j."""
    C, g = _prepare(spec, g)
    N = spec.dim
    if not (0 <= i < N and 0 <= j < N):
        raise DomainError(f"basis indices ({i}, {j}) out of range for dimension {N}")
    if i == j:
        raise DegeneratePlaneError(f"plane e_{i} ^ e_{j} is degenerate")
    G = g.matrix
    denom = G[i, i] * G[j, j] - G[i, j] ** 2
    if denom <= DEGENERATE_TOL:
        raise DegeneratePlaneError(f"plane e_{i} ^ e_{j} has Gram determinant {denom:.3e}")
    a = adjoint_constants(spec, g)
    cij, cji = C[i, j], C[j, i]
    Sij = a[i, j] + a[j, i]
    num = (
        3.0 * cij @ G @ cji
        - (cij @ C[:, j]) @ G[:, i]
        + (cij @ C[:, i]) @ G[:, j]
        - (cji @ C[:, i]) @ G[:, j]
        + (cji @ C[:, j]) @ G[:, i]
        + Sij @ G @ Sij
        - (2.0 * a[i, i]) @ G @ (2.0 * a[j, j])
    )
    return float(0.25 * num / denom)


def sectional_matrix(spec, g) -> np.ndarray:
    """``K[i, j]`` for all i != j; NaN on the diagonal and on degenerate planes."""
    N = spec.dim
    K = np.full((N, N), np.nan)
    for i in range(N):
        for j in range(i + 1, N):
            try:
                K[i, j] = K[j, i] = sectional(spec, g, i, j)
            except DegeneratePlaneError:
                pass
    return K


def _diag_arg(gdiag, length: int) -> np.ndarray:
    if isinstance(gdiag, MetricState):
        if not gdiag.is_diagonal:
            raise StructureError("closed-form Ricci needs a diagonal metric")
        gdiag = gdiag.diag
    g = np.asarray(gdiag, dtype=float)
    if g.ndim != 1 or g.size != length:
        raise StructureError(f"expected {length} diagonal entries, got shape {g.shape}")
    if np.any(g <= 0):
        raise DomainError("diagonal metric entries must be positive")
    return g


def ricci_heisenberg_diag(n: int, gdiag, backend=None) -> np.ndarray:
    """Diagonal Ricci of a diagonal metric on the (2n+1)-dim Heisenberg algebra.

    ``R_i = -g_N/(2 g_{i+n})``, ``R_{i+n} = -g_N/(2 g_i)``,
    ``R_N = g_N^2 Sigma / 2`` with ``Sigma = sum_k 1/(g_k g_{k+n})``.
    """
    g = _diag_arg(gdiag, 2 * n + 1)
    return kernels.heisenberg_ricci_diag(n, g, kernels.get_backend(backend))


def ricci_heisenberg_full(n: int, g) -> np.ndarray:
    """Block closed form of the Heisenberg Ricci tensor for a full metric.

    With ``Sigma = sum_{k,m<n} (g^{km} g^{k+n,m+n} - g^{k,m+n} g^{k+n,m})`` and
    ``v_I = g_{IN}``, the 2n x 2n block is ``(Sigma/2) v v^T`` plus
    ``-(g_N/2) g^{i+n,j+n}``, ``(g_N/2) g^{i+n,j}`` etc.; the mixed row is
    ``(g_N Sigma / 2) v`` and the corner is ``g_N^2 Sigma / 2``.
    """
    g = as_metric(g)
    N = 2 * n + 1
    if g.dim != N:
        raise StructureError(f"expected dimension {N}, got {g.dim}")
    G, H = g.matrix, g.inverse
    lo, hi = slice(0, n), slice(n, 2 * n)
    sigma = np.sum(H[lo, lo] * H[hi, hi]) - np.sum(H[lo, hi] * H[hi, lo])
    gN = G[N - 1, N - 1]
    v = G[:2 * n, N - 1]
    R = np.empty((N, N))
    R[:2 * n, :2 * n] = 0.5 * sigma * np.outer(v, v)
    R[lo, lo] += -0.5 * gN * H[hi, hi]
    R[lo, hi] += 0.5 * gN * H[hi, lo]
    R[hi, lo] += 0.5 * gN * H[lo, hi]
    R[hi, hi] += -0.5 * gN * H[lo, lo]
    R[:2 * n, N - 1] = R[N - 1, :2 * n] = 0.5 * gN * sigma * v
    R[N - 1, N - 1] = 0.5 * gN * gN * sigma
    return R


def ricci_unitriangular_diag(n: int, gdiag, backend=None) -> np.ndarray:
    """Diagonal Ricci of a diagonal metric on strictly upper-triangular n x n matrices.

    ``gdiag`` is in the (j - i, i) flat order of :meth:`IndexMap.unitriangular`.
    """
    if n < 2:
        raise DomainError("unitriangular Ricci needs n >= 2")
    g = _diag_arg(gdiag, n * (n - 1) // 2)
    return kernels.unitriangular_ricci_diag(n, g, kernels.get_backend(backend))


@dataclass
class CurvatureBundle:
    christoffel: np.ndarray
    ricci: np.ndarray
    scalar: float
    riemann: np.ndarray | None = None
    sectional: np.ndarray | None = None
    condition: float = 1.0
    ill_conditioned: bool = False

    def to_dict(self) -> dict:
        def arr(x):
            return None if x is None else np.where(np.isnan(x), None, x).tolist()

        out = {
            "christoffel": self.christoffel.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar": self.scalar,
            "condition": self.condition,
            "ill_conditioned": self.ill_conditioned,
        }
        if self.riemann is not None:
            out["riemann"] = self.riemann.tolist()
        if self.sectional is not None:
            out["sectional"] = arr(self.sectional)
        return out


def curvature_bundle(spec, g, riemann: bool = False, sectional: bool = False) -> CurvatureBundle:
    g = as_metric(g)
    _prepare(spec, g)
    g.check_conditioning()
    R = ricci_general(spec, g)
    return CurvatureBundle(
        christoffel=christoffel(spec, g),
        ricci=R,
        scalar=float(np.sum(g.inverse * R)),
        riemann=riemann_general(spec, g) if riemann else None,
        sectional=sectional_matrix(spec, g) if sectional else None,
        condition=g.condition,
        ill_conditioned=g.ill_conditioned,
    )
