"""Nilpotent Lie algebras given by structure constants.

A Lie algebra with basis e_1..e_N is stored through its structure constants
``[e_i, e_j] = c_ij^k e_k``. Only the entries with ``i < j`` are kept; the
antisymmetric completion is produced on demand as a dense ``(N, N, N)`` array
indexed from zero (``C[i, j, k] = c_{i+1, j+1}^{k+1}``).

Indices in :class:`LieAlgebraSpec` entries, JSON files and the CLI are
1-based. Dense arrays handed to or returned by the numerical code are
0-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import DomainError, StructureError

__all__ = [
    "LieAlgebraSpec",
    "IndexMap",
    "ValidationReport",
    "abelian",
    "heisenberg",
    "unitriangular",
    "validate",
    "jacobi_residual",
    "lower_central_series",
    "family_size",
    "is_derivation",
    "derivation_defect",
    "detect_family",
]

JACOBI_TOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class LieAlgebraSpec:
    """Structure constants of an N-dimensional Lie algebra.

    Parameters
    ----------
    dim : int
        Dimension N.
    entries : sequence of (i, j, k, value)
        Nonzero constants ``c_ij^k`` with ``1 <= i < j <= N`` and
        ``1 <= k <= N``.
    labels : sequence of str, optional
        Display names for the basis vectors (``"12"``, ``"13"``, ... for
        unitriangular algebras).
    """

    dim: int
    entries: tuple = ()
    labels: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise StructureError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        seen = set()
        normalized = []
        for entry in self.entries:
            try:
                i, j, k, value = entry
            except (TypeError, ValueError):
                raise StructureError(f"entry {entry!r} is not an (i, j, k, value) tuple") from None
            for idx in (i, j, k):
                if isinstance(idx, bool) or not float(idx).is_integer():
                    raise StructureError(f"entry {entry!r}: indices must be integers")
            i, j, k, value = int(i), int(j), int(k), float(value)
            if not (1 <= i < j <= self.dim):
                raise StructureError(
                    f"entry (i={i}, j={j}, k={k}): need 1 <= i < j <= {self.dim}"
                )
            if not (1 <= k <= self.dim):
                raise StructureError(f"entry (i={i}, j={j}, k={k}): k out of range 1..{self.dim}")
            if value == 0.0 or not math.isfinite(value):
                raise StructureError(f"entry (i={i}, j={j}, k={k}): value must be finite and nonzero")
            if (i, j, k) in seen:
                raise StructureError(f"duplicate entry (i={i}, j={j}, k={k})")
            seen.add((i, j, k))
            normalized.append((i, j, k, value))
        object.__setattr__(self, "entries", tuple(sorted(normalized)))
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != self.dim:
                raise StructureError(f"{len(labels)} labels given for dimension {self.dim}")
            object.__setattr__(self, "labels", labels)

    @cached_property
    def structure_tensor(self) -> np.ndarray:
        """Dense antisymmetric ``C[i, j, k]`` (0-based), read-only."""
        C = np.zeros((self.dim,) * 3)
        for i, j, k, v in self.entries:
            C[i - 1, j - 1, k - 1] = v
            C[j - 1, i - 1, k - 1] = -v
        C.flags.writeable = False
        return C

    @cached_property
    def is_integral(self) -> bool:
        return all(float(v).is_integer() for *_, v in self.entries)

    @property
    def basis_labels(self) -> tuple:
        if self.labels is not None:
            return self.labels
        return tuple(str(k) for k in range(1, self.dim + 1))

    def bracket(self, x, y) -> np.ndarray:
        """Bracket of two coordinate vectors."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.einsum("i,j,ijk->k", x, y, self.structure_tensor)

    def to_dict(self) -> dict:
        out = {"dim": self.dim}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        out["brackets"] = [{"i": i, "j": j, "k": k, "c": v} for i, j, k, v in self.entries]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LieAlgebraSpec":
        try:
            dim = data["dim"]
            brackets = data.get("brackets", [])
            entries = [(b["i"], b["j"], b["k"], b["c"]) for b in brackets]
        except (KeyError, TypeError) as exc:
            raise StructureError(f"malformed algebra document: {exc}") from None
        return cls(dim, tuple(entries), data.get("labels"))


@dataclass(frozen=True)
class IndexMap:
    """Bijection between double indices (i, j), i < j, and flat basis positions.

    Flat positions are 0-based; pairs are 1-based as in the matrix picture.
    """

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if len(set(pairs)) != len(pairs):
            raise StructureError("IndexMap pairs must be distinct")
        if any(i >= j for i, j in pairs):
            raise StructureError("IndexMap pairs need i < j")
        object.__setattr__(self, "pairs", pairs)

    @cached_property
    def flat_of_pair(self) -> dict:
        return {p: k for k, p in enumerate(self.pairs)}

    @property
    def pair_of_flat(self) -> tuple:
        return self.pairs

    def flat(self, i: int, j: int) -> int:
        return self.flat_of_pair[(i, j)]

    def pair(self, k: int) -> tuple:
        return self.pairs[k]

    def __len__(self):
        return len(self.pairs)

    @classmethod
    def unitriangular(cls, n: int) -> "IndexMap":
        """Pairs of ``{1..n}`` sorted by (j - i, i): one block per superdiagonal."""
        pairs = sorted(
            ((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)),
            key=lambda p: (p[1] - p[0], p[0]),
        )
        return cls(tuple(pairs))

    def labels(self) -> tuple:
        return tuple(f"{i}{j}" if j < 10 else f"{i},{j}" for i, j in self.pairs)


def abelian(dim: int) -> LieAlgebraSpec:
    return LieAlgebraSpec(dim, ())


def heisenberg(n: int) -> LieAlgebraSpec:
    """Heisenberg algebra of dimension 2n+1 with ``[E_i, E_{i+n}] = E_N``.

    Basis order is E_1..E_n, E_{1+n}..E_{2n}, E_N.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"heisenberg(n) needs an integer n >= 1, got {n!r}")
    n = int(n)
    N = 2 * n + 1
    entries = tuple((i, i + n, N, 1.0) for i in range(1, n + 1))
    labels = tuple(str(k) for k in range(1, 2 * n + 1)) + ("N",)
    return LieAlgebraSpec(N, entries, labels)


def unitriangular(n: int) -> LieAlgebraSpec:
    """Strictly upper-triangular n x n matrices, ``[B_ij, B_kl] = d_jk B_il - d_il B_kj``.

    The basis is flattened with :meth:`IndexMap.unitriangular`.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"unitriangular(n) needs an integer n >= 2, got {n!r}")
    n = int(n)
    imap = IndexMap.unitriangular(n)
    entries = []
    for a, (i, j) in enumerate(imap.pairs):
        for b, (k, l) in enumerate(imap.pairs):
            if b <= a:
                continue
            out = {}
            if j == k:
                t = imap.flat(i, l)
                out[t] = out.get(t, 0.0) + 1.0
            if i == l:
                t = imap.flat(k, j)
                out[t] = out.get(t, 0.0) - 1.0
            for t, v in out.items():
                if v != 0.0:
                    entries.append((a + 1, b + 1, t + 1, v))
    return LieAlgebraSpec(len(imap), tuple(entries), imap.labels())


def family_size(spec: LieAlgebraSpec, name: str):
    """n if ``spec`` equals the generator ``name(n)`` entry for entry, else None.

    heisenberg(1) and unitriangular(3) have identical brackets and match both.
    """
    N = spec.dim
    if name == "heisenberg":
        if N >= 3 and N % 2 == 1 and spec.entries == heisenberg((N - 1) // 2).entries:
            return (N - 1) // 2
        return None
    if name == "unitriangular":
        n = int(round((1 + math.sqrt(1 + 8 * N)) / 2))
        if n >= 2 and n * (n - 1) // 2 == N and spec.entries == unitriangular(n).entries:
            return n
        return None
    raise DomainError(f"unknown family {name!r}")


def detect_family(spec: LieAlgebraSpec):
    """Return ``("heisenberg", n)``, ``("unitriangular", n)`` or ``None``.

    Only an exact entry-for-entry match with the generators counts; Heisenberg
    wins when both match. Dimension 1 is reported as ``unitriangular(2)``.
    """
    for name in ("heisenberg", "unitriangular"):
        n = family_size(spec, name)
        if n is not None:
            return (name, n)
    return None


@dataclass
class ValidationReport:
    dim: int
    jacobi_residual: float
    nilpotent: bool
    nilpotency_step: int | None
    lower_central_dims: list
    passed: bool

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "jacobi_residual": self.jacobi_residual,
            "nilpotent": self.nilpotent,
            "nilpotency_step": self.nilpotency_step,
            "lower_central_dims": list(self.lower_central_dims),
            "passed": self.passed,
        }


def jacobi_residual(spec: LieAlgebraSpec) -> float:
    """Max |sum_m c_ij^m c_mk^l + c_jk^m c_mi^l + c_ki^m c_mj^l| over i, j, k, l."""
    C = spec.structure_tensor
    if not spec.entries:
        return 0.0
    T = np.tensordot(C, C, axes=([2], [0]))  # T[i,j,k,l] = c_ij^m c_mk^l
    J = T + np.einsum("jkil->ijkl", T) + np.einsum("kijl->ijkl", T)
    return float(np.abs(J).max())


def _row_space(vectors: np.ndarray, tol: float) -> np.ndarray:
    if vectors.size == 0:
        return np.zeros((0, vectors.shape[-1]))
    scale = max(1.0, float(np.abs(vectors).max()))
    _, s, vt = scipy.linalg.svd(vectors, full_matrices=False)
    r = int(np.sum(s > tol * scale))
    return vt[:r]


def lower_central_series(spec: LieAlgebraSpec, tol: float = RANK_TOL) -> list:
    """Dimensions of g^1 = g, g^2 = [g, g], ... until zero or stabilization."""
    C = spec.structure_tensor
    N = spec.dim
    V = np.eye(N)
    dims = [N]
    for _ in range(N + 1):
        images = np.einsum("rj,ijk->rik", V, C).reshape(-1, N)
        V = _row_space(images, tol)
        dims.append(V.shape[0])
        if V.shape[0] == 0 or V.shape[0] == dims[-2]:
            break
    return dims


def validate(spec: LieAlgebraSpec, tol: float = JACOBI_TOL) -> ValidationReport:
    """Check the Jacobi identity and nilpotency of ``spec``."""
    if not isinstance(spec, LieAlgebraSpec):
        raise StructureError("validate() expects a LieAlgebraSpec")
    jac = jacobi_residual(spec)
    dims = lower_central_series(spec)
    nilpotent = dims[-1] == 0
    step = len(dims) - 1 if nilpotent else None
    return ValidationReport(
        dim=spec.dim,
        jacobi_residual=jac,
        nilpotent=nilpotent,
        nilpotency_step=step,
        lower_central_dims=dims,
        passed=bool(jac <= tol and nilpotent),
    )


def derivation_defect(spec: LieAlgebraSpec, D) -> np.ndarray:
    """``E[i, j, :] = D[e_i, e_j] - [D e_i, e_j] - [e_i, D e_j]`` (0-based)."""
    D = np.asarray(D, dtype=float)
    N = spec.dim
    if D.shape != (N, N):
        raise StructureError(f"derivation candidate has shape {D.shape}, algebra has dim {N}")
    C = spec.structure_tensor
    return (
        np.einsum("lk,ijk->ijl", D, C)
        - np.einsum("ai,ajl->ijl", D, C)
        - np.einsum("bj,ibl->ijl", D, C)
    )


def is_derivation(spec: LieAlgebraSpec, D) -> float:
    """Max-norm defect of D as a derivation; 0 means D is a derivation."""
    E = derivation_defect(spec, D)
    iu = np.triu_indices(spec.dim, 1)
    vals = E[iu]
    return float(np.abs(vals).max()) if vals.size else 0.0
