"""Left-invariant metrics as component matrices in the fixed basis."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefiniteError, StructureError

__all__ = ["MetricState", "IllConditionedWarning", "as_metric"]

SYMMETRY_TOL = 1e-12
COND_WARN = 1e12


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class MetricState:
    """Symmetric positive-definite ``g_ij = <e_i, e_j>``.

    Use :meth:`diagonal` or :meth:`full` rather than the raw constructor.
    A diagonal metric keeps only its diagonal and its inverse is exact.
    """

    kind: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if self.kind == "diagonal":
            if vals.ndim != 1 or vals.size == 0:
                raise StructureError("diagonal metric needs a non-empty 1-d array")
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                raise NotPositiveDefiniteError(f"diagonal metric entries must be positive: {vals}")
        elif self.kind == "full":
            if vals.ndim != 2 or vals.shape[0] != vals.shape[1] or vals.size == 0:
                raise StructureError(f"full metric must be square, got shape {vals.shape}")
            if not np.all(np.isfinite(vals)):
                raise NotPositiveDefiniteError("metric has non-finite entries")
            scale = max(1.0, float(np.abs(vals).max()))
            if np.abs(vals - vals.T).max() > SYMMETRY_TOL * scale:
                raise NotPositiveDefiniteError("metric matrix is not symmetric")
            vals = 0.5 * (vals + vals.T)
        else:
            raise StructureError(f"unknown metric kind {self.kind!r}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.kind == "full":
            self._cholesky  # raises if not PD

    @classmethod
    def diagonal(cls, diag) -> "MetricState":
        return cls("diagonal", diag)

    @classmethod
    def full(cls, mat) -> "MetricState":
        return cls("full", mat)

    @classmethod
    def identity(cls, dim: int) -> "MetricState":
        return cls("diagonal", np.ones(dim))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.kind == "diagonal"

    @property
    def diag(self) -> np.ndarray:
        if self.kind == "diagonal":
            return self.values
        return np.diag(self.values).copy()

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.kind == "diagonal":
            m = np.diag(self.values)
        else:
            m = self.values.copy()
        m.flags.writeable = False
        return m

    @cached_property
    def _cholesky(self):
        try:
            return scipy.linalg.cho_factor(self.values, lower=True)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("metric matrix is not positive definite") from None

    @cached_property
    def inverse(self) -> np.ndarray:
        if self.kind == "diagonal":
            inv = np.diag(1.0 / self.values)
        else:
            inv = scipy.linalg.cho_solve(self._cholesky, np.eye(self.dim))
            inv = 0.5 * (inv + inv.T)
        inv.flags.writeable = False
        return inv

    @cached_property
    def condition(self) -> float:
        if self.kind == "diagonal":
            return float(self.values.max() / self.values.min())
        w = np.linalg.eigvalsh(self.values)
        return float(w[-1] / w[0])

    @property
    def ill_conditioned(self) -> bool:
        return self.condition > COND_WARN

    def check_conditioning(self) -> None:
        if self.ill_conditioned:
            warnings.warn(
                f"metric condition number {self.condition:.3e} exceeds {COND_WARN:.0e}",
                IllConditionedWarning,
                stacklevel=3,
            )

    def scaled(self, factor: float) -> "MetricState":
        return MetricState(self.kind, factor * self.values)

    def to_dict(self) -> dict:
        if self.kind == "diagonal":
            return {"dim": self.dim, "diag": self.values.tolist()}
        return {"dim": self.dim, "mat": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricState":
        if "diag" in data and "mat" in data:
            raise StructureError("metric document has both 'diag' and 'mat'")
        if "diag" in data:
            g = cls.diagonal(data["diag"])
        elif "mat" in data:
            g = cls.full(data["mat"])
        else:
            raise StructureError("metric document needs 'diag' or 'mat'")
        if "dim" in data and int(data["dim"]) != g.dim:
            raise StructureError(f"metric 'dim' = {data['dim']} but data has dimension {g.dim}")
        return g

    def __repr__(self):
        return f"MetricState.{self.kind}({self.values.tolist()!r})"


def as_metric(g) -> MetricState:
    """Coerce arrays to :class:`MetricState`: 1-d means diagonal, 2-d means full."""
    if isinstance(g, MetricState):
        return g
    arr = np.asarray(g, dtype=float)
    if arr.ndim == 1:
        return MetricState.diagonal(arr)
    return MetricState.full(arr)
