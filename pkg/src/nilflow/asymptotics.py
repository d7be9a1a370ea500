"""Long-time behavior of diagonal Ricci flow on Heisenberg algebras.

A diagonal solution on the (2n+1)-dimensional Heisenberg algebra grows like
``g_I(t) ~ gamma_I t^{e_I}`` with ``e_I = 1/(n+2)`` on the first 2n slots and
``e_N = -n/(n+2)``. The constants come from the conserved quantities
``A_i = g_i/g_{i+n}``, ``B_{i+n} = 1/A_i`` and ``C = g_1(0)...g_2n(0) g_N(0)^2``:

    gamma_i     = (n+2)^{1/(n+2)} sqrt(A_i) C^{1/(2(n+2))}
    gamma_{i+n} = (n+2)^{1/(n+2)} sqrt(B_{i+n}) C^{1/(2(n+2))}
    gamma_N     = (n+2)^{-n/(n+2)} C^{1/(n+2)}
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import detect_family
from .errors import DomainError, StructureError, UnsupportedAlgebraError
from .flow import FlowTrajectory, conserved_quantities
from .ode import dopri5

__all__ = [
    "AsymptoticProfile",
    "RatioReport",
    "ComparisonResult",
    "DEFAULT_THRESHOLD",
    "predict",
    "log_grid",
    "ratio_deviation",
    "ratio_convergence",
    "deviations_per_decade",
    "comparison_lemma_check",
]

DEFAULT_THRESHOLD = 0.02
POINTS_PER_DECADE = 50


@dataclass(frozen=True)
class AsymptoticProfile:
    """Predicted power law ``g_I(t) ~ gamma[I] * t**exponents[I]``."""

    n: int
    gamma: np.ndarray
    exponents: np.ndarray
    A: np.ndarray
    C: float

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def evaluate(self, t) -> np.ndarray:
        """``gamma_I t^{e_I}``; shape ``(len(t), dim)`` for array input."""
        t = np.asarray(t, dtype=float)
        return self.gamma * np.power.outer(t, self.exponents) if t.ndim else self.gamma * t ** self.exponents

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma.tolist(),
            "exponents": self.exponents.tolist(),
            "A": self.A.tolist(),
            "C": self.C,
        }


def predict(n: int, g0_diag) -> AsymptoticProfile:
    if n < 1:
        raise DomainError("Heisenberg algebras need n >= 1")
    g0 = np.asarray(g0_diag, dtype=float)
    if g0.shape != (2 * n + 1,):
        raise StructureError(f"expected {2 * n + 1} initial components, got shape {g0.shape}")
    if np.any(g0 <= 0):
        raise DomainError("initial components must be positive")
    cs = conserved_quantities(n, g0)
    m = n + 2.0
    C = cs.C
    lead = m ** (1.0 / m) * C ** (1.0 / (2.0 * m))
    gamma = np.concatenate([lead * np.sqrt(cs.A), lead * np.sqrt(cs.B), [m ** (-n / m) * C ** (1.0 / m)]])
    exponents = np.concatenate([np.full(2 * n, 1.0 / m), [-n / m]])
    return AsymptoticProfile(n=n, gamma=gamma, exponents=exponents, A=cs.A, C=C)


def log_grid(t_start: float, t_end: float, per_decade: int = POINTS_PER_DECADE) -> np.ndarray:
    """Log-uniform grid with ``per_decade`` points per factor of ten, endpoints included."""
    if not 0 < t_start < t_end:
        raise DomainError("need 0 < t_start < t_end")
    count = max(2, int(np.ceil(per_decade * np.log10(t_end / t_start))) + 1)
    grid = np.geomspace(t_start, t_end, count)
    grid[0], grid[-1] = t_start, t_end
    return grid


def ratio_deviation(times, values, profile: AsymptoticProfile) -> np.ndarray:
    """``|g_I(t) / (gamma_I t^{e_I}) - 1|`` for each sample and component."""
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise DomainError("ratio deviations need t > 0")
    return np.abs(np.asarray(values) / profile.evaluate(times) - 1.0)


@dataclass
class RatioReport:
    times: np.ndarray
    deviations: np.ndarray
    threshold: float

    @property
    def sup(self) -> np.ndarray:
        """Per-component sup over the window."""
        return self.deviations.max(axis=0)

    @property
    def end(self) -> np.ndarray:
        return self.deviations[-1]

    @property
    def start(self) -> np.ndarray:
        return self.deviations[0]

    @property
    def passed(self) -> bool:
        return bool(self.end.max() < self.threshold)

    @property
    def improving(self) -> bool:
        """End-of-window deviation is below the start-of-window one in every component."""
        return bool(np.all(self.end < self.start))

    def to_dict(self) -> dict:
        return {
            "t_start": float(self.times[0]),
            "t_end": float(self.times[-1]),
            "sup": self.sup.tolist(),
            "start": self.start.tolist(),
            "end": self.end.tolist(),
            "threshold": self.threshold,
            "passed": self.passed,
            "improving": self.improving,
        }


def ratio_convergence(trajectory: FlowTrajectory, profile: AsymptoticProfile, t_window,
                      threshold: float = DEFAULT_THRESHOLD) -> RatioReport:
    """Deviation from the predicted power law on the trajectory samples inside ``t_window``."""
    fam = detect_family(trajectory.algebra)
    if fam is None or fam[0] != "heisenberg":
        raise UnsupportedAlgebraError("ratio convergence is defined for Heisenberg trajectories")
    if fam[1] != profile.n:
        raise StructureError(f"profile is for n = {profile.n}, trajectory for n = {fam[1]}")
    lo, hi = float(t_window[0]), float(t_window[1])
    times = trajectory.times
    if not (0 < lo < hi) or lo < times[0] or hi > times[-1] * (1 + 1e-12):
        raise DomainError(f"window [{lo}, {hi}] is not inside the trajectory [{times[0]}, {times[-1]}]")
    mask = (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12))
    if mask.sum() < 1:
        raise DomainError("no trajectory samples inside the window")
    dev = ratio_deviation(times[mask], trajectory.diagonals[mask], profile)
    return RatioReport(times[mask], dev, threshold)


def deviations_per_decade(trajectory: FlowTrajectory, profile: AsymptoticProfile) -> list:
    """Max deviation at each power of ten covered by the trajectory samples."""
    out = []
    times = trajectory.times
    pos = times[times > 0]
    if pos.size == 0:
        return out
    for k in range(int(np.ceil(np.log10(pos[0]))), int(np.floor(np.log10(pos[-1]))) + 1):
        t = 10.0 ** k
        idx = int(np.argmin(np.abs(np.log(pos / t))))
        if abs(np.log10(pos[idx] / t)) > 1e-9:
            continue
        j = int(np.nonzero(times == pos[idx])[0][0])
        dev = ratio_deviation([times[j]], trajectory.diagonals[j:j + 1], profile)[0]
        out.append({"t": t, "deviation": dev.tolist(), "max": float(dev.max())})
    return out


@dataclass(frozen=True)
class ComparisonResult:
    u: float
    v: float

    @property
    def ratio(self) -> float:
        return self.u / self.v

    @property
    def deviation(self) -> float:
        return abs(self.ratio - 1.0)


def comparison_lemma_check(c: float, epsilon_fn, t_end: float, u0: float = 1.0, v0: float = 1.0,
                           rtol: float = 1e-10, atol: float = 1e-12) -> ComparisonResult:
    """Integrate ``u' = c``, ``v' = c (1 + eps(t))`` from t = 0 and report u/v at ``t_end``.

    If eps tends to zero then u/v tends to one; this harness measures how
    close the ratio is at a finite horizon.
    """
    if c <= 0:
        raise DomainError("c must be positive")
    if t_end <= 0:
        raise DomainError("t_end must be positive")

    def f(t, y):
        return np.array([c, c * (1.0 + epsilon_fn(t))])

    res = dopri5(f, (0.0, t_end), np.array([u0, v0], dtype=float), rtol=rtol, atol=atol, t_eval=[t_end])
    u, v = res.y[-1]
    return ComparisonResult(float(u), float(v))
