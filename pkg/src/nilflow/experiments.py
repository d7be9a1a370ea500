"""Reproducible experiments composed from the library modules.

Each experiment returns a :class:`Report` whose content depends only on the
configuration and seed. Random numbers come from numpy's PCG64 generator.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .algebra import heisenberg, unitriangular
from .asymptotics import DEFAULT_THRESHOLD, log_grid, predict, ratio_convergence
from .curvature import (
    ricci_general,
    ricci_heisenberg_diag,
    ricci_unitriangular_diag,
    riemann_general,
)
from .errors import DomainError, StructureError
from .flow import (
    FlowProblem,
    conserved,
    heisenberg_gN_lower_bound,
    integrate,
    nil3_closed_form,
    rhs,
)
from .io import dumps, write_json, write_trajectory
from .metric import MetricState
from .soliton import (
    blowdown,
    heisenberg_eta,
    lauret_certify,
    pullback,
    soliton_heisenberg,
    soliton_heisenberg_rate,
    soliton_unitriangular,
    soliton_unitriangular_rate,
    unitriangular_eta,
)

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "Report",
    "run",
    "seed_rng",
    "random_diag_metric",
    "random_full_metric",
    "relative_max_error",
]

METRIC_LOW, METRIC_HIGH = 0.1, 10.0


def seed_rng(seed) -> np.random.Generator:
    """numpy Generator on the PCG64 bit generator."""
    return np.random.Generator(np.random.PCG64(seed))


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return seed_rng(seed_or_rng)


def random_diag_metric(dim: int, seed=0, low: float = METRIC_LOW, high: float = METRIC_HIGH) -> MetricState:
    """Diagonal metric with entries log-uniform on ``[low, high]``."""
    if dim < 1 or not 0 < low < high:
        raise DomainError("need dim >= 1 and 0 < low < high")
    rng = _rng(seed)
    return MetricState.diagonal(np.exp(rng.uniform(np.log(low), np.log(high), dim)))


def random_full_metric(dim: int, seed=0, low: float = METRIC_LOW, high: float = METRIC_HIGH) -> MetricState:
    """``Q diag(w) Q^T`` with Haar-random Q and eigenvalues log-uniform on ``[low, high]``."""
    rng = _rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((dim, dim)))
    Q = Q * np.sign(np.diag(R))
    w = np.exp(rng.uniform(np.log(low), np.log(high), dim))
    G = (Q * w) @ Q.T
    return MetricState.full(0.5 * (G + G.T))


def relative_max_error(a, b) -> float:
    """``max|a - b| / max|b|`` (absolute when b vanishes)."""
    a, b = np.asarray(a), np.asarray(b)
    scale = float(np.abs(b).max()) if b.size else 0.0
    err = float(np.abs(a - b).max()) if b.size else 0.0
    return err / scale if scale > 0 else err


@dataclass
class ExperimentConfig:
    experiment: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise StructureError(f"unknown experiment {self.experiment!r}; choose from {sorted(EXPERIMENTS)}")
        if not isinstance(self.parameters, dict):
            raise StructureError("parameters must be a mapping")
        for key in ("t1", "t_end"):
            if key in self.parameters and not self.parameters[key] > 0:
                raise DomainError(f"{key} must be positive")
        for key in ("ns", "n_values"):
            for n in self.parameters.get(key, []):
                if int(n) < 1:
                    raise DomainError(f"family sizes must be positive, got {n}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"experiment", "parameters", "seed", "out_dir"}
        extra = set(data) - known
        if extra:
            raise StructureError(f"unknown config keys {sorted(extra)}")
        if "experiment" not in data:
            raise StructureError("config needs an 'experiment' key")
        return cls(data["experiment"], dict(data.get("parameters", {})), int(data.get("seed", 0)),
                   data.get("out_dir"))

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "parameters": dict(self.parameters), "seed": self.seed,
                "out_dir": self.out_dir}


@dataclass
class Report:
    experiment: str
    inputs: dict
    metrics: dict
    criteria: dict
    wall_clock: float = 0.0
    version: str = __version__
    artifacts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())

    def to_dict(self, include_clock: bool = True) -> dict:
        out = {
            "experiment": self.experiment,
            "inputs": self.inputs,
            "metrics": self.metrics,
            "criteria": self.criteria,
            "passed": self.passed,
            "version": self.version,
            "backend": kernels.BACKEND,
            "artifacts": list(self.artifacts),
        }
        if include_clock:
            out["wall_clock"] = self.wall_clock
        return out

    def canonical(self) -> str:
        """JSON text without the wall-clock field; equal for equal (config, seed)."""
        return dumps(self.to_dict(include_clock=False))


def _nil3_reference(p, seed, out_dir):
    g0 = np.asarray(p.get("g0", [1.0, 1.0, 1.0]), dtype=float)
    t1 = float(p.get("t1", 10.0))
    samples = int(p.get("samples", 101))
    prob = FlowProblem(heisenberg(1), g0, (0.0, t1), rtol=p.get("rtol", 1e-10), atol=p.get("atol", 1e-12),
                       rhs_mode="heisenberg_diag")
    times = np.linspace(0.0, t1, samples)
    traj = integrate(prob, times)
    exact = np.column_stack(nil3_closed_form(*g0, times))
    err = float(np.max(np.abs(traj.values / exact - 1.0)))
    tol = float(p.get("tol", 1e-6))
    artifacts = []
    if out_dir:
        artifacts.append(str(write_trajectory(traj, Path(out_dir) / "nil3_trajectory.csv")))
    metrics = {"max_rel_error": err, "steps": traj.step_stats, "g_end": traj.values[-1].tolist(),
               "closed_form_end": exact[-1].tolist()}
    return metrics, {"max_rel_error_below_tol": err < tol}, artifacts


def _heisenberg_asymptotics(p, seed, out_dir):
    ns = [int(n) for n in p.get("ns", [1, 2])]
    runs = int(p.get("runs", 3))
    t_end = float(p.get("t_end", 1e6))
    t_mid = float(p.get("t_mid", 1e4))
    threshold = float(p.get("threshold", DEFAULT_THRESHOLD))
    rng = seed_rng(seed)
    grid = np.concatenate([[0.0], log_grid(1e-3, t_end)])
    if t_mid not in grid:
        grid = np.unique(np.concatenate([grid, [t_mid]]))
    rows, ok_end, ok_trend, ok_drift = [], True, True, True
    for n in ns:
        for r in range(runs):
            g0 = random_diag_metric(2 * n + 1, rng)
            prob = FlowProblem(heisenberg(n), g0, (0.0, t_end), rtol=p.get("rtol", 1e-10),
                               atol=p.get("atol", 1e-12), rhs_mode="heisenberg_diag")
            traj = integrate(prob, grid)
            prof = predict(n, g0.diag)
            rep = ratio_convergence(traj, prof, (t_mid, t_end), threshold)
            drift = conserved(traj).max_drift
            ok_end &= rep.passed
            ok_trend &= rep.improving
            ok_drift &= drift < 1e-6
            rows.append({"n": n, "run": r, "g0": g0.diag, "gamma": prof.gamma,
                         "deviation_mid": rep.start, "deviation_end": rep.end,
                         "conserved_drift": drift, "steps": traj.step_stats})
            if out_dir:
                write_trajectory(traj, Path(out_dir) / f"heisenberg{n}_run{r}.csv")
    crit = {"deviation_below_threshold": bool(ok_end), "deviation_decreasing": bool(ok_trend),
            "conserved_drift_small": bool(ok_drift)}
    return {"runs": rows, "threshold": threshold}, crit, []


def _heisenberg_soliton(p, seed, out_dir):
    ns = [int(n) for n in p.get("ns", range(1, 6))]
    ts = [float(t) for t in p.get("ts", [0.5, 1.0, 2.0, 10.0])]
    s_values = [float(s) for s in p.get("s_values", [1.0, 10.0, 1e3, 1e6])]
    rng = seed_rng(seed)
    rows = []
    worst = {"blowdown_spread": 0.0, "blowdown_vs_soliton": 0.0, "flow_residual": 0.0,
             "eta_identity": 0.0, "certificate_residual": 0.0}
    for n in ns:
        prof = predict(n, random_diag_metric(2 * n + 1, rng).diag)
        eta = heisenberg_eta(n)
        prob = FlowProblem(heisenberg(n), soliton_heisenberg(n, 1.0), (0.0, 1.0), rhs_mode="heisenberg_diag")
        for t in ts:
            outs = np.array([blowdown(prof, t, s).diag for s in s_values])
            target = soliton_heisenberg(n, t).diag
            worst["blowdown_spread"] = max(worst["blowdown_spread"], float(np.abs(outs - outs[0]).max()))
            worst["blowdown_vs_soliton"] = max(worst["blowdown_vs_soliton"], float(np.abs(outs - target).max()))
            res = np.abs(rhs(prob, t, soliton_heisenberg(n, t)) - soliton_heisenberg_rate(n, t)).max()
            worst["flow_residual"] = max(worst["flow_residual"], float(res))
            eta_g = pullback(soliton_heisenberg(n, 1.0), eta, t).scaled(t).diag
            worst["eta_identity"] = max(worst["eta_identity"], float(np.abs(eta_g - target).max()))
        cert = lauret_certify(heisenberg(n), soliton_heisenberg(n, 1.0))
        worst["certificate_residual"] = max(worst["certificate_residual"], cert.ricci_residual,
                                            cert.derivation_residual)
        rows.append({"n": n, "c": cert.c, "D_diag": np.diag(cert.D), "certificate_valid": cert.valid})
    crit = {k + "_small": v < 1e-12 for k, v in worst.items() if k != "certificate_residual"}
    crit["certificates_valid"] = all(r["certificate_valid"] for r in rows)
    return {"worst": worst, "families": rows}, crit, []


def _ut_soliton(p, seed, out_dir):
    ns = [int(n) for n in p.get("ns", range(3, 11))]
    ts = [float(t) for t in p.get("ts", [0.5, 1.0, 2.0, 10.0])]
    A_values = [float(a) for a in p.get("A_values", [0.5, 1.0, 2.0])]
    certify_max = int(p.get("certify_max_n", 8))
    worst_flow = worst_eta = 0.0
    rows = []
    for n in ns:
        prob = FlowProblem(unitriangular(n), soliton_unitriangular(n, 1.0), (0.0, 1.0),
                           rhs_mode="unitriangular_diag")
        eta = unitriangular_eta(n)
        for A in A_values:
            for t in ts:
                g = soliton_unitriangular(n, t, A)
                worst_flow = max(worst_flow, float(np.abs(rhs(prob, t, g) - soliton_unitriangular_rate(n, t, A)).max()))
                eta_g = pullback(soliton_unitriangular(n, 1.0, A), eta, t).scaled(t).diag
                worst_eta = max(worst_eta, float(np.abs(eta_g - g.diag).max()))
        if n <= certify_max:
            certs = [lauret_certify(unitriangular(n), soliton_unitriangular(n, 1.0, A)) for A in A_values]
            cs = [c.c for c in certs]
            rows.append({"n": n, "c": cs, "c_spread": max(cs) - min(cs),
                         "valid": all(c.valid for c in certs),
                         "max_residual": max(max(c.ricci_residual, c.derivation_residual) for c in certs)})
    crit = {
        "flow_residual_small": worst_flow < 1e-12,
        "eta_identity_small": worst_eta < 1e-12,
        "certificates_valid": all(r["valid"] for r in rows),
        "c_independent_of_A": all(r["c_spread"] < 1e-10 for r in rows),
    }
    return {"flow_residual": worst_flow, "eta_identity": worst_eta, "certificates": rows}, crit, []


def _ricci_diag_sweep(p, seed, out_dir):
    heis = [int(n) for n in p.get("heisenberg_ns", [1, 2, 3, 4])]
    uts = [int(n) for n in p.get("unitriangular_ns", [3, 4, 5, 6])]
    count = int(p.get("count", 100))
    rng = seed_rng(seed)
    rows = []
    cases = [("heisenberg", n, heisenberg(n), 2 * n + 1) for n in heis]
    cases += [("unitriangular", n, unitriangular(n), n * (n - 1) // 2) for n in uts]
    worst_rel = worst_off = 0.0
    for name, n, spec, dim in cases:
        rel = off = 0.0
        for _ in range(count):
            g = random_diag_metric(dim, rng)
            R = ricci_general(spec, g)
            fast = ricci_heisenberg_diag(n, g) if name == "heisenberg" else ricci_unitriangular_diag(n, g)
            rel = max(rel, relative_max_error(fast, np.diag(R)))
            off = max(off, float(np.abs(R - np.diag(np.diag(R))).max()))
        rows.append({"family": name, "n": n, "max_rel_error": rel, "max_off_diagonal": off})
        worst_rel, worst_off = max(worst_rel, rel), max(worst_off, off)
    crit = {"closed_form_matches": worst_rel < 1e-12, "off_diagonal_vanishes": worst_off < 1e-13}
    return {"cases": rows, "max_rel_error": worst_rel, "max_off_diagonal": worst_off}, crit, []


def _oracle_equivalence(p, seed, out_dir):
    heis = [int(n) for n in p.get("heisenberg_ns", [1, 2, 3, 4])]
    uts = [int(n) for n in p.get("unitriangular_ns", [3, 4])]
    count = int(p.get("count", 10))
    rng = seed_rng(seed)
    specs = [heisenberg(n) for n in heis] + [unitriangular(n) for n in uts]
    worst_backend = worst_oracle = worst_sym = 0.0
    for spec in specs:
        for _ in range(count):
            g = random_full_metric(spec.dim, rng)
            Rm = riemann_general(spec, g)
            oracle = np.einsum("km,kijm->ij", g.inverse, Rm)
            outs = [ricci_general(spec, g, name) for name in sorted(kernels.AVAILABLE)]
            worst_oracle = max(worst_oracle, max(relative_max_error(o, oracle) for o in outs))
            worst_backend = max(worst_backend, max(relative_max_error(o, outs[0]) for o in outs))
            scale = float(np.abs(Rm).max())
            sym = max(
                np.abs(Rm + Rm.transpose(1, 0, 2, 3)).max(),
                np.abs(Rm + Rm.transpose(0, 1, 3, 2)).max(),
                np.abs(Rm - Rm.transpose(2, 3, 0, 1)).max(),
                np.abs(Rm + Rm.transpose(1, 2, 0, 3) + Rm.transpose(2, 0, 1, 3)).max(),
            ) / scale
            worst_sym = max(worst_sym, float(sym))
    metrics = {"backends": sorted(kernels.AVAILABLE), "backend_agreement": worst_backend,
               "ricci_vs_riemann_trace": worst_oracle, "riemann_symmetry_defect": worst_sym}
    crit = {"backends_agree": worst_backend < 1e-12, "ricci_matches_riemann": worst_oracle < 1e-12,
            "riemann_symmetries": worst_sym < 1e-12}
    return metrics, crit, []


EXPERIMENTS = {
    "nil3_reference": _nil3_reference,
    "heisenberg_asymptotics": _heisenberg_asymptotics,
    "heisenberg_soliton": _heisenberg_soliton,
    "ut_soliton": _ut_soliton,
    "ricci_diag_sweep": _ricci_diag_sweep,
    "oracle_equivalence": _oracle_equivalence,
}


def run(config: ExperimentConfig) -> Report:
    """Run one experiment; writes ``<experiment>_report.json`` when ``out_dir`` is set."""
    start = time.perf_counter()
    metrics, criteria, artifacts = EXPERIMENTS[config.experiment](config.parameters, config.seed, config.out_dir)
    report = Report(config.experiment, config.to_dict(), metrics,
                    {k: bool(v) for k, v in criteria.items()}, artifacts=artifacts)
    report.wall_clock = time.perf_counter() - start
    if config.out_dir:
        path = write_json(report, Path(config.out_dir) / f"{config.experiment}_report.json")
        report.artifacts.append(str(path))
    return report
