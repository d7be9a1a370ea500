import numpy as np
import pytest

from nilflow.algebra import abelian, heisenberg, unitriangular
from nilflow.curvature import ricci_general
from nilflow.errors import DomainError, FlowBreakdownError, StructureError, UnsupportedAlgebraError
from nilflow.flow import (
    FlowProblem,
    FlowTrajectory,
    conserved,
    conserved_quantities,
    heisenberg_gN_lower_bound,
    integrate,
    integrate_many,
    nil3_closed_form,
    nil3_trajectory,
    rhs,
    sample_times,
)
from nilflow.metric import MetricState
from nilflow.soliton import soliton_unitriangular

import oracles
from conftest import log_uniform


def _problem(spec, g0, t1=1.0, mode="general", **kw):
    return FlowProblem(spec, g0, (0.0, t1), rhs_mode=mode, **kw)


@pytest.mark.parametrize(
    "spec, mode",
    [(heisenberg(1), "heisenberg_diag"), (unitriangular(3), "unitriangular_diag"), (heisenberg(1), "general")],
)
def test_rhs_nil3_example(spec, mode):
    # dA/dt = C/B, dB/dt = C/A, dC/dt = -C^2/(AB) at (1, 2, 3)
    p = _problem(spec, [1.0, 2.0, 3.0], mode=mode)
    out = rhs(p, 0.0, MetricState.diagonal([1.0, 2.0, 3.0]))
    vals = out if out.ndim == 1 else np.diag(out)
    np.testing.assert_allclose(vals, [1.5, 3.0, -4.5], rtol=1e-14)
    if out.ndim == 2:
        assert np.abs(out - np.diag(vals)).max() == 0.0


def test_rhs_abelian_zero(rng):
    p = _problem(abelian(3), np.ones(3))
    assert np.abs(rhs(p, 0.0, oracles.random_spd(rng, 3))).max() == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_heisenberg_mode_agreement(n, rng):
    spec = heisenberg(n)
    fast = _problem(spec, np.ones(2 * n + 1), mode="heisenberg_diag")
    for _ in range(100):
        g = log_uniform(rng, 2 * n + 1)
        ref = -2 * np.diag(ricci_general(spec, g))
        assert np.abs(rhs(fast, 0.0, g) - ref).max() <= 1e-12 * np.abs(ref).max()


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_unitriangular_mode_agreement(n, rng):
    spec = unitriangular(n)
    dim = n * (n - 1) // 2
    fast = _problem(spec, np.ones(dim), mode="unitriangular_diag")
    for _ in range(100):
        g = log_uniform(rng, dim)
        ref = -2 * np.diag(ricci_general(spec, g))
        assert np.abs(rhs(fast, 0.0, g) - ref).max() <= 1e-12 * np.abs(ref).max()


def test_problem_validation():
    with pytest.raises(DomainError):
        FlowProblem(heisenberg(1), np.ones(3), (1.0, 1.0))
    with pytest.raises(StructureError):
        FlowProblem(heisenberg(1), np.ones(4), (0.0, 1.0))
    with pytest.raises(UnsupportedAlgebraError):
        FlowProblem(unitriangular(4), np.ones(6), (0.0, 1.0), rhs_mode="heisenberg_diag")
    with pytest.raises(StructureError):
        FlowProblem(heisenberg(1), np.eye(3), (0.0, 1.0), rhs_mode="heisenberg_diag")
    with pytest.raises(DomainError):
        FlowProblem(heisenberg(1), np.ones(3), (0.0, 1.0), rhs_mode="diagonal")


def test_rhs_rejects_non_pd_state():
    p = _problem(heisenberg(1), np.ones(3), mode="heisenberg_diag")
    with pytest.raises(FlowBreakdownError) as info:
        rhs(p, 0.25, np.array([1.0, -1.0, 1.0]))
    assert info.value.t_last == 0.25


def test_integrate_nil3_one():
    traj = integrate(_problem(heisenberg(1), np.ones(3), mode="heisenberg_diag"), [0.0, 1.0])
    c = 4 ** (1 / 3)
    np.testing.assert_allclose(traj.values[-1], [c, c, 1 / c], rtol=1e-9)


def test_integrate_general_mode_matches_diag():
    g0 = np.array([0.5, 2.0, 1.5])
    a = integrate(_problem(heisenberg(1), g0, 3.0, "heisenberg_diag"), [0.0, 3.0])
    b = integrate(_problem(heisenberg(1), g0, 3.0, "general"), [0.0, 3.0])
    assert b.kind == "full"
    np.testing.assert_allclose(b.diagonals[-1], a.values[-1], rtol=1e-9)
    # diagonal metrics stay diagonal
    assert np.abs(b.values[-1] - np.diag(b.diagonals[-1])).max() == 0.0


def test_integrate_abelian_constant(rng):
    G = oracles.random_spd(rng, 4)
    traj = integrate(_problem(abelian(4), G, 5.0))
    for v in traj.values:
        np.testing.assert_array_equal(v, traj.values[0])
    rep = conserved(traj)
    assert rep.max_drift == 0.0


def test_unitriangular4_soliton_segment():
    n = 4
    p = FlowProblem(unitriangular(n), soliton_unitriangular(n, 1.0), (1.0, 2.0), rhs_mode="unitriangular_diag")
    traj = integrate(p, np.linspace(1.0, 2.0, 6))
    for t, v in zip(traj.times, traj.values):
        np.testing.assert_allclose(v, soliton_unitriangular(n, t).diag, rtol=1e-9)


def test_full_metric_flow_stays_symmetric_pd(rng):
    G = oracles.random_spd(rng, 6)
    traj = integrate(_problem(unitriangular(4), G, 2.0), np.linspace(0, 2, 5))
    for v in traj.values:
        np.testing.assert_array_equal(v, v.T)
        assert np.linalg.eigvalsh(v).min() > 0
    assert traj.step_stats["accepted"] > 0


@pytest.mark.parametrize("t", [0.0, 1.0, 7.5])
def test_nil3_closed_form_values(t):
    A, B, C = nil3_closed_form(2.0, 1.0, 3.0, t)
    ref = oracles.nil3_exact(2.0, 1.0, 3.0, t)
    np.testing.assert_allclose([A, B, C], ref, rtol=1e-14)


def test_nil3_closed_form_examples():
    np.testing.assert_allclose(nil3_closed_form(1, 1, 1, 0.0), (1, 1, 1), rtol=1e-15)
    c = 4 ** (1 / 3)
    np.testing.assert_allclose(nil3_closed_form(1, 1, 1, 1.0), (c, c, 1 / c), rtol=1e-15)


def test_nil3_closed_form_solves_ode():
    # centered differences: error shrinks like h^2
    t = 1.3
    errs = []
    for h in (1e-2, 5e-3):
        Ap, Bp, Cp = nil3_closed_form(2.0, 1.0, 3.0, t + h)
        Am, Bm, Cm = nil3_closed_form(2.0, 1.0, 3.0, t - h)
        A, B, C = nil3_closed_form(2.0, 1.0, 3.0, t)
        errs.append(abs((Ap - Am) / (2 * h) - C / B))
        assert abs((Cp - Cm) / (2 * h) + C * C / (A * B)) < 1e-3
    assert errs[1] < errs[0] / 3.5


def test_nil3_closed_form_domain():
    with pytest.raises(DomainError):
        nil3_closed_form(1, 0, 1, 1.0)
    with pytest.raises(DomainError):
        nil3_closed_form(1, 1, 1, -1.0)


def test_conserved_closed_form_trajectory():
    traj = nil3_trajectory(2.0, 1.0, 3.0, np.linspace(0, 100, 201))
    assert conserved(traj).max_drift < 1e-10


def test_conserved_heisenberg2_integrated(rng):
    g0 = log_uniform(rng, 5)
    traj = integrate(_problem(heisenberg(2), g0, 100.0, "heisenberg_diag"), np.linspace(0, 100, 101))
    rep = conserved(traj)
    assert set(rep.drift) == {"A_1", "A_2", "B_3", "B_4", "C1", "C2", "C"}
    assert rep.max_drift < 1e-8


def test_conserved_set_identities(rng):
    g = log_uniform(rng, 7)
    cs = conserved_quantities(3, g)
    np.testing.assert_allclose(cs.A * cs.B, 1.0, rtol=1e-15)
    assert cs.C1 / np.prod(cs.A) == pytest.approx(cs.C2, rel=1e-14)
    assert cs.C == pytest.approx(np.prod(g[:6]) * g[6] ** 2, rel=1e-14)


def test_conserved_unsupported():
    traj = integrate(_problem(unitriangular(4), np.ones(6), 1.0, "unitriangular_diag"))
    with pytest.raises(UnsupportedAlgebraError):
        conserved(traj)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_monotone_and_lower_bound(n, rng):
    g0 = log_uniform(rng, 2 * n + 1)
    times = sample_times(0.0, 50.0, 200, "log")
    traj = integrate(_problem(heisenberg(n), g0, 50.0, "heisenberg_diag"), times)
    v = traj.values
    assert np.all(np.diff(v[:, :2 * n], axis=0) >= 0)
    assert np.all(np.diff(v[:, -1]) <= 0)
    bound = heisenberg_gN_lower_bound(n, g0, traj.times)
    assert np.all(v[:, -1] >= bound * (1 - 1e-12))


@pytest.mark.parametrize("s", [0.1, 4.0])
def test_blowdown_self_similarity(s, rng):
    # s^{-1} g(s t) solves the flow with initial value s^{-1} g0
    g0 = log_uniform(rng, 5)
    times = np.linspace(0, 3, 7)
    base = integrate(_problem(heisenberg(2), g0, 3 * s, "heisenberg_diag"), times * s)
    scaled = integrate(_problem(heisenberg(2), g0 / s, 3.0, "heisenberg_diag"), times)
    np.testing.assert_allclose(base.values / s, scaled.values, rtol=1e-8)


def test_trajectory_validation():
    with pytest.raises(StructureError):
        FlowTrajectory(heisenberg(1), [0.0, 0.0], np.ones((2, 3)))
    with pytest.raises(StructureError):
        FlowTrajectory(heisenberg(1), [0.0, 1.0], np.ones((3, 3)))


def test_trajectory_csv(tmp_path):
    traj = nil3_trajectory(1, 1, 1, [0.0, 1.0])
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,g_1,g_2,g_N"
    assert len(lines) == 3
    assert float(lines[2].split(",")[3]) == pytest.approx(4 ** (-1 / 3), rel=1e-15)


def test_full_trajectory_columns():
    traj = integrate(_problem(heisenberg(1), np.eye(3), 0.5), [0.0, 0.5])
    assert traj.column_names() == ["g_1_1", "g_2_1", "g_2_2", "g_N_1", "g_N_2", "g_N_N"]
    assert traj.rows().shape == (2, 7)


def test_sample_times():
    np.testing.assert_allclose(sample_times(0, 1, 3), [0, 0.5, 1])
    log = sample_times(0, 100, 5, "log")
    assert log[0] == 0 and log[-1] == pytest.approx(100)
    assert np.all(np.diff(log) > 0)
    with pytest.raises(DomainError):
        sample_times(0, 1, 1)


def test_integrate_many_parallel(rng):
    probs = [_problem(heisenberg(1), log_uniform(rng, 3), 2.0, "heisenberg_diag") for _ in range(3)]
    serial = integrate_many(probs, [0.0, 2.0])
    parallel = integrate_many(probs, [0.0, 2.0], max_workers=2)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.values, b.values)
