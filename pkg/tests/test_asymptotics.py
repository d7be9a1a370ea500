import numpy as np
import pytest

from nilflow.algebra import heisenberg, unitriangular
from nilflow.asymptotics import (
    comparison_lemma_check,
    deviations_per_decade,
    log_grid,
    predict,
    ratio_convergence,
)
from nilflow.errors import DomainError, StructureError, UnsupportedAlgebraError
from nilflow.flow import FlowProblem, FlowTrajectory, conserved_quantities, integrate, nil3_trajectory
from nilflow.soliton import soliton_heisenberg

from conftest import log_uniform


def test_predict_nil3_unit():
    p = predict(1, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(p.gamma, [3 ** (1 / 3), 3 ** (1 / 3), 3 ** (-1 / 3)], rtol=1e-15)
    np.testing.assert_allclose(p.exponents, [1 / 3, 1 / 3, -1 / 3])


@pytest.mark.parametrize("g0", [(2.0, 1.0, 3.0), (0.3, 5.0, 0.7), (1.0, 1.0, 1.0)])
def test_predict_matches_nil3_closed_form_asymptote(g0):
    A0, B0, C0 = g0
    K = A0 * B0 / (3 * C0)
    p = predict(1, g0)
    np.testing.assert_allclose(p.gamma, [A0 * K ** (-1 / 3), B0 * K ** (-1 / 3), C0 * K ** (1 / 3)], rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_predict_scaling(n, rng):
    g0 = log_uniform(rng, 2 * n + 1)
    lam = 3.7
    a, b = predict(n, g0), predict(n, lam * g0)
    np.testing.assert_allclose(b.A, a.A, rtol=1e-15)
    assert b.C == pytest.approx(lam ** (2 * n + 2) * a.C, rel=1e-13)
    np.testing.assert_allclose(b.gamma[:-1] / a.gamma[:-1], lam ** ((n + 1) / (n + 2)), rtol=1e-13)
    assert b.gamma[-1] / a.gamma[-1] == pytest.approx(lam ** ((2 * n + 2) / (n + 2)), rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_profile_conserved_products(n, rng):
    g0 = log_uniform(rng, 2 * n + 1)
    p = predict(n, g0)
    cs = conserved_quantities(n, g0)
    assert np.prod(p.gamma[:n]) * p.gamma[-1] == pytest.approx(cs.C1, rel=1e-12)
    assert np.prod(p.gamma[n:2 * n]) * p.gamma[-1] == pytest.approx(cs.C2, rel=1e-12)
    # t-exponents cancel in each conserved product
    assert n * p.exponents[0] + p.exponents[-1] == pytest.approx(0.0, abs=1e-15)


def test_predict_errors():
    with pytest.raises(StructureError):
        predict(2, [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        predict(1, [1.0, -1.0, 1.0])
    with pytest.raises(DomainError):
        predict(0, [1.0])


def test_closed_form_window_deviation():
    times = np.concatenate([[0.0], log_grid(1.0, 1e6)])
    traj = nil3_trajectory(1.0, 1.0, 1.0, times)
    rep = ratio_convergence(traj, predict(1, [1.0, 1.0, 1.0]), (1e4, 1e6))
    assert rep.sup.max() < 1e-2
    assert rep.passed and rep.improving
    # (t + K)^{1/3} / t^{1/3} - 1 ~ K / (3 t) with K = 1/3
    assert rep.end[0] == pytest.approx((1 / 3) / (3 * 1e6), rel=1e-3)


@pytest.mark.parametrize("n", [1, 3])
def test_soliton_has_zero_deviation(n):
    times = log_grid(1.0, 1e3, 10)
    values = np.array([soliton_heisenberg(n, t).diag for t in times])
    traj = FlowTrajectory(heisenberg(n), times, values)
    prof = predict(n, soliton_heisenberg(n, 1.0).diag)
    np.testing.assert_allclose(prof.gamma, [1.0] * (2 * n) + [1 / (n + 2)], rtol=1e-14)
    rep = ratio_convergence(traj, prof, (1.0, 1e3))
    assert rep.sup.max() < 1e-14


def test_integrated_heisenberg2_deviation_decreases(rng):
    g0 = log_uniform(rng, 5)
    grid = np.concatenate([[0.0], log_grid(1e-2, 1e5, 5)])
    traj = integrate(FlowProblem(heisenberg(2), g0, (0.0, 1e5), rhs_mode="heisenberg_diag"), grid)
    prof = predict(2, g0)
    decades = deviations_per_decade(traj, prof)
    maxes = [d["max"] for d in decades if d["t"] >= 1.0]
    assert len(maxes) == 6
    assert all(b < a for a, b in zip(maxes, maxes[1:]))


def test_ratio_convergence_errors():
    traj = nil3_trajectory(1.0, 1.0, 1.0, [0.0, 1.0, 10.0])
    prof = predict(1, [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        ratio_convergence(traj, prof, (1.0, 100.0))
    with pytest.raises(StructureError):
        ratio_convergence(traj, predict(2, np.ones(5)), (1.0, 10.0))
    ut = FlowTrajectory(unitriangular(4), [1.0, 2.0], np.ones((2, 6)))
    with pytest.raises(UnsupportedAlgebraError):
        ratio_convergence(ut, prof, (1.0, 2.0))


def test_log_grid_density():
    g = log_grid(1e4, 1e6)
    assert len(g) == 101
    assert g[0] == 1e4 and g[-1] == 1e6
    np.testing.assert_allclose(np.diff(np.log10(g)), 1 / 50)
    with pytest.raises(DomainError):
        log_grid(0.0, 1.0)


def test_comparison_zero_epsilon_exact():
    r = comparison_lemma_check(1.0, lambda t: 0.0, 1e6)
    assert r.ratio == 1.0


def test_comparison_integrable_epsilon():
    r = comparison_lemma_check(1.0, lambda t: 1.0 / (1.0 + t) ** 2, 1e6)
    assert r.deviation < 1e-5
    # v = 2 + t - 1/(1+t), u = 1 + t
    assert r.v == pytest.approx(2 + 1e6 - 1 / (1 + 1e6), rel=1e-9)


def test_comparison_log_epsilon():
    r = comparison_lemma_check(1.0, lambda t: 1.0 / (1.0 + t), 1e6)
    assert r.deviation < 2e-5
    assert r.v == pytest.approx(1 + 1e6 + np.log1p(1e6), rel=1e-9)


def test_comparison_errors():
    with pytest.raises(DomainError):
        comparison_lemma_check(0.0, lambda t: 0.0, 1.0)
    with pytest.raises(DomainError):
        comparison_lemma_check(1.0, lambda t: 0.0, -1.0)
