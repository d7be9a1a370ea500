import numpy as np
import pytest

from nilflow.algebra import abelian, heisenberg, is_derivation, unitriangular
from nilflow.asymptotics import predict
from nilflow.curvature import ricci_endomorphism
from nilflow.errors import DomainError, NotPositiveDefiniteError, StructureError
from nilflow.flow import FlowProblem, rhs
from nilflow.metric import MetricState
from nilflow.soliton import (
    ScalingDiffeo,
    blowdown,
    blowdown_diffeo,
    blowdown_limit,
    derivation_basis,
    heisenberg_eta,
    heisenberg_exponents,
    heisenberg_exponents_solved,
    lauret_certify,
    pullback,
    soliton_heisenberg,
    soliton_heisenberg_rate,
    soliton_unitriangular,
    soliton_unitriangular_rate,
    unitriangular_eta,
)

import oracles
from conftest import log_uniform


def test_soliton_heisenberg_values():
    np.testing.assert_allclose(soliton_heisenberg(1, 1.0).diag, [1, 1, 1 / 3], rtol=1e-15)
    for n in range(1, 6):
        np.testing.assert_allclose(soliton_heisenberg(n, 1.0).diag, [1.0] * (2 * n) + [1 / (n + 2)], rtol=1e-15)
    t = 8.0
    np.testing.assert_allclose(soliton_heisenberg(1, t).diag, [2.0, 2.0, 1 / 6], rtol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("t", [1.0, 10.0])
def test_soliton_heisenberg_solves_flow(n, t):
    p = FlowProblem(heisenberg(n), soliton_heisenberg(n, 1.0), (0.0, 1.0), rhs_mode="heisenberg_diag")
    assert np.abs(rhs(p, t, soliton_heisenberg(n, t)) - soliton_heisenberg_rate(n, t)).max() < 1e-12


def test_soliton_rate_matches_finite_difference():
    n, t, h = 3, 2.0, 1e-5
    fd = (soliton_unitriangular(n + 2, t + h).diag - soliton_unitriangular(n + 2, t - h).diag) / (2 * h)
    np.testing.assert_allclose(soliton_unitriangular_rate(n + 2, t), fd, rtol=1e-8)
    fd = (soliton_heisenberg(n, t + h).diag - soliton_heisenberg(n, t - h).diag) / (2 * h)
    np.testing.assert_allclose(soliton_heisenberg_rate(n, t), fd, rtol=1e-8)


def test_soliton_unitriangular_values():
    t = 5.0
    np.testing.assert_allclose(soliton_unitriangular(3, t).diag, [t ** (1 / 3), t ** (1 / 3), t ** (-1 / 3) / 3],
                               rtol=1e-15)
    np.testing.assert_allclose(soliton_unitriangular(4, 1.0).diag, [1, 1, 1, 1 / 4, 1 / 4, 1 / 16], rtol=1e-15)
    # A scales the step-k block by A^k
    np.testing.assert_allclose(soliton_unitriangular(4, 1.0, 2.0).diag, [2, 2, 2, 1, 1, 0.5], rtol=1e-15)


@pytest.mark.parametrize("n", [3, 5, 8, 10])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_soliton_unitriangular_solves_flow(n, t):
    p = FlowProblem(unitriangular(n), soliton_unitriangular(n, 1.0), (0.0, 1.0), rhs_mode="unitriangular_diag")
    assert np.abs(rhs(p, t, soliton_unitriangular(n, t)) - soliton_unitriangular_rate(n, t)).max() < 1e-12


def test_soliton_domain_errors():
    with pytest.raises(DomainError):
        soliton_heisenberg(1, 0.0)
    with pytest.raises(DomainError):
        soliton_unitriangular(3, -1.0)
    with pytest.raises(DomainError):
        soliton_unitriangular(3, 1.0, A=0.0)
    with pytest.raises(DomainError):
        soliton_unitriangular(1, 1.0)


@pytest.mark.parametrize("n", range(1, 8))
def test_heisenberg_exponents(n):
    a, b = heisenberg_exponents(n)
    assert a == pytest.approx(-0.5 * (n + 1) / (n + 2), abs=1e-16)
    assert b == 2 * a
    sa, sb = heisenberg_exponents_solved(n)
    assert sa == pytest.approx(a, abs=1e-15) and sb == pytest.approx(b, abs=1e-15)
    # constraint alpha^N = alpha^i alpha^{i+n} on exponents
    e = heisenberg_eta(n).exponents
    np.testing.assert_allclose(e[-1], e[:n] + e[n:2 * n])


def test_nil3_eta_exponent():
    assert heisenberg_exponents(1)[0] == pytest.approx(-1 / 3)


def test_pullback_identity_at_one(rng):
    g = MetricState.diagonal(log_uniform(rng, 5))
    out = pullback(g, heisenberg_eta(2), 1.0)
    np.testing.assert_array_equal(out.diag, g.diag)


def test_pullback_full_metric(rng):
    G = oracles.random_spd(rng, 3)
    d = ScalingDiffeo([1.0, 0.5, 2.0])
    out = pullback(G, d, 2.0)
    f = 2.0 ** np.array([1.0, 0.5, 2.0])
    np.testing.assert_allclose(out.matrix, G * np.outer(f, f))


def test_pullback_errors():
    with pytest.raises(DomainError):
        pullback(np.ones(3), heisenberg_eta(1), 0.0)
    with pytest.raises(StructureError):
        pullback(np.ones(4), heisenberg_eta(1), 1.0)


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 10.0])
def test_heisenberg_eta_identity(n, t):
    g = pullback(soliton_heisenberg(n, 1.0), heisenberg_eta(n), t).scaled(t)
    np.testing.assert_allclose(g.diag, soliton_heisenberg(n, t).diag, rtol=1e-14)


@pytest.mark.parametrize("n", [3, 4, 7, 10])
@pytest.mark.parametrize("t", [0.5, 10.0])
def test_unitriangular_eta_identity(n, t):
    np.testing.assert_allclose(unitriangular_eta(n).exponents[: n - 1], -1 / n)
    g = pullback(soliton_unitriangular(n, 1.0, 1.5), unitriangular_eta(n), t).scaled(t)
    np.testing.assert_allclose(g.diag, soliton_unitriangular(n, t, 1.5).diag, rtol=1e-14)


def test_blowdown_nil3_unit():
    out = blowdown_limit(predict(1, [1.0, 1.0, 1.0]), 1.0)
    np.testing.assert_allclose(out.diag, [1.0, 1.0, 1 / 3], rtol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_blowdown_equals_soliton(n, rng):
    prof = predict(n, log_uniform(rng, 2 * n + 1))
    for t in (0.3, 1.0, 20.0):
        outs = [blowdown(prof, t, s).diag for s in (1.0, 10.0, 1000.0)]
        for o in outs:
            np.testing.assert_allclose(o, soliton_heisenberg(n, t).diag, rtol=1e-13)
        assert np.abs(outs[0] - outs[2]).max() < 1e-12


def test_blowdown_diffeo_constraint(rng):
    prof = predict(3, log_uniform(rng, 7))
    d = blowdown_diffeo(prof)
    for s in (1.0, 7.0):
        f = d.factors(s)
        np.testing.assert_allclose(f[-1], f[:3] * f[3:6], rtol=1e-14)


def test_certificate_nil3_soliton():
    cert = lauret_certify(heisenberg(1), soliton_heisenberg(1, 1.0))
    assert cert.valid
    assert cert.c == pytest.approx(-0.5, abs=1e-12)
    np.testing.assert_allclose(cert.D, np.diag([1 / 3, 1 / 3, 2 / 3]), atol=1e-12)
    assert cert.derivation_residual < 1e-12
    assert cert.ricci_residual < 1e-12


def test_certificate_abelian():
    cert = lauret_certify(abelian(3), [1.0, 2.0, 3.0])
    assert cert.c == 0.0
    assert np.abs(cert.D).max() == 0.0
    assert cert.valid


def test_every_diagonal_nil3_metric_certifies():
    # on a 3-dim algebra diag(a, b, c) always works: the counterexample needs dimension 5
    for g in ([1.0, 1.0, 1.0], [1.0, 1.3, 0.7]):
        cert = lauret_certify(heisenberg(1), g)
        assert cert.valid
    cert = lauret_certify(heisenberg(1), [1.0, 1.0, 1.0])
    assert cert.c == pytest.approx(-1.5, abs=1e-12)
    np.testing.assert_allclose(np.diag(cert.D), [1.0, 1.0, 2.0], atol=1e-12)


def test_certificate_rejects_non_soliton():
    spec = heisenberg(2)
    g = np.array([1.0, 1.0, 2.0, 1.0, 1.0])
    cert = lauret_certify(spec, g)
    assert not cert.valid
    assert cert.ricci_residual > 1e-3
    c, D, resid = oracles.penalty_soliton_fit(spec.structure_tensor, ricci_endomorphism(spec, g))
    assert resid > 1e-3
    assert cert.ricci_residual == pytest.approx(resid, rel=1e-6)


@pytest.mark.parametrize(
    "spec, g",
    [
        (heisenberg(1), [1.0, 1.0, 1 / 3]),
        (heisenberg(2), [1.0, 2.0, 1.0, 0.5, 1.0]),
        (unitriangular(4), [1.0, 2.0, 1.0, 0.5, 3.0, 1.0]),
    ],
)
def test_certificate_matches_penalty_oracle(spec, g):
    E = ricci_endomorphism(spec, g)
    cert = lauret_certify(spec, g)
    c, D, resid = oracles.penalty_soliton_fit(spec.structure_tensor, E)
    assert cert.c == pytest.approx(c, abs=1e-7)
    np.testing.assert_allclose(cert.D, D, atol=1e-7)
    assert cert.ricci_residual == pytest.approx(resid, abs=1e-8)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_unitriangular_certificate_independent_of_A(n):
    certs = [lauret_certify(unitriangular(n), soliton_unitriangular(n, 1.0, A)) for A in (0.5, 1.0, 2.0)]
    assert all(c.valid for c in certs)
    cs = [c.c for c in certs]
    assert max(cs) - min(cs) < 1e-10
    for c in certs:
        assert np.abs(c.D - np.diag(np.diag(c.D))).max() < 1e-10


def _heis_der_dim(n):
    # csp(2n) on the first layer plus any linear map from it into the center
    return (2 * n * n + n + 1) + 2 * n


@pytest.mark.parametrize("spec, dim", [(heisenberg(1), _heis_der_dim(1)), (heisenberg(2), _heis_der_dim(2)),
                                       (heisenberg(3), _heis_der_dim(3)), (abelian(2), 4)])
def test_derivation_basis_dimension(spec, dim):
    B = derivation_basis(spec)
    assert B.shape[1] == dim
    N = spec.dim
    for k in range(B.shape[1]):
        assert is_derivation(spec, B[:, k].reshape(N, N)) < 1e-12


def test_certificate_rejects_non_pd():
    with pytest.raises(NotPositiveDefiniteError):
        lauret_certify(heisenberg(1), [1.0, 0.0, 1.0])


def test_certificate_dict():
    d = lauret_certify(heisenberg(1), soliton_heisenberg(1)).to_dict()
    assert d["pass"] is True
    assert len(d["D"]) == 3
