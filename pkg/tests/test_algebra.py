import numpy as np
import pytest

from nilflow.algebra import (
    IndexMap,
    LieAlgebraSpec,
    abelian,
    derivation_defect,
    detect_family,
    family_size,
    heisenberg,
    is_derivation,
    jacobi_residual,
    lower_central_series,
    unitriangular,
    validate,
)
from nilflow.errors import DomainError, StructureError

import oracles


def test_heisenberg_bracket_table():
    spec = heisenberg(2)
    C = spec.structure_tensor
    assert spec.dim == 5
    assert C[0, 2, 4] == 1.0 and C[2, 0, 4] == -1.0
    assert C[1, 3, 4] == 1.0
    assert np.count_nonzero(C) == 4
    assert spec.basis_labels == ("1", "2", "3", "4", "N")


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_unitriangular_matches_matrix_commutators(n):
    np.testing.assert_array_equal(unitriangular(n).structure_tensor, oracles.unitriangular_C(n))


def test_unitriangular3_is_heisenberg1():
    assert unitriangular(3).entries == heisenberg(1).entries
    assert IndexMap.unitriangular(3).pairs == ((1, 2), (2, 3), (1, 3))
    assert unitriangular(3).basis_labels == ("12", "23", "13")


def test_index_map_roundtrip():
    imap = IndexMap.unitriangular(5)
    for k in range(len(imap)):
        assert imap.flat(*imap.pair(k)) == k
    assert imap.pair(0) == (1, 2)
    assert imap.pair(len(imap) - 1) == (1, 5)


def test_index_labels_two_digit():
    labels = IndexMap.unitriangular(11).labels()
    assert labels[0] == "12"
    assert "9,10" in labels and "10,11" in labels
    assert len(set(labels)) == len(labels)


def test_structure_tensor_read_only():
    C = heisenberg(1).structure_tensor
    with pytest.raises(ValueError):
        C[0, 0, 0] = 1.0


@pytest.mark.parametrize(
    "entries",
    [
        ((2, 1, 3, 1.0),),  # i > j
        ((1, 1, 2, 1.0),),  # i == j
        ((1, 4, 2, 1.0),),  # out of range
        ((1, 2, 3, 1.0), (1, 2, 3, 2.0)),  # duplicate
    ],
)
def test_bad_entries_rejected(entries):
    with pytest.raises(StructureError):
        LieAlgebraSpec(3, entries)


@pytest.mark.parametrize("n", [0, -1])
def test_family_sizes_must_be_positive(n):
    with pytest.raises(DomainError):
        heisenberg(n)


def test_unitriangular_needs_n_at_least_two():
    with pytest.raises(DomainError):
        unitriangular(1)


@pytest.mark.parametrize(
    "spec, step, dims",
    [
        (abelian(4), 1, [4, 0]),
        (heisenberg(1), 2, [3, 1, 0]),
        (heisenberg(3), 2, [7, 1, 0]),
        (unitriangular(4), 3, [6, 3, 1, 0]),
        (unitriangular(5), 4, [10, 6, 3, 1, 0]),
    ],
)
def test_lower_central_series(spec, step, dims):
    rep = validate(spec)
    assert rep.passed and rep.nilpotent
    assert rep.nilpotency_step == step
    assert rep.lower_central_dims == dims
    assert lower_central_series(spec) == dims


def test_non_nilpotent_algebra_fails_validation():
    # [e1, e2] = e1 is the affine algebra, solvable but not nilpotent
    spec = LieAlgebraSpec(2, ((1, 2, 1, 1.0),))
    rep = validate(spec)
    assert not rep.nilpotent
    assert not rep.passed


def test_jacobi_violation_detected():
    # [e1,e2]=e3, [e2,e3]=e1, [e1,e3]=e1 is not a Lie algebra
    spec = LieAlgebraSpec(3, ((1, 2, 3, 1.0), (2, 3, 1, 1.0), (1, 3, 1, 1.0)))
    assert jacobi_residual(spec) > 0.5
    assert not validate(spec).passed


@pytest.mark.parametrize("spec", [heisenberg(1), heisenberg(2), unitriangular(4), unitriangular(6)])
def test_jacobi_exact_for_families(spec):
    assert jacobi_residual(spec) == 0.0


def test_bracket_is_bilinear_and_antisymmetric(rng):
    spec = unitriangular(4)
    x, y = rng.normal(size=6), rng.normal(size=6)
    np.testing.assert_allclose(spec.bracket(x, y), -spec.bracket(y, x))
    np.testing.assert_allclose(spec.bracket(2 * x, y), 2 * spec.bracket(x, y))


def test_dict_roundtrip():
    spec = unitriangular(4)
    again = LieAlgebraSpec.from_dict(spec.to_dict())
    assert again.entries == spec.entries
    assert again.basis_labels == spec.basis_labels


def test_from_dict_malformed():
    with pytest.raises(StructureError):
        LieAlgebraSpec.from_dict({"brackets": []})


def test_detect_family():
    assert detect_family(heisenberg(3)) == ("heisenberg", 3)
    assert detect_family(unitriangular(5)) == ("unitriangular", 5)
    assert detect_family(heisenberg(1)) == ("heisenberg", 1)
    assert family_size(heisenberg(1), "unitriangular") == 3
    assert detect_family(abelian(3)) is None


@pytest.mark.parametrize("spec", [heisenberg(1), heisenberg(2), unitriangular(4)])
def test_derivation_check(spec):
    N = spec.dim
    assert is_derivation(spec, np.zeros((N, N))) == 0.0
    # ad_x is always a derivation: (ad_x)[k, j] = c_{x j}^k
    x = np.arange(1.0, N + 1)
    ad = np.einsum("i,ijk->kj", x, spec.structure_tensor)
    assert is_derivation(spec, ad) < 1e-12
    assert is_derivation(spec, np.eye(N)) > 0.5


def test_derivation_defect_shape():
    with pytest.raises(StructureError):
        derivation_defect(heisenberg(1), np.eye(2))


def test_heisenberg_grading_derivation():
    # diag(1,...,1,2) scales the center twice
    n = 3
    D = np.diag([1.0] * (2 * n) + [2.0])
    assert is_derivation(heisenberg(n), D) == 0.0
