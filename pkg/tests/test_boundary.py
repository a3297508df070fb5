import numpy as np
import pytest

from intsos.boundary import (
    Link, Pin, Tag, boundary_classify, boundary_from_matrix, boundary_matrix, boundary_term,
    multiplier_constraints, parse_atoms,
)
from intsos.jetspace import JetSpec

DIRICHLET = [Pin(0, 0, 0), Pin(0, 0, 1)]
PERIODIC = [Link(0, 0), Link(0, 1)]


def _constraint_set(atoms, n=1, theta=2):
    return {str(c) for c in multiplier_constraints(boundary_classify(boundary_matrix(atoms, n, theta)))}


def test_boundary_matrix_examples():
    assert np.array_equal(boundary_matrix(DIRICHLET, 1, 2).B, [[1, 0, 0, 0], [0, 0, 1, 0]])
    assert np.array_equal(boundary_matrix([Pin(0, 0, 0)], 1, 1).B, [[0, 1]])
    assert np.array_equal(boundary_matrix(PERIODIC, 1, 2).B, [[1, 0, -1, 0], [0, 1, 0, -1]])


def test_boundary_matrix_errors():
    with pytest.raises(ValueError):
        boundary_matrix([Pin(0, 2, 0)], 1, 2)
    with pytest.raises(ValueError):
        boundary_matrix([Pin(1, 0, 0)], 1, 2)


@pytest.mark.parametrize("atoms", [DIRICHLET, PERIODIC, [Pin(0, 0, 0)], []])
def test_nullspace_invariants(atoms):
    spec = boundary_matrix(atoms, 1, 2)
    assert np.abs(spec.B @ spec.nullspace_basis).max(initial=0.0) <= 1e-12
    rank = np.linalg.matrix_rank(spec.B) if spec.B.size else 0
    assert rank + spec.nullspace_basis.shape[1] == spec.width


def test_parse_atoms():
    assert parse_atoms(["u(0)=0", "u(1) = 0"], ["u"], 2) == [Pin(0, 0, 0), Pin(0, 0, 1)]
    assert parse_atoms(["periodic u"], ["u"], 2) == PERIODIC
    assert parse_atoms(["u_x(1)=u_x(0)  # link"], ["u"], 2) == [Link(0, 1)]
    for bad, msg in [("w(0)=0", "unknown variable"), ("u_xx(0)=0", "must be below"), ("u(0)=1", "cannot parse")]:
        with pytest.raises(ValueError, match=msg):
            parse_atoms([bad], ["u"], 2)


def test_classify_dirichlet():
    cls = boundary_classify(boundary_matrix(DIRICHLET, 1, 2))
    assert [cls.tags[k] for k in range(3)] == [(Tag.VANISHES,) * 2, (Tag.VANISHES,) * 2, (Tag.SQUARE,) * 2]
    assert not cls.linked[2]


def test_classify_periodic():
    cls = boundary_classify(boundary_matrix(PERIODIC, 1, 2))
    assert all(cls.linked)
    assert [cls.tag(k, 1) for k in range(3)] == [Tag.SQUARE, Tag.INDEFINITE, Tag.SQUARE]


def test_classify_transport():
    cls = boundary_classify(boundary_matrix([Pin(0, 0, 0)], 1, 1))
    assert cls.tags[0] == (Tag.VANISHES, Tag.SQUARE)


def test_constraints_example_1():
    # difference convention: h3(1) <= 0 and -h3(0) <= 0
    assert _constraint_set(DIRICHLET) == {"1*h3(1) <= 0", "-1*h3(0) <= 0"}
    assert _constraint_set(PERIODIC) == {
        "1*h1(1) + -1*h1(0) <= 0", "1*h2(1) + -1*h2(0) == 0", "1*h3(1) + -1*h3(0) <= 0"}
    assert _constraint_set([Pin(0, 0, 0)], theta=1) == {"1*h1(1) <= 0"}


def test_no_boundary_conditions():
    mc = multiplier_constraints(boundary_classify(boundary_matrix([], 1, 2)))
    assert {str(c) for c in mc} == {
        "1*h1(1) <= 0", "-1*h1(0) <= 0", "1*h2(1) == 0", "1*h2(0) == 0", "1*h3(1) <= 0", "-1*h3(0) <= 0"}


def test_classification_invariant_to_scaling_and_order():
    spec = boundary_matrix(DIRICHLET, 1, 2)
    scaled = boundary_from_matrix(spec.jet, np.diag([3.0, -0.5]) @ spec.B)
    assert boundary_classify(scaled) == boundary_classify(spec)
    assert np.array_equal(boundary_matrix(DIRICHLET[::-1], 1, 2).B, spec.B)


def _admissible_ends(mc, N, rng):
    """Random endpoint values satisfying every constraint (slack <= 0 or == 0)."""
    h = rng.standard_normal((N, 2))
    for c in mc:
        (k, e, a), *rest = c.terms
        v = sum(cc * h[kk, ee] for kk, ee, cc in c.terms)
        if c.sense == "==":
            h[k, e] -= v / a
        elif v > 0:
            h[k, e] -= (v + rng.uniform(0, 1)) / a
    return h


@pytest.mark.parametrize("atoms,n,theta", [
    (DIRICHLET, 1, 2), (PERIODIC, 1, 2), ([Pin(0, 0, 0)], 1, 1), ([], 1, 2),
    ([Pin(0, 0, 0), Pin(1, 0, 1), Link(0, 1)], 2, 2), ([Link(0, 0), Link(1, 0)], 2, 1),
])
def test_soundness_random_kernel_jets(atoms, n, theta):
    rng = np.random.default_rng(5)
    spec = boundary_matrix(atoms, n, theta)
    cls = boundary_classify(spec)
    mc = multiplier_constraints(cls)
    N = len(cls.basis)
    for _ in range(100):
        h = _admissible_ends(mc, N, rng)
        assert mc.satisfied(h, 1e-12)
        w = spec.nullspace_basis @ rng.standard_normal(spec.nullspace_basis.shape[1])
        assert boundary_term(h, spec, w) <= 1e-10


def test_violated_constraint_detected():
    mc = multiplier_constraints(boundary_classify(boundary_matrix([Pin(0, 0, 0)], 1, 1)))
    assert not mc.satisfied(np.array([[0.0, 0.1]]))
    assert mc.satisfied(np.array([[5.0, -0.1]]))


def test_boundary_jet_dimension():
    assert boundary_matrix(DIRICHLET, 1, 2).jet == JetSpec(1, 1)
