import numpy as np
import pytest

from intsos.boundary import Pin
from intsos.jetspace import JetSpec
from intsos.polycore import PolyMatrix
from intsos.problems import IntegralConstraint, IntegralInequality, PoincareProblem
from intsos.reduction import AffinePolyMatrix

JET1 = JetSpec(1, 1, ("u",))
DIRICHLET = (Pin(0, 0, 0), Pin(0, 0, 1))


def const(*rows):
    return PolyMatrix(np.array(rows, dtype=float)[:, :, None])


def test_wirtinger_margin_capped_at_one():
    # int u_x^2 - 4 u^2 >= int u^2 still holds (5 < pi^2), so the cap binds
    out = IntegralInequality(const([-4.0, 0], [0, 1.0]), JET1, DIRICHLET, deg_h=9).solve()
    assert out.certified
    assert out.value == pytest.approx(1.0, abs=1e-6)


def test_zero_order_margin():
    # int 2 u^2 >= 0: margin capped at 1; int -u^2 >= 0 is false
    jet0 = JetSpec(1, 0, ("u",))
    assert IntegralInequality(const([2.0]), jet0).solve().value == pytest.approx(1.0, abs=1e-6)
    out = IntegralInequality(const([-1.0]), jet0).solve()
    assert out.value == pytest.approx(-1.0, abs=1e-6)
    assert not out.certified  # the sign condition fails


def test_false_inequality_not_certified():
    # 12 > pi^2, so int u_x^2 - 12 u^2 takes negative values
    out = IntegralInequality(const([-12.0, 0], [0, 1.0]), JET1, DIRICHLET, deg_h=9).solve()
    assert not out.certified


def test_inequality_dimension_mismatch():
    with pytest.raises(ValueError, match="jet has 2 coordinates"):
        IntegralInequality(const([1.0]), JET1)


def test_poincare_degrees():
    with pytest.raises(ValueError, match="at least 1"):
        PoincareProblem(deg_h=0)
    p = PoincareProblem(deg_h=5)
    assert p.deg_N == 7
    assert PoincareProblem(deg_h=5, deg_N=3).deg_N == 3
    assert "deg_h=5" in p.canonical()


def test_integral_constraint_degree_defaults():
    F = AffinePolyMatrix(np.ones((2, 2, 4)))  # degree 3
    assert IntegralConstraint("c", F, JET1).degrees() == (5, 7)
    assert IntegralConstraint("c", F, JET1, deg_h=2).degrees() == (2, 4)
    assert IntegralConstraint("c", F, JET1, deg_h=2, deg_N=8).degrees() == (2, 8)
    F0 = AffinePolyMatrix(np.ones((1, 1, 3)))
    assert IntegralConstraint("c", F0, JetSpec(1, 0)).degrees() == (-1, 2)
