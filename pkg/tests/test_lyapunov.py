import math

import numpy as np
import numpy.polynomial.polynomial as npoly
import pytest

from intsos.boundary import Pin
from intsos.lyapunov import (
    EPS, StabilityProblem, bisect_param, build_derivative_program, build_positivity_program, certify_stability,
    exponential_bound, norm_bounds, weight_template,
)
from intsos.polycore import PolyMatrix, gauss_legendre_01, poly_make
from intsos.reduction import AffinePolyMatrix
from intsos.sdpsolve import sdp_solve
from intsos.sosprog import assemble_sdp, sos_localize

DIRICHLET2 = (Pin(0, 0, 0), Pin(0, 0, 1), Pin(1, 0, 0), Pin(1, 0, 1))


def const(*rows):
    return PolyMatrix(np.array(rows, dtype=float)[:, :, None])


def taylor_exp(rate, degree):
    return poly_make([(-rate) ** k / math.factorial(k) for k in range(degree + 1)])


def coupled(R, deg_P):
    A0 = const([1.0, 1.5], [5.0, 0.2])
    return StabilityProblem((A0, const([0, 0], [0, 0]), const([1 / R, 0], [0, 1 / R])), DIRICHLET2, deg_P=deg_P)


def fixed(M: PolyMatrix) -> AffinePolyMatrix:
    return AffinePolyMatrix.from_polymatrix(M)


def sos_feasible(F: AffinePolyMatrix) -> bool:
    return sdp_solve(assemble_sdp([sos_localize(F, F.degree)]).sdp).ok


def test_positivity_examples():
    F = build_positivity_program(fixed(const([2.0, 0], [0, 2.0])), 0.5)
    assert np.allclose(F.constant[:, :, 0], 0.5 * np.eye(2))
    assert sos_feasible(F)
    F = build_positivity_program(fixed(const([1.0, 0], [0, 1.0])), 1.0)
    assert np.allclose(F.constant[:, :, 0], -0.5 * np.eye(2))
    assert not sos_feasible(F)


def test_positivity_with_variable_eps():
    P = weight_template(1, 2)
    F = build_positivity_program(P, AffinePolyMatrix.scalar_var(EPS, P.basis))
    assert set(F.variables) == set(P.variables) | {EPS}
    assert np.allclose(F.term(EPS).coeffs[0, 0, 0], -1.0)


def test_transport_F_der():
    lam, eps = 2.0, 0.3
    p = taylor_exp(lam, 12)
    F, jet = build_derivative_program([const([0.0]), const([-1.0])], fixed(PolyMatrix(p.coeffs[None, None])), eps, lam)
    assert jet.theta == 1
    Fv = F.constant_part
    assert Fv.entry(0, 0).allclose(p * (-lam / 2) + (-eps), atol=1e-13)
    assert Fv.entry(0, 1).allclose(p * 0.5, atol=1e-13)
    assert Fv.entry(1, 1).is_zero()


def test_heat_F_der():
    eps = 0.1
    p = poly_make([1.0, 0.5, -0.2])
    lam = poly_make([3.0, -24.0, 24.0])
    F, jet = build_derivative_program([PolyMatrix(lam.coeffs[None, None]), const([0.0]), const([1.0])],
                                      fixed(PolyMatrix(p.coeffs[None, None])), eps)
    assert jet.theta == 2
    Fv = F.constant_part
    assert Fv.entry(0, 0).allclose(p * lam * -1.0 + (-eps), atol=1e-12)
    assert Fv.entry(0, 2).allclose(p * -0.5, atol=1e-12)
    for i, j in [(0, 1), (1, 1), (1, 2), (2, 2)]:
        assert Fv.entry(i, j).is_zero()


def test_coupled_F_der_shape_and_entries():
    R = 2.0
    prob = coupled(R, 0)
    P = const([2.0, 0.5], [0.5, 1.0])
    F, jet = build_derivative_program(prob.A, fixed(P), 0.0)
    assert F.dim == 6 and jet.coordinates == ["u", "u_x", "u_xx", "v", "v_x", "v_xx"]
    PA = P(0.0) @ np.array([[1.0, 1.5], [5.0, 0.2]])
    M = F.constant_part(0.4)
    u0 = [0, 3]
    assert np.allclose(M[np.ix_(u0, u0)], -0.5 * (PA + PA.T))
    assert np.allclose(M[np.ix_(u0, [2, 5])], -0.5 * P(0.0) / R)


@pytest.mark.parametrize("n,order", [(1, 1), (1, 2), (2, 2), (2, 1)])
def test_F_der_matches_direct_expansion(n, order):
    # -u^T P A u - (rate/2) u^T P u - eps u^T u == v^T F_der v pointwise
    rng = np.random.default_rng(10 * n + order)
    sym = lambda M: 0.5 * (M + M.transpose(1, 0, 2))
    A = [PolyMatrix(rng.standard_normal((n, n, 3))) for _ in range(order + 1)]
    P = PolyMatrix(sym(rng.standard_normal((n, n, 4))))
    eps, rate = 0.37, 1.3
    F, jet = build_derivative_program(A, fixed(P), eps, rate)
    xs = np.linspace(0, 1, 17)
    u = [rng.standard_normal(6) for _ in range(n)]
    d = [[npoly.polyval(xs, npoly.polyder(c, k) if k else c) for k in range(jet.theta + 1)] for c in u]
    v = np.array([d[i][k] for i in range(n) for k in range(jet.theta + 1)])
    uu = np.array([d[i][0] for i in range(n)])
    Au = sum(np.einsum("pij,jp->ip", Ak(xs), np.array([d[i][k] for i in range(n)])) for k, Ak in enumerate(A))
    Pp = P(xs)
    direct = -np.einsum("ip,pij,jp->p", uu, Pp, Au) - 0.5 * rate * np.einsum("ip,pij,jp->p", uu, Pp, uu) \
        - eps * np.sum(uu * uu, axis=0)
    form = np.einsum("ip,pij,jp->p", v, F.constant_part(xs), v)
    assert np.allclose(form, direct, atol=1e-9 * (1 + np.abs(direct).max()))


def test_order_three_rejected():
    with pytest.raises(ValueError, match="derivative order 3 unsupported"):
        build_derivative_program([const([0.0])] * 4, fixed(const([1.0])), 0.0)
    with pytest.raises(ValueError, match="derivative order 3 unsupported"):
        StabilityProblem((const([0.0]),) * 4)


def test_norm_bounds():
    lo, hi = norm_bounds(const([1.0, 0], [0, 2.0]))
    assert (lo, hi) == (1.0, 2.0)
    lo, hi = norm_bounds(PolyMatrix(np.stack([np.eye(2), np.eye(2)], axis=2)))
    assert lo == pytest.approx(1.0, abs=1e-2) and hi == pytest.approx(2.0, abs=1e-2)
    assert lo <= 1.0 and hi >= 2.0
    assert norm_bounds(const([-1.0]))[0] is None
    with pytest.raises(ValueError):
        norm_bounds(PolyMatrix(np.array([[[1.0], [2.0]], [[0.0], [1.0]]])))


def test_exponential_bound():
    b = exponential_bound(1.0, 1.0, 1.0)
    assert (b.c1, b.c2, b.c3, b.rate, b.prefactor) == (0.5, 0.5, 1.0, 2.0, 1.0)
    b2 = exponential_bound(2.0, 6.0, 0.5)
    assert b2.prefactor == pytest.approx(3.0) and b2.rate == pytest.approx(0.5 / 3.0)
    # doubling P (and the eps that comes with it) leaves prefactor and rate unchanged
    b4 = exponential_bound(4.0, 12.0, 1.0)
    assert b4.prefactor == pytest.approx(b2.prefactor) and b4.rate == pytest.approx(b2.rate)
    for bad in [(0.0, 1.0, 1.0), (1.0, 1.0, 0.0), (2.0, 1.0, 1.0)]:
        with pytest.raises(ValueError):
            exponential_bound(*bad)


def test_transport_quadrature_identity():
    # d/dx(p u^2 / 2) = -(lam/2) p u^2 + p u u_x with p = e^{-lam x}; u = x
    lam = 1.0
    p = taylor_exp(lam, 24)
    F, _ = build_derivative_program([const([0.0]), const([-1.0])], fixed(PolyMatrix(p.coeffs[None, None])), 0.0, lam)
    x, w = gauss_legendre_01(64)
    v = np.stack([x, np.ones_like(x)])
    integral = np.sum(w * np.einsum("ip,pij,jp->p", v, F.constant_part(x), v))
    assert integral == pytest.approx(0.5 * math.exp(-lam), abs=1e-10)


def test_transport_certified_with_rate():
    prob = StabilityProblem((const([0.0]), const([-1.0])), (Pin(0, 0, 0),), rate=2.0, deg_P=8)
    rep = certify_stability(prob)
    assert rep.feasible and rep.check.passed
    assert rep.eps2 == pytest.approx(0.1165, abs=1e-3)
    assert rep.lam_m > 0 and rep.lam_M >= rep.lam_m
    assert rep.decay_rate == pytest.approx(2.0 + rep.eps2 / rep.bound.c2)
    assert "certified" in rep.summary()
    # normalization: int tr P = n
    x, w = gauss_legendre_01(16)
    assert np.sum(w * rep.P(x)[:, 0, 0]) == pytest.approx(1.0, abs=1e-9)


def test_unstable_problem_not_certified():
    # u_t = u_xx + 12 u is unstable under Dirichlet conditions (12 > pi^2)
    prob = StabilityProblem((const([12.0]), const([0.0]), const([1.0])), (Pin(0, 0, 0), Pin(0, 0, 1)), deg_P=4)
    rep = certify_stability(prob)
    assert not rep.feasible and rep.bound is None and rep.decay_rate is None


def test_fixed_identity_weight():
    # u_t = u_xx + u: with P = I the decay margin is pi^2 - 1, so positivity (eps <= 1/2) binds
    prob = StabilityProblem((const([1.0]), const([0.0]), const([1.0])), (Pin(0, 0, 0), Pin(0, 0, 1)),
                            deg_h=3, fixed_P=const([1.0]))
    rep = certify_stability(prob)
    assert rep.feasible and rep.eps2 == pytest.approx(0.5, abs=1e-6)
    assert np.allclose(rep.P(0.3), [[1.0]])
    assert "P[0,0]_0" not in rep.certificate.params


def test_problem_validation():
    with pytest.raises(ValueError):
        StabilityProblem(())
    with pytest.raises(ValueError):
        StabilityProblem((const([0.0]),), rate=-1.0)
    with pytest.raises(ValueError):
        StabilityProblem((const([0.0]),), fixed_P=const([1.0, 0], [0, 1.0]))
    p = StabilityProblem((const([0.0]), const([-30.0])))
    assert p.floor == pytest.approx(30e-6)


@pytest.mark.parametrize("R,deg", [(0.25, 0), (1.5, 2)])
def test_monotone_in_degree(R, deg):
    assert certify_stability(coupled(R, deg)).feasible
    assert certify_stability(coupled(R, deg + 2)).feasible


def test_bisect_lo_infeasible_returns_none():
    res = bisect_param(lambda R: coupled(R, 2), 5.0, 6.0, 0.5)
    assert res.value is None and len(res.probes) == 1 and res.best is None


def test_bisect_open_lower_end():
    res = bisect_param(lambda R: coupled(R, 2), 0.0, 3.0, 0.1)
    assert res.probes[0].report is None and "division" in res.probes[0].error
    assert 1.6 <= res.value <= 1.7
    assert res.best.value == res.value and res.best.report.check.passed
    assert all(p.feasible == (p.value <= res.value) for p in res.probes[1:])


def test_bisect_hi_feasible_and_errors():
    res = bisect_param(lambda R: coupled(R, 2), 0.2, 0.3, 0.05)
    assert res.value == 0.3 and len(res.probes) == 2
    with pytest.raises(ValueError):
        bisect_param(lambda R: coupled(R, 2), 1.0, 1.0, 0.1)
