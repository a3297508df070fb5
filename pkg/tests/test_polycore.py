import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intsos.polycore import (
    LOCALIZER, Basis, PolyMatrix, Polynomial, basis_values, chebyshev_points_01, coef_mul, convert_coeffs,
    derivative_matrix, gauss_legendre_01, parse_poly, poly_arith, poly_diff, poly_eval, poly_make,
    polymat_sym, product_tensor,
)

coeff_lists = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=9)
bases = st.sampled_from(list(Basis))
XS = np.linspace(0.0, 1.0, 23)


def test_make_and_eval():
    p = poly_make([1, 2, 3])
    assert p.degree == 2
    assert poly_eval(p, 0.5) == pytest.approx(1 + 1 + 0.75)


def test_trailing_zeros_trimmed_and_zero_degree():
    assert poly_make([1.0, 0.0, 0.0]).degree == 0
    assert poly_make([0.0]).degree == -1
    assert poly_make([]).is_zero()


def test_non_finite_rejected():
    with pytest.raises(ValueError, match="non-finite coefficient at index 1"):
        poly_make([1.0, np.nan])


def test_product_rule_example():
    # (1 + x)(1 - x) = 1 - x^2, derivative -2x
    p = poly_arith("mul", poly_make([1, 1]), poly_make([1, -1]))
    assert p.allclose(poly_make([1, 0, -1]))
    assert poly_diff(p).allclose(poly_make([0, -2]))


def test_unknown_operation():
    with pytest.raises(ValueError):
        poly_arith("pow", poly_make([1]), 2)


def test_localizer_is_x_one_minus_x():
    assert np.allclose(LOCALIZER(XS), XS * (1 - XS))


@given(coeff_lists, bases)
def test_basis_round_trip(c, basis):
    p = Polynomial(c, basis)
    other = Basis.MONOMIAL if basis is Basis.CHEBYSHEV else Basis.CHEBYSHEV
    q = p.to_basis(other)
    assert np.allclose(p(XS), q(XS), atol=1e-9 * (1 + np.abs(c).max()))
    assert q.to_basis(basis).allclose(p, atol=1e-8 * (1 + np.abs(c).max()))


@given(coeff_lists, coeff_lists, bases)
def test_multiplication_pointwise(a, b, basis):
    p, q = Polynomial(a, basis), Polynomial(b, basis)
    scale = (1 + np.abs(a).max()) * (1 + np.abs(b).max())
    assert np.allclose((p * q)(XS), p(XS) * q(XS), atol=1e-10 * scale * 10)


@given(coeff_lists, bases)
def test_derivative_against_finite_difference(c, basis):
    p = Polynomial(c, basis)
    h = 1e-6
    x = np.linspace(0.1, 0.9, 7)
    fd = (p(x + h) - p(x - h)) / (2 * h)
    assert np.allclose(p.deriv()(x), fd, atol=1e-4 * (1 + np.abs(c).max()))


@pytest.mark.parametrize("basis", list(Basis))
def test_derivative_matrix_matches_deriv(basis):
    rng = np.random.default_rng(3)
    c = rng.standard_normal(8)
    D = derivative_matrix(7, basis)
    assert np.allclose(D @ c, Polynomial(c, basis).deriv().padded(7))


@pytest.mark.parametrize("basis", list(Basis))
def test_product_tensor(basis):
    P = product_tensor(3, 4, basis)
    V = basis_values(7, XS, basis)
    Va, Vb = basis_values(3, XS, basis), basis_values(4, XS, basis)
    for a in range(4):
        for b in range(5):
            assert np.allclose(V @ P[:, a, b], Va[:, a] * Vb[:, b])


def test_chebyshev_product_formula():
    # T_2 T_3 = (T_5 + T_1)/2
    e2, e3 = np.eye(4)[2][:3], np.eye(4)[3]
    assert np.allclose(coef_mul(e2, e3, Basis.CHEBYSHEV), [0, 0.5, 0, 0, 0, 0.5])


def test_convert_known_values():
    # T_1(2x - 1) = 2x - 1
    assert np.allclose(convert_coeffs([0.0, 1.0], Basis.CHEBYSHEV, Basis.MONOMIAL), [-1.0, 2.0])


def test_parse_poly():
    p = parse_poly("1 + 2*x - 0.5*x^3")
    assert p.allclose(poly_make([1, 2, 0, -0.5]))
    assert parse_poly("x^2").allclose(poly_make([0, 0, 1]))
    assert parse_poly("-3").allclose(poly_make([-3]))
    assert parse_poly(p.to_text()).allclose(p)


@pytest.mark.parametrize("bad", ["", "1 +", "2 x", "1 + * x", "x^"])
def test_parse_poly_errors(bad):
    with pytest.raises(ValueError):
        parse_poly(bad)


def test_polymatrix_basics():
    M = PolyMatrix.from_entries([[poly_make([1, 1]), 2.0], [2.0, poly_make([0, 0, 1])]])
    assert M.dim == 2 and M.degree == 2 and M.symmetric
    assert np.allclose(M(0.5), [[1.5, 2.0], [2.0, 0.25]])
    vals = M(XS)
    assert vals.shape == (XS.shape[0], 2, 2)
    Mc = M.to_basis(Basis.CHEBYSHEV)
    assert np.allclose(Mc(XS), vals)
    assert (M - M).degree == -1
    assert np.allclose(M.deriv()(0.3), [[1.0, 0.0], [0.0, 0.6]])


def test_polymatrix_matmul_pointwise():
    rng = np.random.default_rng(0)
    for basis in Basis:
        A = PolyMatrix(rng.standard_normal((3, 3, 4)), basis)
        B = PolyMatrix(rng.standard_normal((3, 3, 3)), basis)
        assert np.allclose(A.matmul(B)(XS), A(XS) @ B(XS))
        p = Polynomial(rng.standard_normal(3), basis)
        assert np.allclose(A.mul_poly(p)(XS), A(XS) * p(XS)[:, None, None])


def test_polymat_sym():
    rng = np.random.default_rng(1)
    M = PolyMatrix(rng.standard_normal((2, 2, 3)))
    S = polymat_sym(M)
    assert S.symmetric and S.allclose(S.transpose())


def test_polymatrix_rejects_bad_shapes():
    with pytest.raises(ValueError):
        PolyMatrix(np.zeros((2, 3, 1)))
    with pytest.raises(ValueError):
        PolyMatrix(np.full((1, 1, 1), np.inf))


@settings(max_examples=25)
@given(st.integers(0, 40))
def test_gauss_legendre_exact(k):
    x, w = gauss_legendre_01(32)
    assert np.sum(w * x ** k) == pytest.approx(1.0 / (k + 1), rel=1e-12)


def test_chebyshev_points_include_ends():
    x = chebyshev_points_01(65)
    assert x[0] == 0.0 and x[-1] == pytest.approx(1.0) and np.all(np.diff(x) > 0)
