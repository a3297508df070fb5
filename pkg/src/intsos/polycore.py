"""Univariate polynomials on [0, 1] and symmetric matrices of them.

Two coefficient bases are supported:

* ``Basis.MONOMIAL``: ``p(x) = sum c_k x**k``
* ``Basis.CHEBYSHEV``: ``p(x) = sum c_k T_k(2x - 1)`` (Chebyshev shifted to [0, 1])

The monomial basis is the exchange format (text syntax, small degrees).  The
shifted Chebyshev basis keeps coefficient matching well conditioned once the
degree grows past :data:`CHEB_DEGREE_THRESHOLD`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from numpy.polynomial import polynomial as npmono

TRIM_TOL = 1e-14
CHEB_DEGREE_THRESHOLD = 12


class Basis(str, enum.Enum):
    MONOMIAL = "monomial"
    CHEBYSHEV = "chebyshev01"

    @classmethod
    def auto(cls, degree: int) -> "Basis":
        """Internal basis for a computation whose polynomials reach ``degree``."""
        return cls.CHEBYSHEV if degree > CHEB_DEGREE_THRESHOLD else cls.MONOMIAL


# ---------------------------------------------------------------------------
# coefficient-array kernels (no trimming; used by the SOS machinery)

def coef_mul(a: np.ndarray, b: np.ndarray, basis: Basis) -> np.ndarray:
    # x = (t + 1)/2 is affine, so products of shifted Chebyshev series multiply as in t
    if basis is Basis.MONOMIAL:
        return npmono.polymul(a, b)
    return npcheb.chebmul(a, b)


def coef_der(c: np.ndarray, basis: Basis) -> np.ndarray:
    """Derivative with respect to x (chain rule factor 2 for the shifted basis)."""
    c = np.asarray(c, dtype=float)
    if c.shape[0] <= 1:
        return np.zeros(1)
    if basis is Basis.MONOMIAL:
        return npmono.polyder(c)
    return npcheb.chebder(c, scl=2.0)


def coef_val(c: np.ndarray, x, basis: Basis):
    x = np.asarray(x, dtype=float)
    if basis is Basis.MONOMIAL:
        return npmono.polyval(x, c)
    return npcheb.chebval(2.0 * x - 1.0, c)


def basis_values(degree: int, x, basis: Basis) -> np.ndarray:
    """Matrix ``V[i, k] = phi_k(x_i)`` for k = 0..degree (Vandermonde-like)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if basis is Basis.MONOMIAL:
        return npmono.polyvander(x, degree)
    return npcheb.chebvander(2.0 * x - 1.0, degree)


def derivative_matrix(degree: int, basis: Basis) -> np.ndarray:
    """Matrix D with ``coef(d/dx p) = D @ coef(p)``, shape (degree+1, degree+1)."""
    D = np.zeros((degree + 1, degree + 1))
    for k in range(degree + 1):
        e = np.zeros(degree + 1)
        e[k] = 1.0
        d = coef_der(e, basis)
        D[: d.shape[0], k] = d
    return D


def product_tensor(deg_a: int, deg_b: int, basis: Basis) -> np.ndarray:
    """``P[r, a, b]`` = coefficient of phi_r in phi_a * phi_b."""
    P = np.zeros((deg_a + deg_b + 1, deg_a + 1, deg_b + 1))
    if basis is Basis.MONOMIAL:
        for a in range(deg_a + 1):
            for b in range(deg_b + 1):
                P[a + b, a, b] = 1.0
    else:
        for a in range(deg_a + 1):
            for b in range(deg_b + 1):
                P[a + b, a, b] += 0.5
                P[abs(a - b), a, b] += 0.5
    return P


def convert_coeffs(c: np.ndarray, src: Basis, dst: Basis) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if src is dst:
        return c.copy()
    if src is Basis.CHEBYSHEV:
        out = np.polynomial.Chebyshev(c, domain=[0, 1]).convert(kind=np.polynomial.Polynomial)
    else:
        out = np.polynomial.Polynomial(c).convert(kind=np.polynomial.Chebyshev, domain=[0, 1])
    coef = np.zeros(c.shape[0])
    coef[: out.coef.shape[0]] = out.coef
    return coef


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    while n > 0 and abs(c[n - 1]) < TRIM_TOL:
        n -= 1
    return c[:n].copy()


# ---------------------------------------------------------------------------
# Polynomial

@dataclass(frozen=True, eq=False)
class Polynomial:
    """Immutable univariate polynomial.  ``coeffs`` is empty for the zero polynomial."""

    coeffs: np.ndarray
    basis: Basis = Basis.MONOMIAL

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        bad = np.flatnonzero(~np.isfinite(c))
        if bad.size:
            raise ValueError(f"non-finite coefficient at index {int(bad[0])}")
        c = _trim(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "basis", Basis(self.basis))

    @property
    def degree(self) -> int:
        """Degree; -1 stands in for the zero polynomial."""
        return self.coeffs.shape[0] - 1

    def is_zero(self) -> bool:
        return self.coeffs.shape[0] == 0

    def padded(self, degree: int) -> np.ndarray:
        out = np.zeros(degree + 1)
        if self.degree > degree:
            raise ValueError(f"degree {self.degree} exceeds {degree}")
        out[: self.coeffs.shape[0]] = self.coeffs
        return out

    def to_basis(self, basis: Basis) -> "Polynomial":
        basis = Basis(basis)
        if basis is self.basis or self.is_zero():
            return Polynomial(self.coeffs, basis)
        return Polynomial(convert_coeffs(self.coeffs, self.basis, basis), basis)

    def __call__(self, x):
        if self.is_zero():
            return np.zeros_like(np.asarray(x, dtype=float)) + 0.0
        return coef_val(self.coeffs, x, self.basis)

    def deriv(self) -> "Polynomial":
        if self.degree < 1:
            return Polynomial([], self.basis)
        return Polynomial(coef_der(self.coeffs, self.basis), self.basis)

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other.to_basis(self.basis)
        return Polynomial([float(other)], self.basis)

    def __add__(self, other):
        q = self._coerce(other)
        n = max(self.coeffs.shape[0], q.coeffs.shape[0])
        return Polynomial(self.padded(n - 1) + q.padded(n - 1) if n else [], self.basis)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs, self.basis)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.coeffs * float(other), self.basis)
        q = other.to_basis(self.basis)
        if self.is_zero() or q.is_zero():
            return Polynomial([], self.basis)
        return Polynomial(coef_mul(self.coeffs, q.coeffs, self.basis), self.basis)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return Polynomial(self.coeffs / float(scalar), self.basis)

    def allclose(self, other: "Polynomial", atol: float = 1e-12) -> bool:
        q = other.to_basis(self.basis)
        n = max(self.degree, q.degree, 0)
        return bool(np.allclose(self.padded(n), q.padded(n), rtol=0.0, atol=atol))

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()}, {self.basis.value})"

    def to_text(self) -> str:
        """Monomial text form ``c0 + c1*x + c2*x^2``."""
        c = self.to_basis(Basis.MONOMIAL).coeffs
        if c.shape[0] == 0:
            return "0"
        parts = []
        for k, ck in enumerate(c):
            if ck == 0.0 and c.shape[0] > 1:
                continue
            s = repr(float(ck))
            parts.append(s if k == 0 else (f"{s}*x" if k == 1 else f"{s}*x^{k}"))
        return " + ".join(parts).replace("+ -", "- ")


def poly_make(coeffs: Sequence[float], basis: Basis | str = Basis.MONOMIAL) -> Polynomial:
    return Polynomial(np.asarray(coeffs, dtype=float), Basis(basis))


def poly_arith(op: str, p: Polynomial, q) -> Polynomial:
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        return p * float(q)
    raise ValueError(f"unknown polynomial operation {op!r}")


def poly_diff(p: Polynomial) -> Polynomial:
    return p.deriv()


def poly_eval(p: Polynomial, x):
    return p(x)


X = Polynomial([0.0, 1.0])
ONE = Polynomial([1.0])
ZERO = Polynomial([])
LOCALIZER = Polynomial([0.0, 1.0, -1.0])  # x(1 - x), nonnegative exactly on [0, 1]


_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(?P<star>\*)?\s*)?
        (?P<x>x(?:\s*\^\s*(?P<pow>\d+))?)?\s*""",
    re.VERBOSE,
)


def parse_poly(text: str) -> Polynomial:
    """Parse ``c0 + c1*x + c2*x^2 ...`` (monomial basis, decimal coefficients)."""
    s = text.strip()
    if not s:
        raise ValueError("empty polynomial")
    coeffs: dict[int, float] = {}
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"cannot parse polynomial at column {pos + 1}: {s!r}")
        if not first and m.group("sign") is None:
            raise ValueError(f"expected '+' or '-' at column {pos + 1}: {s!r}")
        if m.group("coef") is None and m.group("x") is None:
            raise ValueError(f"missing term at column {pos + 1}: {s!r}")
        if m.group("star") and m.group("x") is None:
            raise ValueError(f"dangling '*' at column {pos + 1}: {s!r}")
        if m.group("coef") and m.group("x") and not m.group("star"):
            raise ValueError(f"expected '*' between coefficient and x at column {pos + 1}: {s!r}")
        c = float(m.group("coef")) if m.group("coef") else 1.0
        if m.group("sign") == "-":
            c = -c
        k = 0
        if m.group("x"):
            k = int(m.group("pow")) if m.group("pow") else 1
        coeffs[k] = coeffs.get(k, 0.0) + c
        pos = m.end()
        first = False
    deg = max(coeffs)
    arr = np.zeros(deg + 1)
    for k, c in coeffs.items():
        arr[k] = c
    return Polynomial(arr)


# ---------------------------------------------------------------------------
# PolyMatrix

class PolyMatrix:
    """Square matrix of polynomials stored as a dense coefficient array.

    ``coeffs[i, j, k]`` is the k-th basis coefficient of entry (i, j).
    """

    __slots__ = ("coeffs", "basis", "symmetric")

    def __init__(self, coeffs, basis: Basis | str = Basis.MONOMIAL, symmetric: bool | None = None):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim == 2:
            c = c[:, :, None]
        if c.ndim != 3 or c.shape[0] != c.shape[1]:
            raise ValueError(f"PolyMatrix needs a square (m, m, K) array, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite PolyMatrix coefficient")
        nz = np.flatnonzero(np.any(np.abs(c) >= TRIM_TOL, axis=(0, 1)))
        K = int(nz[-1]) + 1 if nz.size else 1
        c = c[:, :, :K].copy()
        c.setflags(write=False)
        self.coeffs = c
        self.basis = Basis(basis)
        if symmetric is None:
            symmetric = bool(np.array_equal(c, c.transpose(1, 0, 2)))
        self.symmetric = symmetric

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[Polynomial | float]], basis: Basis | str = Basis.MONOMIAL):
        basis = Basis(basis)
        m = len(entries)
        polys = [[e.to_basis(basis) if isinstance(e, Polynomial) else Polynomial([float(e)], basis)
                  for e in row] for row in entries]
        if any(len(row) != m for row in polys):
            raise ValueError("PolyMatrix entries must form a square array")
        deg = max([p.degree for row in polys for p in row] + [0])
        c = np.zeros((m, m, deg + 1))
        for i in range(m):
            for j in range(m):
                c[i, j] = polys[i][j].padded(deg)
        return cls(c, basis)

    @classmethod
    def identity(cls, m: int, basis: Basis | str = Basis.MONOMIAL):
        return cls(np.eye(m)[:, :, None], basis)

    @classmethod
    def zeros(cls, m: int, basis: Basis | str = Basis.MONOMIAL):
        return cls(np.zeros((m, m, 1)), basis)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        if not np.any(np.abs(self.coeffs) >= TRIM_TOL):
            return -1
        return self.coeffs.shape[2] - 1

    def entry(self, i: int, j: int) -> Polynomial:
        return Polynomial(self.coeffs[i, j], self.basis)

    def padded(self, degree: int) -> np.ndarray:
        out = np.zeros((self.dim, self.dim, degree + 1))
        K = self.coeffs.shape[2]
        if K > degree + 1 and np.any(np.abs(self.coeffs[:, :, degree + 1:]) >= TRIM_TOL):
            raise ValueError(f"degree {self.degree} exceeds {degree}")
        k = min(K, degree + 1)
        out[:, :, :k] = self.coeffs[:, :, :k]
        return out

    def to_basis(self, basis: Basis | str) -> "PolyMatrix":
        basis = Basis(basis)
        if basis is self.basis:
            return self
        c = np.apply_along_axis(convert_coeffs, 2, self.coeffs, self.basis, basis)
        return PolyMatrix(c, basis, self.symmetric)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at scalar x (m×m) or at an array of points (len(x)×m×m)."""
        xs = np.asarray(x, dtype=float)
        V = basis_values(self.coeffs.shape[2] - 1, xs.reshape(-1), self.basis)
        out = np.einsum("pk,ijk->pij", V, self.coeffs)
        return out[0] if xs.ndim == 0 else out

    def _binary(self, other, sign: float) -> "PolyMatrix":
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        o = other.to_basis(self.basis)
        if o.dim != self.dim:
            raise ValueError("PolyMatrix dimension mismatch")
        K = max(self.coeffs.shape[2], o.coeffs.shape[2])
        return PolyMatrix(self.padded(K - 1) + sign * o.padded(K - 1), self.basis)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return PolyMatrix(-self.coeffs, self.basis, self.symmetric)

    def scale(self, s: float) -> "PolyMatrix":
        return PolyMatrix(self.coeffs * float(s), self.basis, self.symmetric)

    def mul_poly(self, p: Polynomial) -> "PolyMatrix":
        q = p.to_basis(self.basis)
        if q.is_zero():
            return PolyMatrix.zeros(self.dim, self.basis)
        m = self.dim
        rows = [coef_mul(self.coeffs[i, j], q.coeffs, self.basis) for i in range(m) for j in range(m)]
        K = max(r.shape[0] for r in rows)
        c = np.zeros((m, m, K))
        for idx, r in enumerate(rows):
            c[idx // m, idx % m, : r.shape[0]] = r
        return PolyMatrix(c, self.basis)

    def matmul(self, other: "PolyMatrix") -> "PolyMatrix":
        o = other.to_basis(self.basis)
        Ka, Kb = self.coeffs.shape[2], o.coeffs.shape[2]
        P = product_tensor(Ka - 1, Kb - 1, self.basis)
        c = np.einsum("rab,ika,kjb->ijr", P, self.coeffs, o.coeffs)
        return PolyMatrix(c, self.basis)

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.coeffs.transpose(1, 0, 2), self.basis)

    def deriv(self) -> "PolyMatrix":
        D = derivative_matrix(self.coeffs.shape[2] - 1, self.basis)
        return PolyMatrix(np.einsum("kl,ijl->ijk", D, self.coeffs), self.basis)

    def allclose(self, other: "PolyMatrix", atol: float = 1e-12) -> bool:
        o = other.to_basis(self.basis)
        if o.dim != self.dim:
            return False
        K = max(self.coeffs.shape[2], o.coeffs.shape[2])
        return bool(np.allclose(self.padded(K - 1), o.padded(K - 1), rtol=0.0, atol=atol))

    def __repr__(self):
        return f"PolyMatrix(dim={self.dim}, degree={self.degree}, basis={self.basis.value})"


def polymat_sym(M: PolyMatrix) -> PolyMatrix:
    """Return (M + M^T) / 2 with the symmetric flag set."""
    if not isinstance(M, PolyMatrix):
        raise TypeError("polymat_sym expects a PolyMatrix")
    c = 0.5 * (M.coeffs + M.coeffs.transpose(1, 0, 2))
    return PolyMatrix(c, M.basis, symmetric=True)


def gauss_legendre_01(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def chebyshev_points_01(n: int) -> np.ndarray:
    """n Chebyshev-Lobatto points on [0, 1], endpoints included."""
    return 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))
