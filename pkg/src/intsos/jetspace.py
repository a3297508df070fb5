"""Jet coordinates, degree-2 monomials over them, and the derivative map between orders.

Orderings are fixed once here and used everywhere else:

* jet ``v_theta(u)``: variable-major, then derivative order ascending,
  ``(u1, u1_x, ..., u1^(theta), u2, ...)``;
* squared basis: index pairs ``(i, j)`` with ``i <= j`` in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .polycore import Basis, Polynomial, PolyMatrix, coef_der


def _suffix(k: int) -> str:
    return "_" + "x" * k if k else ""


@dataclass(frozen=True)
class JetSpec:
    n: int
    theta: int
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one dependent variable, got n={self.n}")
        if self.theta < 0:
            raise ValueError(f"derivative order must be nonnegative, got theta={self.theta}")
        if not self.names:
            default = ("u",) if self.n == 1 else ("u", "v", "w")[: self.n] if self.n <= 3 else tuple(
                f"u{i + 1}" for i in range(self.n))
            object.__setattr__(self, "names", tuple(default))
        if len(self.names) != self.n:
            raise ValueError("one name per dependent variable required")

    @property
    def length(self) -> int:
        return self.n * (self.theta + 1)

    def index(self, var: int, order: int) -> int:
        if not (0 <= var < self.n and 0 <= order <= self.theta):
            raise IndexError(f"no jet slot for variable {var}, order {order}")
        return var * (self.theta + 1) + order

    def slot(self, idx: int) -> tuple[int, int]:
        return divmod(idx, self.theta + 1)

    @property
    def coordinates(self) -> list[str]:
        return [f"{v}{_suffix(k)}" for v in self.names for k in range(self.theta + 1)]

    def lower(self) -> "JetSpec":
        return JetSpec(self.n, self.theta - 1, self.names)

    def values(self, derivs: np.ndarray) -> np.ndarray:
        """Jet vector from ``derivs[var, order, ...]`` (orders 0..theta at least)."""
        return np.stack([derivs[v, k] for v in range(self.n) for k in range(self.theta + 1)])


def jet_basis(n: int, theta: int, names: Sequence[str] = ()) -> JetSpec:
    if n < 1 or theta < 1:
        raise ValueError(f"jet_basis needs n >= 1 and theta >= 1, got ({n}, {theta})")
    return JetSpec(n, theta, tuple(names))


@dataclass(frozen=True)
class SquaredBasis:
    jet: JetSpec

    @cached_property
    def pairs(self) -> list[tuple[int, int]]:
        L = self.jet.length
        return [(i, j) for i in range(L) for j in range(i, L)]

    def __len__(self) -> int:
        L = self.jet.length
        return L * (L + 1) // 2

    @cached_property
    def position(self) -> dict[tuple[int, int], int]:
        return {p: k for k, p in enumerate(self.pairs)}

    def labels(self) -> list[str]:
        c = self.jet.coordinates
        return [f"{c[i]}^2" if i == j else f"{c[i]}*{c[j]}" for i, j in self.pairs]

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Monomials q_k(z) for a jet vector z (leading axis = jet coordinate)."""
        return np.stack([z[i] * z[j] for i, j in self.pairs])


def squared_basis(jet: JetSpec) -> SquaredBasis:
    return SquaredBasis(jet)


@dataclass(frozen=True)
class DerivativeMap:
    """``d/dx v2_{theta-1}(u) = C @ v2_theta(u)``."""

    C: np.ndarray
    rows: SquaredBasis
    cols: SquaredBasis


def derivative_map(n: int, theta: int, names: Sequence[str] = ()) -> DerivativeMap:
    if theta < 1:
        raise ValueError("derivative_map needs theta >= 1")
    hi = JetSpec(n, theta, tuple(names))
    lo = hi.lower()
    rows, cols = SquaredBasis(lo), SquaredBasis(hi)
    C = np.zeros((len(rows), len(cols)))

    def up(idx: int) -> int:
        v, k = lo.slot(idx)
        return hi.index(v, k)

    for r, (i, j) in enumerate(rows.pairs):
        # d(z_i z_j) = z_i' z_j + z_i z_j'
        for a, b in ((hi.index(*_next(lo, i)), up(j)), (up(i), hi.index(*_next(lo, j)))):
            C[r, cols.position[(min(a, b), max(a, b))]] += 1.0
    return DerivativeMap(C, rows, cols)


def _next(jet: JetSpec, idx: int) -> tuple[int, int]:
    v, k = jet.slot(idx)
    return v, k + 1


def quadform_from_squares(coeffs: Sequence[Polynomial], jet: JetSpec, basis: Basis | None = None) -> PolyMatrix:
    """Symmetric G with v^T G v = sum_k c_k q_k (cross terms split evenly)."""
    sb = SquaredBasis(jet)
    if len(coeffs) != len(sb):
        raise ValueError(f"expected {len(sb)} coefficients over the squared basis, got {len(coeffs)}")
    if basis is None:
        basis = coeffs[0].basis if coeffs else Basis.MONOMIAL
    polys = [c.to_basis(basis) for c in coeffs]
    deg = max([p.degree for p in polys] + [0])
    L = jet.length
    G = np.zeros((L, L, deg + 1))
    for (i, j), p in zip(sb.pairs, polys):
        c = p.padded(deg)
        if i == j:
            G[i, i] += c
        else:
            G[i, j] += 0.5 * c
            G[j, i] += 0.5 * c
    return PolyMatrix(G, basis, symmetric=True)


def multiplier_coefficients(h: np.ndarray, n: int, theta: int, basis: Basis) -> np.ndarray:
    """Coefficient arrays over v2_theta of ``h' . v2_{theta-1} + h . (C v2_theta)``.

    ``h`` has shape (N_lo, K): one coefficient row per multiplier polynomial.
    Linear in ``h``; returns shape (N_hi, K).
    """
    dm = derivative_map(n, theta)
    h = np.atleast_2d(np.asarray(h, dtype=float))
    K = h.shape[1]
    hx = np.zeros_like(h)
    for k in range(h.shape[0]):
        d = coef_der(h[k], basis)
        hx[k, : d.shape[0]] = d[:K]
    out = dm.C.T @ h
    for r, (i, j) in enumerate(dm.rows.pairs):
        # embed the lower-order pair into the higher-order squared basis
        v_i, k_i = dm.rows.jet.slot(i)
        v_j, k_j = dm.rows.jet.slot(j)
        a, b = dm.cols.jet.index(v_i, k_i), dm.cols.jet.index(v_j, k_j)
        out[dm.cols.position[(a, b)]] += hx[r]
    return out


def multiplier_form(h: Sequence[Polynomial], n: int, theta: int, basis: Basis | None = None) -> PolyMatrix:
    """H(x) over v_theta with v^T H v = sum_k h_k' q_k + h_k (C q)_k."""
    lo = SquaredBasis(JetSpec(n, theta - 1))
    if len(h) != len(lo):
        raise ValueError(f"expected {len(lo)} multipliers, got {len(h)}")
    if basis is None:
        basis = h[0].basis if h else Basis.MONOMIAL
    polys = [p.to_basis(basis) for p in h]
    deg = max([p.degree for p in polys] + [0])
    H = np.stack([p.padded(deg) for p in polys])
    coeffs = multiplier_coefficients(H, n, theta, basis)
    hi = JetSpec(n, theta)
    return quadform_from_squares([Polynomial(c, basis) for c in coeffs], hi, basis)
