"""Decision-variable-affine polynomial matrices and the assembly of T(x) = F(x) + H(x)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .boundary import MultiplierConstraints, boundary_classify, boundary_matrix, multiplier_constraints
from .jetspace import JetSpec, SquaredBasis, multiplier_coefficients, quadform_from_squares
from .polycore import Basis, Polynomial, PolyMatrix, basis_values, convert_coeffs

DEFAULT_EPS_FLOOR = 1e-6


class Role(str, enum.Enum):
    MULTIPLIER = "multiplier"
    WEIGHT = "weight"
    SCALAR = "scalar"


@dataclass(frozen=True)
class DecisionVar:
    id: str
    role: Role
    lower: float | None = None


def _resize(c: np.ndarray, K: int) -> np.ndarray:
    if c.shape[-1] == K:
        return c
    if c.shape[-1] > K:
        if np.any(np.abs(c[..., K:]) > 0):
            raise ValueError("cannot truncate nonzero coefficients")
        return c[..., :K]
    pad = np.zeros(c.shape[:-1] + (K - c.shape[-1],))
    return np.concatenate([c, pad], axis=-1)


class AffinePolyMatrix:
    """``constant(x) + sum_v y_v * term_v(x)`` with all parts m×m polynomial matrices.

    Coefficients live in one basis; ``terms`` maps decision-variable id to an
    (m, m, K) coefficient array.
    """

    def __init__(self, constant: np.ndarray, terms: Mapping[str, np.ndarray] | None = None,
                 basis: Basis | str = Basis.MONOMIAL):
        self.basis = Basis(basis)
        constant = np.asarray(constant, dtype=float)
        if constant.ndim == 2:
            constant = constant[:, :, None]
        terms = {k: np.asarray(v, dtype=float) for k, v in (terms or {}).items()}
        terms = {k: v[:, :, None] if v.ndim == 2 else v for k, v in terms.items()}
        K = max([constant.shape[2]] + [v.shape[2] for v in terms.values()])
        self.constant = _resize(constant, K)
        self.terms = {k: _resize(v, K) for k, v in terms.items()}
        for v in self.terms.values():
            if v.shape[:2] != self.constant.shape[:2]:
                raise ValueError("all parts of an AffinePolyMatrix must share one dimension")

    # construction helpers -------------------------------------------------
    @classmethod
    def from_polymatrix(cls, M: PolyMatrix) -> "AffinePolyMatrix":
        return cls(M.coeffs, {}, M.basis)

    @classmethod
    def scalar_var(cls, name: str, basis: Basis | str = Basis.MONOMIAL) -> "AffinePolyMatrix":
        return cls(np.zeros((1, 1, 1)), {name: np.ones((1, 1, 1))}, basis)

    @classmethod
    def poly_var(cls, prefix: str, degree: int, basis: Basis | str = Basis.MONOMIAL) -> "AffinePolyMatrix":
        """Scalar polynomial with one unknown coefficient per basis function."""
        terms = {}
        for k in range(degree + 1):
            c = np.zeros((1, 1, degree + 1))
            c[0, 0, k] = 1.0
            terms[f"{prefix}_{k}"] = c
        return cls(np.zeros((1, 1, degree + 1)), terms, basis)

    @classmethod
    def sym_matrix_var(cls, prefix: str, m: int, degree: int, basis: Basis | str = Basis.MONOMIAL):
        """Symmetric m×m matrix whose upper-triangle entries are unknown polynomials."""
        out = cls(np.zeros((m, m, degree + 1)), {}, basis)
        for i in range(m):
            for j in range(i, m):
                E = np.zeros((m, m))
                E[i, j] = E[j, i] = 1.0
                out = out + cls.poly_var(f"{prefix}[{i},{j}]", degree, basis).kron(E)
        return out

    # basic properties -----------------------------------------------------
    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    @property
    def K(self) -> int:
        return self.constant.shape[2]

    @property
    def variables(self) -> list[str]:
        return list(self.terms)

    @property
    def degree(self) -> int:
        stack = np.abs(np.stack([self.constant] + list(self.terms.values())))
        nz = np.flatnonzero(np.any(stack > 1e-14, axis=(0, 1, 2)))
        return int(nz[-1]) if nz.size else 0

    def term(self, name: str) -> PolyMatrix:
        return PolyMatrix(self.terms[name], self.basis)

    @property
    def constant_part(self) -> PolyMatrix:
        return PolyMatrix(self.constant, self.basis)

    def to_basis(self, basis: Basis | str) -> "AffinePolyMatrix":
        basis = Basis(basis)
        if basis is self.basis:
            return self
        conv = lambda c: np.apply_along_axis(convert_coeffs, 2, c, self.basis, basis)
        return AffinePolyMatrix(conv(self.constant), {k: conv(v) for k, v in self.terms.items()}, basis)

    # algebra -------------------------------------------------------------
    def _align(self, other: "AffinePolyMatrix") -> "AffinePolyMatrix":
        return other.to_basis(self.basis)

    def __add__(self, other):
        if isinstance(other, PolyMatrix):
            other = AffinePolyMatrix.from_polymatrix(other)
        o = self._align(other)
        K = max(self.K, o.K)
        terms = {k: _resize(v, K) for k, v in self.terms.items()}
        for k, v in o.terms.items():
            terms[k] = terms[k] + _resize(v, K) if k in terms else _resize(v, K)
        return AffinePolyMatrix(_resize(self.constant, K) + _resize(o.constant, K), terms, self.basis)

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        if isinstance(other, PolyMatrix):
            other = AffinePolyMatrix.from_polymatrix(other)
        return self + (-other)

    def scale(self, s: float) -> "AffinePolyMatrix":
        return AffinePolyMatrix(self.constant * s, {k: v * s for k, v in self.terms.items()}, self.basis)

    def _map(self, fn) -> "AffinePolyMatrix":
        return AffinePolyMatrix(fn(self.constant), {k: fn(v) for k, v in self.terms.items()}, self.basis)

    def kron(self, E: np.ndarray) -> "AffinePolyMatrix":
        """Scalar (1×1) affine polynomial times a constant matrix E."""
        if self.dim != 1:
            raise ValueError("kron expects a scalar affine polynomial")
        E = np.asarray(E, dtype=float)
        return self._map(lambda c: E[:, :, None] * c[0, 0][None, None, :])

    def transpose(self) -> "AffinePolyMatrix":
        return self._map(lambda c: c.transpose(1, 0, 2))

    def sym(self) -> "AffinePolyMatrix":
        return self._map(lambda c: 0.5 * (c + c.transpose(1, 0, 2)))

    def matmul(self, A: PolyMatrix) -> "AffinePolyMatrix":
        """Right-multiply by a numeric polynomial matrix."""
        A = A.to_basis(self.basis)

        def f(c):
            return PolyMatrix(c, self.basis).matmul(A).padded(self.K - 1 + A.coeffs.shape[2] - 1)

        return self._map(f)

    def embed(self, rows: Sequence[int], cols: Sequence[int], size: int) -> "AffinePolyMatrix":
        """Place this matrix at (rows, cols) inside a size×size zero matrix."""
        def f(c):
            out = np.zeros((size, size, c.shape[2]))
            out[np.ix_(rows, cols)] = c
            return out

        return self._map(f)

    # evaluation ------------------------------------------------------------
    def evaluate(self, assignment: Mapping[str, float]) -> PolyMatrix:
        missing = [k for k in self.terms if k not in assignment]
        if missing:
            raise KeyError(f"no value assigned to decision variable(s) {missing[:5]}")
        c = self.constant.copy()
        for k, v in self.terms.items():
            c = c + float(assignment[k]) * v
        return PolyMatrix(c, self.basis)

    def __repr__(self):
        return f"AffinePolyMatrix(dim={self.dim}, degree={self.degree}, vars={len(self.terms)}, basis={self.basis.value})"


def eval_T(T: AffinePolyMatrix, assignment: Mapping[str, float]) -> PolyMatrix:
    return T.evaluate(assignment)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum coeffs[v] * y_v + const`` compared with 0 (``sense`` in ``"<="``, ``"=="``)."""

    coeffs: tuple[tuple[str, float], ...]
    const: float
    sense: str
    label: str = ""

    def value(self, assignment: Mapping[str, float]) -> float:
        return sum(c * assignment[v] for v, c in self.coeffs) + self.const


@dataclass
class MultiplierTemplate:
    """FTC multipliers h_k (one per squared-basis pair of v_{theta-1}) with unknown coefficients."""

    jet: JetSpec  # order theta
    deg_h: int
    atoms: tuple = ()
    basis: Basis = Basis.MONOMIAL
    prefix: str = "h"
    constraints: MultiplierConstraints = field(init=False)

    def __post_init__(self):
        if self.jet.theta < 1:
            raise ValueError("multipliers need a jet of order theta >= 1")
        spec = boundary_matrix(list(self.atoms), self.jet.n, self.jet.theta, self.jet.names)
        self.constraints = multiplier_constraints(boundary_classify(spec))

    @property
    def lower(self) -> SquaredBasis:
        return SquaredBasis(self.jet.lower())

    def var(self, k: int, j: int) -> str:
        return f"{self.prefix}{k + 1}_{j}"

    @property
    def variables(self) -> list[DecisionVar]:
        return [DecisionVar(self.var(k, j), Role.MULTIPLIER)
                for k in range(len(self.lower)) for j in range(self.deg_h + 1)]

    def form(self) -> AffinePolyMatrix:
        """Affine H(x): one term per multiplier coefficient."""
        N = len(self.lower)
        K = self.deg_h + 1
        L = self.jet.length
        terms = {}
        for k in range(N):
            for j in range(K):
                h = np.zeros((N, K))
                h[k, j] = 1.0
                coeffs = multiplier_coefficients(h, self.jet.n, self.jet.theta, self.basis)
                G = quadform_from_squares([Polynomial(c, self.basis) for c in coeffs], self.jet, self.basis)
                terms[self.var(k, j)] = G.padded(self.deg_h)
        return AffinePolyMatrix(np.zeros((L, L, K)), terms, self.basis)

    def endpoint_rows(self) -> list[LinearConstraint]:
        """Constraints on h_k(0), h_k(1) written on the coefficients."""
        phi = basis_values(self.deg_h, [0.0, 1.0], self.basis)  # rows: x=0, x=1
        out = []
        for con in self.constraints:
            acc: dict[str, float] = {}
            for k, e, c in con.terms:
                for j in range(self.deg_h + 1):
                    name = self.var(k, j)
                    acc[name] = acc.get(name, 0.0) + c * phi[e, j]
            out.append(LinearConstraint(tuple((v, c) for v, c in acc.items() if c != 0.0), 0.0, con.sense,
                                        f"endpoint {con}"))
        return out

    def polynomials(self, assignment: Mapping[str, float]) -> list[Polynomial]:
        return [Polynomial([assignment.get(self.var(k, j), 0.0) for j in range(self.deg_h + 1)], self.basis)
                for k in range(len(self.lower))]


def build_T(F: AffinePolyMatrix, tmpl: MultiplierTemplate) -> tuple[AffinePolyMatrix, list[LinearConstraint]]:
    if F.dim != tmpl.jet.length:
        raise ValueError(f"integrand dimension {F.dim} does not match jet length {tmpl.jet.length}")
    H = tmpl.form()
    return F.to_basis(tmpl.basis) + H, tmpl.endpoint_rows()
