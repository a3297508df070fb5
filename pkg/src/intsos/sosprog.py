"""Encode "T(x) is PSD on [0, 1]" as Gram-matrix SDP data via Putinar localization.

``T(x) - N(x) x(1-x) = (I ⊗ z_d)^T Q_main (I ⊗ z_d)`` and
``N(x) = (I ⊗ z_dN)^T Q_loc (I ⊗ z_dN)``, with Q_main, Q_loc PSD.  Gram index
order is (jet index) ⊗ (basis index): entry ``i * (d + 1) + a``.

Matching defaults to the shifted Chebyshev basis at every degree: with
monomials the Gram blocks are Hilbert-like and the interior-point iterations
stall around 1e-5 primal residual already at Gram degree 6.

Rows/columns i with ``T(i, i)`` identically zero for every decision value are
removed before encoding; PSD-ness then forces ``T(i, j) = 0`` for all j, which
is imposed as linear equalities on the decision variables.  This keeps the
Gram blocks strictly feasible for the integrands met in practice (the highest
derivative of the jet never appears squared).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .polycore import LOCALIZER, Basis, product_tensor
from .reduction import AffinePolyMatrix, DecisionVar, LinearConstraint
from .sdpsolve import SdpProblem, SdpSolution, remove_dependent_rows

PRUNE_TOL = 1e-14


def _ceil_half(k: int) -> int:
    return max(0, -(-k // 2))


def gram_parameterize(m: int, d: int, basis: Basis) -> np.ndarray:
    """Coefficient map of an m(d+1) Gram block.

    Returns ``A[i, j, r]`` (each an m(d+1) square symmetric matrix, stacked with
    shape (m, m, 2d+1, D, D)) such that ``<A[i, j, r], Q>`` is the coefficient of
    ``phi_r`` in entry (i, j) of ``(I ⊗ z_d)^T Q (I ⊗ z_d)``.
    """
    P = product_tensor(d, d, basis)  # (2d+1, d+1, d+1)
    D = m * (d + 1)
    A = np.zeros((m, m, 2 * d + 1, D, D))
    for i in range(m):
        for j in range(m):
            si = slice(i * (d + 1), (i + 1) * (d + 1))
            sj = slice(j * (d + 1), (j + 1) * (d + 1))
            if i == j:
                A[i, i, :, si, si] = P
            else:
                A[i, j, :, si, sj] += 0.5 * P
                A[i, j, :, sj, si] += 0.5 * P.transpose(0, 2, 1)
    return A


def localized_map(m: int, dN: int, degree: int, basis: Basis) -> np.ndarray:
    """Like :func:`gram_parameterize` for ``g(x) * (I ⊗ z_dN)^T Q (I ⊗ z_dN)``, padded to ``degree``."""
    P = product_tensor(dN, dN, basis)  # (2dN+1, a, b)
    g = LOCALIZER.to_basis(basis).coeffs
    G = product_tensor(2 * dN, g.shape[0] - 1, basis) @ g  # (2dN+3, 2dN+1)
    PG = np.einsum("rs,sab->rab", G, P)
    R = PG.shape[0]
    if R > degree + 1:
        raise ValueError("localizer degree exceeds the main Gram degree")
    D = m * (dN + 1)
    A = np.zeros((m, m, degree + 1, D, D))
    for i in range(m):
        for j in range(m):
            si = slice(i * (dN + 1), (i + 1) * (dN + 1))
            sj = slice(j * (dN + 1), (j + 1) * (dN + 1))
            if i == j:
                A[i, i, :R, si, si] = PG
            else:
                A[i, j, :R, si, sj] += 0.5 * PG
                A[i, j, :R, sj, si] += 0.5 * PG.transpose(0, 2, 1)
    return A


@dataclass
class SosConstraint:
    """``target`` PSD on [0, 1] via ``target - N g`` SOS and ``N`` SOS."""

    target: AffinePolyMatrix
    d: int
    dN: int
    basis: Basis
    kept: list[int]
    zero_rows: list[LinearConstraint]
    name: str = "sos"

    @property
    def m(self) -> int:
        return len(self.kept)

    @property
    def gram_main_dim(self) -> int:
        return self.m * (self.d + 1)

    @property
    def gram_loc_dim(self) -> int:
        return self.m * (self.dN + 1)

    def pad(self, Q: np.ndarray, deg: int) -> np.ndarray:
        """Embed a Gram block over the kept indices into the full jet dimension."""
        full = self.target.dim
        idx = np.concatenate([np.arange(i * (deg + 1), (i + 1) * (deg + 1)) for i in self.kept]) \
            if self.kept else np.zeros(0, dtype=int)
        out = np.zeros((full * (deg + 1), full * (deg + 1)))
        out[np.ix_(idx, idx)] = Q
        return out


def _identically_zero_diagonal(T: AffinePolyMatrix) -> list[int]:
    parts = [T.constant] + list(T.terms.values())
    return [i for i in range(T.dim) if all(np.all(np.abs(c[i, i]) <= PRUNE_TOL) for c in parts)]


def _entry_constraint(T: AffinePolyMatrix, i: int, j: int, r: int, label: str) -> LinearConstraint | None:
    coeffs = tuple((v, float(c[i, j, r])) for v, c in T.terms.items() if abs(c[i, j, r]) > PRUNE_TOL)
    const = float(T.constant[i, j, r])
    if not coeffs and abs(const) <= PRUNE_TOL:
        return None
    return LinearConstraint(coeffs, const, "==", label)


def sos_localize(T: AffinePolyMatrix, deg_N: int | None = None, basis: Basis | str | None = None,
                 name: str = "sos") -> SosConstraint:
    deg_T = T.degree
    if deg_N is None:
        deg_N = deg_T
    dN = _ceil_half(deg_N)
    d = max(_ceil_half(deg_T), dN + 1)
    basis = Basis.CHEBYSHEV if basis is None else Basis(basis)
    T = T.to_basis(basis)

    dropped = _identically_zero_diagonal(T)
    kept = [i for i in range(T.dim) if i not in dropped]
    zero_rows = []
    for i in dropped:
        for j in range(T.dim):
            if j in dropped and j < i:
                continue
            for r in range(T.K):
                con = _entry_constraint(T, i, j, r, f"{name}: T[{i},{j}] coeff {r} = 0")
                if con is not None:
                    if not con.coeffs:
                        raise ValueError(f"{name}: T[{i},{i}] vanishes identically but T[{i},{j}] does not")
                    zero_rows.append(con)
    return SosConstraint(T, d, dN, basis, kept, zero_rows, name)


@dataclass
class AssembledProgram:
    sdp: SdpProblem
    variables: list[str]  # free-variable order
    constraints: list[SosConstraint]
    blocks: list[tuple[int, str]]  # (constraint index or -1, "main" | "loc" | "slack")
    objective: dict[str, float]

    def decode(self, sol: SdpSolution) -> tuple[dict[str, float], list[dict[str, np.ndarray]]]:
        values = {v: float(sol.y[k]) for k, v in enumerate(self.variables)}
        grams: list[dict[str, np.ndarray]] = [dict() for _ in self.constraints]
        for (ci, kind), X in zip(self.blocks, sol.X):
            if ci >= 0:
                grams[ci][kind] = X
        for ci, con in enumerate(self.constraints):
            grams[ci].setdefault("main", np.zeros((0, 0)))
            grams[ci].setdefault("loc", np.zeros((0, 0)))
        return values, grams


def assemble_sdp(constraints: Sequence[SosConstraint], linear: Sequence[LinearConstraint] = (),
                 objective: Mapping[str, float] | None = None,
                 variables: Sequence[DecisionVar] = ()) -> AssembledProgram:
    """Collect SOS constraints and scalar linear constraints into one SDP (minimization).

    ``variables`` may pin the free-variable order and carry lower bounds, which
    become 1×1 slack blocks.
    """
    if not constraints and not linear:
        raise ValueError("empty constraint set")
    ids = [v.id for v in variables]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate decision variable ids")
    objective = dict(objective or {})

    order: list[str] = list(ids)
    seen = set(order)

    def note(names):
        for v in names:
            if v not in seen:
                seen.add(v)
                order.append(v)

    for con in constraints:
        note(con.target.variables)
        for z in con.zero_rows:
            note(v for v, _ in z.coeffs)
    for lc in linear:
        note(v for v, _ in lc.coeffs)
    note(objective)
    index = {v: k for k, v in enumerate(order)}
    nf = len(order)

    blocks: list[tuple[int, str]] = []
    block_dims: list[int] = []
    rows_A: list[dict[int, np.ndarray]] = []  # per row: block index -> matrix
    rows_B: list[np.ndarray] = []
    rows_b: list[float] = []
    labels: list[str] = []

    def linear_row(lc: LinearConstraint):
        bvec = np.zeros(nf)
        for v, c in lc.coeffs:
            bvec[index[v]] += c
        entry: dict[int, np.ndarray] = {}
        if lc.sense == "<=":
            blocks.append((-1, "slack"))
            block_dims.append(1)
            entry[len(block_dims) - 1] = np.ones((1, 1))
        elif lc.sense != "==":
            raise ValueError(f"unknown constraint sense {lc.sense!r}")
        rows_A.append(entry)
        rows_B.append(bvec)
        rows_b.append(-lc.const)
        labels.append(lc.label)

    for ci, con in enumerate(constraints):
        T = con.target
        m, d, dN = con.m, con.d, con.dN
        if m == 0:
            for z in con.zero_rows:
                linear_row(z)
            continue
        Am = gram_parameterize(m, d, con.basis)
        Al = localized_map(m, dN, 2 * d, con.basis)
        bm = len(block_dims)
        blocks += [(ci, "main"), (ci, "loc")]
        block_dims += [m * (d + 1), m * (dN + 1)]
        K = T.K
        if K > 2 * d + 1:
            raise ValueError(f"{con.name}: degree {T.degree} exceeds Gram degree {2 * d}")
        for a, i in enumerate(con.kept):
            for b in range(a, m):
                j = con.kept[b]
                for r in range(2 * d + 1):
                    bvec = np.zeros(nf)
                    for v, c in T.terms.items():
                        if r < K:
                            bvec[index[v]] = -c[i, j, r]
                    rows_A.append({bm: Am[a, b, r], bm + 1: Al[a, b, r]})
                    rows_B.append(bvec)
                    rows_b.append(float(T.constant[i, j, r]) if r < K else 0.0)
                    labels.append(f"{con.name}: T[{i},{j}] coeff {r}")
        for z in con.zero_rows:
            linear_row(z)

    for lc in linear:
        linear_row(lc)
    for v in variables:
        if v.lower is not None:
            linear_row(LinearConstraint(((v.id, -1.0),), float(v.lower), "<=", f"bound {v.id} >= {v.lower}"))

    # prune identically-zero rows
    keep = []
    for k in range(len(rows_b)):
        nz = any(np.any(np.abs(M) > PRUNE_TOL) for M in rows_A[k].values()) or np.any(np.abs(rows_B[k]) > PRUNE_TOL)
        if nz:
            keep.append(k)
        elif abs(rows_b[k]) > PRUNE_TOL:
            raise ValueError(f"infeasible constant row: {labels[k]}")
    mrows = len(keep)
    A = [np.zeros((mrows, dim, dim)) for dim in block_dims]
    for r, k in enumerate(keep):
        for bi, M in rows_A[k].items():
            A[bi][r] = M
    B = np.array([rows_B[k] for k in keep]).reshape(mrows, nf)
    bb = np.array([rows_b[k] for k in keep])
    cvec = np.zeros(nf)
    for v, c in objective.items():
        cvec[index[v]] += c

    # free variables that no row touches are fixed at zero and dropped
    used = np.flatnonzero(np.any(np.abs(B) > 0, axis=0))
    if used.shape[0] < nf:
        unused = [order[k] for k in range(nf) if k not in set(used.tolist())]
        if any(objective.get(v, 0.0) for v in unused):
            raise ValueError(f"objective involves unconstrained variable(s) {unused}")
        order = [order[k] for k in used]
        B = B[:, used]
        cvec = cvec[used]

    names = [f"{constraints[ci].name}.{kind}" if ci >= 0 else kind for ci, kind in blocks]
    sdp = SdpProblem(A, bb, B, None, cvec, names, list(order), [labels[k] for k in keep])
    sdp = remove_dependent_rows(sdp)
    return AssembledProgram(sdp, list(order), list(constraints), blocks, objective)


def gram_reconstruct(Q: np.ndarray, m: int, d: int, basis: Basis) -> np.ndarray:
    """Coefficient array (m, m, 2d+1) of (I ⊗ z_d)^T Q (I ⊗ z_d)."""
    A = gram_parameterize(m, d, basis)
    return np.einsum("ijrab,ab->ijr", A, Q)
