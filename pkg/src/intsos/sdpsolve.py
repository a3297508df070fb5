"""Dense primal-dual interior-point solver for block SDPs with free variables.

Primal::

    minimize    sum_j <C_j, X_j> + c^T y
    subject to  sum_j <A_ij, X_j> + (B y)_i = b_i,   X_j PSD,  y free

Dual::

    maximize    b^T z
    subject to  C_j - sum_i z_i A_ij = S_j PSD,   B^T z = c

Search directions use Nesterov-Todd scaling with a Mehrotra predictor-corrector.
Free variables are eliminated exactly before iterating (QR of ``B``); the
remaining pure-PSD problem is solved through a Cholesky-factored Schur
complement, and ``y``/``z`` are recovered for the original problem.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)


@dataclass
class SdpProblem:
    """Standard-form block SDP.  ``A[j]`` has shape (m, d_j, d_j), each slice symmetric."""

    A: list[np.ndarray]
    b: np.ndarray
    B: np.ndarray | None = None
    C: list[np.ndarray] | None = None
    c: np.ndarray | None = None
    block_names: list[str] = field(default_factory=list)
    free_names: list[str] = field(default_factory=list)
    row_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.shape[0]
        self.A = [np.asarray(a, dtype=float).reshape(m, a.shape[-1], a.shape[-1]) for a in self.A]
        if self.B is None:
            self.B = np.zeros((m, 0))
        self.B = np.asarray(self.B, dtype=float).reshape(m, -1)
        if self.C is None:
            self.C = [np.zeros((a.shape[1], a.shape[1])) for a in self.A]
        self.C = [np.asarray(x, dtype=float) for x in self.C]
        if self.c is None:
            self.c = np.zeros(self.B.shape[1])
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.check()

    @property
    def block_dims(self) -> list[int]:
        return [a.shape[1] for a in self.A]

    @property
    def n_eq(self) -> int:
        return self.b.shape[0]

    @property
    def n_free(self) -> int:
        return self.B.shape[1]

    def check(self) -> None:
        m = self.n_eq
        if self.c.shape[0] != self.B.shape[1]:
            raise ValueError("free-variable objective length does not match B")
        if len(self.C) != len(self.A):
            raise ValueError("one objective matrix per block required")
        for j, (a, cj) in enumerate(zip(self.A, self.C)):
            if a.shape[0] != m:
                raise ValueError(f"block {j}: {a.shape[0]} constraint slices, expected {m}")
            if cj.shape != a.shape[1:]:
                raise ValueError(f"block {j}: objective shape {cj.shape} does not match {a.shape[1:]}")
            if not np.allclose(a, a.transpose(0, 2, 1), atol=1e-13):
                raise ValueError(f"block {j}: constraint matrices must be symmetric")

    def A_op(self, X: Sequence[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.n_eq)
        for a, x in zip(self.A, X):
            out += np.einsum("kij,ij->k", a, x)
        return out

    def AT_op(self, z: np.ndarray) -> list[np.ndarray]:
        return [np.einsum("k,kij->ij", z, a) for a in self.A]

    def primal_objective(self, X, y) -> float:
        return float(sum(np.vdot(cj, x) for cj, x in zip(self.C, X)) + self.c @ y)

    def dump(self) -> str:
        """Plain-text listing (debugging aid): blocks, free variables, nonzeros per row."""
        lines = [f"SDP: {len(self.A)} blocks {self.block_dims}, {self.n_free} free vars, {self.n_eq} equalities"]
        for j, a in enumerate(self.A):
            name = self.block_names[j] if j < len(self.block_names) else f"X{j}"
            lines.append(f"block {j} {name} dim={a.shape[1]}")
        for k in range(self.n_free):
            name = self.free_names[k] if k < len(self.free_names) else f"y{k}"
            if self.c[k]:
                lines.append(f"objective {name} {self.c[k]!r}")
        for j, cj in enumerate(self.C):
            for p, q in zip(*np.nonzero(np.tril(cj))):
                lines.append(f"objective X{j}[{p},{q}] {cj[p, q]!r}")
        for i in range(self.n_eq):
            label = self.row_labels[i] if i < len(self.row_labels) else ""
            terms = []
            for j, a in enumerate(self.A):
                for p, q in zip(*np.nonzero(np.tril(a[i]))):
                    terms.append(f"X{j}[{p},{q}]:{a[i, p, q]!r}")
            for k in np.flatnonzero(self.B[i]):
                name = self.free_names[k] if k < len(self.free_names) else f"y{k}"
                terms.append(f"{name}:{self.B[i, k]!r}")
            lines.append(f"row {i} {label} rhs={self.b[i]!r} " + " ".join(terms))
        return "\n".join(lines)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    NUMERICAL_TROUBLE = "numerical_trouble"
    INFEASIBLE_SUSPECTED = "infeasible_suspected"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class SolverConfig:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    kkt_regularization: float = 1e-12
    record_history: bool = False

    def __post_init__(self):
        for name in ("tol_feas", "tol_gap", "max_iter", "step_fraction", "kkt_regularization"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be positive")


@dataclass
class Residuals:
    primal: float
    dual: float
    gap: float

    def max(self) -> float:
        return max(self.primal, self.dual, self.gap)


@dataclass
class SdpSolution:
    X: list[np.ndarray]
    y: np.ndarray
    z: np.ndarray
    S: list[np.ndarray]
    status: Status
    residuals: Residuals
    iterations: int
    primal_objective: float = float("nan")
    dual_objective: float = float("nan")
    history: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)


def kkt_residuals(p: SdpProblem, s: SdpSolution) -> Residuals:
    """Relative primal/dual infeasibility and duality gap of a candidate solution."""
    rp = p.b - p.A_op(s.X) - p.B @ s.y
    ATz = p.AT_op(s.z)
    Rd = [cj - a - sj for cj, a, sj in zip(p.C, ATz, s.S)]
    rf = p.c - p.B.T @ s.z
    nb = np.linalg.norm(p.b)
    nc = np.sqrt(sum(np.linalg.norm(cj) ** 2 for cj in p.C) + np.linalg.norm(p.c) ** 2)
    primal = np.linalg.norm(rp) / (1.0 + nb)
    dual = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd) + np.linalg.norm(rf) ** 2) / (1.0 + nc)
    pobj = p.primal_objective(s.X, s.y)
    dobj = float(p.b @ s.z)
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return Residuals(float(primal), float(dual), float(gap))


# ---------------------------------------------------------------------------

def _nt_scaling(X: np.ndarray, S: np.ndarray):
    """R with R^{-1} X R^{-T} = R^T S R = diag(lam); W = R R^T satisfies W S W = X."""
    Lx = np.linalg.cholesky(X)
    Ls = np.linalg.cholesky(S)
    U, lam, Vt = np.linalg.svd(Ls.T @ Lx)
    R = Lx @ Vt.T / np.sqrt(lam)
    Rinv = (np.sqrt(lam)[:, None] * Vt) @ sla.solve_triangular(Lx, np.eye(X.shape[0]), lower=True)
    return R, Rinv, lam


def _max_step(lam: np.ndarray, D: np.ndarray) -> float:
    """Largest a with diag(lam) + a*D PSD (D symmetric, in scaled coordinates)."""
    s = 1.0 / np.sqrt(lam)
    ev = np.linalg.eigvalsh(s[:, None] * D * s[None, :])
    mn = ev[0]
    return np.inf if mn >= 0 else -1.0 / mn


def _rank_check(p: SdpProblem) -> None:
    """Reject structurally inconsistent equalities before iterating."""
    cols = [a.reshape(p.n_eq, -1) for a in p.A] + [p.B]
    G = np.hstack(cols)
    if p.n_eq == 0:
        return
    sv = np.linalg.svd(G, compute_uv=False)
    tol = max(G.shape) * np.finfo(float).eps * (sv[0] if sv.size else 1.0)
    rank = int(np.sum(sv > tol))
    if rank < p.n_eq:
        Gb = np.hstack([G, p.b[:, None]])
        svb = np.linalg.svd(Gb, compute_uv=False)
        rank_b = int(np.sum(svb > max(Gb.shape) * np.finfo(float).eps * svb[0]))
        if rank_b > rank:
            raise ValueError("inconsistent equality constraints (rank check failed)")
        raise ValueError(f"equality constraints are linearly dependent (rank {rank} < {p.n_eq})")
    if p.n_free:
        svB = np.linalg.svd(p.B, compute_uv=False)
        if svB.size and np.sum(svB > max(p.B.shape) * np.finfo(float).eps * max(svB[0], 1.0)) < p.n_free:
            raise ValueError("free variables are not determined by the equalities (B lacks full column rank)")


def remove_dependent_rows(p: SdpProblem, tol: float = 1e-10) -> SdpProblem:
    """Drop equality rows that are linear combinations of others (QR with pivoting)."""
    if p.n_eq == 0:
        return p
    G = np.hstack([a.reshape(p.n_eq, -1) for a in p.A] + [p.B])
    _, R, piv = sla.qr(G.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    keep = np.sort(piv[: int(np.sum(d > tol * max(d[0], 1.0)))])
    if keep.shape[0] == p.n_eq:
        return p
    # dropped rows must be reproduced, rhs included, by the kept ones
    coef, *_ = np.linalg.lstsq(G[keep].T, G.T, rcond=None)
    mismatch = np.abs(coef.T @ p.b[keep] - p.b)
    if np.any(mismatch > 1e-8 * (1.0 + np.abs(p.b))):
        raise ValueError("inconsistent equality constraints (rank check failed)")
    labels = [p.row_labels[i] for i in keep] if p.row_labels else []
    return SdpProblem([a[keep] for a in p.A], p.b[keep], p.B[keep], p.C, p.c,
                      p.block_names, p.free_names, labels)


def _eliminate_free(p: SdpProblem):
    """Remove free variables via a QR factorization of B.

    With ``B = [Q1 Q2] [R; 0]``, the free variables are ``y = R^{-1} Q1^T (b - A(X))``
    and the PSD part must satisfy ``Q2^T A(X) = Q2^T b``.  Returns the reduced data
    and the maps needed to recover ``y`` and ``z``.
    """
    nf = p.n_free
    Q, R = np.linalg.qr(p.B, mode="complete")
    Q1, Q2, R = Q[:, :nf], Q[:, nf:], R[:nf]
    Abar = [np.einsum("ki,kab->iab", Q2, a) for a in p.A]
    bbar = Q2.T @ p.b
    z0 = Q1 @ sla.solve_triangular(R, p.c, trans="T")  # B^T z0 = c
    Cbar = [cj - g for cj, g in zip(p.C, p.AT_op(z0))]
    return Abar, bbar, Cbar, Q1, Q2, R, z0


def sdp_solve(p: SdpProblem, cfg: SolverConfig | None = None) -> SdpSolution:
    cfg = cfg or SolverConfig()
    p.check()
    _rank_check(p)

    dims = p.block_dims
    ntot = sum(dims)
    nb = np.linalg.norm(p.b)
    nc = np.sqrt(sum(np.linalg.norm(cj) ** 2 for cj in p.C) + np.linalg.norm(p.c) ** 2)

    if p.n_free:
        A, b, C, Q1, Q2, Rb, z0 = _eliminate_free(p)
    else:
        A, b, C = p.A, p.b, p.C
        Q1 = Q2 = Rb = None
        z0 = np.zeros(p.n_eq)
    mr = b.shape[0]
    Aflat = [a.reshape(mr, d * d) for a, d in zip(A, dims)]

    def A_op(X):
        out = np.zeros(mr)
        for af, x in zip(Aflat, X):
            out += af @ x.reshape(-1)
        return out

    def AT_op(z):
        return [(z @ af).reshape(d, d) for af, d in zip(Aflat, dims)]

    def recover(X, zr):
        if Q1 is None:
            return np.zeros(0), zr
        y = sla.solve_triangular(Rb, Q1.T @ (p.b - p.A_op(X)))
        return y, Q2 @ zr + z0

    scale = max([np.max(np.abs(p.b), initial=0.0)] + [np.max(np.abs(cj), initial=0.0) for cj in p.C]
                + [np.max(np.abs(p.c), initial=0.0)])
    alpha0 = 1.0 + scale
    X = [alpha0 * np.eye(d) for d in dims]
    S = [alpha0 * np.eye(d) for d in dims]
    zr = np.zeros(mr)

    history: list[dict] = []
    best: tuple[float, SdpSolution] | None = None
    best_rp, stall = np.inf, 0
    status = Status.ITERATION_LIMIT
    res = Residuals(np.inf, np.inf, np.inf)

    def snapshot(st: Status, res: Residuals, iters: int) -> SdpSolution:
        y, z = recover(X, zr)
        return SdpSolution([x.copy() for x in X], y, z, [s.copy() for s in S], st, res, iters,
                           p.primal_objective(X, y), float(p.b @ z), history)

    it = 0
    for it in range(cfg.max_iter + 1):
        # residuals measured on the original problem
        y, z = recover(X, zr)
        rp_full = p.b - p.A_op(X) - p.B @ y
        Rd_full = [cj - a - sj for cj, a, sj in zip(p.C, p.AT_op(z), S)]
        rf = p.c - p.B.T @ z
        pobj = p.primal_objective(X, y)
        dobj = float(p.b @ z)
        res = Residuals(
            float(np.linalg.norm(rp_full) / (1.0 + nb)),
            float(np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd_full) + np.linalg.norm(rf) ** 2) / (1.0 + nc)),
            float(abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))),
        )
        xs = float(sum(np.vdot(x, s) for x, s in zip(X, S)))
        mu = xs / ntot
        if cfg.record_history:
            history.append(dict(iter=it, pobj=pobj, dobj=dobj, mu=mu, primal=res.primal, dual=res.dual,
                                gap=res.gap, xs=xs,
                                correction=float(-z @ rp_full + sum(np.vdot(r, x) for r, x in zip(Rd_full, X))
                                                 + rf @ y)))
        log.debug("it %3d pobj %+.8e dobj %+.8e pres %.2e dres %.2e gap %.2e", it, pobj, dobj,
                  res.primal, res.dual, res.gap)

        if best is None or res.max() < best[0]:
            best = (res.max(), snapshot(Status.NUMERICAL_TROUBLE, res, it))
        if res.primal <= cfg.tol_feas and res.dual <= cfg.tol_feas and res.gap <= cfg.tol_gap:
            return snapshot(Status.OPTIMAL, res, it)
        if dobj > 1e10 * (1.0 + abs(pobj)) and res.dual <= 1e2 * cfg.tol_feas:
            status = Status.INFEASIBLE_SUSPECTED
            break
        if -pobj > 1e10 * (1.0 + abs(dobj)) and res.primal <= 1e2 * cfg.tol_feas:
            status = Status.INFEASIBLE_SUSPECTED
            break
        if res.primal < 0.5 * best_rp:
            best_rp, stall = res.primal, 0
        elif res.primal > cfg.tol_feas:
            stall += 1
            if stall >= 30:
                status = Status.INFEASIBLE_SUSPECTED
                break
        if it == cfg.max_iter:
            break

        rp = b - A_op(X)
        Rd = [cj - a - sj for cj, a, sj in zip(C, AT_op(zr), S)]
        try:
            scal = [_nt_scaling(x, s) for x, s in zip(X, S)]
            W = [R @ R.T for R, _, _ in scal]
            M = np.zeros((mr, mr))
            for a, af, w, d in zip(A, Aflat, W, dims):
                waw = np.matmul(np.matmul(w, a), w)
                M += af @ waw.reshape(mr, d * d).T
            M = 0.5 * (M + M.T)
            schur = _Schur(M, cfg.kkt_regularization)
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
            status = Status.NUMERICAL_TROUBLE
            break
        WRdW = [w @ r @ w for w, r in zip(W, Rd)]

        def direction(K):
            Q = []
            for (R, _, lam), k in zip(scal, K):
                Q.append(R @ (2.0 * k / (lam[:, None] + lam[None, :])) @ R.T)
            dz = schur.solve(rp - A_op([q - wr for q, wr in zip(Q, WRdW)]))
            dS = [r - a for r, a in zip(Rd, AT_op(dz))]
            dX = [q - w @ ds @ w for q, w, ds in zip(Q, W, dS)]
            return [0.5 * (d + d.T) for d in dX], dz, [0.5 * (d + d.T) for d in dS]

        def scaled(dX, dS):
            out = []
            for (R, Rinv, lam), dx, ds in zip(scal, dX, dS):
                dxt = Rinv @ dx @ Rinv.T
                dst = R.T @ ds @ R
                out.append((0.5 * (dxt + dxt.T), 0.5 * (dst + dst.T)))
            return out

        def steps(sc):
            ap = min(_max_step(lam, dxt) for (_, _, lam), (dxt, _) in zip(scal, sc))
            ad = min(_max_step(lam, dst) for (_, _, lam), (_, dst) in zip(scal, sc))
            return ap, ad

        try:
            dXa, dza, dSa = direction([-np.diag(lam ** 2) for _, _, lam in scal])
            sca = scaled(dXa, dSa)
            ap, ad = steps(sca)
            ap, ad = min(1.0, ap), min(1.0, ad)
            mu_aff = sum(np.vdot(x + ap * dx, s + ad * ds) for x, dx, s, ds in zip(X, dXa, S, dSa)) / ntot
            sigma = float(np.clip(mu_aff / mu, 0.0, 1.0) ** 3)
            K = []
            for (_, _, lam), (dxt, dst) in zip(scal, sca):
                prod = dxt @ dst
                K.append(sigma * mu * np.eye(lam.shape[0]) - np.diag(lam ** 2) - 0.5 * (prod + prod.T))
            dX, dz, dS = direction(K)
            ap, ad = steps(scaled(dX, dS))
        except (np.linalg.LinAlgError, sla.LinAlgError):
            status = Status.NUMERICAL_TROUBLE
            break
        ap = min(1.0, cfg.step_fraction * ap)
        ad = min(1.0, cfg.step_fraction * ad)
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < 1e-12:
            status = Status.NUMERICAL_TROUBLE
            break
        X = [0.5 * ((x + ap * dx) + (x + ap * dx).T) for x, dx in zip(X, dX)]
        S = [0.5 * ((s + ad * ds) + (s + ad * ds).T) for s, ds in zip(S, dS)]
        zr = zr + ad * dz

    if status is Status.INFEASIBLE_SUSPECTED:
        return snapshot(status, res, it)
    sol = best[1]
    sol.iterations = it
    sol.history = history
    r = sol.residuals
    if r.primal <= 10 * cfg.tol_feas and r.dual <= 10 * cfg.tol_feas:
        sol.status = Status.OPTIMAL if r.gap <= cfg.tol_gap else Status.FEASIBLE
    else:
        sol.status = status
    return sol


class _Schur:
    """Cholesky of the Schur complement with diagonal scaling; LU fallback when indefinite."""

    def __init__(self, M: np.ndarray, reg: float):
        d = np.sqrt(np.maximum(np.diag(M), 1e-300))
        self.d = d
        self.M = M
        Ms = M / d[:, None] / d[None, :]
        Ms[np.diag_indices_from(Ms)] += reg
        try:
            self.fac = ("chol", sla.cho_factor(Ms, lower=True))
        except sla.LinAlgError:
            self.fac = ("lu", sla.lu_factor(Ms))

    def _solve(self, r):
        kind, f = self.fac
        x = sla.cho_solve(f, r / self.d) if kind == "chol" else sla.lu_solve(f, r / self.d)
        return x / self.d

    def solve(self, r: np.ndarray) -> np.ndarray:
        x = self._solve(r)
        for _ in range(2):  # iterative refinement against the unregularized matrix
            x = x + self._solve(r - self.M @ x)
        return x
