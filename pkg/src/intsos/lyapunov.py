"""Weighted-L2 Lyapunov certificates for linear PDEs ``u_t = Σ_k A_k(x) ∂^k u`` on [0, 1].

With ``V(u) = ½∫ uᵀP(x)u dx`` two integral inequalities are certified together:

* positivity ``∫ uᵀ(½P - εI)u >= 0``, over the order-0 jet;
* decay ``∫ -uᵀP𝒜u - (λ/2)uᵀPu - εuᵀu >= 0``, over the order-d_A jet.

A single ε serves both and is maximized; the run is certified when the optimum
clears ``eps_floor`` and the independent checker accepts the certificate.
The weight is normalized by ``∫ tr P = n`` so that ε is scale-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .certify import Certificate, CertReport, check_certificate
from .jetspace import JetSpec
from .polycore import Basis, PolyMatrix, basis_values, chebyshev_points_01, gauss_legendre_01
from .problems import BASIS, IntegralConstraint, PipelineProblem, Program, polymatrix_text
from .reduction import AffinePolyMatrix, DecisionVar, LinearConstraint, Role
from .sdpsolve import SolverConfig, Status

MAX_ORDER = 2
NORM_POINTS = 257
EPS = "eps"


def _order0_slots(jet: JetSpec) -> list[int]:
    return [jet.index(i, 0) for i in range(jet.n)]


def weight_template(n: int, deg_P: int) -> AffinePolyMatrix:
    """Symmetric n×n P(x) with unknown Chebyshev coefficients ``P[i,j]_k``."""
    return AffinePolyMatrix.sym_matrix_var("P", n, deg_P, BASIS)


def build_positivity_program(P: AffinePolyMatrix, eps: AffinePolyMatrix | float) -> AffinePolyMatrix:
    """``½P(x) - ε I`` as a form over v_0 = u."""
    n = P.dim
    return P.scale(0.5) - _eps_block(eps, n, P.basis)


def _eps_block(eps, n: int, basis: Basis) -> AffinePolyMatrix:
    if isinstance(eps, AffinePolyMatrix):
        return eps.kron(np.eye(n))
    return AffinePolyMatrix(float(eps) * np.eye(n)[:, :, None], {}, basis)


def build_derivative_program(A: Sequence[PolyMatrix], P: AffinePolyMatrix, eps: AffinePolyMatrix | float,
                             rate: float = 0.0) -> tuple[AffinePolyMatrix, JetSpec]:
    """``-uᵀP𝒜u - (λ/2)uᵀPu - ε uᵀu`` as a symmetric form over v_θ, θ = max(d_A, 1)."""
    d_A = len(A) - 1
    if d_A > MAX_ORDER:
        raise ValueError(f"derivative order {d_A} unsupported")
    n = P.dim
    jet = JetSpec(n, max(d_A, 1))
    L = jet.length
    rows0 = _order0_slots(jet)
    F = AffinePolyMatrix(np.zeros((L, L, 1)), {}, P.basis)
    for k, Ak in enumerate(A):
        if Ak.dim != n:
            raise ValueError(f"A_{k} is {Ak.dim}x{Ak.dim}, expected {n}x{n}")
        if not np.any(Ak.coeffs):
            continue
        cols = [jet.index(i, k) for i in range(n)]
        F = F + P.matmul(Ak).scale(-1.0).embed(rows0, cols, L)
    F = F.sym()
    if rate:
        F = F - P.scale(0.5 * rate).embed(rows0, rows0, L)
    F = F - _eps_block(eps, n, P.basis).embed(rows0, rows0, L)
    return F, jet


def _trace_weights(deg: int) -> np.ndarray:
    """∫₀¹ φ_k(x) dx for the working basis."""
    x, w = gauss_legendre_01(deg // 2 + 2)
    return w @ basis_values(deg, x, BASIS)


@dataclass(frozen=True, eq=False)
class StabilityProblem(PipelineProblem):
    """Operator coefficients ``A[k]`` multiply ``∂^k u``; ``fixed_P`` pins the weight (e.g. P = I)."""

    A: tuple[PolyMatrix, ...]
    atoms: tuple = ()
    rate: float = 0.0
    deg_P: int = 0
    deg_h: int | None = None
    deg_N: int | None = None
    names: tuple[str, ...] = ()
    fixed_P: PolyMatrix | None = None
    eps_floor: float = 1e-6

    kind = "stability"

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(self.A))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not self.A:
            raise ValueError("operator needs at least one coefficient")
        if len(self.A) - 1 > MAX_ORDER:
            raise ValueError(f"derivative order {len(self.A) - 1} unsupported")
        if self.rate < 0:
            raise ValueError("decay rate must be nonnegative")
        if self.deg_P < 0:
            raise ValueError("deg_P must be nonnegative")
        if self.fixed_P is not None and self.fixed_P.dim != self.n:
            raise ValueError("fixed weight has the wrong dimension")
        object.__setattr__(self, "names", tuple(self.names) or JetSpec(self.n, 0).names)

    @property
    def n(self) -> int:
        return self.A[0].dim

    @property
    def theta(self) -> int:
        return max(len(self.A) - 1, 1)

    @property
    def floor(self) -> float:
        """ε floor scaled by the largest operator coefficient."""
        scale = max([1.0] + [float(np.max(np.abs(Ak.to_basis(Basis.MONOMIAL).coeffs))) for Ak in self.A])
        return self.eps_floor * scale

    def canonical(self) -> str:
        lines = ["kind=stability", f"vars={' '.join(self.names)}"]
        lines += [f"A{k}={polymatrix_text(Ak)}" for k, Ak in enumerate(self.A)]
        lines += ["boundary=" + ";".join(sorted(str(a) for a in self.atoms)),
                  f"rate={format(float(self.rate), '.17g')}", f"deg_p={self.deg_P}",
                  f"deg_h={self.deg_h}", f"deg_n={self.deg_N}",
                  f"fixed_p={polymatrix_text(self.fixed_P) if self.fixed_P is not None else None}",
                  f"eps_floor={format(float(self.eps_floor), '.17g')}"]
        return "\n".join(lines) + "\n"

    def weight(self) -> AffinePolyMatrix:
        if self.fixed_P is not None:
            return AffinePolyMatrix.from_polymatrix(self.fixed_P.to_basis(BASIS))
        return weight_template(self.n, self.deg_P)

    def build(self) -> Program:
        P = self.weight()
        eps = AffinePolyMatrix.scalar_var(EPS, BASIS)
        pos = IntegralConstraint("positivity", build_positivity_program(P, eps), JetSpec(self.n, 0, self.names))
        F_der, jet = build_derivative_program(self.A, P, eps, self.rate)
        jet = JetSpec(self.n, jet.theta, self.names)
        der = IntegralConstraint("derivative", F_der, jet, self.atoms, self.deg_h, self.deg_N)
        linear = []
        if self.fixed_P is None:
            w = _trace_weights(self.deg_P)
            coeffs = tuple((f"P[{i},{i}]_{k}", float(w[k])) for i in range(self.n) for k in range(self.deg_P + 1)
                           if abs(w[k]) > 0)
            linear.append(LinearConstraint(coeffs, -float(self.n), "==", "normalization ∫ tr P = n"))
        variables = [DecisionVar(v, Role.WEIGHT) for v in P.variables] + [DecisionVar(EPS, Role.SCALAR)]
        return Program([pos, der], variables, linear, {EPS: -1.0})

    def weight_value(self, params) -> PolyMatrix:
        return self.weight().evaluate({v: params.get(v, 0.0) for v in self.weight().variables})

    def weights(self, params):
        P = self.weight_value(params)
        return {f"P[{i},{j}]": P.entry(i, j) for i in range(self.n) for j in range(i, self.n)}

    def sign_conditions(self, params):
        return [("eps - eps_floor", params.get(EPS, 0.0) - self.floor)]


# ---------------------------------------------------------------------------

def norm_bounds(P: PolyMatrix, points: int = NORM_POINTS) -> tuple[float | None, float]:
    """Sampled extremal eigenvalues of P on [0, 1], widened by a Lipschitz margin.

    The lower bound is None when it is not positive after the margin.
    """
    if not P.allclose(P.transpose(), atol=1e-12):
        raise ValueError("norm_bounds needs a symmetric P")
    xs = chebyshev_points_01(points)
    eig = np.linalg.eigvalsh(P(xs))
    dP = P.deriv()(xs)
    lip = float(np.max(np.linalg.norm(dP, ord=2, axis=(1, 2)))) if P.degree > 0 else 0.0
    margin = lip * float(np.max(np.diff(xs)))
    lo = float(eig.min()) - margin
    hi = float(eig.max()) + margin
    return (lo if lo > 0 else None), hi


@dataclass(frozen=True)
class ExpBound:
    c1: float
    c2: float
    c3: float
    rate: float
    prefactor: float


def exponential_bound(lam_m: float, lam_M: float, eps2: float) -> ExpBound:
    """Constants for ``‖u(t)‖² <= (c₂/c₁)‖u(t₀)‖² exp(-(c₃/c₂)(t - t₀))``."""
    if not (lam_m > 0 and lam_M > 0 and eps2 > 0):
        raise ValueError("exponential_bound needs positive λ_m, λ_M and ε₂")
    if lam_M < lam_m:
        raise ValueError("λ_M must not be below λ_m")
    c1, c2, c3 = 0.5 * lam_m, 0.5 * lam_M, float(eps2)
    return ExpBound(c1, c2, c3, c3 / c2, c2 / c1)


@dataclass
class StabilityReport:
    feasible: bool
    status: Status
    P: PolyMatrix
    eps1: float
    eps2: float
    lam_m: float | None
    lam_M: float
    bound: ExpBound | None
    decay_rate: float | None  # target rate plus c₃/c₂
    certificate: Certificate
    check: CertReport

    @property
    def numerical_trouble(self) -> bool:
        return not self.feasible and self.status in (Status.NUMERICAL_TROUBLE, Status.ITERATION_LIMIT)

    def summary(self) -> str:
        head = "certified" if self.feasible else "not certified"
        parts = [f"{head} (solver {self.status.value}, eps = {self.eps2:.6g})"]
        if self.feasible and self.bound is not None:
            b = self.bound
            parts.append(f"lambda_m = {self.lam_m:.6g}, lambda_M = {self.lam_M:.6g}")
            parts.append(f"||u(t)||^2 <= {b.prefactor:.6g} ||u(0)||^2 exp(-{self.decay_rate:.6g} t)")
        parts.append(self.check.summary())
        return "\n".join(parts)


def certify_stability(problem: StabilityProblem, config: SolverConfig | None = None,
                      tol: float = 1e-7) -> StabilityReport:
    res = problem.solve_raw(config)
    cert = problem.certificate(res, {"rate": problem.rate, "deg_p": problem.deg_P})
    check = check_certificate(problem, cert, tol)
    eps = res.params.get(EPS, 0.0)
    P = problem.weight_value(res.params)
    feasible = check.passed
    lam_m, lam_M = norm_bounds(P)
    bound = rate = None
    if feasible:
        # positivity certifies ½P - εI ⪰ 0, so 2ε is a valid lower bound too
        lam_m = max(lam_m or 0.0, 2.0 * eps)
        bound = exponential_bound(lam_m, max(lam_M, lam_m), eps)
        rate = problem.rate + bound.rate
    return StabilityReport(feasible, res.status, P, eps, eps, lam_m, lam_M, bound, rate, cert, check)


@dataclass
class Probe:
    value: float
    report: StabilityReport | None
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.report is not None and self.report.feasible


@dataclass
class BisectionResult:
    value: float | None  # largest certified parameter, None when nothing at or above lo
    probes: list[Probe] = field(default_factory=list)

    @property
    def best(self) -> Probe | None:
        ok = [p for p in self.probes if p.feasible]
        return max(ok, key=lambda p: p.value) if ok else None


def bisect_param(build: Callable[[float], StabilityProblem], lo: float, hi: float, tol: float,
                 config: SolverConfig | None = None, check_tol: float = 1e-7) -> BisectionResult:
    """Largest certified parameter in [lo, hi] assuming the certified set is an interval from lo.

    When the problem cannot be built at ``lo`` itself (e.g. 1/R at R = 0) the
    interval is read as open at lo: bisection proceeds on the same grid and
    the result is None when no probe above lo is certified.
    """
    if not hi > lo or tol <= 0:
        raise ValueError("need lo < hi and tol > 0")
    out = BisectionResult(None)

    def probe(v: float) -> Probe:
        try:
            p = Probe(v, certify_stability(build(v), config, check_tol))
        except (ZeroDivisionError, FloatingPointError) as e:
            p = Probe(v, None, str(e) or type(e).__name__)
        out.probes.append(p)
        return p

    first = probe(lo)
    open_lo = first.report is None
    if not open_lo and not first.feasible:
        return out
    if probe(hi).feasible:
        out.value = hi
        return out
    found = not open_lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid).feasible:
            lo, found = mid, True
        else:
            hi = mid
    out.value = lo if found else None
    return out
