"""The shared solve pipeline plus the two non-PDE problem kinds.

A problem lists one or more integral inequalities whose integrands are affine in
decision variables.  :func:`solve_program` attaches FTC multipliers, localizes
each T(x) on [0, 1], solves one SDP and packs everything the checker needs into
a :class:`~intsos.certify.Certificate`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .certify import Certificate, CheckItem, ConstraintCertificate, CertReport, check_certificate, fingerprint_text
from .jetspace import JetSpec
from .polycore import Basis, Polynomial, PolyMatrix
from .reduction import AffinePolyMatrix, DecisionVar, LinearConstraint, MultiplierTemplate, Role, build_T
from .sdpsolve import SdpSolution, SolverConfig, Status, sdp_solve
from .sosprog import SosConstraint, assemble_sdp, sos_localize

BASIS = Basis.CHEBYSHEV


def _num(x: float) -> str:
    return format(float(x), ".17g")


def polymatrix_text(M: PolyMatrix) -> str:
    """Canonical text of a numeric polynomial matrix (monomial coefficients)."""
    c = M.to_basis(Basis.MONOMIAL).coeffs
    return ";".join(",".join(" ".join(_num(v) for v in c[i, j]) for j in range(M.dim)) for i in range(M.dim))


@dataclass
class IntegralConstraint:
    """``∫ v_θᵀ F(x) v_θ dx >= 0`` under homogeneous boundary atoms."""

    name: str
    F: AffinePolyMatrix
    jet: JetSpec
    atoms: tuple = ()
    deg_h: int | None = None
    deg_N: int | None = None

    def degrees(self) -> tuple[int, int]:
        """Resolved (deg_h, deg_N); deg_h is -1 when no multipliers are needed."""
        deg_F = self.F.degree
        if self.jet.theta == 0:
            deg_h = -1
            deg_N = deg_F if self.deg_N is None else self.deg_N
        else:
            deg_h = deg_F + 2 if self.deg_h is None else self.deg_h
            deg_N = deg_h + 2 if self.deg_N is None else self.deg_N
        return deg_h, deg_N


@dataclass
class Program:
    constraints: list[IntegralConstraint]
    variables: list[DecisionVar] = field(default_factory=list)
    linear: list[LinearConstraint] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)  # minimized


@dataclass
class ProgramResult:
    status: Status
    solution: SdpSolution
    values: dict[str, float]
    params: dict[str, float]
    records: list[ConstraintCertificate]

    @property
    def ok(self) -> bool:
        return self.solution.ok


def solve_program(program: Program, config: SolverConfig | None = None) -> ProgramResult:
    sos: list[SosConstraint] = []
    templates: list[MultiplierTemplate | None] = []
    endpoint_rows: list[LinearConstraint] = []
    for con in program.constraints:
        deg_h, deg_N = con.degrees()
        if con.jet.theta >= 1:
            tmpl = MultiplierTemplate(con.jet, deg_h, tuple(con.atoms), BASIS, prefix=f"{con.name}.h")
            T, rows = build_T(con.F, tmpl)
            endpoint_rows += rows
        else:
            tmpl, T = None, con.F.to_basis(BASIS)
        templates.append(tmpl)
        sos.append(sos_localize(T, deg_N, BASIS, con.name))

    assembled = assemble_sdp(sos, endpoint_rows + list(program.linear), program.objective, program.variables)
    sol = sdp_solve(assembled.sdp, config)
    values, grams = assembled.decode(sol)

    records = []
    for con, tmpl, sc, g in zip(program.constraints, templates, sos, grams):
        mults = []
        if tmpl is not None:
            mults = [p.padded(tmpl.deg_h) for p in tmpl.polynomials(values)]
        main = sc.pad(g["main"], sc.d) if g["main"].size else np.zeros((sc.target.dim * (sc.d + 1),) * 2)
        loc = sc.pad(g["loc"], sc.dN) if g["loc"].size else np.zeros((sc.target.dim * (sc.dN + 1),) * 2)
        records.append(ConstraintCertificate(con.name, con.jet.theta, BASIS, sc.d, sc.dN, mults, main, loc))

    names = {v.id for v in program.variables}
    for con in program.constraints:
        names.update(con.F.variables)
    params = {v: values.get(v, 0.0) for v in sorted(names)}
    return ProgramResult(sol.status, sol, values, params, records)


class PipelineProblem:
    """Base for problems solved through :func:`solve_program`.

    Subclasses implement ``canonical()`` and ``build()``; ``check_items`` then
    re-evaluates the integrands at a certificate's parameter values.
    """

    kind = "generic"

    def canonical(self) -> str:
        raise NotImplementedError

    def build(self) -> Program:
        raise NotImplementedError

    def fingerprint(self) -> str:
        return fingerprint_text(self.canonical())

    @functools.cached_property
    def program(self) -> Program:
        return self.build()

    def check_items(self, params: Mapping[str, float]) -> list[CheckItem]:
        items = []
        for con in self.program.constraints:
            assignment = {v: params.get(v, 0.0) for v in con.F.variables}
            items.append(CheckItem(con.name, con.jet, tuple(con.atoms), con.F.evaluate(assignment)))
        return items

    def weights(self, params: Mapping[str, float]) -> dict[str, Polynomial]:
        return {}

    def solve_raw(self, config: SolverConfig | None = None) -> ProgramResult:
        return solve_program(self.program, config)

    def certificate(self, res: ProgramResult, metadata: Mapping | None = None) -> Certificate:
        meta = {
            "solver_status": res.status.value,
            "solver_iterations": res.solution.iterations,
            "residuals": {"primal": res.solution.residuals.primal, "dual": res.solution.residuals.dual,
                          "gap": res.solution.residuals.gap},
            "degrees": {r.name: {"deg_h": len(r.multipliers[0]) - 1 if r.multipliers else -1,
                                 "d": r.d, "dN": r.dN} for r in res.records},
        }
        meta.update(metadata or {})
        return Certificate(self.fingerprint(), self.kind, dict(res.params), self.weights(res.params),
                           list(res.records), meta)


# ---------------------------------------------------------------------------

@dataclass
class SolveOutcome:
    value: float | None
    status: Status
    certificate: Certificate
    report: CertReport

    @property
    def certified(self) -> bool:
        return self.report.passed


class PoincareProblem(PipelineProblem):
    """Smallest κ with ∫ u² <= κ ∫ u_x² on [0, 1] for u(0) = u(1) = 0."""

    kind = "poincare"

    def __init__(self, deg_h: int = 7, deg_N: int | None = None):
        if deg_h < 1:
            raise ValueError("deg_h must be at least 1")
        self.deg_h = deg_h
        self.deg_N = deg_h + 2 if deg_N is None else deg_N

    def canonical(self) -> str:
        return f"kind=poincare\ndeg_h={self.deg_h}\ndeg_n={self.deg_N}\n"

    def build(self) -> Program:
        jet = JetSpec(1, 1, ("u",))
        F = AffinePolyMatrix(np.diag([-1.0, 0.0])[:, :, None], {"kappa": np.diag([0.0, 1.0])[:, :, None]}, BASIS)
        atoms = tuple(_dirichlet(jet.names))
        con = IntegralConstraint("poincare", F, jet, atoms, self.deg_h, self.deg_N)
        return Program([con], [DecisionVar("kappa", Role.SCALAR)], [], {"kappa": 1.0})

    def solve(self, config: SolverConfig | None = None, tol: float = 1e-7) -> SolveOutcome:
        res = self.solve_raw(config)
        cert = self.certificate(res)
        return SolveOutcome(res.params["kappa"], res.status, cert, check_certificate(self, cert, tol))


def _dirichlet(names: Sequence[str]):
    from .boundary import Pin

    return [Pin(i, 0, e) for i in range(len(names)) for e in (0, 1)]


class IntegralInequality(PipelineProblem):
    """Verify ``∫ v_θᵀ F(x) v_θ dx >= 0`` for a fixed numeric F.

    A margin t <= 1 is maximized with ``F - t·E`` certified, E the identity on
    the order-0 slots; the inequality is certified when t >= 0.
    """

    kind = "inequality"

    def __init__(self, F: PolyMatrix, jet: JetSpec, atoms: Sequence = (), deg_h: int | None = None,
                 deg_N: int | None = None):
        if F.dim != jet.length:
            raise ValueError(f"integrand is {F.dim}x{F.dim} but the jet has {jet.length} coordinates")
        self.F = F
        self.jet = jet
        self.atoms = tuple(atoms)
        self.deg_h = deg_h
        self.deg_N = deg_N

    def canonical(self) -> str:
        return "\n".join([
            "kind=inequality",
            f"vars={' '.join(self.jet.names)}",
            f"theta={self.jet.theta}",
            f"integrand={polymatrix_text(self.F)}",
            "boundary=" + ";".join(sorted(str(a) for a in self.atoms)),
            f"deg_h={self.deg_h}",
            f"deg_n={self.deg_N}",
        ]) + "\n"

    def build(self) -> Program:
        L = self.jet.length
        E = np.zeros((L, L, 1))
        for i in range(self.jet.n):
            k = self.jet.index(i, 0)
            E[k, k, 0] = -1.0
        F = AffinePolyMatrix.from_polymatrix(self.F.to_basis(BASIS)) + AffinePolyMatrix(
            np.zeros((L, L, 1)), {"margin": E}, BASIS)
        con = IntegralConstraint("inequality", F, self.jet, self.atoms, self.deg_h, self.deg_N)
        cap = LinearConstraint((("margin", 1.0),), -1.0, "<=", "margin <= 1")
        return Program([con], [DecisionVar("margin", Role.SCALAR)], [cap], {"margin": -1.0})

    def sign_conditions(self, params: Mapping[str, float]):
        return [("margin", params.get("margin", 0.0))]

    def solve(self, config: SolverConfig | None = None, tol: float = 1e-7) -> SolveOutcome:
        res = self.solve_raw(config)
        cert = self.certificate(res)
        return SolveOutcome(res.params["margin"], res.status, cert, check_certificate(self, cert, tol))
