"""Homogeneous boundary conditions and the endpoint constraints they induce on FTC multipliers.

Conditions act on the stacked boundary jet ``w = [v_{theta-1}(1); v_{theta-1}(0)]``
through ``B w = 0``.  For every degree-2 monomial ``q_k`` of ``v_{theta-1}`` the
boundary term contributed by a multiplier ``h_k`` is
``h_k(1) q_k(w_1) - h_k(0) q_k(w_0)``; the constraints emitted here keep the sum
of those terms nonpositive on ``ker(B)``, one monomial at a time.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .jetspace import JetSpec, SquaredBasis

VANISH_TOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class Pin:
    """``d^order u_var (end) = 0``."""

    var: int
    order: int
    end: int

    def __str__(self):
        return f"pin var={self.var} order={self.order} end={self.end}"


@dataclass(frozen=True)
class Link:
    """``d^order u_var (1) = d^order u_var (0)``."""

    var: int
    order: int

    def __str__(self):
        return f"link var={self.var} order={self.order}"


_PIN = re.compile(r"^\s*([A-Za-z]\w*?)(_x+)?\s*\(\s*([01])\s*\)\s*=\s*0\s*$")
_LINK = re.compile(r"^\s*([A-Za-z]\w*?)(_x+)?\s*\(\s*([01])\s*\)\s*=\s*\1(_x+)?\s*\(\s*([01])\s*\)\s*$")
_PERIODIC = re.compile(r"^\s*periodic\s+([A-Za-z]\w*)\s*$")


def parse_atoms(lines: Iterable[str], names: Sequence[str], theta: int) -> list[Pin | Link]:
    """Parse ``u(0)=0``, ``u_x(1)=0``, ``u_x(1)=u_x(0)`` and ``periodic u`` lines.

    ``theta`` is the derivative order of the integrand jet; boundary atoms may
    involve derivatives up to ``theta - 1``.
    """
    atoms: list[Pin | Link] = []

    def var_index(name: str) -> int:
        if name not in names:
            raise ValueError(f"unknown variable {name!r} in boundary condition")
        return list(names).index(name)

    def order_of(suffix: str | None) -> int:
        k = len(suffix) - 1 if suffix else 0
        if k > theta - 1:
            raise ValueError(f"boundary derivative order {k} must be below theta={theta}")
        return k

    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _PERIODIC.match(line):
            v = var_index(m.group(1))
            atoms.extend(Link(v, k) for k in range(theta))
        elif m := _LINK.match(line):
            if (m.group(2) or "") != (m.group(4) or "") or m.group(3) == m.group(5):
                raise ValueError(f"unsupported boundary link {line!r}")
            atoms.append(Link(var_index(m.group(1)), order_of(m.group(2))))
        elif m := _PIN.match(line):
            atoms.append(Pin(var_index(m.group(1)), order_of(m.group(2)), int(m.group(3))))
        else:
            raise ValueError(f"cannot parse boundary condition {line!r}")
    return atoms


@dataclass(frozen=True, eq=False)
class BoundarySpec:
    jet: JetSpec  # order theta - 1
    B: np.ndarray
    nullspace_basis: np.ndarray

    @property
    def width(self) -> int:
        return 2 * self.jet.length

    def column(self, var: int, order: int, end: int) -> int:
        i = self.jet.index(var, order)
        return i if end == 1 else self.jet.length + i


def _nullspace(B: np.ndarray, width: int) -> np.ndarray:
    if B.shape[0] == 0 or not np.any(B):
        return np.eye(width)
    _, s, Vt = np.linalg.svd(B)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    return Vt[rank:].T.copy()


def boundary_from_matrix(jet: JetSpec, B) -> BoundarySpec:
    B = np.atleast_2d(np.asarray(B, dtype=float)).reshape(-1, 2 * jet.length)
    return BoundarySpec(jet, B, _nullspace(B, 2 * jet.length))


def boundary_matrix(atoms: Sequence[Pin | Link], n: int, theta: int, names: Sequence[str] = ()) -> BoundarySpec:
    """Build B over ``[v_{theta-1}(1); v_{theta-1}(0)]``, one row per atom.

    Rows are put in canonical order (by leading column) so that the matrix does
    not depend on the order in which conditions were written.
    """
    jet = JetSpec(n, theta - 1, tuple(names))
    width = 2 * jet.length
    rows = []
    for a in atoms:
        if not 0 <= a.var < n:
            raise ValueError(f"unknown variable index {a.var}")
        if a.order > theta - 1:
            raise ValueError(f"boundary derivative order {a.order} must be below theta={theta}")
        r = np.zeros(width)
        if isinstance(a, Pin):
            r[jet.index(a.var, a.order) + (0 if a.end == 1 else jet.length)] = 1.0
        else:
            r[jet.index(a.var, a.order)] = 1.0
            r[jet.length + jet.index(a.var, a.order)] = -1.0
        rows.append(r)
    rows.sort(key=lambda r: (int(np.flatnonzero(r)[0]), tuple(-r)))
    B = np.array(rows) if rows else np.zeros((0, width))
    return BoundarySpec(jet, B, _nullspace(B, width))


class Tag(str, enum.Enum):
    VANISHES = "vanishes"
    SQUARE = "square"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class EndpointClassification:
    basis: SquaredBasis
    tags: tuple[tuple[Tag, Tag], ...]  # per pair: (tag at x=0, tag at x=1)
    linked: tuple[bool, ...]

    def tag(self, k: int, end: int) -> Tag:
        return self.tags[k][end]


def _endpoint_form(spec: BoundarySpec, i: int, j: int, end: int) -> np.ndarray:
    E = np.zeros((spec.width, spec.width))
    off = 0 if end == 1 else spec.jet.length
    E[off + i, off + j] += 0.5
    E[off + j, off + i] += 0.5
    return E


def boundary_classify(spec: BoundarySpec) -> EndpointClassification:
    sb = SquaredBasis(spec.jet)
    Z = spec.nullspace_basis
    tags, linked = [], []
    for i, j in sb.pairs:
        restricted = {e: Z.T @ _endpoint_form(spec, i, j, e) @ Z for e in (0, 1)}
        pair_tags = []
        for e in (0, 1):
            if np.max(np.abs(restricted[e]), initial=0.0) <= VANISH_TOL:
                pair_tags.append(Tag.VANISHES)
            elif i == j:
                pair_tags.append(Tag.SQUARE)
            else:
                pair_tags.append(Tag.INDEFINITE)
        tags.append(tuple(pair_tags))
        linked.append(bool(np.max(np.abs(restricted[1] - restricted[0]), initial=0.0) <= VANISH_TOL))
    return EndpointClassification(sb, tuple(tags), tuple(linked))


@dataclass(frozen=True)
class EndpointConstraint:
    """``sum coef * h_k(end)`` compared with 0; ``sense`` is ``"<="`` or ``"=="``."""

    terms: tuple[tuple[int, int, float], ...]  # (pair index k, endpoint, coefficient)
    sense: str

    def slack(self, endpoint_values: np.ndarray) -> float:
        """Signed slack (>= 0 when satisfied; for equalities minus the violation)."""
        v = sum(c * endpoint_values[k, e] for k, e, c in self.terms)
        return -v if self.sense == "<=" else -abs(v)

    def __str__(self):
        lhs = " + ".join(f"{c:g}*h{k + 1}({e})" for k, e, c in self.terms)
        return f"{lhs} {self.sense} 0"


@dataclass(frozen=True)
class MultiplierConstraints:
    constraints: tuple[EndpointConstraint, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)

    def satisfied(self, endpoint_values: np.ndarray, tol: float = 0.0) -> bool:
        return all(c.slack(endpoint_values) >= -tol for c in self.constraints)


def multiplier_constraints(cls: EndpointClassification) -> MultiplierConstraints:
    out: list[EndpointConstraint] = []
    for k, ((t0, t1), linked) in enumerate(zip(cls.tags, cls.linked)):
        if t0 is Tag.VANISHES and t1 is Tag.VANISHES:
            continue
        if linked:
            # q_k(1) = q_k(0) on ker(B): only h_k(1) - h_k(0) matters
            sense = "<=" if t1 is Tag.SQUARE else "=="
            out.append(EndpointConstraint(((k, 1, 1.0), (k, 0, -1.0)), sense))
            continue
        if t1 is Tag.SQUARE:
            out.append(EndpointConstraint(((k, 1, 1.0),), "<="))
        elif t1 is Tag.INDEFINITE:
            out.append(EndpointConstraint(((k, 1, 1.0),), "=="))
        if t0 is Tag.SQUARE:
            out.append(EndpointConstraint(((k, 0, -1.0),), "<="))
        elif t0 is Tag.INDEFINITE:
            out.append(EndpointConstraint(((k, 0, 1.0),), "=="))
    return MultiplierConstraints(tuple(out))


def boundary_term(h_end: np.ndarray, spec: BoundarySpec, w: np.ndarray) -> float:
    """``sum_k h_k(1) q_k(w_1) - h_k(0) q_k(w_0)`` for a stacked boundary jet w."""
    sb = SquaredBasis(spec.jet)
    L = spec.jet.length
    w1, w0 = w[:L], w[L:]
    q1, q0 = sb.evaluate(w1), sb.evaluate(w0)
    return float(h_end[:, 1] @ q1 - h_end[:, 0] @ q0)
