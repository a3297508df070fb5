"""Command-line front end and the problem-file format.

Problem files are line oriented with ``#`` comments::

    [problem]
    kind = stability          # stability | inequality | poincare
    vars = u v
    domain = 0 1

    [dynamics]
    u_t = (1/R)*u_xx + 1*u + 1.5*v
    v_t = (1/R)*v_xx + 5*u + 0.2*v

    [integrand]               # inequality kind: terms over jet monomials
    (-1)*u^2 + 0.2*u_x^2

    [boundary]
    u(0)=0
    u(1)=0

    [options]
    deg_p = 4
    sweep R 0 3 0.05

Exit status: 0 certified/pass, 1 not certified, 2 input error, 3 numerical trouble.
"""

from __future__ import annotations

import argparse
import csv
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .boundary import parse_atoms
from .certify import Certificate, check_certificate
from .jetspace import JetSpec
from .lyapunov import StabilityProblem, bisect_param, certify_stability
from .polycore import Basis, PolyMatrix
from .problems import IntegralInequality, PoincareProblem
from .sdpsolve import SolverConfig, Status

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
MAX_ORDER = 2
SAMPLE_POINTS = 101


class ProblemError(ValueError):
    """Malformed problem file; carries a line (and column) when known."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {col}" if col is not None else "") + ": "
        super().__init__(where + msg)


# ---------------------------------------------------------------------------
# coefficient expressions

_NUM = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?"
_NAME = r"[A-Za-z]\w*"


@dataclass(frozen=True)
class Coefficient:
    """``Σ c · x^k · p^e`` where p is the (optional) named parameter and e ∈ {-1, 0, 1}."""

    terms: tuple[tuple[float, int, int], ...]

    @staticmethod
    def make(terms) -> "Coefficient":
        acc: dict[tuple[int, int], float] = {}
        for c, k, e in terms:
            acc[k, e] = acc.get((k, e), 0.0) + float(c)
        return Coefficient(tuple(sorted(((c, k, e) for (k, e), c in acc.items() if c != 0.0),
                                        key=lambda t: (t[2], t[1]))))

    @property
    def uses_param(self) -> bool:
        return any(e for _, _, e in self.terms)

    def coeffs(self, param: float | None = None) -> np.ndarray:
        deg = max([k for _, k, _ in self.terms] + [0])
        out = np.zeros(deg + 1)
        for c, k, e in self.terms:
            if e and param is None:
                raise ValueError("coefficient needs a parameter value")
            out[k] += c * (param ** e if e else 1.0)
        return out

    def text(self, param: str | None) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, k, e in self.terms:
            s = format(c, ".17g")
            if k:
                s += "*x" + (f"^{k}" if k > 1 else "")
            if e == 1:
                s += f"*{param}"
            elif e == -1:
                s += f"/{param}"
            parts.append(s)
        return "(" + " + ".join(parts) + ")"


def _split_top(expr: str) -> list[tuple[int, str]]:
    """Split at top-level + and - into (sign, piece) pairs."""
    pieces: list[tuple[int, str]] = []
    depth, cur, sign = 0, "", 1
    for ch in expr:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ValueError("unbalanced parenthesis")
        if depth == 0 and ch in "+-" and not re.search(r"\d[eE]$", cur):
            if cur.strip():
                pieces.append((sign, cur.strip()))
                cur, sign = "", (1 if ch == "+" else -1)
            else:
                sign *= -1 if ch == "-" else 1
            continue
        cur += ch
    if depth != 0:
        raise ValueError("unbalanced parenthesis")
    if not cur.strip():
        raise ValueError("expression ends with an operator" if pieces else "empty expression")
    pieces.append((sign, cur.strip()))
    return pieces


def parse_coefficient(text: str, params: set[str]) -> Coefficient:
    """Parse a scalar, or a parenthesized sum of ``c*x^k``, ``c*NAME`` and ``c/NAME`` terms."""
    s = text.strip()
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    terms = []
    for sign, piece in _split_top(s):
        c, k, e = float(sign), 0, 0
        body, _, div = piece.partition("/")
        if div:
            div = div.strip()
            if re.fullmatch(_NUM, div):
                c /= float(div)
            elif re.fullmatch(_NAME, div) and div != "x":
                params.add(div)
                e -= 1
            else:
                raise ValueError(f"cannot divide by {div!r}")
        for f in body.split("*"):
            f = f.strip()
            if re.fullmatch(_NUM, f):
                c *= float(f)
            elif m := re.fullmatch(r"x(?:\s*\^\s*(\d+))?", f):
                k += int(m.group(1) or 1)
            elif re.fullmatch(_NAME, f):
                params.add(f)
                e += 1
            else:
                raise ValueError(f"cannot read factor {f!r}")
        if e not in (-1, 0, 1):
            raise ValueError("the parameter may appear at most once per term")
        terms.append((c, k, e))
    return Coefficient.make(terms)


# ---------------------------------------------------------------------------
# problem spec

@dataclass(frozen=True)
class DynTerm:
    coeff: Coefficient
    var: str
    order: int


@dataclass(frozen=True)
class IntegrandTerm:
    coeff: Coefficient
    left: tuple[str, int]
    right: tuple[str, int]


@dataclass(frozen=True)
class Sweep:
    name: str
    lo: float
    hi: float
    tol: float


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    variables: tuple[str, ...] = ("u",)
    domain: tuple[float, float] = (0.0, 1.0)
    dynamics: tuple[tuple[str, tuple[DynTerm, ...]], ...] = ()
    integrand: tuple[IntegrandTerm, ...] = ()
    boundary: tuple[str, ...] = ()
    deg_p: int | None = None
    deg_h: int | None = None
    deg_n: int | None = None
    rate: float = 0.0
    sweep: Sweep | None = None
    eps_floor: float | None = None
    fixed_p: str | None = None  # "identity"
    params: tuple[str, ...] = ()

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]


_OPTION_KEYS = {"deg_p", "deg_h", "deg_n", "rate", "eps_floor", "fixed_p"}
_SECTIONS = {"problem", "dynamics", "integrand", "boundary", "options"}
_KINDS = {"stability", "inequality", "poincare"}
_JET = re.compile(r"^([A-Za-z]\w*?)(_x+)?$")


def _jet_symbol(sym: str, variables: Sequence[str], lineno: int) -> tuple[str, int]:
    m = _JET.match(sym.strip())
    if not m:
        raise ProblemError(f"cannot read jet coordinate {sym!r}", lineno)
    name, suffix = m.group(1), m.group(2) or ""
    order = len(suffix) - 1 if suffix else 0
    if name not in variables:
        raise ProblemError(f"undeclared variable {name!r}", lineno)
    if order > MAX_ORDER:
        raise ProblemError(f"derivative order {order} unsupported", lineno)
    return name, order


def _number(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ProblemError(f"{what} must be a number, got {text!r}", lineno) from None


def parse_problem(text: str) -> ProblemSpec:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := re.fullmatch(r"\[(\w+)\]", line):
            current = m.group(1).lower()
            if current not in _SECTIONS:
                raise ProblemError(f"unknown section [{current}]", lineno)
            if current in sections:
                raise ProblemError(f"duplicate section [{current}]", lineno)
            sections[current] = []
            continue
        if current is None:
            raise ProblemError("content before the first section", lineno, 1)
        sections[current].append((lineno, line))

    head: dict[str, tuple[int, str]] = {}
    for lineno, line in sections.get("problem", []):
        key, eq, val = line.partition("=")
        key = key.strip()
        if not eq or key not in ("kind", "vars", "domain"):
            raise ProblemError(f"unknown key {key!r} in [problem]", lineno, 1)
        head[key] = (lineno, val.strip())
    if "kind" not in head:
        raise ProblemError("[problem] needs kind=")
    kind = head["kind"][1]
    if kind not in _KINDS:
        raise ProblemError(f"unknown kind {kind!r}", head["kind"][0])
    variables = tuple(head["vars"][1].split()) if "vars" in head else ("u",)
    if len(set(variables)) != len(variables) or not variables:
        raise ProblemError("vars must be distinct names", head.get("vars", (None,))[0])
    for v in variables:
        if not re.fullmatch(_NAME, v) or v == "x":
            raise ProblemError(f"bad variable name {v!r}", head["vars"][0])
    domain = (0.0, 1.0)
    if "domain" in head:
        lineno, val = head["domain"]
        parts = val.split()
        if len(parts) != 2:
            raise ProblemError("domain needs two endpoints", lineno)
        domain = (_number(parts[0], lineno, "domain"), _number(parts[1], lineno, "domain"))
        if not domain[1] > domain[0]:
            raise ProblemError("domain must have b > a", lineno)

    params: set[str] = set()

    dynamics = []
    seen_lhs = set()
    for lineno, line in sections.get("dynamics", []):
        lhs, eq, rhs = line.partition("=")
        m = re.fullmatch(r"([A-Za-z]\w*)_t", lhs.strip())
        if not eq or not m:
            raise ProblemError("dynamics lines read 'u_t = ...'", lineno, 1)
        var = m.group(1)
        if var not in variables:
            raise ProblemError(f"undeclared variable {var!r}", lineno)
        if var in seen_lhs:
            raise ProblemError(f"second equation for {var!r}", lineno)
        seen_lhs.add(var)
        try:
            pieces = _split_top(rhs)
        except ValueError as e:
            raise ProblemError(str(e), lineno) from None
        terms = []
        for sign, piece in pieces:
            coeff_txt, star, sym = piece.rpartition("*")
            if not star:
                coeff_txt, sym = "1", piece
            name, order = _jet_symbol(sym, variables, lineno)
            try:
                c = parse_coefficient(coeff_txt, params)
            except ValueError as e:
                raise ProblemError(str(e), lineno) from None
            terms.append(DynTerm(Coefficient.make((sign * a, k, e) for a, k, e in c.terms), name, order))
        dynamics.append((var, tuple(terms)))

    integrand = []
    for lineno, line in sections.get("integrand", []):
        try:
            pieces = _split_top(line)
        except ValueError as e:
            raise ProblemError(str(e), lineno) from None
        for sign, piece in pieces:
            factors = [f.strip() for f in re.split(r"\*(?![^()]*\))", piece)]
            syms, coeff_parts = [], []
            for f in factors:
                if m := re.fullmatch(r"([A-Za-z]\w*?(?:_x+)?)\s*\^\s*2", f):
                    s = _jet_symbol(m.group(1), variables, lineno)
                    syms += [s, s]
                elif _JET.match(f) and _JET.match(f).group(1) in variables:
                    syms.append(_jet_symbol(f, variables, lineno))
                else:
                    coeff_parts.append(f)
            if len(syms) != 2:
                raise ProblemError(f"integrand term {piece!r} is not quadratic in the jet", lineno)
            try:
                c = parse_coefficient("*".join(coeff_parts) or "1", params)
            except ValueError as e:
                raise ProblemError(str(e), lineno) from None
            a, b = sorted(syms, key=lambda s: (variables.index(s[0]), s[1]))
            integrand.append(IntegrandTerm(Coefficient.make((sign * x, k, e) for x, k, e in c.terms), a, b))

    boundary = []
    a, b = domain
    for lineno, line in sections.get("boundary", []):
        norm = re.sub(r"\(\s*([^)]*)\s*\)", lambda m: "(" + _end_label(m.group(1), a, b, lineno) + ")", line)
        norm = re.sub(r"\s+", " ", norm.replace(" =", "=").replace("= ", "=")).strip()
        try:
            parse_atoms([norm], variables, MAX_ORDER + 1)
        except ValueError as e:
            raise ProblemError(str(e), lineno) from None
        boundary.append(norm)

    opts: dict = {}
    sweep = None
    for lineno, line in sections.get("options", []):
        if line.startswith("sweep"):
            parts = line.split()
            if len(parts) != 5:
                raise ProblemError("sweep needs: sweep <name> <lo> <hi> <tol>", lineno)
            sweep = Sweep(parts[1], *(_number(p, lineno, "sweep bound") for p in parts[2:]))
            if not sweep.hi > sweep.lo or sweep.tol <= 0:
                raise ProblemError("sweep needs lo < hi and tol > 0", lineno)
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or key not in _OPTION_KEYS:
            raise ProblemError(f"unknown option {key!r}", lineno, 1)
        if key in ("deg_p", "deg_h", "deg_n"):
            if not re.fullmatch(r"\d+", val):
                raise ProblemError(f"{key} must be a nonnegative integer", lineno)
            opts[key] = int(val)
        elif key == "fixed_p":
            if val != "identity":
                raise ProblemError("fixed_p supports only 'identity'", lineno)
            opts[key] = val
        else:
            opts[key] = _number(val, lineno, key)

    if kind == "stability" and not dynamics:
        raise ProblemError("stability problems need a [dynamics] section")
    if kind == "stability" and seen_lhs != set(variables):
        raise ProblemError(f"need one equation per variable, missing {sorted(set(variables) - seen_lhs)}")
    if kind == "inequality" and not integrand:
        raise ProblemError("inequality problems need an [integrand] section")
    if len(params) > 1:
        raise ProblemError(f"at most one named parameter allowed, found {sorted(params)}")
    if sweep is not None and params and sweep.name not in params:
        raise ProblemError(f"sweep parameter {sweep.name!r} does not appear in the problem")
    order = {v: i for i, v in enumerate(variables)}
    dynamics.sort(key=lambda d: order[d[0]])
    return ProblemSpec(kind, variables, domain, tuple(dynamics), tuple(integrand), tuple(boundary),
                       opts.get("deg_p"), opts.get("deg_h"), opts.get("deg_n"), float(opts.get("rate", 0.0)),
                       sweep, opts.get("eps_floor"), opts.get("fixed_p"), tuple(sorted(params)))


def _end_label(txt: str, a: float, b: float, lineno: int) -> str:
    try:
        v = float(txt)
    except ValueError:
        raise ProblemError(f"boundary endpoint {txt!r} is not a number", lineno) from None
    if v == a:
        return "0"
    if v == b:
        return "1"
    raise ProblemError(f"boundary endpoint {txt} is not an end of the domain [{a:g}, {b:g}]", lineno)


def serialize_problem(spec: ProblemSpec) -> str:
    """Canonical text; ``parse_problem(serialize_problem(s)) == s``."""
    p = spec.params[0] if spec.params else None
    g = lambda v: format(float(v), ".17g")
    jet = lambda s: s[0] + ("_" + "x" * s[1] if s[1] else "")
    out = ["[problem]", f"kind = {spec.kind}", f"vars = {' '.join(spec.variables)}",
           f"domain = {g(spec.domain[0])} {g(spec.domain[1])}"]
    if spec.dynamics:
        out.append("[dynamics]")
        for var, terms in spec.dynamics:
            out.append(f"{var}_t = " + " + ".join(f"{t.coeff.text(p)}*{jet((t.var, t.order))}" for t in terms))
    if spec.integrand:
        out.append("[integrand]")
        out += [f"{t.coeff.text(p)}*{jet(t.left)}*{jet(t.right)}" for t in spec.integrand]
    if spec.boundary:
        out.append("[boundary]")
        ends = {"0": g(spec.domain[0]), "1": g(spec.domain[1])}
        out += [re.sub(r"\(([01])\)", lambda m: f"({ends[m.group(1)]})", line) for line in spec.boundary]
    out.append("[options]")
    for key in ("deg_p", "deg_h", "deg_n"):
        if getattr(spec, key) is not None:
            out.append(f"{key} = {getattr(spec, key)}")
    out.append(f"rate = {g(spec.rate)}")
    if spec.eps_floor is not None:
        out.append(f"eps_floor = {g(spec.eps_floor)}")
    if spec.fixed_p:
        out.append(f"fixed_p = {spec.fixed_p}")
    if spec.sweep:
        s = spec.sweep
        out.append(f"sweep {s.name} {g(s.lo)} {g(s.hi)} {g(s.tol)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# spec -> problem objects

def _rescaled(coeffs: np.ndarray, a: float, ell: float) -> np.ndarray:
    """Monomial coefficients of c(a + ell*ξ) in ξ."""
    return np.polynomial.Polynomial(coeffs)(np.polynomial.Polynomial([a, ell])).coef


def _param_value(spec: ProblemSpec, value: float | None) -> float | None:
    if spec.params and value is None:
        raise ValueError(f"parameter {spec.params[0]!r} needs a value (--param {spec.params[0]}=VALUE)")
    if value is not None and value == 0.0 and any(
            e < 0 for _, terms in spec.dynamics for t in terms for _, _, e in t.coeff.terms):
        raise ZeroDivisionError(f"{spec.params[0]} = 0 makes a coefficient infinite")
    return value


def stability_problem(spec: ProblemSpec, value: float | None = None, **over) -> StabilityProblem:
    value = _param_value(spec, value)
    n = len(spec.variables)
    a, ell = spec.domain[0], spec.length
    idx = {v: i for i, v in enumerate(spec.variables)}
    d_A = max(t.order for _, terms in spec.dynamics for t in terms)
    d_A = max(d_A, 1)
    blocks = [[[np.zeros(1) for _ in range(n)] for _ in range(n)] for _ in range(d_A + 1)]
    for var, terms in spec.dynamics:
        for t in terms:
            c = _rescaled(t.coeff.coeffs(value), a, ell) / ell ** t.order
            cur = blocks[t.order][idx[var]][idx[t.var]]
            m = max(cur.shape[0], c.shape[0])
            blocks[t.order][idx[var]][idx[t.var]] = np.pad(cur, (0, m - cur.shape[0])) + np.pad(c, (0, m - c.shape[0]))
    A = []
    for k in range(d_A + 1):
        K = max(blocks[k][i][j].shape[0] for i in range(n) for j in range(n))
        arr = np.zeros((n, n, K))
        for i in range(n):
            for j in range(n):
                arr[i, j, : blocks[k][i][j].shape[0]] = blocks[k][i][j]
        A.append(PolyMatrix(arr, Basis.MONOMIAL))
    atoms = parse_atoms(spec.boundary, spec.variables, d_A)
    fixed = PolyMatrix.identity(n) if (over.get("fixed_p") or spec.fixed_p) == "identity" else None
    deg_p = over.get("deg_p") if over.get("deg_p") is not None else (spec.deg_p or 0)
    kw = dict(rate=over.get("rate") if over.get("rate") is not None else spec.rate,
              deg_P=0 if fixed is not None else deg_p,
              deg_h=over.get("deg_h") if over.get("deg_h") is not None else spec.deg_h,
              deg_N=over.get("deg_n") if over.get("deg_n") is not None else spec.deg_n,
              names=spec.variables, fixed_P=fixed)
    if spec.eps_floor is not None:
        kw["eps_floor"] = spec.eps_floor
    return StabilityProblem(tuple(A), tuple(atoms), **kw)


def inequality_problem(spec: ProblemSpec, value: float | None = None, **over) -> IntegralInequality:
    value = _param_value(spec, value)
    theta = max([max(t.left[1], t.right[1]) for t in spec.integrand] + [0])
    jet = JetSpec(len(spec.variables), theta, spec.variables)
    a, ell = spec.domain[0], spec.length
    L = jet.length
    entries: dict[tuple[int, int], np.ndarray] = {}
    for t in spec.integrand:
        i = jet.index(spec.variables.index(t.left[0]), t.left[1])
        j = jet.index(spec.variables.index(t.right[0]), t.right[1])
        c = _rescaled(t.coeff.coeffs(value), a, ell) / ell ** (t.left[1] + t.right[1])
        for key, part in (((i, j), c / 2), ((j, i), c / 2)) if i != j else (((i, i), c),):
            cur = entries.get(key, np.zeros(1))
            m = max(cur.shape[0], part.shape[0])
            entries[key] = np.pad(cur, (0, m - cur.shape[0])) + np.pad(part, (0, m - part.shape[0]))
    K = max([v.shape[0] for v in entries.values()] + [1])
    arr = np.zeros((L, L, K))
    for (i, j), v in entries.items():
        arr[i, j, : v.shape[0]] = v
    atoms = parse_atoms(spec.boundary, spec.variables, max(theta, 1)) if theta >= 1 else []
    pick = lambda k: over.get(k) if over.get(k) is not None else getattr(spec, k)
    return IntegralInequality(PolyMatrix(arr), jet, atoms, pick("deg_h"), pick("deg_n"))


def poincare_problem(spec: ProblemSpec | None, **over) -> PoincareProblem:
    deg_h = over.get("deg_h") if over.get("deg_h") is not None else (spec.deg_h if spec and spec.deg_h else 7)
    deg_n = over.get("deg_n") if over.get("deg_n") is not None else (spec.deg_n if spec else None)
    return PoincareProblem(deg_h, deg_n)


# ---------------------------------------------------------------------------
# output helpers

def _g(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str | Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_g(v) if isinstance(v, (float, np.floating)) else v for v in r])


def weight_samples(P: PolyMatrix, points: int = SAMPLE_POINTS):
    """Rows ``x, p(x)`` for scalar weights, ``x, eig1, eig2, ...`` otherwise."""
    xs = np.linspace(0.0, 1.0, points)
    vals = P(xs)
    if P.dim == 1:
        return ["x", "p(x)"], [(float(x), float(v[0, 0])) for x, v in zip(xs, vals)]
    eig = np.linalg.eigvalsh(vals)
    return ["x"] + [f"eig{i + 1}" for i in range(P.dim)], [(float(x), *map(float, e)) for x, e in zip(xs, eig)]


def _solver_config(args) -> SolverConfig:
    if args.solver_tol is None:
        return SolverConfig()
    return SolverConfig(tol_feas=args.solver_tol, tol_gap=args.solver_tol)


def _overrides(args) -> dict:
    return {k: getattr(args, k, None) for k in ("deg_p", "deg_h", "deg_n", "rate")}


def _param_arg(text: str | None) -> tuple[str | None, float | None]:
    if not text:
        return None, None
    name, eq, val = text.partition("=")
    return name.strip(), (float(val) if eq else None)


def _status_exit(certified: bool, status: Status) -> int:
    if certified:
        return EXIT_OK
    if status in (Status.NUMERICAL_TROUBLE, Status.ITERATION_LIMIT):
        return EXIT_NUMERIC
    return EXIT_FAIL


# ---------------------------------------------------------------------------
# commands

def cmd_verify(args, spec: ProblemSpec) -> int:
    if spec.kind != "inequality":
        raise ValueError(f"verify expects an inequality problem, got kind={spec.kind}")
    _, value = _param_arg(args.param)
    prob = inequality_problem(spec, value, **_overrides(args))
    out = prob.solve(_solver_config(args), args.tol)
    out.certificate.metadata["cli"] = {"command": "verify", "options": _overrides(args), "param": value}
    certified = out.certified and out.value >= 0
    print(f"margin = {_g(out.value)} (solver {out.status.value})")
    print(out.report.summary())
    print("certified" if certified else "not certified")
    if args.out:
        out.certificate.save(args.out)
    return _status_exit(certified, out.status)


def cmd_stability(args, spec: ProblemSpec) -> int:
    if spec.kind != "stability":
        raise ValueError(f"stability expects a stability problem, got kind={spec.kind}")
    _, value = _param_arg(args.param)
    prob = stability_problem(spec, value, **_overrides(args))
    rep = certify_stability(prob, _solver_config(args), args.tol)
    rep.certificate.metadata["cli"] = {"command": "stability", "options": _overrides(args), "param": value}
    print(rep.summary())
    if args.out:
        rep.certificate.save(args.out)
    if args.csv:
        header, rows = weight_samples(rep.P)
        write_csv(args.csv, header, rows)
    return _status_exit(rep.feasible, rep.status)


def _deg_list(text) -> list[int]:
    if text is None:
        return [7]
    return [int(t) for t in str(text).split(",") if t.strip()]


def cmd_poincare(args, spec: ProblemSpec | None) -> int:
    degs = _deg_list(args.deg_h_list)
    scale = spec.length ** 2 if spec is not None else 1.0
    rows, code = [], EXIT_OK
    for d in degs:
        prob = poincare_problem(spec, deg_h=d, deg_n=args.deg_n if len(degs) == 1 else None)
        out = prob.solve(_solver_config(args), args.tol)
        out.certificate.metadata["cli"] = {"command": "poincare", "options": {"deg_h": d, "deg_n": prob.deg_N}}
        kappa = out.value * scale
        print(f"deg_h = {d}: kappa* = {_g(kappa)} ({'pass' if out.certified else 'FAIL'}, solver {out.status.value})")
        rows.append((d, kappa))
        if args.out:
            path = Path(args.out)
            if len(degs) > 1:
                path = path.with_name(f"{path.stem}.deg{d}{path.suffix}")
            out.certificate.save(path)
        code = max(code, _status_exit(out.certified, out.status))
    if args.csv:
        write_csv(args.csv, ["deg", "kappa"], rows)
    return code


def cmd_sweep(args, spec: ProblemSpec) -> int:
    if spec.kind != "stability":
        raise ValueError("sweep expects a stability problem")
    name, _ = _param_arg(args.param)
    sw = spec.sweep
    if name is None:
        if sw is None:
            raise ValueError("sweep needs --param or a 'sweep' option")
        name = sw.name
    if spec.params and name != spec.params[0]:
        raise ValueError(f"the problem's parameter is {spec.params[0]!r}, not {name!r}")
    lo = args.min if args.min is not None else (sw.lo if sw else None)
    hi = args.max if args.max is not None else (sw.hi if sw else None)
    tol = args.sweep_tol if args.sweep_tol is not None else (sw.tol if sw else None)
    if lo is None or hi is None or tol is None:
        raise ValueError("sweep needs --min, --max and --tol (or a 'sweep' option)")
    over = _overrides(args)
    res = bisect_param(lambda v: stability_problem(spec, v, **over), lo, hi, tol,
                       _solver_config(args), args.tol)
    rows = []
    for p in sorted(res.probes, key=lambda p: p.value):
        rate = p.report.decay_rate if p.feasible else ""
        rows.append((float(p.value), int(p.feasible), rate))
        if args.out and p.report is not None:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            p.report.certificate.metadata["cli"] = {"command": "stability", "options": over, "param": p.value}
            p.report.certificate.save(Path(args.out) / f"{name}_{_g(p.value)}.json")
    for v, ok, _ in rows:
        print(f"{name} = {_g(v)}: {'certified' if ok else 'not certified'}")
    print(f"largest certified {name}: {'none' if res.value is None else _g(res.value)}")
    if args.csv:
        write_csv(args.csv, ["param", "feasible", "rate"], rows)
    if res.value is not None:
        return EXIT_OK
    bad = [p for p in res.probes if p.report is not None and p.report.numerical_trouble]
    return EXIT_NUMERIC if bad else EXIT_FAIL


def cmd_check(args) -> int:
    cert = Certificate.load(args.certificate)
    cli = cert.metadata.get("cli", {})
    over = {k: v for k, v in cli.get("options", {}).items() if v is not None}
    if cert.kind == "poincare":
        spec = parse_problem(Path(args.problem).read_text()) if args.problem else None
        prob = poincare_problem(spec, **over)
    else:
        if not args.problem:
            raise ValueError(f"checking a {cert.kind} certificate needs the problem file")
        spec = parse_problem(Path(args.problem).read_text())
        value = cli.get("param")
        prob = (stability_problem if cert.kind == "stability" else inequality_problem)(spec, value, **over)
    report = check_certificate(prob, cert, args.tol)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="intsos", description="Certify integral inequalities and PDE stability by SOS.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, problem=True, optional_problem=False):
        if problem:
            p.add_argument("problem", nargs="?" if optional_problem else None, help="problem file")
        p.add_argument("--deg-h", dest="deg_h", type=int)
        p.add_argument("--deg-n", dest="deg_n", type=int)
        p.add_argument("--solver-tol", dest="solver_tol", type=float)
        p.add_argument("--out", help="certificate path (directory for sweep)")
        p.add_argument("--csv", help="CSV output path")

    p = sub.add_parser("verify", help="certify an integral inequality")
    common(p)
    p.add_argument("--tol", type=float, default=1e-7, help="certificate check tolerance")
    p.add_argument("--param")

    p = sub.add_parser("stability", help="certify exponential stability of a PDE")
    common(p)
    p.add_argument("--tol", type=float, default=1e-7, help="certificate check tolerance")
    p.add_argument("--deg-p", dest="deg_p", type=int)
    p.add_argument("--rate", type=float)
    p.add_argument("--param", help="NAME=VALUE for a parameterized problem")

    p = sub.add_parser("poincare", help="best Poincaré constant on [0, 1]")
    p.add_argument("problem", nargs="?", help="optional problem file (kind=poincare)")
    p.add_argument("--deg-h", dest="deg_h_list", help="multiplier degree or comma-separated list")
    p.add_argument("--deg-n", dest="deg_n", type=int)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--solver-tol", dest="solver_tol", type=float)
    p.add_argument("--out")
    p.add_argument("--csv")

    p = sub.add_parser("sweep", help="bisect the largest certified parameter value")
    common(p)
    p.add_argument("--deg-p", dest="deg_p", type=int)
    p.add_argument("--rate", type=float)
    p.add_argument("--param")
    p.add_argument("--min", type=float)
    p.add_argument("--max", type=float)
    p.add_argument("--tol", dest="sweep_tol", type=float,
                   help="bisection width (the problem file's sweep tol by default)")
    p.add_argument("--check-tol", dest="tol", type=float, default=1e-7, help="certificate check tolerance")

    p = sub.add_parser("check", help="independently check a certificate")
    p.add_argument("certificate")
    p.add_argument("problem", nargs="?")
    p.add_argument("--tol", type=float, default=1e-7)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        if args.command == "check":
            return cmd_check(args)
        spec = None
        if getattr(args, "problem", None):
            spec = parse_problem(Path(args.problem).read_text())
        if args.command == "poincare":
            if spec is not None and spec.kind != "poincare":
                raise ValueError(f"poincare expects kind=poincare, got {spec.kind}")
            return cmd_poincare(args, spec)
        if spec is None:
            raise ValueError(f"{args.command} needs a problem file")
        return {"verify": cmd_verify, "stability": cmd_stability, "sweep": cmd_sweep}[args.command](args, spec)
    except (ValueError, OSError, KeyError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
