"""Certificates and their independent verification.

The checker rebuilds T(x) = F(x) + H(x) from the problem data and the
certificate's multipliers, re-expands the Gram forms itself, and never touches
the solver.  Only :mod:`polycore`, :mod:`jetspace` and :mod:`boundary` are used.

A problem handed to :func:`check_certificate` must provide

* ``fingerprint() -> str``
* ``check_items(params) -> list[CheckItem]``
* optionally ``sign_conditions(params) -> list[(label, value)]``, each value
  required to be nonnegative.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .boundary import boundary_classify, boundary_matrix, multiplier_constraints
from .jetspace import JetSpec, multiplier_form
from .polycore import LOCALIZER, Basis, Polynomial, PolyMatrix, chebyshev_points_01, coef_mul, coef_val

SPOT_POINTS = 65


def fingerprint_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class CheckItem:
    """One integral inequality as seen by the checker: F is numeric once params are fixed."""

    name: str
    jet: JetSpec  # order theta of the integrand
    atoms: tuple
    F: PolyMatrix


@dataclass
class ConstraintCertificate:
    name: str
    theta: int
    basis: Basis
    d: int
    dN: int
    multipliers: list[np.ndarray]  # coefficient rows in ``basis``
    gram_main: np.ndarray  # full jet dimension, zero rows for pruned indices
    gram_loc: np.ndarray


@dataclass
class Certificate:
    fingerprint: str
    kind: str
    params: dict[str, float]
    weights: dict[str, Polynomial] = field(default_factory=dict)
    constraints: list[ConstraintCertificate] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "kind": self.kind,
            "params": {k: float(v) for k, v in self.params.items()},
            "weights": {k: {"basis": p.basis.value, "coeffs": [float(c) for c in p.coeffs]}
                        for k, p in self.weights.items()},
            "constraints": [
                {
                    "name": c.name,
                    "theta": c.theta,
                    "basis": c.basis.value,
                    "d": c.d,
                    "dN": c.dN,
                    "multipliers": [[float(v) for v in h] for h in c.multipliers],
                    "gram_main": {"dim": int(c.gram_main.shape[0]), "lower": _lower(c.gram_main)},
                    "gram_loc": {"dim": int(c.gram_loc.shape[0]), "lower": _lower(c.gram_loc)},
                }
                for c in self.constraints
            ],
            "metadata": dict(self.metadata, tool_version=__version__),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        cons = []
        for c in d.get("constraints", []):
            cons.append(ConstraintCertificate(
                c["name"], int(c["theta"]), Basis(c["basis"]), int(c["d"]), int(c["dN"]),
                [np.asarray(h, dtype=float) for h in c["multipliers"]],
                _from_lower(c["gram_main"]), _from_lower(c["gram_loc"]),
            ))
        weights = {k: Polynomial(np.asarray(v["coeffs"], dtype=float), Basis(v["basis"]))
                   for k, v in d.get("weights", {}).items()}
        return cls(d["fingerprint"], d.get("kind", ""), {k: float(v) for k, v in d["params"].items()},
                   weights, cons, dict(d.get("metadata", {})))

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "Certificate":
        return cls.from_json(Path(path).read_text())


def _lower(Q: np.ndarray) -> list[float]:
    i, j = np.tril_indices(Q.shape[0])
    return [float(v) for v in Q[i, j]]


def _from_lower(block: dict) -> np.ndarray:
    n = int(block["dim"])
    Q = np.zeros((n, n))
    i, j = np.tril_indices(n)
    vals = np.asarray(block["lower"], dtype=float)
    if vals.shape[0] != i.shape[0]:
        raise ValueError(f"Gram block of dim {n} needs {i.shape[0]} lower-triangle entries, got {vals.shape[0]}")
    Q[i, j] = vals
    Q[j, i] = vals
    return Q


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("certificates cannot hold non-finite numbers")
    return format(x, ".17g")


def dumps(obj: Any, indent: int = 1, _level: int = 0) -> str:
    """JSON text with every real written at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        if not seq:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------

@dataclass
class CertReport:
    gram_psd: bool
    coefficient_residual: bool
    multipliers_admissible: bool
    pointwise: bool
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.gram_psd and self.coefficient_residual and self.multipliers_admissible and self.pointwise

    def summary(self) -> str:
        mark = lambda ok: "pass" if ok else "FAIL"
        return (f"(a) Gram PSD {mark(self.gram_psd)}; (b) coefficient residual {mark(self.coefficient_residual)}; "
                f"(c) multiplier admissibility {mark(self.multipliers_admissible)}; "
                f"(d) pointwise {mark(self.pointwise)} => {'PASS' if self.passed else 'FAIL'}")


def _gram_form(Q: np.ndarray, m: int, d: int, basis: Basis) -> np.ndarray:
    """Coefficients (m, m, 2d+1) of (I ⊗ z_d)^T Q (I ⊗ z_d), expanded product by product."""
    prods = {}
    for a in range(d + 1):
        for b in range(a, d + 1):
            ea, eb = np.zeros(a + 1), np.zeros(b + 1)
            ea[a] = eb[b] = 1.0
            c = np.zeros(2 * d + 1)
            pr = coef_mul(ea, eb, basis)
            c[: pr.shape[0]] = pr
            prods[a, b] = prods[b, a] = c
    out = np.zeros((m, m, 2 * d + 1))
    for i in range(m):
        for j in range(m):
            blk = Q[i * (d + 1):(i + 1) * (d + 1), j * (d + 1):(j + 1) * (d + 1)]
            for a in range(d + 1):
                for b in range(d + 1):
                    if blk[a, b] != 0.0:
                        out[i, j] += blk[a, b] * prods[a, b]
    return out


def _coeffs(M: PolyMatrix, basis: Basis, K: int) -> np.ndarray:
    c = M.to_basis(basis).coeffs
    out = np.zeros((M.dim, M.dim, max(K, c.shape[2])))
    out[:, :, : c.shape[2]] = c
    return out


def check_certificate(problem, cert: Certificate, tol: float = 1e-7) -> CertReport:
    if cert.fingerprint != problem.fingerprint():
        raise ValueError("certificate fingerprint does not match the problem")
    items = problem.check_items(cert.params)
    if len(items) != len(cert.constraints):
        raise ValueError(f"certificate has {len(cert.constraints)} constraint records, problem needs {len(items)}")

    details: dict[str, Any] = {}
    psd_ok = resid_ok = adm_ok = point_ok = True
    xs = chebyshev_points_01(SPOT_POINTS)

    for item, cc in zip(items, cert.constraints):
        if cc.name != item.name:
            raise ValueError(f"constraint record {cc.name!r} does not match {item.name!r}")
        L = item.jet.length
        basis = cc.basis
        if item.jet.theta >= 1:
            h = [Polynomial(c, basis) for c in cc.multipliers]
            H = multiplier_form(h, item.jet.n, item.jet.theta, basis) if h else PolyMatrix.zeros(L, basis)
        else:
            h = []
            H = PolyMatrix.zeros(L, basis)
        T = item.F.to_basis(basis) + H

        # (a) Gram blocks PSD
        mins = [float(np.linalg.eigvalsh(Q)[0]) if Q.size else 0.0 for Q in (cc.gram_main, cc.gram_loc)]
        details[f"{cc.name}.gram_min_eig"] = mins
        psd_ok &= all(v >= -tol for v in mins)

        # (b) T - N g reproduced by the main Gram form
        if cc.gram_main.shape[0] != L * (cc.d + 1) or cc.gram_loc.shape[0] != L * (cc.dN + 1):
            raise ValueError(f"{cc.name}: Gram block dimensions do not match the jet")
        S0 = _gram_form(cc.gram_main, L, cc.d, basis)
        Nc = _gram_form(cc.gram_loc, L, cc.dN, basis)
        g = LOCALIZER.to_basis(basis).coeffs
        K = 2 * cc.d + 1
        Ng = np.zeros((L, L, max(K, Nc.shape[2] + 2)))
        for i in range(L):
            for j in range(L):
                pr = coef_mul(Nc[i, j], g, basis)
                Ng[i, j, : pr.shape[0]] = pr
        Tc = _coeffs(T, basis, K)
        Kmax = max(Tc.shape[2], Ng.shape[2], S0.shape[2])
        pad = lambda c: np.concatenate([c, np.zeros(c.shape[:2] + (Kmax - c.shape[2],))], axis=2)
        r = float(np.max(np.abs(pad(Tc) - pad(Ng) - pad(S0)), initial=0.0))
        details[f"{cc.name}.coefficient_residual"] = r
        resid_ok &= r <= tol

        # (c) multiplier endpoint constraints
        if item.jet.theta >= 1:
            spec = boundary_matrix(list(item.atoms), item.jet.n, item.jet.theta, item.jet.names)
            mc = multiplier_constraints(boundary_classify(spec))
            ends = np.array([[float(coef_val(c, 0.0, basis)), float(coef_val(c, 1.0, basis))]
                             for c in cc.multipliers]) if cc.multipliers else np.zeros((0, 2))
            slacks = [con.slack(ends) for con in mc]
            details[f"{cc.name}.endpoint_slacks"] = slacks
            adm_ok &= all(s >= -tol for s in slacks)

        # (d) pointwise spot check of T
        vals = T(xs)
        min_eig = float(min(np.linalg.eigvalsh(0.5 * (v + v.T))[0] for v in vals))
        details[f"{cc.name}.pointwise_min_eig"] = min_eig
        point_ok &= min_eig >= -10 * tol

    if hasattr(problem, "sign_conditions"):
        for label, value in problem.sign_conditions(cert.params):
            details[f"sign:{label}"] = float(value)
            adm_ok &= value >= -tol
    return CertReport(bool(psd_ok), bool(resid_ok), bool(adm_ok), bool(point_ok), details)
