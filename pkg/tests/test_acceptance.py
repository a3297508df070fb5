"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``.  Criterion 1 is expected to
fail at the stated tolerance (see the project notes for the analysis).
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from intsos.cli import parse_problem, stability_problem
from intsos.jetspace import JetSpec
from intsos.lyapunov import bisect_param, certify_stability
from intsos.polycore import PolyMatrix, poly_make
from intsos.problems import PoincareProblem
from intsos.reduction import AffinePolyMatrix, MultiplierTemplate, build_T, eval_T
from intsos.boundary import Pin

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "demos" / "problems"


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def spec(name):
    return parse_problem((PROBLEMS / name).read_text())


def test_criterion_1_poincare(capsys):
    t0 = time.perf_counter()
    out = PoincareProblem(deg_h=7, deg_N=9).solve()
    elapsed = time.perf_counter() - t0
    kappas = {d: PoincareProblem(deg_h=d).solve().value for d in (3, 5, 7, 9)}
    target = 1 / math.pi ** 2
    monotone = all(kappas[a] >= kappas[b] - 1e-9 for a, b in [(3, 5), (5, 7), (7, 9)])
    ok = out.certified and abs(out.value - target) <= 2e-3 and elapsed <= 10 and monotone
    detail = (f"kappa*(7) = {out.value:.6f} vs {target:.7f} (|diff| = {abs(out.value - target):.2e}, tol 2e-3), "
              f"{elapsed:.2f} s, nonincreasing over 3,5,7,9: {monotone} "
              f"({', '.join(f'{d}: {k:.6f}' for d, k in kappas.items())})")
    report(capsys, 1, ok, detail)


def test_criterion_2_transport(capsys):
    parts, ok = [], True
    for rate, deg in [(2.0, 8), (5.0, 16)]:
        t0 = time.perf_counter()
        rep = certify_stability(stability_problem(spec("transport.prob"), rate=rate, deg_p=deg))
        elapsed = time.perf_counter() - t0
        ok &= rep.feasible and rep.check.passed and elapsed <= 30
        parts.append(f"lambda={rate:g} deg_p={deg}: certified={rep.feasible} eps={rep.eps2:.4g} "
                     f"check={rep.check.passed} {elapsed:.1f} s")
    report(capsys, 2, ok, "; ".join(parts))


def test_criterion_3_heat_constant(capsys):
    s = spec("heat.prob")  # deg_p 10, deg_h 51
    t0 = time.perf_counter()
    res = bisect_param(lambda v: stability_problem(s, v), 0.0, 12.0, 0.05)
    at_992 = certify_stability(stability_problem(s, 9.92)).feasible
    elapsed = time.perf_counter() - t0
    above = [p.value for p in res.probes if p.feasible and p.value >= 9.92]
    ok = res.value is not None and res.value >= 9.5 and not at_992 and not above and elapsed <= 300
    report(capsys, 3, ok, f"lambda* = {res.value} (need >= 9.5), 9.92 certified: {at_992}, {elapsed:.1f} s")


def test_criterion_4_heat_varying(capsys):
    s = spec("heat_varying.prob")  # deg_p 10, default deg_h
    t0 = time.perf_counter()
    res = bisect_param(lambda v: stability_problem(s, v), 8.0, 16.0, 0.1)
    elapsed = time.perf_counter() - t0
    ok = res.value is not None and 13.8 <= res.value <= 14.4 and elapsed <= 600
    report(capsys, 4, ok, f"lambda_c* = {res.value} (need [13.8, 14.4]), {elapsed:.1f} s")


def test_criterion_5_coupled(capsys):
    s = spec("coupled.prob")
    need = {0: 0.25, 2: 1.6, 4: 2.25}
    t0 = time.perf_counter()
    found, too_high, ok = {}, [], True
    for deg, lo_bound in need.items():
        res = bisect_param(lambda v: stability_problem(s, v, deg_p=deg), 0.0, 3.0, 0.05)
        found[deg] = res.value
        too_high += [p.value for p in res.probes if p.feasible and p.value > 2.7]
        ok &= res.value is not None and res.value >= lo_bound
    elapsed = time.perf_counter() - t0
    ok &= not too_high and elapsed <= 1200
    detail = ", ".join(f"deg_p {d}: R* = {found[d]} (need >= {need[d]})" for d in need)
    report(capsys, 5, ok, f"{detail}; certified R > 2.7: {too_high}; {elapsed:.1f} s")


SUITES = {
    "a": ["tests/test_jetspace.py::test_derivative_map_oracle"],
    "b": ["tests/test_jetspace.py::test_ftc_identity_quadrature"],
    "c": ["tests/test_jetspace.py::test_multiplier_form_example_2"],
    "d": ["tests/test_boundary.py::test_soundness_random_kernel_jets"],
    "e": ["tests/test_sosprog.py::test_reconstruction_on_poincare", "tests/test_sosprog.py::test_diag_x_feasible",
          "tests/test_sosprog.py::test_objective_and_bounds", "tests/test_sosprog.py::test_encoding_soundness_random_feasible"],
    "f": ["tests/test_sdpsolve.py::test_random_tiny_sdps_match_independent_solver"],
    "g": ["tests/test_certify.py::test_negative_gram_eigenvalue_rejected",
          "tests/test_certify.py::test_violated_endpoint_sign_rejected"],
}


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_criterion_6_property_suites(suite, capsys):
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *SUITES[suite]]
    proc = subprocess.run(cmd, cwd=ROOT, capture_output=True, text=True)
    last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    report(capsys, f"6{suite}", proc.returncode == 0, last)


def test_criterion_7_transport_identity(capsys):
    p = poly_make([(-1.0) ** k / math.factorial(k) for k in range(13)])
    F = AffinePolyMatrix.from_polymatrix(PolyMatrix.from_entries([[p * -0.5, p * 0.5], [p * 0.5, 0.0]]))
    tmpl = MultiplierTemplate(JetSpec(1, 1, ("u",)), 12, (Pin(0, 0, 0),))
    T, _ = build_T(F, tmpl)
    h = (p * -0.5).padded(12)
    worst = float(np.abs(eval_T(T, {tmpl.var(0, j): h[j] for j in range(13)})(np.linspace(0, 1, 1001))).max())
    report(capsys, 7, worst <= 1e-8, f"max |T(x)| on [0, 1] = {worst:.2e} (tol 1e-8)")
