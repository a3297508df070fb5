# Bisection for the largest certified parameter, as in a stability interval study.
from pathlib import Path

from intsos.cli import parse_problem, stability_problem
from intsos.lyapunov import bisect_param

here = Path(__file__).resolve().parent
spec = parse_problem((here / "problems" / "coupled.prob").read_text())

# The coefficient 1/R is undefined at R = 0, so the search interval is open at 0.
for deg in (0, 2, 4):
    res = bisect_param(lambda R: stability_problem(spec, R, deg_p=deg), 0.0, 3.0, 0.05)
    print(f"deg_p = {deg}: largest certified R = {res.value}  ({len(res.probes)} probes)")
