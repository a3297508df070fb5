# Upper bounds on the Poincare constant kappa in int u^2 <= kappa int u_x^2, u(0) = u(1) = 0.
#
# Each multiplier degree gives a certified upper bound; the sharp value is 1/pi^2.
import math

from intsos.problems import PoincareProblem

for deg in (1, 3, 5, 7, 9, 11):
    out = PoincareProblem(deg_h=deg).solve()
    print(f"deg_h = {deg:2d}: kappa* = {out.value:.6f}  certificate check: {'PASS' if out.certified else 'FAIL'}")
print(f"sharp constant 1/pi^2 = {1 / math.pi ** 2:.6f}")

# The certificate records everything the independent checker needs.
out = PoincareProblem(deg_h=7).solve()
print(out.report.summary())
