# Exponential stability of linear PDEs via polynomial Lyapunov weights V = int u^T P(x) u dx.
import numpy as np

from intsos.boundary import Pin
from intsos.lyapunov import StabilityProblem, certify_stability
from intsos.polycore import PolyMatrix


def const(*rows):
    return PolyMatrix(np.array(rows, dtype=float)[:, :, None])


# Transport u_t = -u_x with u(0) = 0 decays at any rate; certify rate 2.
transport = StabilityProblem((const([0.0]), const([-1.0])), (Pin(0, 0, 0),), rate=2.0, deg_P=8)
rep = certify_stability(transport)
print("transport:", rep.summary())
print("    P(x) at x = 0, 0.5, 1:", rep.P(np.array([0.0, 0.5, 1.0]))[:, 0, 0])

# Heat equation u_t = u_xx + lam u under Dirichlet ends is stable iff lam < pi^2.
for lam in (5.0, 12.0):
    heat = StabilityProblem((const([lam]), const([0.0]), const([1.0])), (Pin(0, 0, 0), Pin(0, 0, 1)), deg_P=4)
    print(f"heat, lam = {lam:g}:", certify_stability(heat).summary())
