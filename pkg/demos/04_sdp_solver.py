# The built-in primal-dual interior point solver on a small block SDP.
#
# Standard form: minimize <C, X> + c^T y subject to <A_i, X> + B_i y = b_i, X PSD.
import numpy as np

from intsos.sdpsolve import SdpProblem, sdp_solve

# Smallest t with [[t, 1], [1, t]] PSD: rows fix X01 = 1 and X00 = X11.
A = np.zeros((2, 2, 2))
A[0, 0, 1] = A[0, 1, 0] = 0.5
A[1, 0, 0], A[1, 1, 1] = 1.0, -1.0
sol = sdp_solve(SdpProblem([A], [1.0, 0.0], C=[0.5 * np.eye(2)]))
print("status:", sol.status.value, "iterations:", sol.iterations)
print("X =\n", sol.X[0])
print("KKT residuals:", sol.residuals)

# An infeasible instance: X00 = -1 cannot hold for PSD X.
bad = sdp_solve(SdpProblem([np.ones((1, 1, 1))], [-1.0]))
print("infeasible instance status:", bad.status.value)
