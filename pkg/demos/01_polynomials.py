# Polynomial arithmetic on [0, 1] in the monomial and Chebyshev bases.
import numpy as np

from intsos.polycore import Basis, PolyMatrix, chebyshev_points_01, parse_poly, poly_make

# Polynomials are coefficient vectors tagged with a basis.
p = parse_poly("1 - 24*x + 24*x^2")
print("p        =", p.to_text())
print("p(0.5)   =", p(0.5))
print("p'       =", p.deriv().to_text())

# The same polynomial in the shifted Chebyshev basis T_k(2x - 1).
pc = p.to_basis(Basis.CHEBYSHEV)
print("Chebyshev coefficients:", pc.coeffs)
xs = np.linspace(0, 1, 5)
print("bases agree:", np.allclose(p(xs), pc(xs)))

# Why the Chebyshev basis is the default: the monomial Vandermonde matrix on
# [0, 1] is badly conditioned already at moderate degree.
pts = chebyshev_points_01(21)
for basis in Basis:
    V = np.stack([poly_make(np.eye(21)[k], basis)(pts) for k in range(21)], axis=1)
    print(f"degree 20 {basis.value:9s} Vandermonde condition number: {np.linalg.cond(V):.2e}")

# Polynomial matrices multiply entrywise-polynomially and evaluate on grids.
M = PolyMatrix.from_entries([[p, poly_make([0.0, 1.0])], [poly_make([0.0, 1.0]), poly_make([2.0])]])
print("M(0.25) =\n", M(0.25))
print("(M M)(0.25) == M(0.25)^2:", np.allclose(M.matmul(M)(0.25), M(0.25) @ M(0.25)))
