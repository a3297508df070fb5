# Jet vectors, squared bases and the fundamental-theorem-of-calculus multiplier.
#
# For u with derivatives up to order theta, the jet v = (u, u_x, ..., u_theta)
# carries the integrand v^T F v.  Adding v^T H v, with H built from a vector of
# polynomials h, changes the integral only by boundary terms.
import numpy as np
import numpy.polynomial.polynomial as npoly

from intsos.jetspace import JetSpec, multiplier_form, squared_basis
from intsos.polycore import gauss_legendre_01, poly_make

jet = JetSpec(1, 2, ("u",))
print("jet coordinates:", jet.coordinates)
print("squared basis:  ", squared_basis(jet.lower()).labels())

h = [poly_make([0.5, -1.0, 2.0]), poly_make([1.0, 0.3]), poly_make([-0.2, 0.0, 0.7])]
H = multiplier_form(h, 1, 2)
print("H(0.3) =\n", H(0.3))

# FTC identity: the integral of v^T H v equals the boundary term h . q(v) at 1 minus at 0,
# where q collects the squared-basis monomials of the lower jet (u^2, u u_x, u_x^2).
u = np.array([0.1, 1.0, -2.0, 0.5, 0.3])
x, w = gauss_legendre_01(64)
d = [npoly.polyval(x, npoly.polyder(u, k) if k else u) for k in range(3)]
v = np.stack(d)
lhs = np.sum(w * np.einsum("ip,pij,jp->p", v, H(x), v))


def boundary(t):
    u0, u1 = npoly.polyval(t, u), npoly.polyval(t, npoly.polyder(u))
    return sum(hk(t) * qk for hk, qk in zip(h, [u0 * u0, u0 * u1, u1 * u1]))


print(f"integral of v^T H v = {lhs:.12f}")
print(f"boundary term       = {boundary(1.0) - boundary(0.0):.12f}")
