"""NURBS building blocks: basis functions, exact circles and refinement.

Run with ``python3 demos/01_nurbs_geometry.py``.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss

from xigaplate.geometry import circular_patch, half_annulus_patch, physical_basis
from xigaplate.splines import basis_derivatives, make_open_knot_vector

# A cubic open knot vector on four elements. Basis values sum to one and
# their derivatives sum to zero everywhere.
kv = make_open_knot_vector(4, 3)
print("knots:", kv.knots)
u = 0.3
span = kv.find_span(u)
ders = basis_derivatives(kv, span, u, n_der=2)
print("N(0.3)   =", np.round(ders[0].ravel(), 6), "sum", ders[0].sum())
print("N'(0.3)  sums to", ders[1].sum())
print("N''(0.3) sums to", ders[2].sum())

# The full circle is represented exactly, so the boundary has no error and
# the area is pi R^2 to quadrature precision on any mesh.
R = 2.0
for n_el in (1, 4, 16):
    patch = circular_patch(R, 3, n_el) if n_el > 1 else circular_patch(R, 2, 1)
    s = np.linspace(0, 1, 200)
    radius = np.linalg.norm(patch.map(s, 0 * s), axis=1)
    print(f"circle n_el={n_el:2d}: boundary radius error {np.abs(radius - R).max():.1e}")


def area(patch, n=8):
    g, w = leggauss(n)
    total = 0.0
    for el in patch.elements():
        (a, b), (c, d) = el.xi_range, el.eta_range
        X, E = np.meshgrid(0.5 * (b - a) * g + 0.5 * (a + b), 0.5 * (d - c) * g + 0.5 * (c + d), indexing="ij")
        ph = physical_basis(patch, X.ravel(), E.ravel())
        total += np.sum(np.outer(w, w).ravel() * 0.25 * (b - a) * (d - c) * ph.J)
    return total


ann = half_annulus_patch(1.0, 0.5, 3, 3)
print(f"half annulus area {area(ann):.12f} vs exact {np.pi * (1 - 0.25) / 2:.12f}")
print("control net shape:", ann.shape, "->", ann.n_cp, "control points")
