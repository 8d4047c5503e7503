"""B-spline and NURBS basis evaluation, knot insertion and degree elevation.

Basis evaluation is span-local: for a parameter in span ``i`` only the
``p + 1`` functions ``N_{i-p} .. N_i`` are nonzero and only those are
returned. At an interior knot the right limit is taken; at the last knot of
the domain the left limit is taken.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Parameter or knot outside the admissible domain."""


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector with its degree.

    Parameters
    ----------
    knots : array_like
        Non-decreasing knot values; first and last repeated ``degree + 1`` times.
    degree : int
        Polynomial degree ``p``.
    """

    knots: np.ndarray
    degree: int

    def __post_init__(self):
        U = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", U)
        p = int(self.degree)
        if p < 0:
            raise ValueError("degree must be non-negative")
        if np.any(np.diff(U) < 0):
            raise ValueError("knot vector must be non-decreasing")
        if len(U) - p - 1 < p + 1:
            raise ValueError("too few knots for the requested degree")
        if not (np.all(U[: p + 1] == U[0]) and np.all(U[-p - 1:] == U[-1])):
            raise ValueError("knot vector is not open")
        if p > 0 and (U[p + 1] == U[0] or U[-p - 2] == U[-1]):
            raise ValueError("end knots repeated more than degree + 1 times")

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def breaks(self) -> np.ndarray:
        """Distinct knot values (element boundaries)."""
        return np.unique(self.knots)

    def n_elements(self) -> int:
        return len(self.breaks()) - 1

    def element_spans(self) -> np.ndarray:
        """Span index of every nonzero-length knot interval, in order."""
        U, p = self.knots, self.degree
        idx = np.arange(p, self.n_basis)
        return idx[U[idx + 1] > U[idx]]

    def multiplicity(self, u: float) -> int:
        return int(np.sum(self.knots == u))

    def greville(self) -> np.ndarray:
        U, p = self.knots, self.degree
        if p == 0:
            return 0.5 * (U[:-1] + U[1:])
        return np.array([U[i + 1:i + p + 1].mean() for i in range(self.n_basis)])

    def find_span(self, u, side: str = "right"):
        """Span index containing ``u`` (vectorized).

        ``side='right'`` gives right limits at knots (left limit at the final
        knot); ``side='left'`` gives left limits (right limit at the first).
        """
        U, p = self.knots, self.degree
        u = np.asarray(u, dtype=float)
        lo, hi = U[0], U[-1]
        tol = 1e-14 * max(1.0, hi - lo)
        if np.any(u < lo - tol) or np.any(u > hi + tol):
            raise DomainError(f"parameter outside [{lo}, {hi}]")
        span = np.searchsorted(U, u, side=side) - 1
        span = np.clip(span, p, self.n_basis - 1)
        return span


@dataclass(frozen=True)
class BasisEval:
    """Nonzero 1-D basis functions at one parameter value."""

    span: int
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.span - len(self.values) + 1, self.span + 1)


@dataclass(frozen=True)
class TensorBasis2D:
    """Nonzero rational basis functions at one point of a patch."""

    indices: np.ndarray
    R: np.ndarray
    R_xi: np.ndarray
    R_eta: np.ndarray
    R_xixi: np.ndarray
    R_etaeta: np.ndarray
    R_xieta: np.ndarray


def make_open_knot_vector(n_elements: int, p: int) -> KnotVector:
    """Uniform open knot vector on [0, 1] with ``n_elements`` spans."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    if n_elements < 1:
        raise ValueError(f"need at least one element, got {n_elements}")
    interior = np.arange(1, n_elements) / n_elements
    knots = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
    return KnotVector(knots, p)


def basis_derivatives(kv: KnotVector, span, u, n_der: int = 2) -> np.ndarray:
    """Nonzero basis functions and derivatives at points sharing one span.

    Parameters
    ----------
    kv : KnotVector
    span : int
        Span index, the same for every point in ``u``.
    u : array_like
        Parameter values, shape ``(npts,)``.
    n_der : int
        Highest derivative order.

    Returns
    -------
    ndarray, shape ``(n_der + 1, npts, p + 1)``
        ``out[k, q, j]`` is the k-th derivative of ``N_{span-p+j}`` at ``u[q]``.
    """
    U, p = kv.knots, kv.degree
    u = np.atleast_1d(np.asarray(u, dtype=float))
    npts = u.size
    i = int(span)
    ndu = np.zeros((p + 1, p + 1, npts))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, npts))
    right = np.zeros((p + 1, npts))
    for j in range(1, p + 1):
        left[j] = u - U[i + 1 - j]
        right[j] = U[i + j] - u
        saved = np.zeros(npts)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n_der + 1, npts, p + 1))
    for j in range(p + 1):
        ders[0, :, j] = ndu[j, p]
    a = np.zeros((2, p + 1, npts))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n_der + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            ders[k, :, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, n_der + 1):
        ders[k] *= fac
        fac *= p - k
    return ders


def eval_basis(kv: KnotVector, xi: float, side: str = "right") -> BasisEval:
    """Values, first and second derivatives of the nonzero functions at ``xi``."""
    span = int(kv.find_span(xi, side=side))
    d = basis_derivatives(kv, span, [xi], n_der=2)
    return BasisEval(span, d[0, 0].copy(), d[1, 0].copy(), d[2, 0].copy())


def tensor_nurbs(kv_xi, kv_eta, weights, span_i, span_j, xi, eta):
    """Rational tensor-product basis at points that share the element (span_i, span_j).

    Returns
    -------
    idx : ndarray of (i, j) index pairs, shape ``(nloc, 2)``
    ders : ndarray, shape ``(6, npts, nloc)``
        ``R, R_xi, R_eta, R_xixi, R_etaeta, R_xieta``.
    """
    p, q = kv_xi.degree, kv_eta.degree
    Nx = basis_derivatives(kv_xi, span_i, xi, 2)
    Ny = basis_derivatives(kv_eta, span_j, eta, 2)
    ii = np.arange(span_i - p, span_i + 1)
    jj = np.arange(span_j - q, span_j + 1)
    w = weights[np.ix_(ii, jj)].ravel()
    # local ordering: xi index major, eta index minor
    N = np.einsum("qa,qb->qab", Nx[0], Ny[0]).reshape(len(Nx[0]), -1)
    Nxi = np.einsum("qa,qb->qab", Nx[1], Ny[0]).reshape(N.shape)
    Neta = np.einsum("qa,qb->qab", Nx[0], Ny[1]).reshape(N.shape)
    Nxixi = np.einsum("qa,qb->qab", Nx[2], Ny[0]).reshape(N.shape)
    Netaeta = np.einsum("qa,qb->qab", Nx[0], Ny[2]).reshape(N.shape)
    Nxieta = np.einsum("qa,qb->qab", Nx[1], Ny[1]).reshape(N.shape)

    W = N @ w
    if np.any(W <= 0):
        raise ArithmeticError("non-positive NURBS weight sum")
    Wx, Wy = Nxi @ w, Neta @ w
    Wxx, Wyy, Wxy = Nxixi @ w, Netaeta @ w, Nxieta @ w
    Wc = W[:, None]
    R = N * w / Wc
    Rx = (Nxi * w - R * Wx[:, None]) / Wc
    Ry = (Neta * w - R * Wy[:, None]) / Wc
    Rxx = (Nxixi * w - 2 * Rx * Wx[:, None] - R * Wxx[:, None]) / Wc
    Ryy = (Netaeta * w - 2 * Ry * Wy[:, None] - R * Wyy[:, None]) / Wc
    Rxy = (Nxieta * w - Rx * Wy[:, None] - Ry * Wx[:, None] - R * Wxy[:, None]) / Wc
    idx = np.stack(np.meshgrid(ii, jj, indexing="ij"), axis=-1).reshape(-1, 2)
    return idx, np.stack([R, Rx, Ry, Rxx, Ryy, Rxy])


def eval_nurbs_2d(patch, xi: float, eta: float) -> TensorBasis2D:
    """Rational basis and parametric derivatives (orders 0-2) at one point.

    Active indices are flat control-point ids ``i * n_eta + j``.
    """
    si = int(patch.kv_xi.find_span(xi))
    sj = int(patch.kv_eta.find_span(eta))
    idx, d = tensor_nurbs(patch.kv_xi, patch.kv_eta, patch.weights, si, sj, [xi], [eta])
    flat = idx[:, 0] * patch.kv_eta.n_basis + idx[:, 1]
    return TensorBasis2D(flat, *(d[k, 0] for k in range(6)))


# ----------------------------------------------------------------------
# Refinement
# ----------------------------------------------------------------------

def insert_knot_curve(kv: KnotVector, Pw: np.ndarray, u: float):
    """Insert ``u`` once into a curve with homogeneous control points ``Pw``.

    ``Pw`` has the control-point index on axis 0; trailing axes are carried along.
    """
    U, p = kv.knots, kv.degree
    lo, hi = kv.domain
    if not lo < u < hi:
        raise DomainError(f"knot {u} not strictly inside ({lo}, {hi})")
    s = kv.multiplicity(u)
    if s >= p:
        raise ValueError(f"knot {u} already has multiplicity {s} >= degree {p}")
    k = int(kv.find_span(u))
    n = kv.n_basis
    Q = np.empty((n + 1,) + Pw.shape[1:])
    Q[: k - p + 1] = Pw[: k - p + 1]
    Q[k - s + 1:] = Pw[k - s:]
    for i in range(k - p + 1, k - s + 1):
        alpha = (u - U[i]) / (U[i + p] - U[i])
        Q[i] = alpha * Pw[i] + (1.0 - alpha) * Pw[i - 1]
    newU = np.insert(U, k + 1, u)
    return KnotVector(newU, p), Q


def elevate_curve(kv: KnotVector, Pw: np.ndarray, t: int):
    """Raise the degree by ``t`` keeping the curve and its continuity.

    Every distinct knot gains multiplicity ``t``; the new control points are
    found by collocation at the Greville abscissae of the elevated basis,
    which is exact because the elevated space contains the original one.
    """
    if t < 0:
        raise ValueError("cannot lower the degree")
    if t == 0:
        return kv, Pw.copy()
    p = kv.degree
    brk, mult = np.unique(kv.knots, return_counts=True)
    newU = np.repeat(brk, mult + t)
    new = KnotVector(newU, p + t)
    g = new.greville()
    old_B = collocation_matrix(kv, g)
    new_B = collocation_matrix(new, g)
    rhs = old_B @ Pw.reshape(Pw.shape[0], -1)
    Q = np.linalg.solve(new_B, rhs)
    return new, Q.reshape((new.n_basis,) + Pw.shape[1:])


def collocation_matrix(kv: KnotVector, u) -> np.ndarray:
    """Dense matrix ``B[q, i] = N_i(u_q)``."""
    u = np.asarray(u, dtype=float)
    B = np.zeros((u.size, kv.n_basis))
    spans = kv.find_span(u)
    p = kv.degree
    for s in np.unique(spans):
        sel = np.nonzero(spans == s)[0]
        d = basis_derivatives(kv, s, u[sel], 0)[0]
        B[np.ix_(sel, np.arange(s - p, s + 1))] = d
    return B


def _homogeneous(patch) -> np.ndarray:
    w = patch.weights[..., None]
    return np.concatenate([patch.control_points * w, w], axis=-1)


def _from_homogeneous(patch, kv_xi, kv_eta, Pw):
    w = Pw[..., 2]
    return dataclasses.replace(
        patch, kv_xi=kv_xi, kv_eta=kv_eta,
        control_points=Pw[..., :2] / w[..., None], weights=w.copy())


def h_refine(patch, new_knots_xi=(), new_knots_eta=()):
    """Insert knots in both parametric directions; geometry is unchanged."""
    Pw = _homogeneous(patch)
    kx, ky = patch.kv_xi, patch.kv_eta
    for u in sorted(new_knots_xi):
        kx, Pw = insert_knot_curve(kx, Pw, float(u))
    Pw = np.swapaxes(Pw, 0, 1)
    for u in sorted(new_knots_eta):
        ky, Pw = insert_knot_curve(ky, Pw, float(u))
    Pw = np.swapaxes(Pw, 0, 1)
    return _from_homogeneous(patch, kx, ky, Pw)


def elevate_degree(patch, target_p: int, target_q: int | None = None):
    """Elevate the patch to degrees (target_p, target_q); geometry is unchanged."""
    if target_q is None:
        target_q = target_p
    tx = target_p - patch.kv_xi.degree
    ty = target_q - patch.kv_eta.degree
    if tx < 0 or ty < 0:
        raise ValueError(
            f"target degree ({target_p}, {target_q}) below current "
            f"({patch.kv_xi.degree}, {patch.kv_eta.degree})")
    Pw = _homogeneous(patch)
    kx, Pw = elevate_curve(patch.kv_xi, Pw, tx)
    Pw = np.swapaxes(Pw, 0, 1)
    ky, Pw = elevate_curve(patch.kv_eta, Pw, ty)
    Pw = np.swapaxes(Pw, 0, 1)
    return _from_homogeneous(patch, kx, ky, Pw)


def uniform_refine(patch, n_el_xi: int, n_el_eta: int | None = None):
    """Insert knots so that every parametric direction reaches a uniform mesh.

    Existing interior breaks must be a subset of the uniform target breaks.
    """
    if n_el_eta is None:
        n_el_eta = n_el_xi

    def missing(kv, n_el):
        target = np.arange(1, n_el) / n_el
        have = kv.breaks()[1:-1]
        for h in have:
            if not np.any(np.isclose(target, h, atol=1e-13)):
                raise ValueError(f"existing knot {h} not on the uniform {n_el}-element grid")
        return [t for t in target if not np.any(np.isclose(have, t, atol=1e-13))]

    return h_refine(patch, missing(patch.kv_xi, n_el_xi), missing(patch.kv_eta, n_el_eta))
