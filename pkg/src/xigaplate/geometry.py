"""NURBS patches for the plate geometries and the map to physical space."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .splines import (
    DomainError,
    KnotVector,
    elevate_degree,
    tensor_nurbs,
    uniform_refine,
)


class SingularMapError(ArithmeticError):
    """Jacobian of the geometry map vanishes at an evaluation point."""


@dataclass(frozen=True)
class Patch:
    """Tensor-product NURBS surface in the plane.

    ``control_points`` has shape ``(n_xi, n_eta, 2)`` and ``weights`` shape
    ``(n_xi, n_eta)``. Flat control-point id is ``i * n_eta + j``.
    """

    kv_xi: KnotVector
    kv_eta: KnotVector
    control_points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.control_points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "control_points", P)
        object.__setattr__(self, "weights", w)
        shape = (self.kv_xi.n_basis, self.kv_eta.n_basis)
        if P.shape != shape + (2,) or w.shape != shape:
            raise ValueError(
                f"control net {P.shape[:2]} / weights {w.shape} do not match "
                f"knot vectors {shape}")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def n_cp(self) -> int:
        return self.weights.size

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv_xi.degree, self.kv_eta.degree

    def flat(self, i, j):
        return np.asarray(i) * self.shape[1] + np.asarray(j)

    def cp_coords(self) -> np.ndarray:
        """Control point coordinates in flat-id order, shape ``(n_cp, 2)``."""
        return self.control_points.reshape(-1, 2)

    def scale(self) -> float:
        P = self.cp_coords()
        return float(np.max(P.max(axis=0) - P.min(axis=0)))

    def elements(self) -> list["Element"]:
        """All nonzero-area elements, xi index major."""
        out = []
        bx, by = self.kv_xi.knots, self.kv_eta.knots
        for a, si in enumerate(self.kv_xi.element_spans()):
            for b, sj in enumerate(self.kv_eta.element_spans()):
                out.append(Element(len(out), a, b, int(si), int(sj),
                                   (bx[si], bx[si + 1]), (by[sj], by[sj + 1])))
        return out

    def element_cps(self, el: "Element") -> np.ndarray:
        p, q = self.degrees
        ii = np.arange(el.span_i - p, el.span_i + 1)
        jj = np.arange(el.span_j - q, el.span_j + 1)
        return (ii[:, None] * self.shape[1] + jj[None, :]).ravel()

    def map(self, xi, eta) -> np.ndarray:
        """Physical coordinates of parameter points (vectorized), shape ``(npts, 2)``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        xi, eta = np.broadcast_arrays(xi, eta)
        out = np.empty(xi.shape + (2,))
        si = self.kv_xi.find_span(xi)
        sj = self.kv_eta.find_span(eta)
        P = self.cp_coords()
        keys = si * (self.kv_eta.n_basis + 1) + sj
        for key in np.unique(keys):
            sel = keys == key
            a, b = int(si[sel][0]), int(sj[sel][0])
            idx, d = tensor_nurbs(self.kv_xi, self.kv_eta, self.weights,
                                  a, b, xi[sel], eta[sel])
            out[sel] = d[0] @ P[self.flat(idx[:, 0], idx[:, 1])]
        return out

    def inverse_map(self, point, tol: float = 1e-13, max_iter: int = 60):
        """Parameter (xi, eta) whose image is ``point`` (Newton iteration)."""
        point = np.asarray(point, dtype=float)
        g = np.linspace(0.0, 1.0, 41)
        G = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
        X = self.map(G[:, 0], G[:, 1])
        u = G[np.argmin(np.sum((X - point) ** 2, axis=1))].copy()
        eps = 1e-9
        for _ in range(max_iter):
            u = np.clip(u, 0.0, 1.0)
            ph = physical_basis(self, u[0:1], u[1:2], check=False)
            r = ph.x[0] - point
            if np.linalg.norm(r) < tol * max(1.0, self.scale()):
                return u
            Jm = ph.jac[0]
            du = np.linalg.solve(Jm.T, -r)
            u = u + du
            if np.linalg.norm(du) < eps * 1e-4:
                break
        u = np.clip(u, 0.0, 1.0)
        if np.linalg.norm(self.map(u[0], u[1])[0] - point) > 1e-9 * max(1.0, self.scale()):
            raise DomainError(f"point {point.tolist()} is not inside the patch")
        return u


class Element(NamedTuple):
    id: int
    a: int
    b: int
    span_i: int
    span_j: int
    xi_range: tuple
    eta_range: tuple

    @property
    def param_area(self) -> float:
        return (self.xi_range[1] - self.xi_range[0]) * (self.eta_range[1] - self.eta_range[0])


@dataclass(frozen=True)
class PhysBasis:
    """Basis functions and physical derivatives at one or more points.

    Arrays have leading point axis ``npts`` and trailing local axis ``nloc``.
    """

    indices: np.ndarray
    R: np.ndarray
    R_x: np.ndarray
    R_y: np.ndarray
    R_xx: np.ndarray
    R_yy: np.ndarray
    R_xy: np.ndarray
    J: np.ndarray
    x: np.ndarray
    jac: np.ndarray


def physical_basis(patch: Patch, xi, eta, span_i=None, span_j=None, check: bool = True) -> PhysBasis:
    """Push the rational basis of one element to physical space (vectorized).

    All points must lie in the same element; spans are inferred from the
    first point when not given.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if span_i is None:
        span_i = int(patch.kv_xi.find_span(xi[0]))
    if span_j is None:
        span_j = int(patch.kv_eta.find_span(eta[0]))
    idx, d = tensor_nurbs(patch.kv_xi, patch.kv_eta, patch.weights, span_i, span_j, xi, eta)
    flat = patch.flat(idx[:, 0], idx[:, 1])
    P = patch.cp_coords()[flat]
    R, Rxi, Reta, Rxixi, Retaeta, Rxieta = d
    x = R @ P
    xxi, xeta = Rxi @ P, Reta @ P
    xxixi, xetaeta, xxieta = Rxixi @ P, Retaeta @ P, Rxieta @ P
    # jac[q] = [[x_xi, y_xi], [x_eta, y_eta]]
    jac = np.stack([xxi, xeta], axis=1)
    detJ = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    if check:
        bad = np.abs(detJ) < 1e-14 * patch.scale() ** 2
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularMapError(
                f"singular geometry map at (xi, eta) = ({xi[k]:.6g}, {eta[k]:.6g})")
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1] / detJ
    inv[:, 1, 1] = jac[:, 0, 0] / detJ
    inv[:, 0, 1] = -jac[:, 0, 1] / detJ
    inv[:, 1, 0] = -jac[:, 1, 0] / detJ
    dpar = np.stack([Rxi, Reta], axis=1)              # (npts, 2, nloc)
    dphys = np.einsum("qij,qjk->qik", inv, dpar)
    Rx, Ry = dphys[:, 0], dphys[:, 1]

    # second-order chain rule: T @ [R_xx, R_xy, R_yy] = rhs
    a, b = xxi[:, 0], xxi[:, 1]
    c, e = xeta[:, 0], xeta[:, 1]
    T = np.empty((len(xi), 3, 3))
    T[:, 0] = np.stack([a * a, 2 * a * b, b * b], -1)
    T[:, 1] = np.stack([c * c, 2 * c * e, e * e], -1)
    T[:, 2] = np.stack([a * c, a * e + b * c, b * e], -1)
    rhs = np.stack([
        Rxixi - xxixi[:, 0:1] * Rx - xxixi[:, 1:2] * Ry,
        Retaeta - xetaeta[:, 0:1] * Rx - xetaeta[:, 1:2] * Ry,
        Rxieta - xxieta[:, 0:1] * Rx - xxieta[:, 1:2] * Ry,
    ], axis=1)
    sec = np.linalg.solve(T, rhs)
    return PhysBasis(flat, R, Rx, Ry, sec[:, 0], sec[:, 2], sec[:, 1], detJ, x, jac)


def physical_derivatives(patch: Patch, xi: float, eta: float) -> PhysBasis:
    """Physical basis derivatives up to second order at a single point."""
    ph = physical_basis(patch, [xi], [eta])
    return PhysBasis(ph.indices, ph.R[0], ph.R_x[0], ph.R_y[0], ph.R_xx[0],
                     ph.R_yy[0], ph.R_xy[0], ph.J[0], ph.x[0], ph.jac[0])


# ----------------------------------------------------------------------
# Benchmark geometries
# ----------------------------------------------------------------------

def _require_c1(p: int):
    if p < 2:
        raise ValueError(f"HSDT requires C1 continuity: degree must be >= 2, got {p}")


def _finish(patch: Patch, p: int, n_el: int) -> Patch:
    return uniform_refine(elevate_degree(patch, p), n_el)


def square_patch(L: float, W: float, p: int, n_el: int, n_el_eta: int | None = None) -> Patch:
    """Rectangle [0, L] x [0, W] with ``n_el`` x ``n_el`` elements of degree ``p``."""
    _require_c1(p)
    if L <= 0 or W <= 0:
        raise ValueError("plate dimensions must be positive")
    kv = KnotVector([0, 0, 1, 1], 1)
    P = np.array([[[0.0, 0.0], [0.0, W]], [[L, 0.0], [L, W]]])
    base = Patch(kv, kv, P, np.ones((2, 2)))
    return uniform_refine(elevate_degree(base, p), n_el, n_el if n_el_eta is None else n_el_eta)


def circular_patch(R: float, p: int, n_el: int) -> Patch:
    """Full disc of radius ``R`` as one rational patch (square-to-circle net)."""
    _require_c1(p)
    if R <= 0:
        raise ValueError("radius must be positive")
    s = np.sqrt(0.5)
    kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
    P = R * np.array([
        [[-s, -s], [-np.sqrt(2), 0.0], [-s, s]],
        [[0.0, -np.sqrt(2)], [0.0, 0.0], [0.0, np.sqrt(2)]],
        [[s, -s], [np.sqrt(2), 0.0], [s, s]],
    ])
    w = np.array([[1.0, s, 1.0], [s, 1.0, s], [1.0, s, 1.0]])
    return _finish(Patch(kv, kv, P, w), p, n_el)


def half_annulus_patch(R: float, r: float, p: int, n_el: int) -> Patch:
    """Upper half annulus ``r <= |x| <= R, y >= 0``.

    The circumferential direction (xi, from angle 0 to pi) is one rational
    cubic segment, so the basis has no interior C0 line; eta runs from the
    outer arc (eta = 0) to the inner arc (eta = 1), which keeps J > 0.
    """
    if not 0 < r < R:
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    if p < 3:
        raise ValueError("half annulus is exact only for degree >= 3 (cubic semicircle)")
    arc = np.array([[1.0, 0.0], [1.0, 2.0], [-1.0, 2.0], [-1.0, 0.0]])
    wa = np.array([1.0, 1 / 3, 1 / 3, 1.0])
    P = np.stack([R * arc, r * arc], axis=1)
    w = np.stack([wa, wa], axis=1)
    base = Patch(KnotVector([0, 0, 0, 0, 1, 1, 1, 1], 3), KnotVector([0, 0, 1, 1], 1), P, w)
    return _finish(base, p, n_el)


# ----------------------------------------------------------------------
# Plain-text control net
# ----------------------------------------------------------------------

def dump_patch(patch: Patch) -> str:
    """Control net as text: header with degrees and knots, then ``x y w`` rows."""
    p, q = patch.degrees
    lines = [
        "# xigaplate control net v1",
        f"degrees {p} {q}",
        f"knots_xi {len(patch.kv_xi.knots)} " + " ".join(repr(float(k)) for k in patch.kv_xi.knots),
        f"knots_eta {len(patch.kv_eta.knots)} " + " ".join(repr(float(k)) for k in patch.kv_eta.knots),
        f"shape {patch.shape[0]} {patch.shape[1]}",
    ]
    P, w = patch.cp_coords(), patch.weights.ravel()
    lines += [f"{float(P[k, 0])!r} {float(P[k, 1])!r} {float(w[k])!r}" for k in range(patch.n_cp)]
    return "\n".join(lines) + "\n"


def load_patch(text: str) -> Patch:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    head = {r[0]: r[1:] for r in rows[:4]}
    p, q = map(int, head["degrees"])
    kx = [float(v) for v in head["knots_xi"][1:]]
    ky = [float(v) for v in head["knots_eta"][1:]]
    n, m = map(int, head["shape"])
    data = np.array([[float(v) for v in r] for r in rows[4:]])
    return Patch(KnotVector(kx, p), KnotVector(ky, q),
                 data[:, :2].reshape(n, m, 2), data[:, 2].reshape(n, m))
