"""Straight cracks: enrichment functions, node classification and quadrature.

Heaviside-enriched control points carry five extra unknowns; tip-enriched
control points carry twenty (four branch functions for each of the five
fields). The ``r^{3/2}`` branch set multiplies ``(u0, v0, w)`` and the
``r^{1/2}`` set multiplies ``(beta_x, beta_y)``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

log = logging.getLogger(__name__)

STANDARD, CUT, TIP, BLEND = "standard", "cut", "tip", "blend"


class AmbiguousSideError(ValueError):
    """Evaluation point lies on the crack line."""


class GeometryDegeneracyError(ValueError):
    """Crack passes through an element corner or runs along an element edge."""


@dataclass(frozen=True)
class CrackModel:
    """Straight crack segment ``start -> end``.

    ``tips`` flags which endpoints are crack tips (interior points of the
    plate); an endpoint on the plate boundary is a crack mouth.
    """

    start: tuple
    end: tuple
    tips: tuple = (True, True)

    def __post_init__(self):
        a = np.asarray(self.start, dtype=float)
        b = np.asarray(self.end, dtype=float)
        if np.linalg.norm(b - a) == 0:
            raise ValueError("crack has zero length")
        object.__setattr__(self, "start", tuple(map(float, a)))
        object.__setattr__(self, "end", tuple(map(float, b)))
        object.__setattr__(self, "tips", tuple(bool(t) for t in self.tips))

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.end, self.start)))

    @property
    def tangent(self) -> np.ndarray:
        d = np.subtract(self.end, self.start)
        return d / np.linalg.norm(d)

    @property
    def normal(self) -> np.ndarray:
        t = self.tangent
        return np.array([-t[1], t[0]])

    def tip_frames(self) -> list["TipFrame"]:
        frames = []
        if self.tips[0]:
            frames.append(TipFrame(np.array(self.start), -self.tangent))
        if self.tips[1]:
            frames.append(TipFrame(np.array(self.end), self.tangent))
        return frames

    def signed_distance(self, x) -> np.ndarray:
        """``(x - x*) . n`` with ``x*`` the projection clamped to the segment."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        a = np.asarray(self.start)
        s = np.clip((x - a) @ self.tangent, 0.0, self.length)
        xstar = a + s[:, None] * self.tangent
        return (x - xstar) @ self.normal

    def along(self, x) -> np.ndarray:
        """Arc-length coordinate of the projection on the infinite line."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return (x - np.asarray(self.start)) @ self.tangent


def heaviside(crack: CrackModel, x, scale: float = 1.0, strict: bool = True) -> np.ndarray:
    """+1 above the crack (along its normal), -1 below (vectorized)."""
    d = crack.signed_distance(x)
    if strict and np.any(np.abs(d) < 1e-14 * scale):
        raise AmbiguousSideError("point lies on the crack line")
    return np.where(d > 0, 1.0, -1.0)


@dataclass(frozen=True)
class TipFrame:
    """Crack-tip frame; ``direction`` is the unit vector pointing ahead of the tip."""

    tip: np.ndarray
    direction: np.ndarray

    @property
    def rotation(self) -> np.ndarray:
        c, s = self.direction
        return np.array([[c, s], [-s, c]])

    def polar(self, x):
        """``(r, theta)`` with theta in (-pi, pi]; theta = +-pi on the crack faces."""
        loc = (np.atleast_2d(np.asarray(x, dtype=float)) - self.tip) @ self.rotation.T
        r = np.hypot(loc[:, 0], loc[:, 1])
        th = np.arctan2(loc[:, 1], loc[:, 0])
        return r, th


def _angular(theta, kind: str):
    """Angular factors g_L(theta) with first and second derivatives, each (npts, 4)."""
    s1, c1 = np.sin(theta / 2), np.cos(theta / 2)
    if kind == "translation":
        s3, c3 = np.sin(1.5 * theta), np.cos(1.5 * theta)
        g = np.stack([s1, c1, s3, c3], -1)
        dg = np.stack([0.5 * c1, -0.5 * s1, 1.5 * c3, -1.5 * s3], -1)
        d2g = np.stack([-0.25 * s1, -0.25 * c1, -2.25 * s3, -2.25 * c3], -1)
        return 1.5, g, dg, d2g
    if kind == "rotation":
        st, ct = np.sin(theta), np.cos(theta)
        g = np.stack([s1, c1, s1 * st, c1 * ct], -1)
        dg = np.stack([0.5 * c1, -0.5 * s1,
                       0.5 * c1 * st + s1 * ct,
                       -0.5 * s1 * ct - c1 * st], -1)
        d2g = np.stack([-0.25 * s1, -0.25 * c1,
                        -1.25 * s1 * st + c1 * ct,
                        -1.25 * c1 * ct + s1 * st], -1)
        return 0.5, g, dg, d2g
    raise ValueError(f"unknown branch kind {kind!r}")


def branch_functions(frame: TipFrame, x, kind: str = "translation", strict: bool = True):
    """Four branch functions with global gradients and Hessians.

    Returns
    -------
    F : (npts, 4)
    dF : (npts, 4, 2)  -- d/dx, d/dy
    d2F : (npts, 4, 3) -- xx, yy, xy
    """
    r, th = frame.polar(x)
    if strict and np.any(r == 0):
        raise ZeroDivisionError("branch function derivatives are singular at the tip")
    lam, g, dg, d2g = _angular(th, kind)
    r = r[:, None]
    c, s = np.cos(th)[:, None], np.sin(th)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        rl = r**lam
        F = rl * g
        Fr = lam * r ** (lam - 1) * g
        Ft = rl * dg
        Frr = lam * (lam - 1) * r ** (lam - 2) * g
        Frt = lam * r ** (lam - 1) * dg
        Ftt = rl * d2g
        fx = c * Fr - s / r * Ft
        fy = s * Fr + c / r * Ft
        fxx = (c * c * Frr + s * s / r * Fr - 2 * c * s / r * Frt
               + 2 * c * s / r**2 * Ft + s * s / r**2 * Ftt)
        fyy = (s * s * Frr + c * c / r * Fr + 2 * c * s / r * Frt
               - 2 * c * s / r**2 * Ft + c * c / r**2 * Ftt)
        fxy = (c * s * Frr - c * s / r * Fr + (c * c - s * s) / r * Frt
               - (c * c - s * s) / r**2 * Ft - c * s / r**2 * Ftt)
    Q = frame.rotation                       # local = Q @ global
    dloc = np.stack([fx, fy], -1)
    dF = dloc @ Q
    Hl = np.empty(F.shape + (2, 2))
    Hl[..., 0, 0], Hl[..., 1, 1] = fxx, fyy
    Hl[..., 0, 1] = Hl[..., 1, 0] = fxy
    Hg = np.einsum("ai,...ab,bj->...ij", Q, Hl, Q)
    d2F = np.stack([Hg[..., 0, 0], Hg[..., 1, 1], Hg[..., 0, 1]], -1)
    return F, dF, d2F


def shifted_enrichment(R, enr_val, enr_node):
    """Shifted product ``R_J (F(x) - F(x_J))`` with derivatives.

    Parameters
    ----------
    R : sequence of six arrays ``(R, R_x, R_y, R_xx, R_yy, R_xy)``
    enr_val : sequence of six arrays with the same layout for ``F``
        (derivatives may be zero, e.g. Heaviside).
    enr_node : array broadcastable to ``R[0]``, value ``F(x_J)``.

    Returns
    -------
    six arrays in the same layout.
    """
    N, Nx, Ny, Nxx, Nyy, Nxy = R
    F, Fx, Fy, Fxx, Fyy, Fxy = enr_val
    D = F - enr_node
    return (N * D,
            Nx * D + N * Fx,
            Ny * D + N * Fy,
            Nxx * D + 2 * Nx * Fx + N * Fxx,
            Nyy * D + 2 * Ny * Fy + N * Fyy,
            Nxy * D + Nx * Fy + Ny * Fx + N * Fxy)


# ----------------------------------------------------------------------
# Classification
# ----------------------------------------------------------------------

@dataclass
class ElementCrackInfo:
    kind: str
    crossings: list = field(default_factory=list)   # parametric points on the element boundary
    tip_param: np.ndarray | None = None
    tip_index: int | None = None


@dataclass
class EnrichmentPlan:
    """Enriched control-point sets and per-element crack classification."""

    crack: CrackModel | None
    heaviside_nodes: list                 # sorted flat cp ids (S^c)
    tip_nodes: dict                       # tip index -> sorted cp ids (S^f)
    elements: dict                        # element id -> ElementCrackInfo (non-standard only)
    frames: list
    node_heaviside: dict = field(default_factory=dict)     # cp -> H(x_J)
    node_branch: dict = field(default_factory=dict)        # (tip, cp) -> (G_trans(4), G_rot(4))

    def kind(self, el_id: int) -> str:
        info = self.elements.get(el_id)
        return STANDARD if info is None else info.kind

    @property
    def is_empty(self) -> bool:
        return not self.heaviside_nodes and not any(self.tip_nodes.values())

    def counts(self) -> dict:
        kinds = [i.kind for i in self.elements.values()]
        return {"cut": kinds.count(CUT), "tip": kinds.count(TIP), "blend": kinds.count(BLEND),
                "heaviside_nodes": len(self.heaviside_nodes),
                "tip_nodes": sum(len(v) for v in self.tip_nodes.values())}


def empty_plan() -> EnrichmentPlan:
    return EnrichmentPlan(None, [], {}, {}, [])


def _element_edges(el):
    (x0, x1), (y0, y1) = el.xi_range, el.eta_range
    corners = [np.array(c) for c in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    return [(corners[k], corners[(k + 1) % 4]) for k in range(4)]


def _edge_crossings(patch, crack, el, n_samples: int = 8):
    """Points on the element boundary where the crack segment crosses it."""
    out = []
    L = patch.scale()
    tol = 1e-12 * L
    n = crack.normal
    a = np.asarray(crack.start)
    for p0, p1 in _element_edges(el):
        t = np.linspace(0.0, 1.0, n_samples + 1)
        pts = p0 + t[:, None] * (p1 - p0)
        phi = (patch.map(pts[:, 0], pts[:, 1]) - a) @ n
        if np.all(np.abs(phi) < tol):
            raise GeometryDegeneracyError(
                f"crack runs along an edge of element {el.id}; use a mesh whose "
                "knot lines do not coincide with the crack")

        def fun(s):
            q = p0 + s * (p1 - p0)
            return float((patch.map(q[0], q[1])[0] - a) @ n)

        roots = [t[k] for k in range(1, n_samples) if abs(phi[k]) < tol]
        roots += [brentq(fun, t[k], t[k + 1], xtol=1e-15, rtol=4e-16)
                  for k in range(n_samples)
                  if abs(phi[k]) >= tol and abs(phi[k + 1]) >= tol and phi[k] * phi[k + 1] < 0]
        for s in roots:
            q = p0 + s * (p1 - p0)
            along = crack.along(patch.map(q[0], q[1]))[0]
            if -1e-12 * L <= along <= crack.length + 1e-12 * L:
                out.append(q)
        for k in (0, n_samples):
            if abs(phi[k]) < tol:
                along = crack.along(patch.map(pts[k, 0], pts[k, 1]))[0]
                if -1e-12 * L <= along <= crack.length + 1e-12 * L:
                    raise GeometryDegeneracyError(
                        f"crack passes through a corner of element {el.id}")
    return out


def _locate_tip(patch, frame: TipFrame):
    u = patch.inverse_map(frame.tip)
    tol = 1e-10
    on_line = any(np.min(np.abs(kv.breaks() - u[d])) < tol and 0 < u[d] < 1
                  for d, kv in enumerate((patch.kv_xi, patch.kv_eta)))
    if on_line:
        warnings.warn("crack tip on an element edge; perturbing along the crack tangent",
                      stacklevel=3)
        u = patch.inverse_map(frame.tip + 1e-10 * patch.scale() * frame.direction)
    return u


def classify(patch, crack: CrackModel | None) -> EnrichmentPlan:
    """Classify elements (standard / cut / tip / blend) and enriched control points."""
    if crack is None:
        return empty_plan()
    frames = crack.tip_frames()
    elements = patch.elements()
    info: dict[int, ElementCrackInfo] = {}

    tip_params = [_locate_tip(patch, f) for f in frames]
    for k, u in enumerate(tip_params):
        si = int(patch.kv_xi.find_span(u[0]))
        sj = int(patch.kv_eta.find_span(u[1]))
        for el in elements:
            if el.span_i == si and el.span_j == sj:
                if el.id in info:
                    raise GeometryDegeneracyError("two crack tips in one element")
                info[el.id] = ElementCrackInfo(TIP, tip_param=u, tip_index=k)

    for el in elements:
        cr = _edge_crossings(patch, crack, el)
        if el.id in info:
            info[el.id].crossings = cr
        elif len(cr) >= 2:
            if len(cr) > 2:
                raise GeometryDegeneracyError(f"crack crosses element {el.id} more than twice")
            info[el.id] = ElementCrackInfo(CUT, crossings=cr)

    tip_nodes = {k: set() for k in range(len(frames))}
    for el_id, inf in info.items():
        if inf.kind == TIP:
            tip_nodes[inf.tip_index].update(patch.element_cps(elements[el_id]).tolist())
    all_tip = set().union(*tip_nodes.values()) if tip_nodes else set()
    heav = set()
    for el_id, inf in info.items():
        if inf.kind == CUT:
            heav.update(patch.element_cps(elements[el_id]).tolist())
    heav -= all_tip

    # elements that carry tip functions but contain no crack need a richer rule
    for el in elements:
        if el.id not in info and all_tip.intersection(patch.element_cps(el).tolist()):
            info[el.id] = ElementCrackInfo(BLEND)

    plan = EnrichmentPlan(crack, sorted(heav), {k: sorted(v) for k, v in tip_nodes.items()},
                          info, frames)
    P = patch.cp_coords()
    scale = patch.scale()
    for cp in plan.heaviside_nodes:
        plan.node_heaviside[cp] = float(heaviside(crack, P[cp], scale, strict=False)[0])
    for k, cps in plan.tip_nodes.items():
        for cp in cps:
            Gt = branch_functions(frames[k], P[cp], "translation", strict=False)[0][0]
            Gr = branch_functions(frames[k], P[cp], "rotation", strict=False)[0][0]
            plan.node_branch[(k, cp)] = (np.nan_to_num(Gt), np.nan_to_num(Gr))
    log.info("crack classification: %s", plan.counts())
    return plan


# ----------------------------------------------------------------------
# Quadrature
# ----------------------------------------------------------------------

def gauss_rect(xr, yr, nx: int, ny: int):
    """Tensor Gauss rule on a parametric rectangle: (xi, eta, weight)."""
    gx, wx = leggauss(nx)
    gy, wy = leggauss(ny)
    hx, hy = 0.5 * (xr[1] - xr[0]), 0.5 * (yr[1] - yr[0])
    X = 0.5 * (xr[0] + xr[1]) + hx * gx
    Y = 0.5 * (yr[0] + yr[1]) + hy * gy
    XX, YY = np.meshgrid(X, Y, indexing="ij")
    W = np.outer(wx, wy) * hx * hy
    return XX.ravel(), YY.ravel(), W.ravel()


def gauss_triangle(a, b, c, n: int):
    """Collapsed tensor Gauss rule on triangle (a, b, c), points clustered at ``a``."""
    g, w = leggauss(n)
    u = 0.5 * (g + 1)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * U
    a, b, c = map(np.asarray, (a, b, c))
    e1, e2 = b - a, c - b
    det = abs(e1[0] * e2[1] - e1[1] * e2[0])
    P = a + U.ravel()[:, None] * e1 + (U * V).ravel()[:, None] * e2
    return P[:, 0], P[:, 1], W.ravel() * det


def _fan(center, poly):
    tris = []
    for k in range(len(poly)):
        a, b = poly[k], poly[(k + 1) % len(poly)]
        area = 0.5 * abs((a[0] - center[0]) * (b[1] - center[1]) - (a[1] - center[1]) * (b[0] - center[0]))
        if area > 1e-30:
            tris.append((center, a, b))
    return tris


def _boundary_polygon(el, extra):
    """Element rectangle corners plus extra boundary points, counter-clockwise."""
    (x0, x1), (y0, y1) = el.xi_range, el.eta_range
    cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    pts = [np.array(p, dtype=float) for p in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]
    pts += [np.asarray(p, dtype=float) for p in extra]
    ang = [np.arctan2(p[1] - cy, p[0] - cx) for p in pts]
    return [pts[k] for k in np.argsort(ang)]


def _split_polygon(poly, p, q):
    """Split a convex polygon by the chord p-q (both on its boundary)."""
    def idx(pt):
        return int(np.argmin([np.linalg.norm(v - pt) for v in poly]))
    i, j = sorted((idx(p), idx(q)))
    return poly[i:j + 1], poly[j:] + poly[:i + 1]


def enriched_quadrature(el, info: ElementCrackInfo | None, degree: tuple,
                        tip_order: int = 13, cut_order: int | None = None,
                        blend_order: int | None = None):
    """Parametric quadrature points and weights for one element.

    Standard elements use (p+1) x (q+1) Gauss points. Cut elements are split
    along the crack trace and each side is fan-triangulated. Tip elements are
    fan-triangulated from the tip so that no triangle straddles the crack.
    """
    p, q = degree
    kind = STANDARD if info is None else info.kind
    if kind == STANDARD:
        return gauss_rect(el.xi_range, el.eta_range, p + 1, q + 1)
    if kind == BLEND:
        n = blend_order or max(p, q) + 5
        return gauss_rect(el.xi_range, el.eta_range, n, n)
    pieces = []
    if kind == CUT:
        n = cut_order or max(p, q) + 3
        c0, c1 = info.crossings
        poly = _boundary_polygon(el, [c0, c1])
        for half in _split_polygon(poly, c0, c1):
            cen = np.mean(half, axis=0)
            pieces += [gauss_triangle(*t, n) for t in _fan(cen, half)]
    elif kind == TIP:
        poly = _boundary_polygon(el, info.crossings)
        pieces = [gauss_triangle(*t, tip_order) for t in _fan(info.tip_param, poly)]
    xs, ys, ws = zip(*pieces)
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)
