"""Boundary conditions, the generalized eigenproblem and frequency normalization."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import N_FIELDS, AssembledSystem, DofMap, element_shapes, uses_rotations
from .crack import EnrichmentPlan
from .geometry import Patch
from .material import MaterialLaw, PlateTheory

log = logging.getLogger(__name__)

EDGES = ("xi0", "xi1", "eta0", "eta1")
CONDITIONS = ("free", "ss", "ss_soft", "clamped", "symmetry")


class ConstraintError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BoundarySpec:
    """Condition per patch edge: free, ss (hard), ss_soft, clamped or symmetry."""

    edges: dict

    def __post_init__(self):
        for e, c in self.edges.items():
            if e not in EDGES:
                raise ConstraintError(f"unknown edge {e!r}; expected one of {EDGES}")
            if c not in CONDITIONS:
                raise ConstraintError(f"unknown boundary condition {c!r} on {e}")

    def condition(self, edge: str) -> str:
        return self.edges.get(edge, "free")


def _edge_rows(patch: Patch, edge: str):
    n, m = patch.shape
    if edge == "xi0":
        return patch.flat(0, np.arange(m)), patch.flat(1, np.arange(m))
    if edge == "xi1":
        return patch.flat(n - 1, np.arange(m)), patch.flat(n - 2, np.arange(m))
    if edge == "eta0":
        return patch.flat(np.arange(n), 0), patch.flat(np.arange(n), 1)
    return patch.flat(np.arange(n), m - 1), patch.flat(np.arange(n), m - 2)


def _edge_axis(patch: Patch, cps) -> int:
    """0 if the edge runs along x, 1 if along y; error if not axis aligned."""
    P = patch.cp_coords()[cps]
    span = np.ptp(P, axis=0)
    L = patch.scale()
    if span[1] < 1e-12 * L:
        return 0
    if span[0] < 1e-12 * L:
        return 1
    raise ConstraintError("simply supported / symmetry edges must be straight and axis aligned")


@dataclass
class ConstraintRecord:
    """Map ``d_full = T @ q_reduced`` with bookkeeping of fixed and tied unknowns."""

    T: sps.csr_matrix
    fixed: np.ndarray
    ties: dict
    free: np.ndarray


def apply_constraints(system: AssembledSystem, spec: BoundarySpec, patch: Patch,
                      theory: PlateTheory, constrain_enriched: bool = True):
    """Eliminate Dirichlet unknowns and tie slope-constrained rows.

    With ``constrain_enriched`` the enriched unknowns of a constrained
    control point receive the same conditions as its standard ones, so both
    crack faces satisfy the boundary condition.

    Returns reduced ``(K, M)`` and the :class:`ConstraintRecord`.
    """
    dm = system.dofmap
    zero: set[int] = set(int(i) for i in system.pruned)
    ties: dict[int, int] = {}
    rotations = uses_rotations(theory)

    def fix(cps, fields):
        for cp in cps:
            for f in fields:
                zero.add(int(dm.std(cp, f)))
                if constrain_enriched:
                    zero.update(dm.enriched_ids(int(cp), f))

    def tie(slaves, masters):
        for s, mst in zip(slaves, masters):
            s_ids = [int(dm.std(s, 2))]
            m_ids = [int(dm.std(mst, 2))]
            if constrain_enriched:
                s_ids += dm.enriched_ids(int(s), 2)
                m_ids += dm.enriched_ids(int(mst), 2)
            if len(s_ids) != len(m_ids):
                raise ConstraintError(
                    f"cannot tie control points {s} and {mst}: different enrichment")
            for a, b in zip(s_ids, m_ids):
                if a == b:
                    raise ConstraintError(f"unknown {a} tied to itself")
                ties.setdefault(a, b)
                pairs.append((a, b))

    pairs: list[tuple[int, int]] = []
    for edge in EDGES:
        cond = spec.condition(edge)
        if cond == "free":
            continue
        bnd, adj = _edge_rows(patch, edge)
        if cond == "clamped":
            fix(bnd, range(N_FIELDS))
            if not rotations:
                tie(adj, bnd)
        elif cond == "ss":
            ax = _edge_axis(patch, bnd)
            fix(bnd, (2, ax, 3 + ax))
        elif cond == "ss_soft":
            fix(bnd, (2,))
        elif cond == "symmetry":
            ax = _edge_axis(patch, bnd)
            normal = 1 - ax
            fix(bnd, (normal, 3 + normal))
            if not rotations:
                tie(adj, bnd)

    # ties form equivalence groups; a group touching a fixed unknown is fixed
    n = dm.n_dof
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n)])
    fixed_roots = {int(roots[a]) for a in zero}
    zero |= {a for a in range(n) if int(roots[a]) in fixed_roots}
    zmask = np.zeros(n, dtype=bool)
    zmask[list(zero)] = True
    free = np.nonzero(~zmask & (roots == np.arange(n)))[0]
    col = -np.ones(n, dtype=int)
    col[free] = np.arange(free.size)
    rows = np.nonzero(~zmask)[0]
    cols = col[roots[rows]]
    T = sps.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, free.size))
    Kr = (T.T @ system.K @ T).tocsr()
    Mr = (T.T @ system.M @ T).tocsr()
    rec = ConstraintRecord(T, np.array(sorted(zero), dtype=int), dict(ties), free)
    return Kr, Mr, rec


@dataclass
class ModalResult:
    omega: np.ndarray                 # rad/s, ascending
    vectors: np.ndarray               # (n_dof_full, n_modes), mass normalized
    normalized: np.ndarray | None = None
    convention: str = "rad_s"
    residuals: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)


def _residuals(K, M, lam, vec):
    Kv, Mv = K @ vec, M @ vec
    return np.linalg.norm(Kv - Mv * lam, axis=0) / (
        np.linalg.norm(Kv, axis=0) + lam * np.linalg.norm(Mv, axis=0) + 1e-300)


def _shift_invert(K, M, k):
    """Jacobi-scaled shift-invert Lanczos, re-shifted once near the lowest mode."""
    d = K.diagonal().copy()
    d[d <= 0] = 1.0
    S = sps.diags(1.0 / np.sqrt(d))
    Ks, Ms = (S @ K @ S).tocsc(), (S @ M @ S).tocsc()
    shift = -1e-8 * abs(Ks.diagonal()).mean() / abs(Ms.diagonal()).mean()
    lam = vec = None
    for _ in range(2):
        try:
            lam, vec = spla.eigsh(Ks, k=k, M=Ms, sigma=shift, which="LM", tol=1e-14)
        except spla.ArpackNoConvergence as exc:
            raise NumericalError(f"eigensolver did not converge: {exc}") from None
        except RuntimeError as exc:
            raise NumericalError(f"shifted factorization failed: {exc}") from None
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
        pos = lam[lam > 1e-8 * abs(shift)]
        if pos.size == 0 or _residuals(Ks, Ms, lam, vec).max() < 1e-10:
            break
        shift = -0.1 * pos[0]
    vec = S @ vec
    vec = vec / np.sqrt(np.einsum("ij,ij->j", vec, M @ vec))
    return lam, vec


def solve_modal(K, M, n_modes: int, T: sps.spmatrix | None = None, w_dofs=None,
                method: str = "auto", drop_zero: bool = True) -> ModalResult:
    """Lowest ``n_modes`` eigenpairs of ``K d = omega^2 M d``.

    ``T`` maps reduced vectors back to the full numbering; ``w_dofs`` are the
    full ids used to fix the eigenvector sign.
    """
    n = K.shape[0]
    k = min(n_modes + 6, n - 1)
    if method == "auto":
        # shift-invert is both faster and far more accurate than a dense
        # reduction when membrane and bending stiffness differ by 1e6
        method = "dense" if n <= 60 else "sparse"
    if method == "dense":
        Kd = K.toarray() if sps.issparse(K) else np.asarray(K)
        Md = M.toarray() if sps.issparse(M) else np.asarray(M)
        try:
            lam, vec = sla.eigh(Kd, Md, subset_by_index=[0, k - 1])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"mass matrix not positive definite after constraints: {exc}")
    elif method == "sparse":
        lam, vec = _shift_invert(sps.csc_matrix(K), sps.csc_matrix(M), k)
    else:
        raise ValueError(f"unknown eigen method {method!r}")

    scale = abs(K.diagonal()).mean() / abs(M.diagonal()).mean()
    small = lam < 1e-8 * scale
    if np.any(lam < -1e-10 * scale):
        warnings.warn("negative eigenvalues beyond round-off", stacklevel=2)
    if drop_zero and np.any(small):
        log.warning("%d near-zero eigenvalues dropped", int(small.sum()))
        lam, vec = lam[~small], vec[:, ~small]
    lam = np.clip(lam, 0.0, None)
    lam, vec = lam[:n_modes], vec[:, :n_modes]

    res = _residuals(K, M, lam, vec)

    full = vec if T is None else T @ vec
    if w_dofs is not None and full.size:
        w = full[np.asarray(w_dofs)]
        pick = np.argmax(np.abs(w), axis=0)
        sgn = np.sign(w[pick, np.arange(w.shape[1])])
        sgn[sgn == 0] = 1
        full = full * sgn
    return ModalResult(np.sqrt(lam), full, residuals=res)


# ----------------------------------------------------------------------
# Normalization
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GeometrySpec:
    kind: str                 # square | circle | half_annulus
    L: float | None = None
    W: float | None = None
    R: float | None = None
    r: float | None = None


CONVENTIONS = ("rad_s", "hsdt_bar", "cpt_hat", "annular_tilde")


def _factor(convention: str, geom: GeometrySpec, law: MaterialLaw) -> float:
    c, h = law.ceramic, law.h
    if convention == "rad_s":
        return 1.0
    if convention == "annular_tilde":
        if geom.kind != "half_annulus":
            raise ValueError("annular_tilde normalization requires an annular plate")
        return (geom.R - geom.r) ** 2 / h * np.sqrt(c.rho / c.E)
    if geom.kind == "square":
        W, L = geom.W, geom.L
    elif geom.kind == "circle":
        W = L = geom.R
    else:
        raise ValueError(f"{convention} normalization is not defined for {geom.kind}")
    if convention == "hsdt_bar":
        return W**2 / h * np.sqrt(c.rho / c.E)
    if convention == "cpt_hat":
        D = c.E * h**3 / (12 * (1 - c.nu**2))
        return L**2 * np.sqrt(c.rho * h / D)
    raise ValueError(f"unknown normalization {convention!r}; expected one of {CONVENTIONS}")


def normalize(omega, convention: str, geom: GeometrySpec, law: MaterialLaw):
    return np.asarray(omega) * _factor(convention, geom, law)


def denormalize(value, convention: str, geom: GeometrySpec, law: MaterialLaw):
    return np.asarray(value) / _factor(convention, geom, law)


# ----------------------------------------------------------------------
# Mode shapes and CSV
# ----------------------------------------------------------------------

def sample_mode_shape(patch: Patch, dofmap: DofMap, plan: EnrichmentPlan, vector,
                      n_xi: int = 41, n_eta: int = 41, tip_mode: str = "independent") -> np.ndarray:
    """Deflection on a parameter grid, shape ``(n_xi, n_eta, 3)`` of ``(x, y, w)``.

    Enriched shapes are included, so the jump across the crack appears.
    """
    vector = np.asarray(vector, dtype=float)
    u = np.linspace(0, 1, n_xi)
    v = np.linspace(0, 1, n_eta)
    U, V = np.meshgrid(u, v, indexing="ij")
    U, V = U.ravel(), V.ravel()
    si = patch.kv_xi.find_span(U)
    sj = patch.kv_eta.find_span(V)
    out = np.zeros((U.size, 3))
    els = {(e.span_i, e.span_j): e for e in patch.elements()}
    for key in set(zip(si.tolist(), sj.tolist())):
        sel = np.nonzero((si == key[0]) & (sj == key[1]))[0]
        with np.errstate(all="ignore"):
            ph, shapes = element_shapes(patch, els[key], U[sel], V[sel], plan, dofmap,
                                        strict=False, tip_mode=tip_mode)
        S = np.nan_to_num(shapes[2].S[0])
        out[sel, :2] = ph.x
        out[sel, 2] = S @ vector[shapes[2].ids]
    return out.reshape(n_xi, n_eta, 3)


def write_modal_csv(result: ModalResult, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["mode", "omega_rad_s", "normalized", "convention"])
        norm = result.normalized if result.normalized is not None else result.omega
        for k, (om, nv) in enumerate(zip(result.omega, norm), start=1):
            wr.writerow([k, f"{om:.12e}", f"{nv:.12e}", result.convention])


def read_modal_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(int(r["mode"]), float(r["omega_rad_s"]), float(r["normalized"]), r["convention"])
            for r in rows]


def write_grid_csv(grid: np.ndarray, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "w"])
        for x, y, w in grid.reshape(-1, 3):
            wr.writerow([f"{x:.12e}", f"{y:.12e}", f"{w:.12e}"])
