"""Stiffness and consistent mass assembly with standard and enriched shapes.

Unknowns per control point are ``(u0, v0, w, beta_x, beta_y)``. Global
numbering puts standard unknowns first (control-point major, field minor),
then Heaviside unknowns, then tip unknowns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps

from .crack import (
    STANDARD,
    EnrichmentPlan,
    branch_functions,
    empty_plan,
    enriched_quadrature,
    heaviside,
    shifted_enrichment,
)
from .geometry import Patch, physical_basis
from .material import ConstitutiveSet, PlateTheory

log = logging.getLogger(__name__)

N_FIELDS = 5
FIELDS = ("u0", "v0", "w", "beta_x", "beta_y")
TRANSLATION_FIELDS = (0, 1, 2)
TIP_MODES = ("independent", "summed")
BRANCH_KINDS = ("translation", "rotation")


@dataclass
class DofMap:
    """Global numbering of standard and enriched unknowns."""

    n_cp: int
    heaviside: dict = field(default_factory=dict)     # cp -> first id (5 ids)
    tip: dict = field(default_factory=dict)           # (tip, cp) -> first id (20 ids)
    n_dof: int = 0

    @classmethod
    def build(cls, n_cp: int, plan: EnrichmentPlan) -> "DofMap":
        dm = cls(n_cp)
        nxt = N_FIELDS * n_cp
        for cp in plan.heaviside_nodes:
            dm.heaviside[cp] = nxt
            nxt += N_FIELDS
        for k in sorted(plan.tip_nodes):
            for cp in plan.tip_nodes[k]:
                dm.tip[(k, cp)] = nxt
                nxt += 4 * N_FIELDS
        dm.n_dof = nxt
        return dm

    def std(self, cp, fld):
        return np.asarray(cp) * N_FIELDS + fld

    @property
    def n_std(self) -> int:
        return N_FIELDS * self.n_cp

    def dof_table(self):
        """Per-dof ``(cp, field, kind)`` arrays; kind 0 std, 1 Heaviside, 2 tip."""
        cp = np.empty(self.n_dof, dtype=int)
        fl = np.empty(self.n_dof, dtype=int)
        kind = np.empty(self.n_dof, dtype=int)
        s = np.arange(self.n_std)
        cp[s], fl[s], kind[s] = s // N_FIELDS, s % N_FIELDS, 0
        for c, b in self.heaviside.items():
            cp[b:b + 5], fl[b:b + 5], kind[b:b + 5] = c, np.arange(5), 1
        for (_, c), b in self.tip.items():
            cp[b:b + 20], fl[b:b + 20], kind[b:b + 20] = c, np.tile(np.arange(5), 4), 2
        ids = np.arange(self.n_dof)
        if len(np.unique(ids)) != self.n_dof:
            raise RuntimeError("dof id collision")
        return cp, fl, kind

    def enriched_ids(self, cp: int, fld: int) -> list[int]:
        out = []
        if cp in self.heaviside:
            out.append(self.heaviside[cp] + fld)
        for (k, c), b in self.tip.items():
            if c == cp:
                out += [b + L * N_FIELDS + fld for L in range(4)]
        return out


@dataclass
class FieldShapes:
    """Shape functions of one field at the evaluation points of one element."""

    ids: np.ndarray      # (k,)
    S: np.ndarray        # (6, npts, k): value, x, y, xx, yy, xy


def element_shapes(patch: Patch, el, xi, eta, plan: EnrichmentPlan, dofmap: DofMap,
                   strict: bool = True, tip_mode: str = "independent",
                   inplane_branch: str = "translation"):
    """Physical basis and per-field (standard + enriched) shapes at points of ``el``.

    ``tip_mode="independent"`` gives each of the four branch functions its own
    unknown; ``"summed"`` multiplies ``R_J`` by the sum of the four shifted
    branch functions and uses only the first of the four unknown slots.
    ``inplane_branch`` selects the branch set of ``u0, v0``: the ``r^{3/2}``
    set shared with ``w`` (``"translation"``) or the ``r^{1/2}`` set of the
    rotations (``"rotation"``).
    """
    if tip_mode not in TIP_MODES:
        raise ValueError(f"unknown tip_mode {tip_mode!r}; expected one of {TIP_MODES}")
    if inplane_branch not in BRANCH_KINDS:
        raise ValueError(f"unknown inplane_branch {inplane_branch!r}; expected one of {BRANCH_KINDS}")
    ph = physical_basis(patch, xi, eta, el.span_i, el.span_j)
    base = np.stack([ph.R, ph.R_x, ph.R_y, ph.R_xx, ph.R_yy, ph.R_xy])
    cps = ph.indices
    groups = (((0, 1), inplane_branch), ((2,), "translation"), ((3, 4), "rotation"))
    store = [[base] for _ in groups]
    ids_t = [[cps * N_FIELDS + c] for c in range(N_FIELDS)]

    if plan.heaviside_nodes:
        hsel = np.nonzero(np.isin(cps, plan.heaviside_nodes))[0]
        if hsel.size:
            H = heaviside(plan.crack, ph.x, patch.scale(), strict=strict)
            sub = base[:, :, hsel]
            z = np.zeros_like(sub[0])
            HJ = np.array([plan.node_heaviside[int(c)] for c in cps[hsel]])
            S = np.stack(shifted_enrichment(sub, (H[:, None], z, z, z, z, z), HJ))
            for st in store:
                st.append(S)
            first = np.array([dofmap.heaviside[int(c)] for c in cps[hsel]])
            for c in range(N_FIELDS):
                ids_t[c].append(first + c)

    for k, nodes in plan.tip_nodes.items():
        tsel = np.nonzero(np.isin(cps, nodes))[0]
        if not tsel.size:
            continue
        frame = plan.frames[k]
        sub = base[:, :, tsel]                                  # (6, npts, kt)
        first = np.array([dofmap.tip[(k, int(c))] for c in cps[tsel]])
        tip_shapes = {}
        for kind in set(kind for _, kind in groups):
            F, dF, d2F = branch_functions(frame, ph.x, kind, strict=strict)
            slot = BRANCH_KINDS.index(kind)
            GJ = np.array([plan.node_branch[(k, int(c))][slot] for c in cps[tsel]])   # (kt, 4)
            enr = (F, dF[..., 0], dF[..., 1], d2F[..., 0], d2F[..., 1], d2F[..., 2])
            # columns ordered (cp, L)
            S = np.stack(shifted_enrichment(
                tuple(a[:, :, None] for a in sub),
                tuple(a[:, None, :] for a in enr),
                GJ[None, :, :]))
            if tip_mode == "summed":
                S = S.sum(axis=-1)
                slots = np.arange(1)
            else:
                # the fourth rotation function equals G2 - G3 and is left out;
                # its unknown keeps a zero diagonal and is pruned
                slots = np.arange(4 if kind == "translation" else 3)
                S = S[..., slots].reshape(6, len(ph.x), -1)
            tip_shapes[kind] = (S, slots)
        for st, (fields, kind) in zip(store, groups):
            S, slots = tip_shapes[kind]
            st.append(S)
            for c in fields:
                ids_t[c].append((first[:, None] + slots[None, :] * N_FIELDS + c).ravel())

    shapes = [None] * N_FIELDS
    for st, (fields, _) in zip(store, groups):
        S = np.concatenate(st, axis=2)
        for c in fields:
            shapes[c] = FieldShapes(np.concatenate(ids_t[c]), S)
    return ph, shapes


@dataclass
class StrainOperators:
    """Generalized strain operators at the points of one element.

    ``Bb`` rows are (eps0, kappa1, kappa2), ``Bs`` rows the transverse shear
    strains, ``N`` rows the generalized displacements ``(u1, u2, u3)``.
    Columns follow ``ids``.
    """

    ids: np.ndarray
    Bb: np.ndarray      # (npts, 9, nd)
    Bs: np.ndarray      # (npts, 2, nd)
    N: np.ndarray       # (npts, 9, nd)

    @property
    def Bm(self):
        return self.Bb[:, 0:3]

    @property
    def Bb1(self):
        return self.Bb[:, 3:6]

    @property
    def Bb2(self):
        return self.Bb[:, 6:9]


def uses_rotations(theory: PlateTheory) -> bool:
    """FSDT is discretized with independent rotations ``phi = beta - grad w``."""
    return theory.kind == "FSDT" and theory.fsdt_rotations


def strain_operators(shapes: list[FieldShapes], theory: PlateTheory) -> StrainOperators:
    """Assemble B^m, B^b1, B^b2, B^s and the mass operator from field shapes."""
    rot = uses_rotations(theory)
    ks = [s.ids.size for s in shapes]
    off = np.concatenate([[0], np.cumsum(ks)])
    nd = off[-1]
    npts = shapes[0].S.shape[1]
    Bb = np.zeros((npts, 9, nd))
    Bs = np.zeros((npts, 2, nd))
    N = np.zeros((npts, 9, nd))
    cols = [slice(off[c], off[c + 1]) for c in range(N_FIELDS)]
    S = [s.S for s in shapes]
    u, v, w, bx, by = cols
    Bb[:, 0, u] = S[0][1]
    Bb[:, 2, u] = S[0][2]
    Bb[:, 1, v] = S[1][2]
    Bb[:, 2, v] = S[1][1]
    Bb[:, 6, bx] = S[3][1]
    Bb[:, 8, bx] = S[3][2]
    Bb[:, 7, by] = S[4][2]
    Bb[:, 8, by] = S[4][1]
    Bs[:, 0, bx] = S[3][0]
    Bs[:, 1, by] = S[4][0]
    N[:, 0, u] = S[0][0]
    N[:, 1, v] = S[1][0]
    N[:, 2, w] = S[2][0]
    N[:, 6, bx] = S[3][0]
    N[:, 7, by] = S[4][0]
    if rot:
        Bs[:, 0, w] = S[2][1]
        Bs[:, 1, w] = S[2][2]
    else:
        Bb[:, 3, w] = -S[2][3]
        Bb[:, 4, w] = -S[2][4]
        Bb[:, 5, w] = -2 * S[2][5]
        N[:, 3, w] = -S[2][1]
        N[:, 4, w] = -S[2][2]
    ids = np.concatenate([s.ids for s in shapes])
    return StrainOperators(ids, Bb, Bs, N)


def element_stiffness(ops: StrainOperators, wJ: np.ndarray, cs: ConstitutiveSet) -> np.ndarray:
    """``sum_q w_q J_q (Bb^T Db Bb + Bs^T Ds Bs)``."""
    nd = ops.ids.size
    Tb = np.einsum("ab,qbj->qaj", cs.Db, ops.Bb)
    Ts = np.einsum("ab,qbj->qaj", cs.Ds, ops.Bs)
    Ke = (ops.Bb * wJ[:, None, None]).reshape(-1, nd).T @ Tb.reshape(-1, nd)
    Ke += (ops.Bs * wJ[:, None, None]).reshape(-1, nd).T @ Ts.reshape(-1, nd)
    return 0.5 * (Ke + Ke.T)


def element_mass(ops: StrainOperators, wJ: np.ndarray, cs: ConstitutiveSet) -> np.ndarray:
    """Consistent mass ``sum_q w_q J_q N^T (m x I3) N``."""
    nd = ops.ids.size
    m9 = np.kron(cs.m, np.eye(3))
    T = np.einsum("ab,qbj->qaj", m9, ops.N)
    Me = (ops.N * wJ[:, None, None]).reshape(-1, nd).T @ T.reshape(-1, nd)
    return 0.5 * (Me + Me.T)


@dataclass
class AssembledSystem:
    K: sps.csr_matrix
    M: sps.csr_matrix
    dofmap: DofMap
    pruned: np.ndarray          # enriched ids removed as numerically null
    tip_mode: str = "independent"
    inplane_branch: str = "translation"

    @property
    def n_dof(self) -> int:
        return self.dofmap.n_dof


def assemble(patch: Patch, cs: ConstitutiveSet, theory: PlateTheory,
             plan: EnrichmentPlan | None = None, dofmap: DofMap | None = None,
             tip_order: int = 13, prune_tol: float = 1e-12,
             tip_mode: str = "independent",
             inplane_branch: str = "translation") -> AssembledSystem:
    """Global stiffness and mass over all elements.

    Enriched unknowns whose stiffness diagonal is below ``prune_tol`` times
    the mean standard diagonal are reported in ``pruned``.
    """
    if plan is None:
        plan = empty_plan()
    if dofmap is None:
        dofmap = DofMap.build(patch.n_cp, plan)
    rows, cols, kv, mv = [], [], [], []
    for el in patch.elements():
        info = plan.elements.get(el.id)
        xi, eta, w = enriched_quadrature(el, info, patch.degrees, tip_order=tip_order)
        ph, shapes = element_shapes(patch, el, xi, eta, plan, dofmap, tip_mode=tip_mode,
                                    inplane_branch=inplane_branch)
        if np.any(ph.J <= 0):
            raise ArithmeticError(f"non-positive Jacobian in element {el.id}")
        ops = strain_operators(shapes, theory)
        wJ = w * ph.J
        Ke = element_stiffness(ops, wJ, cs)
        Me = element_mass(ops, wJ, cs)
        I, J = np.meshgrid(ops.ids, ops.ids, indexing="ij")
        rows.append(I.ravel())
        cols.append(J.ravel())
        kv.append(Ke.ravel())
        mv.append(Me.ravel())
    n = dofmap.n_dof
    r, c = np.concatenate(rows), np.concatenate(cols)
    K = sps.coo_matrix((np.concatenate(kv), (r, c)), shape=(n, n)).tocsr()
    M = sps.coo_matrix((np.concatenate(mv), (r, c)), shape=(n, n)).tocsr()
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)

    dk = K.diagonal()
    ref = dk[: dofmap.n_std].mean()
    enr = np.arange(dofmap.n_std, n)
    pruned = enr[dk[enr] < prune_tol * ref]
    if pruned.size:
        log.info("pruned %d numerically null enriched unknowns", pruned.size)
    return AssembledSystem(K.tocsr(), M.tocsr(), dofmap, pruned, tip_mode, inplane_branch)
