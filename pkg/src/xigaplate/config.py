"""Case configuration, crack templates, named boundary sets and the run pipeline.

A case is a JSON document with a versioned ``schema`` header::

    {
      "schema": "xigaplate-case/1",
      "name": "table2_tsdt_a05",
      "geometry": {"kind": "square", "L": 1.0, "W": 1.0},
      "thickness": {"ratio": 1000},
      "material": {"ceramic": "Al2O3", "metal": "Al", "n": 0, "scheme": "rule_of_mixture"},
      "theory": {"kind": "TSDT"},
      "crack": {"template": "center", "ratio": 0.5},
      "boundary": "SSSS",
      "mesh": {"p": 3, "n_el": 21},
      "n_modes": 5,
      "normalization": "cpt_hat"
    }

``thickness.ratio`` is L/h for square plates and R/h for circular and
annular plates; ``thickness.h`` gives the thickness directly.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import BRANCH_KINDS, TIP_MODES, assemble
from .crack import CrackModel, classify
from .geometry import circular_patch, half_annulus_patch, square_patch
from .material import Constituent, MaterialLaw, PlateTheory, constitutive_set, preset
from .solve import (
    CONVENTIONS,
    BoundarySpec,
    GeometrySpec,
    apply_constraints,
    normalize,
    sample_mode_shape,
    solve_modal,
    write_grid_csv,
    write_modal_csv,
)

log = logging.getLogger(__name__)

SCHEMA = "xigaplate-case/1"
BOUNDARY_SETS = ("SSSS", "SSSS-soft", "CCCC", "cantilever", "clamped-outer", "symmetric-half")
CRACK_TEMPLATES = ("center", "edge", "annular-radial", "endpoints")


class ConfigError(ValueError):
    """Malformed or inconsistent case configuration; message names the field."""


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"{where}.{key}: required field missing")
    return d[key]


def _num(v, where: str, positive: bool = True) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{where}: must be positive, got {v!r}")
    return float(v)


@dataclass
class CaseConfig:
    name: str
    geometry: GeometrySpec
    h: float
    ceramic: Constituent
    metal: Constituent
    n: float
    scheme: str
    theory: PlateTheory
    crack: dict | None
    boundary: str | dict
    p: int
    n_el: int
    n_modes: int = 5
    normalization: str = "rad_s"
    tip_order: int = 13
    tip_mode: str = "independent"
    inplane_branch: str = "translation"
    constrain_enriched: bool = True
    output: dict = field(default_factory=dict)
    reference: dict | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def law(self) -> MaterialLaw:
        return MaterialLaw(self.ceramic, self.metal, self.n, self.h, self.scheme, self.theory)


def _constituent(v, where):
    if isinstance(v, str):
        try:
            return preset(v)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if isinstance(v, dict):
        try:
            return Constituent(_num(_req(v, "E", where), f"{where}.E"),
                               _num(_req(v, "nu", where), f"{where}.nu", positive=False),
                               _num(_req(v, "rho", where), f"{where}.rho"), v.get("name", ""))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: expected a preset name or an object with E, nu, rho")


def parse_config(data: dict, base_dir: Path | None = None) -> CaseConfig:
    """Validate a decoded JSON case and build a :class:`CaseConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("case: top level must be an object")
    if data.get("schema") != SCHEMA:
        raise ConfigError(f"schema: expected {SCHEMA!r}, got {data.get('schema')!r}")
    g = _req(data, "geometry", "case")
    kind = _req(g, "kind", "geometry")
    if kind == "square":
        geom = GeometrySpec("square", L=_num(_req(g, "L", "geometry"), "geometry.L"),
                            W=_num(g.get("W", g["L"]), "geometry.W"))
        ref_len = geom.L
    elif kind == "circle":
        geom = GeometrySpec("circle", R=_num(_req(g, "R", "geometry"), "geometry.R"))
        ref_len = geom.R
    elif kind == "half_annulus":
        geom = GeometrySpec("half_annulus", R=_num(_req(g, "R", "geometry"), "geometry.R"),
                            r=_num(_req(g, "r", "geometry"), "geometry.r"))
        if geom.r >= geom.R:
            raise ConfigError("geometry.r: inner radius must be below the outer radius")
        ref_len = geom.R
    else:
        raise ConfigError(f"geometry.kind: unknown geometry {kind!r}")

    t = _req(data, "thickness", "case")
    if "h" in t:
        h = _num(t["h"], "thickness.h")
    elif "ratio" in t:
        h = ref_len / _num(t["ratio"], "thickness.ratio")
    else:
        raise ConfigError("thickness: give either h or ratio")

    m = _req(data, "material", "case")
    scheme = m.get("scheme", "rule_of_mixture")
    if scheme not in ("rule_of_mixture", "mori_tanaka"):
        raise ConfigError(f"material.scheme: unknown scheme {scheme!r}")
    n = _num(m.get("n", 0), "material.n", positive=False)
    if n < 0:
        raise ConfigError("material.n: power index must be >= 0")

    th = data.get("theory", {"kind": "TSDT"})
    tk = th.get("kind", "TSDT")
    if tk not in ("TSDT", "FSDT"):
        raise ConfigError(f"theory.kind: expected TSDT or FSDT, got {tk!r}")
    theory = PlateTheory(tk, shear_factor=_num(th.get("shear_factor", 5 / 6), "theory.shear_factor"),
                         fsdt_rotations=bool(th.get("fsdt_rotations", True)))

    crack = data.get("crack")
    if crack is not None:
        tpl = _req(crack, "template", "crack")
        if tpl not in CRACK_TEMPLATES:
            raise ConfigError(f"crack.template: unknown template {tpl!r}; expected {CRACK_TEMPLATES}")
        if tpl in ("center", "edge"):
            ratio = _num(_req(crack, "ratio", "crack"), "crack.ratio")
            if ratio > 1:
                raise ConfigError("crack.ratio: must not exceed 1")
            if tpl == "edge" and kind != "square":
                raise ConfigError("crack.template: edge cracks are defined on square plates")
        if tpl == "annular-radial" and kind != "half_annulus":
            raise ConfigError("crack.template: annular-radial needs a half_annulus geometry")

    boundary = _req(data, "boundary", "case")
    if isinstance(boundary, str):
        if boundary not in BOUNDARY_SETS:
            raise ConfigError(f"boundary: unknown set {boundary!r}; expected one of {BOUNDARY_SETS}")
        if boundary in ("clamped-outer", "symmetric-half") and kind == "square":
            raise ConfigError(f"boundary: {boundary} applies to circular or annular plates")
        if boundary == "symmetric-half" and kind != "half_annulus":
            raise ConfigError("boundary: symmetric-half needs a half_annulus geometry")
    elif isinstance(boundary, dict):
        try:
            BoundarySpec(dict(boundary))
        except ValueError as exc:
            raise ConfigError(f"boundary: {exc}") from None
    else:
        raise ConfigError("boundary: expected a set name or an edge -> condition object")

    mesh = _req(data, "mesh", "case")
    p = mesh.get("p", 3)
    n_el = mesh.get("n_el", 21)
    if not isinstance(p, int) or p < 2:
        raise ConfigError("mesh.p: HSDT requires C1 continuity, use p >= 2")
    if kind == "half_annulus" and p < 3:
        raise ConfigError("mesh.p: the half-annulus patch is built from cubic arcs, use p >= 3")
    if not isinstance(n_el, int) or n_el < 1:
        raise ConfigError("mesh.n_el: expected a positive integer")

    conv = data.get("normalization", "rad_s")
    if conv not in CONVENTIONS:
        raise ConfigError(f"normalization: unknown convention {conv!r}; expected {CONVENTIONS}")
    if conv == "annular_tilde" and kind != "half_annulus":
        raise ConfigError("normalization: annular_tilde applies only to annular plates")
    if conv in ("hsdt_bar", "cpt_hat") and kind == "half_annulus":
        raise ConfigError(f"normalization: {conv} is not defined for annular plates")
    n_modes = data.get("n_modes", 5)
    if not isinstance(n_modes, int) or n_modes < 1:
        raise ConfigError("n_modes: expected a positive integer")
    ref = data.get("reference")
    if ref is not None and not (isinstance(ref, dict) and "table" in ref and "key" in ref):
        raise ConfigError("reference: expected an object with table and key")
    tip_mode = data.get("tip_mode", "independent")
    if tip_mode not in TIP_MODES:
        raise ConfigError(f"tip_mode: expected one of {TIP_MODES}")
    inplane_branch = data.get("inplane_branch", "translation")
    if inplane_branch not in BRANCH_KINDS:
        raise ConfigError(f"inplane_branch: expected one of {BRANCH_KINDS}")

    return CaseConfig(
        name=str(data.get("name", "case")), geometry=geom, h=h,
        ceramic=_constituent(_req(m, "ceramic", "material"), "material.ceramic"),
        metal=_constituent(_req(m, "metal", "material"), "material.metal"),
        n=n, scheme=scheme, theory=theory, crack=crack, boundary=boundary, p=p, n_el=n_el,
        n_modes=n_modes, normalization=conv, tip_order=int(data.get("tip_order", 13)),
        tip_mode=tip_mode, inplane_branch=inplane_branch,
        constrain_enriched=bool(data.get("constrain_enriched", True)),
        output=dict(data.get("output", {})), reference=ref,
        base_dir=base_dir or Path.cwd())


def load_config(path) -> CaseConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(data, path.parent)


# ----------------------------------------------------------------------
# Geometry, crack and boundary builders
# ----------------------------------------------------------------------

def build_patch(cfg: CaseConfig):
    g = cfg.geometry
    if g.kind == "square":
        return square_patch(g.L, g.W, cfg.p, cfg.n_el)
    if g.kind == "circle":
        return circular_patch(g.R, cfg.p, cfg.n_el)
    return half_annulus_patch(g.R, g.r, cfg.p, cfg.n_el)


def build_crack(cfg: CaseConfig) -> CrackModel | None:
    """Crack segment from a template.

    center
        Square: along y = W/2, centred, length ``ratio * L``. Circle: along
        the x axis through the centre, length ``2 * ratio * R``.
    edge
        From the left edge at mid-height, length ``ratio * L``.
    annular-radial
        Along x = 0 from the hole edge outwards over half the ligament,
        i.e. from ``(0, r)`` to ``(0, (R + r) / 2)``.
    endpoints
        Raw ``start``, ``end`` and optional ``tips`` flags.
    """
    c = cfg.crack
    if c is None:
        return None
    g = cfg.geometry
    tpl = c["template"]
    if tpl == "endpoints":
        tips = tuple(bool(t) for t in c.get("tips", (True, True)))
        return CrackModel(tuple(c["start"]), tuple(c["end"]), tips=tips)
    if tpl == "center":
        ratio = float(c["ratio"])
        if g.kind == "square":
            a = ratio * g.L
            full = ratio >= 1
            return CrackModel(((g.L - a) / 2, g.W / 2), ((g.L + a) / 2, g.W / 2),
                              tips=(not full, not full))
        if g.kind == "circle":
            a = ratio * g.R
            return CrackModel((-a, 0.0), (a, 0.0), tips=(ratio < 1, ratio < 1))
        raise ConfigError("crack.template: center cracks are defined on squares and circles")
    if tpl == "edge":
        a = float(c["ratio"]) * g.L
        return CrackModel((0.0, g.W / 2), (a, g.W / 2), tips=(False, a < g.L))
    return CrackModel((0.0, g.r), (0.0, 0.5 * (g.R + g.r)), tips=(False, True))


def build_boundary(cfg: CaseConfig) -> BoundarySpec:
    b = cfg.boundary
    if isinstance(b, dict):
        return BoundarySpec(dict(b))
    all4 = ("xi0", "xi1", "eta0", "eta1")
    if b == "SSSS":
        return BoundarySpec({e: "ss" for e in all4})
    if b == "SSSS-soft":
        return BoundarySpec({e: "ss_soft" for e in all4})
    if b == "CCCC":
        return BoundarySpec({e: "clamped" for e in all4})
    if b == "cantilever":
        return BoundarySpec({"xi1": "clamped"})
    if cfg.geometry.kind == "circle":
        return BoundarySpec({e: "clamped" for e in all4})
    return BoundarySpec({"eta0": "clamped", "xi0": "symmetry", "xi1": "symmetry"})


# ----------------------------------------------------------------------
# Pipeline
# ----------------------------------------------------------------------

@dataclass
class RunContext:
    patch: object
    plan: object
    system: object
    record: object
    law: MaterialLaw


def run_case(cfg: CaseConfig, write: bool = True):
    """Assemble, constrain and solve one case; returns ``(ModalResult, RunContext)``."""
    t0 = time.perf_counter()
    law = cfg.law
    cs = constitutive_set(law)
    patch = build_patch(cfg)
    crack = build_crack(cfg)
    plan = classify(patch, crack)
    system = assemble(patch, cs, law.theory, plan, tip_order=cfg.tip_order,
                      tip_mode=cfg.tip_mode, inplane_branch=cfg.inplane_branch)
    K, M, rec = apply_constraints(system, build_boundary(cfg), patch, law.theory,
                                  constrain_enriched=cfg.constrain_enriched)
    w_dofs = np.arange(patch.n_cp) * 5 + 2
    result = solve_modal(K, M, cfg.n_modes, T=rec.T, w_dofs=w_dofs)
    result.convention = cfg.normalization
    result.normalized = normalize(result.omega, cfg.normalization, cfg.geometry, law)
    counts = plan.counts()
    result.metadata = {
        "name": cfg.name, "mesh": f"{cfg.n_el}x{cfg.n_el} p={cfg.p}",
        "theory": law.theory.kind, "scheme": law.scheme, "n": law.n, "h": law.h,
        "crack": cfg.crack, "n_dof": system.n_dof, "n_free": rec.free.size,
        "enriched": counts, "pruned": int(system.pruned.size),
        "wall_time": time.perf_counter() - t0,
    }
    log.info("%s: %d unknowns (%d free), enrichment %s, %d pruned, %.2f s",
             cfg.name, system.n_dof, rec.free.size, counts, system.pruned.size,
             result.metadata["wall_time"])
    ctx = RunContext(patch, plan, system, rec, law)
    if write:
        write_outputs(cfg, result, ctx)
    return result, ctx


def write_outputs(cfg: CaseConfig, result, ctx: RunContext):
    out = cfg.output
    if "frequencies" in out:
        path = cfg.base_dir / out["frequencies"]
        path.parent.mkdir(parents=True, exist_ok=True)
        write_modal_csv(result, path)
        meta = {k: v for k, v in result.metadata.items() if k != "wall_time"}
        meta["reference"] = cfg.reference
        path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    grids = out.get("mode_grids")
    if grids:
        d = cfg.base_dir / grids.get("dir", ".")
        d.mkdir(parents=True, exist_ok=True)
        npts = int(grids.get("n", 41))
        for k in grids.get("modes", [1]):
            if 1 <= k <= result.vectors.shape[1]:
                g = sample_mode_shape(ctx.patch, ctx.system.dofmap, ctx.plan,
                                      result.vectors[:, k - 1], npts, npts,
                                      tip_mode=ctx.system.tip_mode)
                write_grid_csv(g, d / f"{cfg.name}_mode{k}.csv")
