"""Crack geometry, enrichment functions, classification and quadrature."""

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xigaplate.crack import (
    BLEND,
    CUT,
    TIP,
    AmbiguousSideError,
    CrackModel,
    GeometryDegeneracyError,
    TipFrame,
    branch_functions,
    classify,
    enriched_quadrature,
    gauss_triangle,
    heaviside,
    shifted_enrichment,
)
from xigaplate.geometry import circular_patch, half_annulus_patch, square_patch

CENTER = CrackModel((0.25, 0.5), (0.75, 0.5))


# ----------------------------------------------------------------------
# Heaviside
# ----------------------------------------------------------------------

def test_heaviside_sides():
    assert np.all(CENTER.normal == [0, 1])
    np.testing.assert_array_equal(heaviside(CENTER, [[0.5, 0.6], [0.5, 0.4]]), [1, -1])
    with pytest.raises(AmbiguousSideError):
        heaviside(CENTER, [0.5, 0.5])


def test_heaviside_beyond_tip_matches_projection_oracle():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (2000, 2))
    a, b = np.array(CENTER.start), np.array(CENTER.end)
    # brute force nearest point on a densely sampled segment
    seg = a + np.linspace(0, 1, 4001)[:, None] * (b - a)
    near = seg[np.argmin(((x[:, None, :] - seg[None]) ** 2).sum(-1), axis=1)]
    oracle = np.where((x - near) @ CENTER.normal > 0, 1.0, -1.0)
    keep = np.abs(x[:, 1] - 0.5) > 1e-3
    np.testing.assert_array_equal(heaviside(CENTER, x[keep]), oracle[keep])


def test_crack_validation():
    with pytest.raises(ValueError):
        CrackModel((0.1, 0.1), (0.1, 0.1))


# ----------------------------------------------------------------------
# branch functions
# ----------------------------------------------------------------------

FRAME = TipFrame(np.array([0.3, 0.2]), np.array([np.cos(0.4), np.sin(0.4)]))


def _at_polar(frame, r, th):
    loc = np.stack([r * np.cos(th), r * np.sin(th)], -1)
    return frame.tip + loc @ frame.rotation


@pytest.mark.parametrize("kind", ["translation", "rotation"])
def test_branch_zero_angle(kind):
    F, _, _ = branch_functions(FRAME, _at_polar(FRAME, np.array([0.1]), np.array([0.0])), kind)
    assert F[0, 0] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("kind, jumping", [("rotation", [0]), ("translation", [0, 2])])
def test_face_discontinuity(kind, jumping):
    eps = 1e-12
    r = np.array([0.05])
    up = branch_functions(FRAME, _at_polar(FRAME, r, np.array([np.pi - eps])), kind)[0][0]
    lo = branch_functions(FRAME, _at_polar(FRAME, r, np.array([-np.pi + eps])), kind)[0][0]
    jump = np.abs(up - lo) > 1e-6
    np.testing.assert_array_equal(np.nonzero(jump)[0], jumping)
    np.testing.assert_allclose(up[0], -lo[0], rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.02, 0.5), st.floats(-3.0, 3.0), st.sampled_from(["translation", "rotation"]))
def test_branch_gradients_finite_difference(r, th, kind):
    x0 = _at_polar(FRAME, np.array([r]), np.array([th]))
    _, dF, d2F = branch_functions(FRAME, x0, kind)
    h = 1e-6 * r
    ex, ey = np.array([[h, 0.0]]), np.array([[0.0, h]])
    Fv = lambda x: branch_functions(FRAME, x, kind)[0][0]
    gx = (Fv(x0 + ex) - Fv(x0 - ex)) / (2 * h)
    gy = (Fv(x0 + ey) - Fv(x0 - ey)) / (2 * h)
    scale = np.abs(dF[0]).max()
    np.testing.assert_allclose(dF[0, :, 0], gx, atol=1e-5 * scale)
    np.testing.assert_allclose(dF[0, :, 1], gy, atol=1e-5 * scale)
    dFv = lambda x: branch_functions(FRAME, x, kind)[1][0]
    hxx = (dFv(x0 + ex)[:, 0] - dFv(x0 - ex)[:, 0]) / (2 * h)
    hyy = (dFv(x0 + ey)[:, 1] - dFv(x0 - ey)[:, 1]) / (2 * h)
    hxy = (dFv(x0 + ey)[:, 0] - dFv(x0 - ey)[:, 0]) / (2 * h)
    s2 = np.abs(d2F[0]).max()
    np.testing.assert_allclose(d2F[0, :, 0], hxx, atol=1e-5 * s2)
    np.testing.assert_allclose(d2F[0, :, 1], hyy, atol=1e-5 * s2)
    np.testing.assert_allclose(d2F[0, :, 2], hxy, atol=1e-5 * s2)


def test_branch_singular_at_tip():
    with pytest.raises(ZeroDivisionError):
        branch_functions(FRAME, FRAME.tip[None], "rotation")


def test_rotation_gradient_blows_up_like_inverse_sqrt():
    rs = np.array([1e-2, 1e-4])
    _, dF, _ = branch_functions(FRAME, _at_polar(FRAME, rs, np.array([1.0, 1.0])), "rotation")
    ratio = np.linalg.norm(dF[1, 0]) / np.linalg.norm(dF[0, 0])
    assert ratio == pytest.approx(10.0, rel=1e-10)


def test_rotation_set_is_rank_deficient():
    # cos(t/2) cos(t) = cos(t/2) - sin(t/2) sin(t)
    th = np.linspace(-3, 3, 50)
    F, _, _ = branch_functions(FRAME, _at_polar(FRAME, 0.1 + 0 * th, th), "rotation")
    np.testing.assert_allclose(F[:, 3], F[:, 1] - F[:, 2], atol=1e-15)
    assert np.linalg.matrix_rank(F, tol=1e-12) == 3


# ----------------------------------------------------------------------
# shifted enrichment
# ----------------------------------------------------------------------

def test_shifted_heaviside():
    rng = np.random.default_rng(1)
    R = tuple(rng.standard_normal(4) for _ in range(6))
    z = np.zeros(4)
    H = np.array([1.0, 1.0, -1.0, -1.0])
    out = shifted_enrichment(R, (H, z, z, z, z, z), 1.0)
    np.testing.assert_array_equal(out[0][:2], 0)
    np.testing.assert_allclose(out[1], R[1] * (H - 1))
    np.testing.assert_allclose(out[3], R[3] * (H - 1))


def test_shifted_tip_vanishes_at_anchor():
    x_node = _at_polar(FRAME, np.array([0.07]), np.array([0.9]))
    F, dF, d2F = branch_functions(FRAME, x_node, "translation")
    R = tuple(np.ones((1, 4)) * v for v in (0.3, 1.0, -2.0, 0.5, 0.1, 0.7))
    enr = (F, dF[..., 0], dF[..., 1], d2F[..., 0], d2F[..., 1], d2F[..., 2])
    out = shifted_enrichment(R, enr, F)
    np.testing.assert_allclose(out[0], 0, atol=1e-16)
    np.testing.assert_allclose(out[1], 0.3 * dF[..., 0])


# ----------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------

def _check_plan(patch, plan):
    heav = set(plan.heaviside_nodes)
    tips = set().union(*map(set, plan.tip_nodes.values())) if plan.tip_nodes else set()
    assert not heav & tips
    els = patch.elements()
    for el_id, info in plan.elements.items():
        if info.kind == CUT:
            assert set(patch.element_cps(els[el_id]).tolist()) <= heav | tips


def test_center_crack_classification():
    patch = square_patch(1.0, 1.0, 3, 21)
    plan = classify(patch, CENTER)
    c = plan.counts()
    assert c["tip"] == 2 and len(plan.tip_nodes) == 2
    assert c["heaviside_nodes"] > 0 and c["cut"] > 0
    assert all(len(v) == 16 for v in plan.tip_nodes.values())
    _check_plan(patch, plan)


def test_no_crack_and_full_crack():
    patch = square_patch(1.0, 1.0, 3, 21)
    empty = classify(patch, None)
    assert empty.is_empty and empty.elements == {}
    full = classify(patch, CrackModel((0.0, 0.5), (1.0, 0.5), tips=(False, False)))
    assert full.counts()["tip"] == 0 and full.counts()["cut"] == 21
    _check_plan(patch, full)


@pytest.mark.parametrize("patch, crack", [
    (square_patch(1.0, 1.0, 3, 21), CrackModel((0.0, 0.5), (0.5, 0.5), tips=(False, True))),
    (circular_patch(1.0, 3, 21), CrackModel((-0.5, 0.0), (0.5, 0.0))),
    (half_annulus_patch(1.0, 0.5, 3, 21), CrackModel((0.0, 0.5), (0.0, 0.75), tips=(False, True))),
])
def test_benchmark_plans_are_consistent(patch, crack):
    plan = classify(patch, crack)
    _check_plan(patch, plan)
    assert plan.counts()["tip"] == sum(crack.tips)
    kinds = {i.kind for i in plan.elements.values()}
    assert {CUT, TIP, BLEND} <= kinds


@pytest.mark.filterwarnings("ignore:crack tip on an element edge")
def test_crack_along_knot_line_rejected():
    patch = square_patch(1.0, 1.0, 3, 4)
    with pytest.raises(GeometryDegeneracyError):
        classify(patch, CrackModel((0.1, 0.5), (0.6, 0.5)))


def test_tip_on_edge_is_perturbed():
    patch = square_patch(1.0, 1.0, 3, 5)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        plan = classify(patch, CrackModel((0.1, 0.5), (0.6, 0.5), tips=(False, True)))
    assert any("perturbing" in str(w.message) for w in rec)
    assert plan.counts()["tip"] == 1


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------

def test_standard_rule():
    patch = square_patch(1.0, 1.0, 3, 4)
    el = patch.elements()[5]
    xi, eta, w = enriched_quadrature(el, None, (3, 3))
    assert len(w) == 16
    assert w.sum() == pytest.approx(el.param_area, rel=1e-14)


def test_cut_and_tip_rules_partition_element():
    patch = square_patch(1.0, 1.0, 3, 21)
    plan = classify(patch, CENTER)
    els = patch.elements()
    for el_id, info in plan.elements.items():
        el = els[el_id]
        xi, eta, w = enriched_quadrature(el, info, (3, 3))
        assert w.sum() == pytest.approx(el.param_area, rel=1e-12)
        assert np.all(w > 0)
        (a, b), (c, d) = el.xi_range, el.eta_range
        assert np.all((xi > a) & (xi < b) & (eta > c) & (eta < d))
        if info.kind in (CUT, TIP):
            # no point on the crack itself (the line ahead of a tip is fine)
            x = patch.map(xi, eta)
            s = CENTER.along(x)
            on_seg = (s > 0) & (s < CENTER.length)
            assert np.abs(CENTER.signed_distance(x[on_seg])).min() > 1e-10


def test_heaviside_integral_over_symmetric_cut_element_vanishes():
    patch = square_patch(1.0, 1.0, 3, 21)
    plan = classify(patch, CrackModel((0.0, 0.5), (1.0, 0.5), tips=(False, False)))
    els = patch.elements()
    for el_id, info in plan.elements.items():
        xi, eta, w = enriched_quadrature(els[el_id], info, (3, 3))
        H = heaviside(plan.crack, patch.map(xi, eta))
        assert abs(np.sum(w * H)) < 1e-12 * els[el_id].param_area


def test_triangle_rule_exactness():
    x, y, w = gauss_triangle((0, 0), (2, 0), (0, 1), 6)
    assert w.sum() == pytest.approx(1.0, rel=1e-14)
    assert np.sum(w * x**3 * y) == pytest.approx(2 / 15, rel=1e-12)
