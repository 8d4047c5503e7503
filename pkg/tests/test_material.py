"""Volume fractions, homogenization schemes and through-thickness integrals."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from xigaplate.material import (
    Constituent,
    MaterialError,
    MaterialLaw,
    PlateTheory,
    constitutive_set,
    effective_mori_tanaka,
    effective_rule_of_mixture,
    preset,
    thickness_rule,
    volume_fraction,
)

AL, ZRO2, AL2O3 = preset("Al"), preset("ZrO2"), preset("Al2O3")
TSDT, FSDT = PlateTheory("TSDT"), PlateTheory("FSDT")


def law(n, scheme="rule_of_mixture", ceramic=AL2O3, h=0.1, theory=TSDT):
    return MaterialLaw(ceramic, AL, n, h, scheme, theory)


def test_volume_fraction_examples():
    h = 0.2
    assert np.all(volume_fraction(np.linspace(-h / 2, h / 2, 5), h, 0)[0] == 1)
    assert volume_fraction(0.0, h, 1)[0] == pytest.approx(0.5)
    Vc, Vm = volume_fraction(np.array([h / 2, -h / 2]), h, 5)
    np.testing.assert_allclose(Vc, [1, 0])
    np.testing.assert_allclose(Vm, [0, 1])
    with pytest.raises(ValueError):
        volume_fraction(0.11, h, 1)


def test_rule_of_mixture_examples():
    E, _, _ = effective_rule_of_mixture(0.0, law(1, ceramic=ZRO2))
    assert E == pytest.approx(135e9)
    E, _, _ = effective_rule_of_mixture(0.025, law(1, h=0.1))
    assert E == pytest.approx(70e9 + 310e9 * 0.75)
    E, nu, rho = effective_rule_of_mixture(np.linspace(-0.05, 0.05, 7), law(0))
    np.testing.assert_allclose(E, AL2O3.E)
    np.testing.assert_allclose(rho, AL2O3.rho)


def test_mori_tanaka_hand_evaluation():
    # scalar evaluation at V_c = V_m = 1/2
    c, m = ZRO2, AL
    Kc, Km = c.E / (3 * (1 - 2 * c.nu)), m.E / (3 * (1 - 2 * m.nu))
    Gc, Gm = c.E / (2 * (1 + c.nu)), m.E / (2 * (1 + m.nu))
    f1 = Gm * (9 * Km + 8 * Gm) / (6 * (Km + 2 * Gm))
    K = Km + 0.5 * (Kc - Km) / (1 + 0.5 * (Kc - Km) / (Km + 4 / 3 * Gm))
    G = Gm + 0.5 * (Gc - Gm) / (1 + 0.5 * (Gc - Gm) / (Gm + f1))
    E_hand = 9 * K * G / (3 * K + G)
    E, _, _ = effective_mori_tanaka(0.0, law(1, "mori_tanaka", ceramic=ZRO2))
    assert E == pytest.approx(E_hand, rel=1e-14)
    assert E == pytest.approx(114.5e9, rel=5e-3)
    assert E < 135e9


@pytest.mark.parametrize("scheme", ["rule_of_mixture", "mori_tanaka"])
@pytest.mark.parametrize("n", [0, 1e6])
def test_homogeneous_limits(scheme, n):
    z = np.linspace(-0.04, 0.04, 9)      # interior points; n = 1e6 is metal there
    E, nu, rho = (effective_mori_tanaka if scheme == "mori_tanaka" else effective_rule_of_mixture)(z, law(n, scheme))
    target = AL2O3 if n == 0 else AL
    np.testing.assert_allclose(E, target.E, rtol=1e-10)
    np.testing.assert_allclose(nu, target.nu, rtol=1e-10)
    np.testing.assert_allclose(rho, target.rho, rtol=1e-10)
    E1, nu1, _ = effective_mori_tanaka(np.array([0.05, -0.05]), law(3, "mori_tanaka"))
    np.testing.assert_allclose(E1, [AL2O3.E, AL.E], rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 20), st.floats(-0.049, 0.049))
def test_mori_tanaka_below_rule_of_mixture(n, z):
    h = 0.1
    Vc = (0.5 + z / h) ** n
    if not 1e-6 < Vc < 1 - 1e-6:
        return
    E_mt, _, _ = effective_mori_tanaka(z, law(n, "mori_tanaka", h=h))
    E_rm, _, _ = effective_rule_of_mixture(z, law(n, h=h))
    assert E_mt < E_rm


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(-0.045, 0.045))
def test_modulus_decreases_with_power_index(n, z):
    for scheme, fn in (("rule_of_mixture", effective_rule_of_mixture), ("mori_tanaka", effective_mori_tanaka)):
        E1, _, _ = fn(z, law(n, scheme))
        E2, _, _ = fn(z, law(n * 1.5, scheme))
        assert E2 < E1


def test_homogeneous_constitutive_identities():
    h = 0.05
    cs = constitutive_set(law(0, h=h))
    E, nu, rho = AL2O3.E, AL2O3.nu, AL2O3.rho
    A, B, D = cs.Db[:3, :3], cs.Db[:3, 3:6], cs.Db[3:6, 3:6]
    Eb = cs.Db[:3, 6:9]
    assert A[0, 0] == pytest.approx(E * h / (1 - nu**2), rel=1e-13)
    assert D[0, 0] == pytest.approx(E * h**3 / (12 * (1 - nu**2)), rel=1e-13)
    assert np.abs(B).max() < 1e-12 * A[0, 0] * h
    assert np.abs(Eb).max() < 1e-12 * A[0, 0] * h
    assert cs.I[0] == pytest.approx(rho * h, rel=1e-13)
    assert cs.I[1] == pytest.approx(0, abs=1e-14 * rho * h**2)


def _sym_integrals(n_exact, ceramic, metal, h_val):
    """Closed-form A11, I1, H11 and E11 of the rule of mixture with t = 1/2 + z/h."""
    z, h = sp.symbols("z h", positive=True)
    t = sp.Rational(1, 2) + z / h
    Vc = t**n_exact
    Ez = metal.E + (ceramic.E - metal.E) * Vc
    nu = ceramic.nu                               # both phases share nu = 0.3
    rho = metal.rho + (ceramic.rho - metal.rho) * Vc
    f = z - 4 * z**3 / (3 * h**2)
    df = sp.diff(f, z)
    Q11 = Ez / (1 - nu**2)
    G = Ez / (2 * (1 + nu))
    lim = (z, -h / 2, h / 2)
    out = {
        "A11": sp.integrate(Q11, lim), "B11": sp.integrate(z * Q11, lim),
        "E11": sp.integrate(f * Q11, lim), "H11": sp.integrate(f**2 * Q11, lim),
        "Ds": sp.integrate(df**2 * G, lim),
        "I1": sp.integrate(rho, lim), "I5": sp.integrate(z * f * rho, lim),
    }
    return {k: float(v.subs(h, h_val)) for k, v in out.items()}


@pytest.mark.parametrize("n_exact", [sp.Integer(1), sp.Integer(2), sp.Integer(5), sp.Integer(10),
                                     sp.Rational(1, 5), sp.Rational(1, 2)])
def test_rule_of_mixture_integrals_symbolic_oracle(n_exact):
    h = 0.1
    ref = _sym_integrals(n_exact, AL2O3, AL, h)
    cs = constitutive_set(law(float(n_exact), h=h))
    got = {"A11": cs.Db[0, 0], "B11": cs.Db[0, 3], "E11": cs.Db[0, 6], "H11": cs.Db[6, 6],
           "Ds": cs.Ds[0, 0], "I1": cs.I[0], "I5": cs.m[1, 2]}
    for k in ref:
        assert got[k] == pytest.approx(ref[k], rel=1e-10), k


def test_non_integer_rule_is_exact_for_power_law():
    for n in (0.2, 0.5, 1.5, 2.3):
        z, w = thickness_rule(1.0, n)
        assert np.sum(w * (0.5 + z) ** n) == pytest.approx(1 / (n + 1), rel=1e-12)
        assert np.all(np.abs(z) <= 0.5)


def test_mori_tanaka_quadrature_converged():
    a = constitutive_set(law(1, "mori_tanaka"), n_gauss=20)
    b = constitutive_set(law(1, "mori_tanaka"), n_gauss=40)
    for x, y in ((a.Db, b.Db), (a.Ds, b.Ds), (a.m, b.m)):
        np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-12 * np.abs(y).max())


@pytest.mark.parametrize("n, scheme, theory", [
    (0, "rule_of_mixture", TSDT), (1, "mori_tanaka", TSDT), (5, "rule_of_mixture", FSDT),
    (0.2, "mori_tanaka", TSDT),
])
def test_blocks_symmetric_definite(n, scheme, theory):
    cs = constitutive_set(law(n, scheme, theory=theory))
    for M in (cs.Db, cs.Ds, cs.m):
        np.testing.assert_allclose(M, M.T, rtol=0, atol=1e-12 * np.abs(M).max())
    if theory.kind == "TSDT":
        np.linalg.cholesky(cs.Db)
        np.linalg.cholesky(cs.m)
    np.linalg.cholesky(cs.Ds)


def test_shear_factor_only_for_fsdt():
    h = 0.1
    t = constitutive_set(law(0, h=h))
    f = constitutive_set(law(0, h=h, theory=FSDT))
    G = AL2O3.E / (2 * (1 + AL2O3.nu))
    assert f.Ds[0, 0] == pytest.approx(5 / 6 * G * h, rel=1e-13)
    assert t.Ds[0, 0] == pytest.approx(8 / 15 * G * h, rel=1e-13)   # integral of (1 - 4z^2/h^2)^2


def test_tsdt_shear_vanishes_at_faces():
    h = 0.3
    _, df = TSDT.distribution(np.array([-h / 2, h / 2]), h)
    assert np.all(df == 0)
    f, _ = FSDT.distribution(np.array([0.1]), h)
    assert f[0] == 0.1


def test_invalid_inputs():
    with pytest.raises(MaterialError):
        Constituent(-1, 0.3, 1000)
    with pytest.raises(MaterialError):
        Constituent(1e9, 0.5, 1000)
    with pytest.raises(MaterialError):
        law(-1)
    with pytest.raises(MaterialError):
        MaterialLaw(AL2O3, AL, 1, 0.1, "voigt")
    with pytest.raises(MaterialError):
        preset("steel")
    with pytest.raises(MaterialError):
        PlateTheory("custom")
