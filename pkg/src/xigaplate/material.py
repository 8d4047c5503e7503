"""Functionally graded material laws and through-thickness plate integrals."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss


class MaterialError(ValueError):
    """Invalid material input or a constitutive set that is not definite."""


@dataclass(frozen=True)
class Constituent:
    """Isotropic phase: Young's modulus [Pa], Poisson ratio, density [kg/m^3]."""

    E: float
    nu: float
    rho: float
    name: str = ""

    def __post_init__(self):
        if not (self.E > 0 and -1 < self.nu < 0.5 and self.rho > 0):
            raise MaterialError(f"invalid constituent {self}")

    @property
    def bulk(self) -> float:
        return self.E / (3 * (1 - 2 * self.nu))

    @property
    def shear(self) -> float:
        return self.E / (2 * (1 + self.nu))


PRESETS = {
    "Al": Constituent(70e9, 0.3, 2707.0, "Al"),
    "ZrO2": Constituent(200e9, 0.3, 5700.0, "ZrO2"),
    "Al2O3": Constituent(380e9, 0.3, 3800.0, "Al2O3"),
}


def preset(name: str) -> Constituent:
    try:
        return PRESETS[name]
    except KeyError:
        raise MaterialError(f"unknown material preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class PlateTheory:
    """Shear distribution function ``f(z)`` of the five-unknown plate model.

    ``kind`` is ``"TSDT"`` (Reddy cubic), ``"FSDT"`` (``f = z`` with a shear
    correction factor) or ``"custom"`` with user supplied ``f`` and ``df``.
    With ``fsdt_rotations`` (default) FSDT is discretized with independent
    rotations ``phi`` so that ``gamma = phi + grad w``; otherwise it uses the
    same ``beta`` split as the higher-order kinematics.
    """

    kind: str = "TSDT"
    shear_factor: float = 5.0 / 6.0
    fsdt_rotations: bool = True
    f: Callable | None = field(default=None, compare=False)
    df: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("TSDT", "FSDT", "custom"):
            raise MaterialError(f"unknown plate theory {self.kind!r}")
        if self.kind == "custom" and (self.f is None or self.df is None):
            raise MaterialError("custom theory needs f and df")

    def distribution(self, z, h):
        """Return ``f(z), f'(z)``."""
        z = np.asarray(z, dtype=float)
        if self.kind == "TSDT":
            return z - 4 * z**3 / (3 * h**2), 1 - 4 * z**2 / h**2
        if self.kind == "FSDT":
            return z.copy(), np.ones_like(z)
        return self.f(z, h), self.df(z, h)


@dataclass(frozen=True)
class MaterialLaw:
    ceramic: Constituent
    metal: Constituent
    n: float
    h: float
    scheme: str = "rule_of_mixture"
    theory: PlateTheory = PlateTheory()

    def __post_init__(self):
        if self.n < 0:
            raise MaterialError(f"power index must be >= 0, got {self.n}")
        if self.h <= 0:
            raise MaterialError(f"thickness must be positive, got {self.h}")
        if self.scheme not in ("rule_of_mixture", "mori_tanaka"):
            raise MaterialError(f"unknown homogenization scheme {self.scheme!r}")


@dataclass(frozen=True)
class ConstitutiveSet:
    """``Db`` (9x9 over eps0, kappa1, kappa2), ``Ds`` (2x2), ``m`` (3x3 inertia)."""

    Db: np.ndarray
    Ds: np.ndarray
    m: np.ndarray

    @property
    def I(self) -> np.ndarray:
        """Inertia integrals ``I1 .. I6``."""
        m = self.m
        return np.array([m[0, 0], m[0, 1], m[1, 1], m[0, 2], m[1, 2], m[2, 2]])


def volume_fraction(z, h: float, n: float):
    """Ceramic and metal volume fractions ``(V_c, V_m)`` at height ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > h / 2 * (1 + 1e-12)):
        raise ValueError("z outside the plate thickness")
    base = np.clip(0.5 + z / h, 0.0, 1.0)
    Vc = np.power(base, n) if n > 0 else np.ones_like(base)
    return Vc, 1.0 - Vc


def effective_rule_of_mixture(z, law: MaterialLaw):
    """Linear mixing of E, nu and rho."""
    Vc, Vm = volume_fraction(z, law.h, law.n)
    c, m = law.ceramic, law.metal
    return c.E * Vc + m.E * Vm, c.nu * Vc + m.nu * Vm, c.rho * Vc + m.rho * Vm


def effective_mori_tanaka(z, law: MaterialLaw):
    """Mori-Tanaka estimate of E and nu; density by linear mixing."""
    Vc, Vm = volume_fraction(z, law.h, law.n)
    c, m = law.ceramic, law.metal
    Km, Kc, mum, muc = m.bulk, c.bulk, m.shear, c.shear
    f1 = mum * (9 * Km + 8 * mum) / (6 * (Km + 2 * mum))
    K = Km + (Kc - Km) * Vc / (1 + Vm * (Kc - Km) / (Km + 4.0 / 3.0 * mum))
    mu = mum + (muc - mum) * Vc / (1 + Vm * (muc - mum) / (mum + f1))
    E = 9 * K * mu / (3 * K + mu)
    nu = (3 * K - 2 * mu) / (2 * (3 * K + mu))
    return E, nu, c.rho * Vc + m.rho * Vm


def effective_properties(z, law: MaterialLaw):
    if law.scheme == "mori_tanaka":
        return effective_mori_tanaka(z, law)
    return effective_rule_of_mixture(z, law)


def thickness_rule(h: float, n: float, n_gauss: int = 20):
    """Quadrature points and weights on ``[-h/2, h/2]``.

    For integer ``n`` this is plain Gauss-Legendre, exact for the polynomial
    rule-of-mixture integrands. For non-integer ``n`` the volume fraction
    ``t**n`` (``t = 1/2 + z/h``) has a derivative singularity at the metal
    face, so the rule is built in ``s`` with ``t = s**k`` and ``k * n`` an
    integer (``n`` is first approximated by a fraction with denominator
    <= 100); the point count grows so the mapped polynomial is still exact.
    """
    if float(n).is_integer():
        g, w = leggauss(n_gauss)
        return 0.5 * h * g, 0.5 * h * w
    k = Fraction(n).limit_denominator(100).denominator
    degree = 6 * k + int(np.ceil(k * n)) + k - 1
    g, w = leggauss(max(n_gauss, degree // 2 + 1))
    s = 0.5 + 0.5 * g
    t = s**k
    return h * (t - 0.5), h * 0.5 * w * k * s ** (k - 1)


def constitutive_set(law: MaterialLaw, n_gauss: int = 20) -> ConstitutiveSet:
    """Through-thickness integrals of stiffness and inertia.

    Generalized strains are ordered ``(eps0, kappa1, kappa2)`` so ``Db`` is
    ``[[A, B, E], [B, D, F], [E, F, H]]``. With FSDT, ``Ds`` carries the
    shear correction factor; with TSDT it does not. ``n_gauss`` is the
    minimum number of through-thickness points (see :func:`thickness_rule`).
    """
    h = law.h
    z, wz = thickness_rule(h, law.n, n_gauss)
    E, nu, rho = effective_properties(z, law)
    f, df = law.theory.distribution(z, h)

    Qbase = np.zeros((len(z), 3, 3))
    Qbase[:, 0, 0] = Qbase[:, 1, 1] = 1.0
    Qbase[:, 0, 1] = Qbase[:, 1, 0] = nu
    Qbase[:, 2, 2] = (1 - nu) / 2
    Q = Qbase * (E / (1 - nu**2))[:, None, None]
    G = E / (2 * (1 + nu))

    ops = np.stack([np.ones_like(z), z, f])              # multipliers of eps0, kappa1, kappa2
    Db = np.einsum("q,aq,bq,qij->aibj", wz, ops, ops, Q).reshape(9, 9)
    s = np.sum(wz * df**2 * G)
    if law.theory.kind == "FSDT":
        s *= law.theory.shear_factor
    Ds = s * np.eye(2)
    m = np.einsum("q,q,aq,bq->ab", wz, rho, ops, ops)
    Db = 0.5 * (Db + Db.T)
    m = 0.5 * (m + m.T)

    _check_definite(Db if law.theory.kind != "FSDT" else Db[:6, :6], "Db")
    _check_definite(Ds, "Ds")
    _check_definite(m if law.theory.kind != "FSDT" else m[:2, :2], "m")
    return ConstitutiveSet(Db, Ds, m)


def _check_definite(A: np.ndarray, name: str):
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise MaterialError(f"{name} is not positive definite") from None
