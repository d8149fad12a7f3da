"""Admissible torsions for a mixed class on S^2 x T^2.

H^3(S^2 x T^2) is spanned by the harmonic forms ``vol_S2 ^ dx`` and
``vol_S2 ^ dy`` (both parallel), so a class is a pair ``(a, b)`` and its
harmonic representative is ``sin(theta) dtheta^dphi^(a dx + b dy)``.

Admissible torsion 3-forms are ``omega + d(eta) + codifferential(mu)`` with
smooth random potentials ``eta`` (2-form) and ``mu = h vol`` (4-form).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConfigError, ShapeError
from .forms import FormField, TorsionField, codifferential, d, form_to_torsion, l2_inner
from .geometry import QuadratureGrid

THETA_PHI_X = (0, 1, 2)
THETA_PHI_Y = (0, 1, 3)

ETA_FAMILIES = (
    "sphere_area",
    "torus_area",
    "dX^dx",
    "dY^dx",
    "dZ^dx",
    "dX^dy",
    "dY^dy",
    "dZ^dy",
)


@dataclass(frozen=True)
class CalibrationClass:
    a: float = 1.0
    b: float = 0.0

    @property
    def is_trivial(self) -> bool:
        return self.a == 0.0 and self.b == 0.0

    def require_nontrivial(self) -> "CalibrationClass":
        if self.is_trivial:
            raise ConfigError("class must be non-trivial: (a, b) = (0, 0) is the zero cohomology class")
        return self

    def scaled(self, factor: float) -> "CalibrationClass":
        return CalibrationClass(self.a * factor, self.b * factor)

    @property
    def norm_sq(self) -> float:
        return self.a**2 + self.b**2


@dataclass(frozen=True)
class PotentialSpec:
    sphere_degree: int = 1
    torus_kmax: int = 1
    amplitude: float = 0.1
    seed: int = 7

    def __post_init__(self):
        for name in ("sphere_degree", "torus_kmax"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise ConfigError(f"amplitude must be >= 0, got {self.amplitude!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


def harmonic_representative(klass: CalibrationClass, sites) -> FormField:
    s = np.broadcast_to(sites.sin_theta, sites.shape)
    return FormField.from_components(3, sites, {THETA_PHI_X: klass.a * s, THETA_PHI_Y: klass.b * s})


def harmonic_basis(sites) -> tuple[FormField, FormField]:
    return (
        harmonic_representative(CalibrationClass(1.0, 0.0), sites),
        harmonic_representative(CalibrationClass(0.0, 1.0), sites),
    )


def harmonic_coefficients(tau: FormField) -> tuple[float, float]:
    """Coordinates of the L2 projection onto the harmonic 3-forms."""
    if tau.degree != 3:
        raise ShapeError("harmonic projection acts on 3-forms")
    coeffs = []
    for h in harmonic_basis(tau.sites):
        coeffs.append(l2_inner(tau, h) / l2_inner(h, h))
    return coeffs[0], coeffs[1]


def hodge_project(tau: FormField) -> FormField:
    a, b = harmonic_coefficients(tau)
    return harmonic_representative(CalibrationClass(a, b), tau.sites)


def _sphere_monomials(degree: int):
    return [(p, q, r) for total in range(degree + 1) for p, q, r in product(range(total + 1), repeat=3) if p + q + r == total]


def _torus_modes(kmax: int):
    return [(0, "c")] + [(k, kind) for k in range(1, kmax + 1) for kind in ("c", "s")]


def _mode(k, kind, coord):
    if k == 0:
        return np.ones_like(coord)
    return np.cos(k * coord) if kind == "c" else np.sin(k * coord)


def scalar_dictionary_size(spec: PotentialSpec) -> int:
    return len(_sphere_monomials(spec.sphere_degree)) * len(_torus_modes(spec.torus_kmax)) ** 2


def _coefficients(spec: PotentialSpec, family: int, count: int, scale: float) -> np.ndarray:
    # one Philox stream per dictionary element keeps draws order-independent
    out = np.empty(count)
    for i in range(count):
        key = family * count + i
        gen = np.random.Generator(np.random.Philox(key=spec.seed, counter=key))
        out[i] = gen.standard_normal()
    return spec.amplitude * scale * out


def _combine(spec: PotentialSpec, coeffs: np.ndarray, sites) -> np.ndarray:
    theta, phi, x, y = sites.coordinates()
    st, ct = np.sin(theta), np.cos(theta)
    X, Y, Z = st * np.cos(phi), st * np.sin(phi), ct
    shape = np.broadcast_shapes(np.shape(X), np.shape(x), np.shape(y))
    total = np.zeros(shape)
    n = 0
    for p, q, r in _sphere_monomials(spec.sphere_degree):
        sphere = X**p * Y**q * Z**r
        for kx, sx in _torus_modes(spec.torus_kmax):
            fx = _mode(kx, sx, x)
            for ky, sy in _torus_modes(spec.torus_kmax):
                c = coeffs[n]
                n += 1
                if c != 0.0:
                    total = total + c * (sphere * (fx * _mode(ky, sy, y)))
    return np.broadcast_to(total, sites.shape).copy()


def sample_potentials(spec: PotentialSpec, sites) -> tuple[FormField, FormField]:
    """Seeded smooth potentials ``(eta, mu)``.

    Every scalar coefficient function is a polynomial in the embedding
    coordinates ``(X, Y, Z)`` of the sphere times a torus Fourier mode, so the
    forms are smooth across the poles.  Element ``i`` of family ``f`` draws its
    normal coefficient from a Philox stream keyed by ``seed`` with counter
    ``f * n + i``.
    """
    n = scalar_dictionary_size(spec)
    eta_scale = 1.0 / np.sqrt(len(ETA_FAMILIES) * n)
    fields = [_combine(spec, _coefficients(spec, f, n, eta_scale), sites) for f in range(len(ETA_FAMILIES))]
    h = _combine(spec, _coefficients(spec, len(ETA_FAMILIES), n, 1.0 / np.sqrt(n)), sites)

    theta, phi, _, _ = sites.coordinates()
    st = np.broadcast_to(np.sin(theta), sites.shape)
    ct = np.broadcast_to(np.cos(theta), sites.shape)
    cp, sp = np.cos(phi), np.sin(phi)
    # (theta, phi) components of dX, dY, dZ
    differentials = ((ct * cp, -st * sp), (ct * sp, st * cp), (-st, np.zeros_like(st)))

    area, torus_area = fields[0], fields[1]
    comps = {(0, 1): area * st, (2, 3): torus_area}
    for torus_index, offset in ((2, 2), (3, 5)):
        theta_part = np.zeros(sites.shape)
        phi_part = np.zeros(sites.shape)
        for s, (dth, dph) in enumerate(differentials):
            g = fields[offset + s]
            theta_part = theta_part + g * dth
            phi_part = phi_part + g * dph
        comps[(0, torus_index)] = theta_part
        comps[(1, torus_index)] = phi_part
    eta = FormField.from_components(2, sites, comps)
    mu = FormField.from_components(4, sites, {(0, 1, 2, 3): h * st})
    return eta, mu


@dataclass(frozen=True, eq=False)
class AdmissibleTorsion:
    klass: CalibrationClass
    t_flat: FormField
    harmonic_part: FormField
    eta: FormField
    mu: FormField
    exact: FormField
    coexact: FormField
    tensor: TorsionField

    @property
    def grid(self) -> QuadratureGrid:
        return self.t_flat.sites

    @property
    def nonharmonic_part(self) -> FormField:
        return self.exact + self.coexact


def build_admissible_torsion(klass: CalibrationClass, eta: FormField, mu: FormField) -> AdmissibleTorsion:
    klass.require_nontrivial()
    grid = eta.sites
    if mu.sites is not grid:
        raise ShapeError("eta and mu are sampled on different grids")
    if eta.degree != 2 or mu.degree != 4:
        raise ShapeError("eta must be a 2-form and mu a 4-form")
    omega = harmonic_representative(klass, grid)
    exact = d(eta)
    coexact = codifferential(mu)
    t_flat = omega + exact + coexact
    return AdmissibleTorsion(klass, t_flat, omega, eta, mu, exact, coexact, form_to_torsion(t_flat))


def admissible_from_spec(klass: CalibrationClass, spec: PotentialSpec, grid: QuadratureGrid) -> AdmissibleTorsion:
    eta, mu = sample_potentials(spec, grid)
    return build_admissible_torsion(klass, eta, mu)
