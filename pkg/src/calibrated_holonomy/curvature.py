"""Curvature of connections ``nabla_X Y = nabla^LC_X Y + T(X, Y)``.

Two independent assemblies are provided:

* ``curvature_from_eq1`` works in the orthonormal frame ``(e1, e2, f1, f2)``
  from the analytic sphere curvature, the covariant derivative of the torsion
  3-form and the quadratic torsion terms.
* ``curvature_from_gamma`` differentiates the full coordinate Christoffel
  symbols and never forms a covariant derivative.

Frame curvature arrays are indexed ``R[D, C, A, B] = g(R(E_A, E_B) E_C, E_D)``,
matching the coordinate convention ``R(d_i, d_j) d_k = R^l_kij d_l``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .calibration import AdmissibleTorsion
from .errors import ConfigError, ShapeError
from .forms import INDEX_POSITION, INDEX_TUPLES, FormField, TorsionField, _perm_sign, form_to_torsion
from .geometry import (
    QuadratureGrid,
    SpectralInterpolant,
    _check_theta,
    frame_scales,
    integrate,
    metric_diagonal,
)

CONVENTIONS = ("standard", "paper-literal")
SPHERE = (0, 1)
TORUS = (2, 3)
CHUNK = 4096


def check_convention(convention: str) -> str:
    if convention not in CONVENTIONS:
        raise ConfigError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    return convention


def _lc_nonzero(sin_t, cos_t):
    """Nonzero Levi-Civita symbols as ``{(k, i, j): value}``."""
    cot = cos_t / sin_t
    return {(0, 1, 1): -sin_t * cos_t, (1, 0, 1): cot, (1, 1, 0): cot}


def _lc_theta_derivative(sin_t, cos_t):
    inv = -1.0 / sin_t**2
    return {(0, 1, 1): -(cos_t**2 - sin_t**2), (1, 0, 1): inv, (1, 1, 0): inv}


def levi_civita(point) -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` with ``nabla_{d_i} d_j = G[k, i, j] d_k``."""
    theta = float(point[0])
    _check_theta(theta)
    out = np.zeros((4, 4, 4))
    for key, value in _lc_nonzero(np.sin(theta), np.cos(theta)).items():
        out[key] = value
    return out


def levi_civita_field(sin_t, cos_t, shape) -> np.ndarray:
    out = np.zeros((4, 4, 4) + tuple(shape))
    for key, value in _lc_nonzero(sin_t, cos_t).items():
        out[key] = value
    return out


def _riemann_lc_frame() -> np.ndarray:
    # unit round sphere: R(X, Y)Z = g(Y, Z)X - g(X, Z)Y on V1, flat on V2
    R = np.zeros((4, 4, 4, 4))
    for a in SPHERE:
        for b in SPHERE:
            for c in SPHERE:
                for dd in SPHERE:
                    R[dd, c, a, b] = (b == c) * (a == dd) - (a == c) * (b == dd)
    return R


RIEMANN_LC_FRAME = _riemann_lc_frame()


def _tau_lookup(comps, i, j, k):
    sign = _perm_sign((i, j, k))
    if sign == 0:
        return None
    return sign * comps[INDEX_POSITION[3][tuple(sorted((i, j, k)))]]


@dataclass(frozen=True, eq=False)
class _TorsionDerivatives:
    """Compact coordinate data for a 3-form: values, partials, LC covariant derivative."""

    tau: np.ndarray  # (4, *grid)
    partial: np.ndarray  # (4 directions, 4 components, *grid)
    covariant: np.ndarray  # (4 directions, 4 components, *grid)


def _torsion_derivatives(tau: FormField) -> _TorsionDerivatives:
    grid = tau.sites
    comps = tau.components
    partial = np.empty((4,) + comps.shape)
    for n, idx in enumerate(tau.indices):
        for i in range(4):
            partial[i, n] = grid.partial(comps[n], i, idx.count(0))
    gamma = _lc_nonzero(grid.sin_theta, grid.cos_theta)
    covariant = partial.copy()
    for n, (a, b, c) in enumerate(tau.indices):
        for (m, i, j), G in gamma.items():
            # -G^m_ia tau_mbc - G^m_ib tau_amc - G^m_ic tau_abm
            for slot in range(3):
                if j != (a, b, c)[slot]:
                    continue
                args = [a, b, c]
                args[slot] = m
                value = _tau_lookup(comps, *args)
                if value is not None:
                    covariant[i, n] -= G * value
    return _TorsionDerivatives(comps, partial, covariant)


def _expand3(compact):
    """(4, n) 3-form components -> (4, 4, 4, n) antisymmetric array."""
    out = np.zeros((4, 4, 4) + compact.shape[1:])
    for (i, j, k), pos in INDEX_POSITION[3].items():
        for p in permutations((i, j, k)):
            out[p] = _perm_sign(p) * compact[pos]
    return out


@dataclass(frozen=True, eq=False)
class ConnectionField:
    """``nabla = nabla^LC + T`` sampled on a grid.

    ``harmonic`` carries the harmonic part of the torsion 3-form when the
    connection comes from an admissible torsion; the curvature splits need it.
    """

    grid: QuadratureGrid
    torsion: TorsionField | None = None
    harmonic: FormField | None = None
    convention: str = "standard"
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        check_convention(self.convention)
        if self.torsion is not None and self.torsion.sites is not self.grid:
            raise ShapeError("torsion is sampled on a different grid")

    @property
    def flat_form(self) -> FormField | None:
        return None if self.torsion is None else self.torsion.flat_form

    @property
    def has_split(self) -> bool:
        return self.torsion is None or (self.flat_form is not None and self.harmonic is not None)

    @property
    def gamma(self) -> np.ndarray:
        g = self.grid
        out = levi_civita_field(g.sin_theta, g.cos_theta, g.shape)
        if self.torsion is not None:
            out = out + self.torsion.components
        return out

    def with_convention(self, convention: str) -> "ConnectionField":
        return ConnectionField(self.grid, self.torsion, self.harmonic, convention)

    def part_form(self, part: str) -> FormField | None:
        if part == "full":
            return self.flat_form
        if part == "harmonic":
            return self.harmonic
        if part == "nonharmonic":
            if self.flat_form is None:
                return None
            return self.flat_form if self.harmonic is None else self.flat_form - self.harmonic
        raise ConfigError(f"unknown torsion part {part!r}")

    def derivatives(self, part: str = "full") -> _TorsionDerivatives | None:
        if part not in self._cache:
            form = self.part_form(part)
            self._cache[part] = None if form is None else _torsion_derivatives(form)
        return self._cache[part]

    def gamma_at(self, point) -> np.ndarray:
        """Christoffel symbols at an arbitrary point (spectral interpolation of T)."""
        out = levi_civita(point)
        if self.torsion is None:
            return out
        if self.flat_form is None:
            raise ConfigError("off-grid evaluation needs a torsion built from a 3-form")
        if "interp" not in self._cache:
            form = self.flat_form
            self._cache["interp"] = SpectralInterpolant(self.grid, form.components, [i.count(0) for i in form.indices])
        tau = self._cache["interp"](point)
        s2 = np.sin(float(point[0])) ** 2
        inv_diag = (1.0, 1.0 / s2, 1.0, 1.0)
        for (i, j, k), pos in INDEX_POSITION[3].items():
            for p in permutations((i, j, k)):
                out[p[2], p[0], p[1]] += _perm_sign(p) * tau[pos] * inv_diag[p[2]]
        return out


def levi_civita_connection(grid: QuadratureGrid, convention: str = "standard") -> ConnectionField:
    return ConnectionField(grid, None, None, convention)


def calibrated_connection(torsion: AdmissibleTorsion, convention: str = "standard") -> ConnectionField:
    return ConnectionField(torsion.grid, torsion.tensor, torsion.harmonic_part, convention)


def harmonic_connection(torsion: AdmissibleTorsion, convention: str = "standard") -> ConnectionField:
    """Connection built from the harmonic part alone."""
    tensor = form_to_torsion(torsion.harmonic_part)
    return ConnectionField(torsion.grid, tensor, torsion.harmonic_part, convention)


def covariant_derivative_torsion(torsion: TorsionField) -> np.ndarray:
    """``(nabla^LC T)[i, k, j, l] = nabla_i T^k_jl`` in coordinates."""
    if torsion.flat_form is None:
        raise ConfigError("covariant derivative is computed from the torsion 3-form")
    form = torsion.flat_form
    data = _torsion_derivatives(form)
    diag = metric_diagonal(form.sites.sin_theta)
    out = np.zeros((4, 4, 4, 4) + tuple(form.sites.shape))
    for i in range(4):
        full = _expand3(data.covariant[i])
        for k in range(4):
            out[i, k] = full[:, :, k] / diag[k]
    return out


def _frame_data(data: _TorsionDerivatives, s):
    """Frame components of tau and of its covariant derivative (compact)."""
    tau = np.empty_like(data.tau)
    cov = np.empty_like(data.covariant)
    for n, (a, b, c) in enumerate(INDEX_TUPLES[3]):
        scale = 1.0 / (s[a] * s[b] * s[c])
        tau[n] = data.tau[n] * scale
        for i in range(4):
            cov[i, n] = data.covariant[i, n] * scale / s[i]
    return tau, cov


def _quadratic(tf, convention, D, C, A, B):
    if convention == "standard":
        # T(X, T(Y, Z)) - T(Y, T(X, Z))
        return np.einsum("bcm...,amd...->dcab...", tf[B][:, C], tf[A][:, :, D]) - np.einsum(
            "acm...,bmd...->dcab...", tf[A][:, C], tf[B][:, :, D]
        )
    # T(T(X, Y), Z) - T(T(X, Z), Y)
    return np.einsum("abm...,mcd...->dcab...", tf[A][:, B], tf[:, C][:, :, D]) - np.einsum(
        "acm...,mbd...->dcab...", tf[A][:, C], tf[:, B][:, :, D]
    )


def _eq1_chunk(tau_f, cov_f, convention, slots, terms):
    D, C, A, B = slots
    tf = _expand3(tau_f)
    R = _quadratic(tf, convention, D, C, A, B)
    if terms == "all":
        nt = np.stack([_expand3(cov_f[i]) for i in range(4)])
        R += np.einsum("abcd...->dcab...", nt[np.ix_(A, B, C, D)]) - np.einsum(
            "bacd...->dcab...", nt[np.ix_(B, A, C, D)]
        )
    return R


def _flatten(a, lead):
    return a.reshape(a.shape[:lead] + (-1,))


def assemble_eq1(conn: ConnectionField, part: str = "full", slots=None, terms: str = "all") -> np.ndarray:
    """Frame curvature by the torsion identity, chunked over grid points.

    ``part`` selects the torsion: ``"full"`` gives R including the sphere
    curvature, ``"harmonic"`` gives R_Th (harmonic torsion terms only) and
    ``"nonharmonic"`` gives the terms of the non-harmonic torsion alone.
    ``terms="quadratic"`` keeps only the quadratic torsion terms.  ``slots``
    restricts the output to index lists ``(D, C, A, B)``.
    """
    grid = conn.grid
    if not conn.has_split:
        raise ConfigError("curvature split needs the harmonic part of the torsion")
    if terms not in ("all", "quadratic"):
        raise ConfigError(f"unknown term selection {terms!r}")
    slots = tuple(np.asarray(list(ix)) for ix in (slots or (range(4),) * 4))
    out = np.zeros(tuple(ix.size for ix in slots) + (grid.size,))
    if part == "full" and terms == "all":
        out += RIEMANN_LC_FRAME[np.ix_(*slots)][..., None]
    data = conn.derivatives(part)
    if data is None:
        return out.reshape(out.shape[:4] + grid.shape)
    s = [np.broadcast_to(v, grid.shape) for v in frame_scales(grid.sin_theta)]
    tau_f, cov_f = _frame_data(data, s)
    tau_f = _flatten(tau_f, 1)
    cov_f = _flatten(cov_f, 2)
    for start in range(0, grid.size, CHUNK):
        stop = min(start + CHUNK, grid.size)
        out[..., start:stop] += _eq1_chunk(tau_f[..., start:stop], cov_f[..., start:stop], conn.convention, slots, terms)
    return out.reshape(out.shape[:4] + grid.shape)


def _gamma_chunk(tau, dtau, sin_t, cos_t):
    n = sin_t.shape[-1]
    inv_diag = (np.ones(n), 1.0 / sin_t**2, np.ones(n), np.ones(n))
    d_inv_phi = -2.0 * cos_t / sin_t**3
    G = np.zeros((4, 4, 4, n))
    dG = np.zeros((4, 4, 4, 4, n))
    for key, value in _lc_nonzero(sin_t, cos_t).items():
        G[key] = value
    for key, value in _lc_theta_derivative(sin_t, cos_t).items():
        dG[(0,) + key] = value
    if tau is not None:
        tf = _expand3(tau)
        for k in range(4):
            G[k] += tf[:, :, k] * inv_diag[k]
        for p in range(4):
            dtf = _expand3(dtau[p])
            for k in range(4):
                dG[p, k] += dtf[:, :, k] * inv_diag[k]
        dG[0, 1] += tf[:, :, 1] * d_inv_phi
    # R^l_kij = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    R = np.einsum("iljk...->lkij...", dG) - np.einsum("jlik...->lkij...", dG)
    R += np.einsum("lim...,mjk...->lkij...", G, G) - np.einsum("ljm...,mik...->lkij...", G, G)
    return R


def assemble_gamma(conn: ConnectionField, frame: bool = True) -> np.ndarray:
    grid = conn.grid
    if conn.torsion is not None and conn.flat_form is None:
        raise ConfigError("coordinate route needs a torsion built from a 3-form")
    data = conn.derivatives("full")
    out = np.empty((4, 4, 4, 4, grid.size))
    sin_t = np.broadcast_to(grid.sin_theta, grid.shape).ravel()
    cos_t = np.broadcast_to(grid.cos_theta, grid.shape).ravel()
    tau = None if data is None else _flatten(data.tau, 1)
    dtau = None if data is None else _flatten(data.partial, 2)
    for start in range(0, grid.size, CHUNK):
        stop = min(start + CHUNK, grid.size)
        sl = slice(start, stop)
        R = _gamma_chunk(
            None if tau is None else tau[..., sl],
            None if dtau is None else dtau[..., sl],
            sin_t[sl],
            cos_t[sl],
        )
        if frame:
            st = sin_t[sl]
            s = (np.ones_like(st), st, np.ones_like(st), np.ones_like(st))
            for l in range(4):
                for k in range(4):
                    for i in range(4):
                        for j in range(4):
                            R[l, k, i, j] *= s[l] / (s[k] * s[i] * s[j])
        out[..., sl] = R
    return out.reshape((4, 4, 4, 4) + grid.shape)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Frame curvature ``R[D, C, A, B]`` on the grid, with optional harmonic split."""

    grid: QuadratureGrid
    riemann: np.ndarray
    harmonic: np.ndarray | None = None
    convention: str = "standard"
    route: str = "eq1"

    @property
    def levi_civita(self) -> np.ndarray:
        return np.broadcast_to(RIEMANN_LC_FRAME.reshape((4, 4, 4, 4) + (1,) * 4), self.riemann.shape)

    @property
    def splits(self) -> dict:
        if self.harmonic is None:
            raise ConfigError("this curvature field carries no harmonic split")
        return {
            "levi_civita": self.levi_civita,
            "harmonic": self.harmonic,
            "nonharmonic": self.riemann - self.levi_civita - self.harmonic,
        }

    def coordinate_components(self) -> np.ndarray:
        """``R^l_kij`` in the coordinate basis."""
        s = frame_scales(self.grid.sin_theta)
        out = np.empty_like(self.riemann)
        for l in range(4):
            for k in range(4):
                for i in range(4):
                    for j in range(4):
                        out[l, k, i, j] = self.riemann[l, k, i, j] * s[k] * s[i] * s[j] / s[l]
        return out

    def __sub__(self, other: "CurvatureField") -> np.ndarray:
        return self.riemann - other.riemann


def curvature_from_eq1(conn: ConnectionField) -> CurvatureField:
    if not conn.has_split:
        raise ConfigError("curvature_from_eq1 needs the harmonic/non-harmonic torsion split")
    R = assemble_eq1(conn, "full")
    Rh = assemble_eq1(conn, "harmonic")
    return CurvatureField(conn.grid, R, Rh, conn.convention, "eq1")


def curvature_from_gamma(conn: ConnectionField) -> CurvatureField:
    return CurvatureField(conn.grid, assemble_gamma(conn), None, "standard", "gamma")


def dual_path_gap(conn: ConnectionField) -> float:
    """Sup-norm difference of the two curvature routes (frame components)."""
    a = assemble_eq1(conn, "full")
    b = assemble_gamma(conn)
    return float(np.max(np.abs(a - b)))


BLOCKS = {
    "P1RP1": (SPHERE, SPHERE),
    "P1RP2": (SPHERE, TORUS),
    "P2RP1": (TORUS, SPHERE),
    "P2RP2": (TORUS, TORUS),
}


@dataclass(frozen=True)
class BlockReport:
    """Frame-invariant block norms; ``PiRPj`` maps ``V_j`` into ``V_i``."""

    pointwise: dict
    sup: dict
    l2: dict

    @property
    def offdiag_pointwise(self) -> np.ndarray:
        return np.sqrt(self.pointwise["P1RP2"] ** 2 + self.pointwise["P2RP1"] ** 2)

    @property
    def offdiag_sup(self) -> float:
        return float(np.max(self.offdiag_pointwise))

    @property
    def offdiag_l2(self) -> float:
        return float(np.sqrt(self.l2["P1RP2"] ** 2 + self.l2["P2RP1"] ** 2))

    def as_dict(self) -> dict:
        return {
            "sup": dict(self.sup),
            "l2": dict(self.l2),
            "offdiag_sup": self.offdiag_sup,
            "offdiag_l2": self.offdiag_l2,
        }


def block_norms(riemann: np.ndarray, grid: QuadratureGrid) -> BlockReport:
    pointwise, sup, l2 = {}, {}, {}
    for name, (rows, cols) in BLOCKS.items():
        sq = np.sum(riemann[np.ix_(rows, cols)] ** 2, axis=(0, 1, 2, 3))
        pointwise[name] = np.sqrt(sq)
        sup[name] = float(np.max(pointwise[name]))
        l2[name] = float(np.sqrt(max(integrate(sq, grid), 0.0)))
    return BlockReport(pointwise, sup, l2)


def block_report(R: CurvatureField) -> BlockReport:
    return block_norms(R.riemann, R.grid)


@dataclass(frozen=True)
class RicciField:
    """``ric[B, C] = Ric(E_B, E_C)``, the trace of ``X -> R(X, E_B) E_C``."""

    ric: np.ndarray

    @property
    def symmetric(self) -> np.ndarray:
        return 0.5 * (self.ric + np.swapaxes(self.ric, 0, 1))

    @property
    def antisymmetric(self) -> np.ndarray:
        return 0.5 * (self.ric - np.swapaxes(self.ric, 0, 1))

    @property
    def mixed_pointwise(self) -> np.ndarray:
        ix = np.ix_(SPHERE, TORUS)
        jx = np.ix_(TORUS, SPHERE)
        return np.sqrt(np.sum(self.ric[ix] ** 2, axis=(0, 1)) + np.sum(self.ric[jx] ** 2, axis=(0, 1)))

    @property
    def mixed_sup(self) -> float:
        return float(np.max(self.mixed_pointwise))


def ricci_from_frame(riemann: np.ndarray) -> RicciField:
    return RicciField(np.einsum("acab...->bc...", riemann))


def ricci(R: CurvatureField) -> RicciField:
    return ricci_from_frame(R.riemann)


def compat_residual(conn: ConnectionField) -> float:
    """Sup norm of ``(nabla g)_ijk`` in coordinates."""
    g = conn.grid
    diag = [np.broadcast_to(v, g.shape) for v in metric_diagonal(g.sin_theta)]
    G = conn.gamma
    worst = 0.0
    for i in range(4):
        for j in range(4):
            for k in range(4):
                res = -G[k, i, j] * diag[k] - G[j, i, k] * diag[j]
                if i == 0 and j == 1 and k == 1:
                    res = res + 2.0 * g.sin_theta * g.cos_theta
                worst = max(worst, float(np.max(np.abs(res))))
    return worst
