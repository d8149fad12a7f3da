"""Product manifold S^2 x T^2: metric, quadrature grid, frames and integration.

Coordinates are ordered (theta, phi, x, y).  The sphere has unit radius and the
torus is the flat square torus with both periods equal to 2*pi, so the metric is
``diag(1, sin^2 theta, 1, 1)``.

The theta direction is sampled at Gauss-Legendre nodes in ``t = cos(theta)``;
no node sits on a pole.  Periodic directions use uniform nodes and FFTs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DomainError, ShapeError

COORDINATES = ("theta", "phi", "x", "y")
TWO_PI = 2.0 * np.pi
TOTAL_VOLUME = 16.0 * np.pi**3


@dataclass(frozen=True)
class ManifoldSpec:
    """Conventions of the product manifold (fixed, but carried explicitly)."""

    sphere_radius: float = 1.0
    torus_periods: tuple[float, float] = (TWO_PI, TWO_PI)

    def __post_init__(self):
        if self.sphere_radius != 1.0:
            raise ConfigError("sphere_radius must be 1")
        if tuple(self.torus_periods) != (TWO_PI, TWO_PI):
            raise ConfigError("torus_periods must be (2*pi, 2*pi)")

    @property
    def volume(self) -> float:
        return 4.0 * np.pi * self.sphere_radius**2 * self.torus_periods[0] * self.torus_periods[1]


@dataclass(frozen=True)
class GridSpec:
    n_theta: int = 24
    n_phi: int = 48
    n_x: int = 8
    n_y: int = 8

    def __post_init__(self):
        for name in ("n_theta", "n_phi", "n_x", "n_y"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if value < 4:
                raise ConfigError(f"{name} must be >= 4, got {value}")
        for name in ("n_phi", "n_x", "n_y"):
            if getattr(self, name) % 2:
                raise ConfigError(f"{name} must be even, got {getattr(self, name)}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.n_theta, self.n_phi, self.n_x, self.n_y)

    def refined(self, n_theta: int) -> "GridSpec":
        """Proportionally refined grid with the given theta count."""
        factor = n_theta / self.n_theta

        def even(n):
            return max(4, 2 * int(round(n * factor / 2.0)))

        return GridSpec(n_theta, even(self.n_phi), even(self.n_x), even(self.n_y))

    def as_dict(self) -> dict:
        return {"n_theta": self.n_theta, "n_phi": self.n_phi, "n_x": self.n_x, "n_y": self.n_y}


def pairwise_sum(values) -> np.ndarray:
    """Sum over the last axis with a fixed balanced binary tree.

    The tree depends only on the length of the axis, so results are
    bit-reproducible irrespective of how callers schedule work.
    """
    a = np.asarray(values, dtype=float)
    n = a.shape[-1]
    size = 1 << max(0, (n - 1).bit_length())
    if size != n:
        pad = [(0, 0)] * (a.ndim - 1) + [(0, size - n)]
        a = np.pad(a, pad)
    while a.shape[-1] > 1:
        half = a.shape[-1] // 2
        a = a[..., :half] + a[..., half:]
    return a[..., 0]


def _barycentric_weights(t: np.ndarray, quad_weights: np.ndarray) -> np.ndarray:
    # closed form for Gauss-Legendre nodes; the global sign is irrelevant
    order = np.argsort(t)
    w = np.empty_like(t)
    w[order] = (-1.0) ** np.arange(t.size) * np.sqrt((1.0 - t[order] ** 2) * quad_weights[order])
    return w


def _differentiation_matrix(t: np.ndarray, bary: np.ndarray) -> np.ndarray:
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


class PointSet:
    """Scattered points (theta, phi, x, y), each of shape ``(N,)``."""

    def __init__(self, theta, phi, x, y):
        self.theta = np.atleast_1d(np.asarray(theta, dtype=float))
        self.phi = np.broadcast_to(np.asarray(phi, dtype=float), self.theta.shape)
        self.x = np.broadcast_to(np.asarray(x, dtype=float), self.theta.shape)
        self.y = np.broadcast_to(np.asarray(y, dtype=float), self.theta.shape)
        _check_theta(self.theta)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, margin: float = 1e-3) -> "PointSet":
        theta = rng.uniform(margin, np.pi - margin, n)
        return cls(theta, rng.uniform(0, TWO_PI, n), rng.uniform(0, TWO_PI, n), rng.uniform(0, TWO_PI, n))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.theta.shape

    @property
    def sin_theta(self) -> np.ndarray:
        return np.sin(self.theta)

    @property
    def cos_theta(self) -> np.ndarray:
        return np.cos(self.theta)

    def coordinates(self):
        return self.theta, self.phi, self.x, self.y


def _check_theta(theta):
    theta = np.asarray(theta)
    if np.any(~np.isfinite(theta)) or np.any(theta <= 0.0) or np.any(theta >= np.pi):
        raise DomainError("theta must lie strictly inside (0, pi); poles are outside the chart")


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Tensor-product quadrature and spectral differentiation data.

    ``weights`` already include the volume density ``sin(theta)``, so
    ``sum(f * weights)`` approximates the Riemannian integral of ``f``.
    """

    spec: GridSpec
    theta: np.ndarray
    theta_weights: np.ndarray
    t_nodes: np.ndarray
    phi: np.ndarray
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    d_t_matrix: np.ndarray
    d_theta_matrix: np.ndarray
    d_theta_odd_matrix: np.ndarray
    barycentric: np.ndarray
    wavenumbers: tuple[np.ndarray, np.ndarray, np.ndarray]
    manifold: ManifoldSpec = field(default_factory=ManifoldSpec)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.spec.shape

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def sin_theta(self) -> np.ndarray:
        return np.sin(self.theta)[:, None, None, None]

    @property
    def cos_theta(self) -> np.ndarray:
        return np.cos(self.theta)[:, None, None, None]

    def coordinates(self):
        """Broadcastable (theta, phi, x, y) arrays over the grid."""
        return (
            self.theta[:, None, None, None],
            self.phi[None, :, None, None],
            self.x[None, None, :, None],
            self.y[None, None, None, :],
        )

    def node_coordinates(self, index) -> tuple[float, float, float, float]:
        i, j, k, l = index
        return (float(self.theta[i]), float(self.phi[j]), float(self.x[k]), float(self.y[l]))

    def check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if values.shape[-4:] != self.shape:
            raise ShapeError(f"field trailing shape {values.shape[-4:]} does not match grid {self.shape}")
        return values

    def partial(self, values: np.ndarray, axis: int, theta_count: int = 0) -> np.ndarray:
        """Spectral partial derivative along coordinate ``axis`` (0..3).

        ``theta_count`` is the number of theta indices carried by the tensor
        component being differentiated.  Together with the phi wavenumber it
        fixes the parity of the theta profile: even profiles are polynomials in
        ``cos(theta)`` and odd ones are ``sin(theta)`` times such a polynomial.
        Each parity class gets its own exact differentiation matrix.
        """
        values = self.check(values)
        if axis == 0:
            return self._theta_derivative(values, theta_count)
        n = self.shape[axis]
        ax = values.ndim - 4 + axis
        k = np.fft.rfftfreq(n, 1.0 / n)
        k[-1] = 0.0  # drop the Nyquist mode
        shape = [1] * values.ndim
        shape[ax] = k.size
        spectrum = np.fft.rfft(values, axis=ax) * (1j * k).reshape(shape)
        return np.fft.irfft(spectrum, n=n, axis=ax)

    def _theta_derivative(self, values, theta_count):
        ax = values.ndim - 4
        even_m = 0.5 * (values + np.roll(values, self.spec.n_phi // 2, axis=ax + 1))
        odd_m = values - even_m
        same, flipped = self.d_theta_matrix, self.d_theta_odd_matrix
        if theta_count % 2:
            same, flipped = flipped, same
        return _apply_along(same, even_m, ax) + _apply_along(flipped, odd_m, ax)

    def theta_parity_split(self, values: np.ndarray, theta_count: int):
        """Split into (even-parity, odd-parity) theta profiles."""
        ax = values.ndim - 4
        even_m = 0.5 * (values + np.roll(values, self.spec.n_phi // 2, axis=ax + 1))
        odd_m = values - even_m
        if theta_count % 2:
            return odd_m, even_m
        return even_m, odd_m


def _apply_along(matrix, values, ax):
    return np.moveaxis(np.tensordot(matrix, values, axes=([1], [ax])), 0, ax)


def build_grid(spec: GridSpec, phi_origin: float = 0.0) -> QuadratureGrid:
    """Quadrature grid for ``spec``; ``phi_origin`` shifts the longitude nodes."""
    if not isinstance(spec, GridSpec):
        raise ConfigError("build_grid expects a GridSpec")
    t, w = np.polynomial.legendre.leggauss(spec.n_theta)
    # ascending theta means descending t
    t, w = t[::-1].copy(), w[::-1].copy()
    theta = np.arccos(t)
    sin_t = np.sqrt(1.0 - t**2)
    bary = _barycentric_weights(t, w)
    d_t = _differentiation_matrix(t, bary)
    d_even = -sin_t[:, None] * d_t
    d_odd = np.diag(t / sin_t) - (sin_t**2)[:, None] * d_t / sin_t[None, :]

    periodic = []
    for n in (spec.n_phi, spec.n_x, spec.n_y):
        periodic.append(TWO_PI * np.arange(n) / n)
    phi, x, y = periodic
    phi = phi + float(phi_origin)
    h = [TWO_PI / n for n in (spec.n_phi, spec.n_x, spec.n_y)]
    weights = (
        w[:, None, None, None]
        * np.full(spec.n_phi, h[0])[None, :, None, None]
        * np.full(spec.n_x, h[1])[None, None, :, None]
        * np.full(spec.n_y, h[2])[None, None, None, :]
    )
    wavenumbers = tuple(np.fft.fftfreq(n, 1.0 / n).astype(int) for n in (spec.n_phi, spec.n_x, spec.n_y))
    return QuadratureGrid(
        spec=spec,
        theta=theta,
        theta_weights=w,
        t_nodes=t,
        phi=phi,
        x=x,
        y=y,
        weights=weights,
        d_t_matrix=d_t,
        d_theta_matrix=d_even,
        d_theta_odd_matrix=d_odd,
        barycentric=bary,
        wavenumbers=wavenumbers,
    )


def integrate(values: np.ndarray, grid: QuadratureGrid) -> float:
    """Integral of a scalar field against the Riemannian volume."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ShapeError(f"scalar field shape {values.shape} does not match grid {grid.shape}")
    return float(pairwise_sum((values * grid.weights).ravel()))


def integrate_many(values: np.ndarray, grid: QuadratureGrid) -> np.ndarray:
    """Integrals of a stack of scalar fields, leading axes kept."""
    values = grid.check(np.asarray(values, dtype=float))
    lead = values.shape[:-4]
    flat = (values * grid.weights).reshape(lead + (-1,))
    return pairwise_sum(flat)


class PointMetric(NamedTuple):
    matrix: np.ndarray
    inverse: np.ndarray
    det: float


def metric_diagonal(sin_theta) -> tuple:
    """Diagonal entries of the metric, broadcast against ``sin_theta``."""
    one = np.ones_like(sin_theta)
    return (one, sin_theta**2, one, one)


def frame_scales(sin_theta) -> tuple:
    """Lengths of the coordinate vectors; ``E_A = d_A / s_A``."""
    one = np.ones_like(sin_theta)
    return (one, sin_theta, one, one)


def metric_at(point) -> PointMetric:
    theta = float(point[0])
    _check_theta(theta)
    s2 = np.sin(theta) ** 2
    g = np.diag([1.0, s2, 1.0, 1.0])
    return PointMetric(g, np.diag([1.0, 1.0 / s2, 1.0, 1.0]), s2)


@dataclass(frozen=True)
class Frame:
    """Orthonormal frame ``(e1, e2, f1, f2)`` as coordinate-component columns."""

    point: tuple
    vectors: np.ndarray

    @property
    def sphere(self) -> np.ndarray:
        return self.vectors[:, :2]

    @property
    def torus(self) -> np.ndarray:
        return self.vectors[:, 2:]

    def gram(self) -> np.ndarray:
        g = metric_at(self.point).matrix
        return self.vectors.T @ g @ self.vectors


def orthonormal_frame(point) -> Frame:
    theta = float(point[0])
    _check_theta(theta)
    vectors = np.diag([1.0, 1.0 / np.sin(theta), 1.0, 1.0])
    return Frame(tuple(float(c) for c in point), vectors)


class SpectralInterpolant:
    """Off-grid evaluation of grid fields in the bases used for differentiation.

    ``values`` has shape ``(C,) + grid.shape`` and ``theta_counts[c]`` gives the
    number of theta indices of component ``c``.  Fields are assumed band-limited
    below the periodic Nyquist frequencies.
    """

    def __init__(self, grid: QuadratureGrid, values: np.ndarray, theta_counts):
        values = grid.check(np.asarray(values, dtype=float))
        if values.ndim != 5 or len(theta_counts) != values.shape[0]:
            raise ShapeError("interpolant expects (C, n_theta, n_phi, n_x, n_y) values")
        self.grid = grid
        even = np.empty_like(values)
        odd = np.empty_like(values)
        for c, count in enumerate(theta_counts):
            even[c], odd[c] = grid.theta_parity_split(values[c], count)
        odd = odd / grid.sin_theta
        axes = (2, 3, 4)
        norm = grid.spec.n_phi * grid.spec.n_x * grid.spec.n_y
        self._coeffs = []
        for part in (even, odd):
            spec = np.fft.fftn(part, axes=axes) / norm
            for ax, n in zip(axes, grid.shape[1:]):
                index = [slice(None)] * 5
                index[ax] = n // 2
                spec[tuple(index)] = 0.0
            self._coeffs.append(spec)
        self._freqs = [np.fft.fftfreq(n, 1.0 / n) for n in grid.shape[1:]]

    def __call__(self, point) -> np.ndarray:
        theta, phi, x, y = (float(c) for c in point)
        _check_theta(theta)
        g = self.grid
        t = np.cos(theta)
        diff = t - g.t_nodes
        hit = np.flatnonzero(diff == 0.0)
        if hit.size:
            lag = np.zeros_like(diff)
            lag[hit[0]] = 1.0
        else:
            lag = g.barycentric / diff
            lag /= lag.sum()
        e_phi = np.exp(1j * self._freqs[0] * (phi - g.phi[0]))
        e_x = np.exp(1j * self._freqs[1] * x)
        e_y = np.exp(1j * self._freqs[2] * y)
        out = []
        for spec in self._coeffs:
            v = spec @ e_y
            v = v @ e_x
            v = v @ e_phi
            out.append((v.real) @ lag)
        return out[0] + np.sin(theta) * out[1]
