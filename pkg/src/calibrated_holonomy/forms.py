"""Differential forms sampled on the product grid.

A k-form stores one array per strictly increasing index tuple, in lexicographic
order of ``(theta, phi, x, y)``.  For 3-forms this is ``(theta phi x,
theta phi y, theta x y, phi x y)``.  Components are coordinate-basis values, so
the exterior derivative never touches the metric.

Sign conventions: orientation ``vol = sin(theta) dtheta^dphi^dx^dy`` and
``codifferential = -star d star`` in every degree (Riemannian, n = 4).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from itertools import combinations, permutations
from math import comb
from typing import Union

import numpy as np

from .errors import DomainError, ShapeError
from .geometry import (
    COORDINATES,
    PointSet,
    QuadratureGrid,
    frame_scales,
    integrate,
    metric_diagonal,
)

Sites = Union[QuadratureGrid, PointSet]

INDEX_TUPLES = {k: list(combinations(range(4), k)) for k in range(5)}
INDEX_POSITION = {k: {idx: n for n, idx in enumerate(INDEX_TUPLES[k])} for k in range(5)}


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
            elif seq[i] == seq[j]:
                return 0
    return sign


def component_label(idx) -> str:
    return "_".join(COORDINATES[i] for i in idx) or "scalar"


@dataclass(frozen=True, eq=False)
class FormField:
    degree: int
    components: np.ndarray
    sites: Sites

    def __post_init__(self):
        if not 0 <= self.degree <= 4:
            raise DomainError(f"form degree must be in 0..4, got {self.degree}")
        comps = np.asarray(self.components, dtype=float)
        expected = (comb(4, self.degree),) + tuple(self.sites.shape)
        if comps.shape != expected:
            raise ShapeError(f"{self.degree}-form components have shape {comps.shape}, expected {expected}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, degree: int, sites: Sites) -> "FormField":
        return cls(degree, np.zeros((comb(4, degree),) + tuple(sites.shape)), sites)

    @classmethod
    def from_components(cls, degree: int, sites: Sites, values: dict) -> "FormField":
        """Build from ``{index_tuple: array}``; missing components are zero."""
        out = np.zeros((comb(4, degree),) + tuple(sites.shape))
        for idx, value in values.items():
            out[INDEX_POSITION[degree][tuple(idx)]] = value
        return cls(degree, out, sites)

    @property
    def indices(self):
        return INDEX_TUPLES[self.degree]

    def __getitem__(self, idx) -> np.ndarray:
        return self.components[INDEX_POSITION[self.degree][tuple(idx)]]

    def _check_compatible(self, other: "FormField"):
        if other.sites is not self.sites:
            raise ShapeError("forms live on different grids")
        if other.degree != self.degree:
            raise DomainError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        return FormField(self.degree, self.components + other.components, self.sites)

    def __sub__(self, other: "FormField") -> "FormField":
        self._check_compatible(other)
        return FormField(self.degree, self.components - other.components, self.sites)

    def __neg__(self) -> "FormField":
        return FormField(self.degree, -self.components, self.sites)

    def __mul__(self, scalar) -> "FormField":
        return FormField(self.degree, self.components * np.asarray(scalar), self.sites)

    __rmul__ = __mul__

    def full(self) -> np.ndarray:
        """Totally antisymmetric array of shape ``(4,)*k + site_shape``."""
        k = self.degree
        out = np.zeros((4,) * k + tuple(self.sites.shape))
        if k == 0:
            return self.components[0].copy()
        for n, idx in enumerate(self.indices):
            for perm in permutations(idx):
                out[perm] = _perm_sign(perm) * self.components[n]
        return out

    def pointwise_norm_sq(self) -> np.ndarray:
        """|alpha|_g^2 at each site."""
        diag = metric_diagonal(self.sites.sin_theta)
        total = np.zeros(self.sites.shape)
        for n, idx in enumerate(self.indices):
            factor = 1.0
            for i in idx:
                factor = factor / diag[i]
            total = total + factor * self.components[n] ** 2
        return total


def wedge(alpha: FormField, beta: FormField) -> FormField:
    if alpha.sites is not beta.sites:
        raise ShapeError("forms live on different grids")
    k = alpha.degree + beta.degree
    if k > 4:
        raise DomainError(f"wedge degree {alpha.degree}+{beta.degree} exceeds 4")
    out = np.zeros((comb(4, k),) + tuple(alpha.sites.shape))
    for i, I in enumerate(alpha.indices):
        for j, J in enumerate(beta.indices):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            out[INDEX_POSITION[k][K]] += _perm_sign(I + J) * alpha.components[i] * beta.components[j]
    return FormField(k, out, alpha.sites)


def _require_grid(form: FormField) -> QuadratureGrid:
    if not isinstance(form.sites, QuadratureGrid):
        raise ShapeError("differential operators need a form sampled on a QuadratureGrid")
    return form.sites


def d(alpha: FormField) -> FormField:
    """Exterior derivative with spectral partials."""
    if alpha.degree >= 4:
        raise DomainError("exterior derivative of a 4-form is not defined on a 4-manifold")
    grid = _require_grid(alpha)
    k = alpha.degree + 1
    out = np.zeros((comb(4, k),) + grid.shape)
    for n, I in enumerate(alpha.indices):
        theta_count = I.count(0)
        for j in range(4):
            if j in I:
                continue
            K = tuple(sorted((j,) + I))
            sign = -1.0 if K.index(j) % 2 else 1.0
            out[INDEX_POSITION[k][K]] += sign * grid.partial(alpha.components[n], j, theta_count)
    return FormField(k, out, grid)


def hodge_star(alpha: FormField) -> FormField:
    sites = alpha.sites
    diag = metric_diagonal(sites.sin_theta)
    sqrt_det = sites.sin_theta
    k = 4 - alpha.degree
    out = np.zeros((comb(4, k),) + tuple(sites.shape))
    for n, I in enumerate(alpha.indices):
        J = tuple(i for i in range(4) if i not in I)
        factor = sqrt_det * _perm_sign(I + J)
        for i in I:
            factor = factor / diag[i]
        out[INDEX_POSITION[k][J]] = factor * alpha.components[n]
    return FormField(k, out, sites)


def codifferential(alpha: FormField) -> FormField:
    if alpha.degree == 0:
        raise DomainError("codifferential of a 0-form is not defined")
    return -hodge_star(d(hodge_star(alpha)))


def l2_inner(alpha: FormField, beta: FormField) -> float:
    """Global inner product: integral of alpha ^ star(beta)."""
    if alpha.degree != beta.degree:
        raise DomainError(f"degree mismatch: {alpha.degree} vs {beta.degree}")
    grid = _require_grid(alpha)
    if beta.sites is not grid:
        raise ShapeError("forms live on different grids")
    top = wedge(alpha, hodge_star(beta))
    return integrate(hodge_star(top).components[0], grid)


def l2_norm(alpha: FormField) -> float:
    return float(np.sqrt(max(l2_inner(alpha, alpha), 0.0)))


@dataclass(frozen=True, eq=False)
class VectorField:
    components: np.ndarray
    sites: Sites

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (4,) + tuple(self.sites.shape):
            raise ShapeError(f"vector field has shape {comps.shape}")
        object.__setattr__(self, "components", comps)


def sharp(alpha: FormField) -> VectorField:
    if alpha.degree != 1:
        raise DomainError("sharp acts on 1-forms")
    diag = metric_diagonal(alpha.sites.sin_theta)
    return VectorField(np.stack([alpha.components[i] / diag[i] for i in range(4)]), alpha.sites)


def flat(X: VectorField) -> FormField:
    diag = metric_diagonal(X.sites.sin_theta)
    return FormField(1, np.stack([X.components[i] * diag[i] for i in range(4)]), X.sites)


@dataclass(frozen=True, eq=False)
class TorsionField:
    """(1,2)-tensor ``T(d_i, d_j) = T[k, i, j] d_k`` with optional 3-form origin."""

    components: np.ndarray
    sites: Sites
    flat_form: FormField | None = None

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != (4, 4, 4) + tuple(self.sites.shape):
            raise ShapeError(f"torsion components have shape {comps.shape}")
        object.__setattr__(self, "components", comps)

    def __call__(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """T(X, Y) for coordinate-component vectors broadcast against the sites."""
        return np.einsum("kij...,i...,j...->k...", self.components, X, Y)

    def frame_components(self) -> np.ndarray:
        """``F[A, B, C]`` with ``T(E_A, E_B) = F[A, B, C] E_C``."""
        s = frame_scales(self.sites.sin_theta)
        out = np.empty_like(self.components)
        for k in range(4):
            for i in range(4):
                for j in range(4):
                    out[i, j, k] = self.components[k, i, j] * s[k] / (s[i] * s[j])
        return out


def form_to_torsion(tau: FormField) -> TorsionField:
    """Raise the last index: ``T^k_ij = g^kl tau_ijl``."""
    if tau.degree != 3:
        raise DomainError("torsion is built from a 3-form")
    diag = metric_diagonal(tau.sites.sin_theta)
    full = tau.full()
    comps = np.empty_like(full)
    for k in range(4):
        comps[k] = full[:, :, k] / diag[k]
    return TorsionField(comps, tau.sites, tau)


def dump_form(form: FormField, path, fmt: str = "csv") -> None:
    """Column-ordered field dump: node index, coordinates, components."""
    sites = form.sites
    coords = [np.broadcast_to(c, sites.shape).ravel() for c in sites.coordinates()]
    labels = [component_label(idx) for idx in form.indices]
    values = form.components.reshape(len(labels), -1)
    if fmt == "json":
        payload = {
            "degree": form.degree,
            "columns": ["node", *COORDINATES, *labels],
            "rows": [
                [n, *(float(c[n]) for c in coords), *(float(v[n]) for v in values)]
                for n in range(values.shape[1])
            ],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", *COORDINATES, *labels])
        for n in range(values.shape[1]):
            writer.writerow([n, *(format(c[n], ".17g") for c in coords), *(format(v[n], ".17g") for v in values)])
