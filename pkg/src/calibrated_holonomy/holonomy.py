"""Holonomy diagnostics: curvature operators, Lie closure, splitting test, transport."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .curvature import ConnectionField, CurvatureField
from .errors import ConfigError
from .geometry import QuadratureGrid, _check_theta, frame_scales

PRESERVED = "reducible-splitting-preserved"
VIOLATED = "splitting-violated"
PAIRS = [(a, b) for a in range(4) for b in range(a + 1, 4)]
P1 = np.diag([1.0, 1.0, 0.0, 0.0])


def _node_index(grid: QuadratureGrid, point):
    if all(isinstance(c, (int, np.integer)) for c in point):
        return tuple(int(c) for c in point)
    theta, phi, x, y = (float(c) for c in point)
    _check_theta(theta)
    index = []
    for value, nodes in ((theta, grid.theta), (phi, grid.phi), (x, grid.x), (y, grid.y)):
        hit = np.flatnonzero(np.isclose(nodes, value, rtol=0.0, atol=1e-12))
        if hit.size == 0:
            raise ConfigError(f"point {tuple(point)} is not a grid node")
        index.append(int(hit[0]))
    return tuple(index)


def curvature_operators_at(R: CurvatureField, point) -> np.ndarray:
    """Matrices of ``R(E_A, E_B)`` (A < B) in the orthonormal frame, shape (6, 4, 4)."""
    i, j, k, l = _node_index(R.grid, point)
    return np.stack([R.riemann[:, :, a, b, i, j, k, l] for a, b in PAIRS])


def sample_nodes(grid: QuadratureGrid) -> list[tuple[int, int, int, int]]:
    """Eight fixed grid nodes used for pooling curvature operators."""
    n_theta, n_phi, n_x, _ = grid.shape
    thetas = (n_theta // 3, (2 * n_theta) // 3)
    phis = (0, n_phi // 4)
    xs = (0, n_x // 2)
    return [(t, p, x, 0) for t, p, x in product(thetas, phis, xs)]


def bracket(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def lie_closure(generators, tol: float = 1e-8) -> np.ndarray:
    """Frobenius-orthonormal basis of the Lie algebra generated by ``generators``.

    Residuals with norm at most ``tol`` (absolute) are treated as dependent.
    """
    generators = [np.asarray(g, dtype=float) for g in generators]
    if not generators:
        raise ConfigError("lie_closure needs at least one generator")
    basis: list[np.ndarray] = []

    def add(M):
        v = M.copy()
        for _ in range(2):
            for B in basis:
                v -= np.vdot(B, v) * B
        norm = np.linalg.norm(v)
        if norm > tol:
            basis.append(v / norm)
            return True
        return False

    for g in generators:
        add(g)
    changed = True
    while changed:
        changed = False
        n = len(basis)
        for i in range(n):
            for j in range(i + 1, n):
                if add(bracket(basis[i], basis[j])):
                    changed = True
    if not basis:
        return np.zeros((0,) + generators[0].shape)
    return np.stack(basis)


def splitting_test(matrices, tol: float = 1e-6, projector: np.ndarray | None = None):
    """Largest ``||[A, P1]||_F`` over ``matrices`` and the resulting verdict."""
    matrices = np.asarray(matrices, dtype=float)
    P = P1 if projector is None else projector
    if matrices.size == 0:
        return 0.0, PRESERVED
    norms = [np.linalg.norm(A @ P - P @ A) for A in matrices]
    norm = float(max(norms))
    return norm, VIOLATED if norm > tol else PRESERVED


@dataclass(frozen=True)
class LoopSpec:
    waypoints: tuple
    steps_per_segment: int = 64

    def __post_init__(self):
        pts = np.asarray(self.waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4 or len(pts) < 3:
            raise ConfigError("a loop needs at least three (theta, phi, x, y) waypoints")
        if not np.array_equal(pts[0], pts[-1]):
            raise ConfigError("loop is not closed: first waypoint must equal the last")
        _check_theta(pts[:, 0])
        if self.steps_per_segment < 8:
            raise ConfigError("steps_per_segment must be >= 8")
        object.__setattr__(self, "waypoints", tuple(tuple(float(c) for c in p) for p in pts))

    def reversed(self) -> "LoopSpec":
        return LoopSpec(tuple(reversed(self.waypoints)), self.steps_per_segment)

    @property
    def base_point(self) -> tuple:
        return self.waypoints[0]


def rectangle_loop(base, axes: tuple[int, int], sides: tuple[float, float], steps_per_segment: int = 64) -> LoopSpec:
    """Coordinate rectangle spanned from ``base`` along two coordinate axes."""
    p0 = np.asarray(base, dtype=float)
    u = np.zeros(4)
    v = np.zeros(4)
    u[axes[0]] = sides[0]
    v[axes[1]] = sides[1]
    pts = [p0, p0 + u, p0 + u + v, p0 + v, p0]
    return LoopSpec(tuple(tuple(p) for p in pts), steps_per_segment)


@dataclass(frozen=True)
class Transport:
    matrix: np.ndarray
    orthogonality_defect: float

    def offdiag_norm(self) -> float:
        """Frobenius norm of the V1 -> V2 block of the transport matrix."""
        return float(np.linalg.norm(self.matrix[2:, :2]))


def parallel_transport(conn: ConnectionField, loop: LoopSpec) -> Transport:
    """Transport of the base-point frame around ``loop`` with classic RK4."""
    pts = np.asarray(loop.waypoints)
    V = np.eye(4)
    n = loop.steps_per_segment
    for start, stop in zip(pts[:-1], pts[1:]):
        velocity = stop - start
        h = 1.0 / n

        def rhs(t, V):
            G = conn.gamma_at(start + t * velocity)
            A = np.einsum("kij,i->kj", G, velocity)
            return -A @ V

        for step in range(n):
            t = step * h
            k1 = rhs(t, V)
            k2 = rhs(t + 0.5 * h, V + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, V + 0.5 * h * k2)
            k4 = rhs(t + h, V + h * k3)
            V = V + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    s = np.array([float(c) for c in frame_scales(np.sin(pts[0, 0]))])
    M = (s[:, None] * V) / s[None, :]
    defect = float(np.linalg.norm(M.T @ M - np.eye(4)))
    return Transport(M, defect)


@dataclass(frozen=True)
class HolonomyReport:
    base_point: tuple
    generators: np.ndarray
    closure_dim: int
    splitting_commutator_norm: float
    closure_commutator_norm: float
    verdict: str
    transport_matrices: list
    orthogonality_defect: float

    def as_dict(self) -> dict:
        return {
            "base_point": list(self.base_point),
            "generators": np.round(self.generators, 15).tolist(),
            "closure_dim": self.closure_dim,
            "splitting_commutator_norm": self.splitting_commutator_norm,
            "closure_commutator_norm": self.closure_commutator_norm,
            "verdict": self.verdict,
            "transport_matrices": [np.asarray(m).tolist() for m in self.transport_matrices],
            "orthogonality_defect": self.orthogonality_defect,
        }


def holonomy_report(
    R: CurvatureField,
    conn: ConnectionField | None = None,
    loops=(),
    tol: float = 1e-6,
    closure_tol: float = 1e-8,
) -> HolonomyReport:
    """Pool curvature operators at the fixed sample nodes and test the splitting.

    The verdict uses the raw curvature operators: the matrices commuting with
    the projector onto V1 form a Lie subalgebra, so the generated algebra
    preserves the splitting exactly when every generator does.
    """
    nodes = sample_nodes(R.grid)
    generators = np.concatenate([curvature_operators_at(R, node) for node in nodes])
    basis = lie_closure(generators, closure_tol)
    norm, verdict = splitting_test(generators, tol)
    closure_norm, _ = splitting_test(basis, tol)
    transports = []
    if loops:
        if conn is None:
            raise ConfigError("parallel transport needs the connection")
        transports = [parallel_transport(conn, loop) for loop in loops]
    return HolonomyReport(
        base_point=R.grid.node_coordinates(nodes[0]),
        generators=generators,
        closure_dim=int(len(basis)),
        splitting_commutator_norm=norm,
        closure_commutator_norm=closure_norm,
        verdict=verdict,
        transport_matrices=[t.matrix for t in transports],
        orthogonality_defect=max((t.orthogonality_defect for t in transports), default=0.0),
    )
