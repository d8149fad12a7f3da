"""Experiments on the mixed-block curvature of calibrated connections.

Every experiment takes an :class:`ExperimentConfig`, treats potential samples
as independent jobs and returns plain records in sample order, whatever the
number of worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .calibration import (
    AdmissibleTorsion,
    CalibrationClass,
    PotentialSpec,
    admissible_from_spec,
    build_admissible_torsion,
    harmonic_coefficients,
)
from .curvature import (
    CONVENTIONS,
    SPHERE,
    TORUS,
    ConnectionField,
    CurvatureField,
    assemble_eq1,
    assemble_gamma,
    calibrated_connection,
    curvature_from_eq1,
    levi_civita_connection,
    ricci,
)
from .errors import ConfigError
from .forms import FormField, codifferential, d, hodge_star, l2_inner, l2_norm
from .geometry import TOTAL_VOLUME, GridSpec, QuadratureGrid, build_grid, integrate, integrate_many

DEFAULT_TOLERANCES = {
    "calculus": 1e-8,
    "dual_path": 1e-8,
    "flag": 1e-8,
    "lemma": 1e-6,
    "splitting": 1e-6,
    "closure": 1e-8,
    "noncancel_ratio": 0.9,
    "ricci": 1e-8,
    "transport": 1e-8,
    "gauge": 1e-10,
    "pythagoras": 1e-8,
    "sample_independence": 1e-10,
}
FRAME_LABELS = ("e1", "e2", "f1", "f2")
SPLITS = ("full", "levi_civita", "harmonic", "nonharmonic")
# relative values below this are treated as rounding noise in decay fits
FLOOR = 1e-13


def check_tolerances(tolerances: dict) -> dict:
    merged = dict(DEFAULT_TOLERANCES)
    for key, value in tolerances.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value) or value <= 0:
            raise ConfigError(f"tolerance {key} must be a positive number, got {value!r}")
        merged[key] = float(value)
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    klass: CalibrationClass = CalibrationClass()
    potential_specs: tuple = (PotentialSpec(),)
    grid: GridSpec = GridSpec()
    convention: str = "standard"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.klass, CalibrationClass):
            raise ConfigError("class must be a CalibrationClass")
        if not isinstance(self.grid, GridSpec):
            raise ConfigError("grid must be a GridSpec")
        specs = tuple(self.potential_specs)
        if not all(isinstance(s, PotentialSpec) for s in specs):
            raise ConfigError("potential_specs must hold PotentialSpec entries")
        object.__setattr__(self, "potential_specs", specs)
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}, got {self.convention!r}")
        object.__setattr__(self, "tolerances", check_tolerances(self.tolerances))
        if isinstance(self.workers, bool) or not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(f"workers must be a positive integer, got {self.workers!r}")

    @property
    def is_baseline(self) -> bool:
        """Trivial class with zero potentials: the torsion-free connection."""
        return self.klass.is_trivial and all(s.amplitude == 0 for s in self.potential_specs)

    def tol(self, key: str) -> float:
        return self.tolerances[key]


def parallel_map(fn, items, workers: int = 1) -> list:
    """Ordered map; ``workers > 1`` uses threads, results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@lru_cache(maxsize=8)
def grid_for(spec: GridSpec, phi_origin: float = 0.0) -> QuadratureGrid:
    return build_grid(spec, phi_origin)


def grid_tag(spec: GridSpec) -> str:
    return "x".join(str(n) for n in spec.shape)


def zero_potentials(grid: QuadratureGrid):
    return FormField.zeros(2, grid), FormField.zeros(4, grid)


def sample_torsion(cfg: ExperimentConfig, spec: PotentialSpec | None, grid: QuadratureGrid | None = None) -> AdmissibleTorsion:
    """Admissible torsion for one sample; ``spec=None`` means zero potentials."""
    grid = grid or grid_for(cfg.grid)
    if spec is None:
        return build_admissible_torsion(cfg.klass, *zero_potentials(grid))
    return admissible_from_spec(cfg.klass, spec, grid)


def sample_connection(cfg: ExperimentConfig, spec: PotentialSpec | None, grid: QuadratureGrid | None = None) -> ConnectionField:
    grid = grid or grid_for(cfg.grid)
    if cfg.klass.is_trivial and (spec is None or spec.amplitude == 0):
        return levi_civita_connection(grid, cfg.convention)
    return calibrated_connection(sample_torsion(cfg, spec, grid), cfg.convention)


# --------------------------------------------------------------------------
# mixed block B(X, Y, Z) = Proj_V2 R(X, Y) Z with X, Z in V1 and Y in V2


@dataclass(frozen=True, eq=False)
class OffDiagonalBlockField:
    """Frame components ``B[a, j, b, k] = g(R(e_a, f_j) e_b, f_k)`` per split."""

    grid: QuadratureGrid
    harmonic: np.ndarray
    nonharmonic: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return self.harmonic + self.nonharmonic

    def part(self, name: str) -> np.ndarray:
        if name not in ("full", "harmonic", "nonharmonic"):
            raise ConfigError(f"unknown block part {name!r}")
        return getattr(self, name)

    def inner(self, p: str, q: str) -> float:
        """L2 pairing of two parts (full contraction over the frame slots)."""
        X, Y = self.part(p), self.part(q)
        return integrate(np.einsum("ajbk...,ajbk...->...", X, Y), self.grid)

    def norm(self, p: str) -> float:
        return float(np.sqrt(max(self.inner(p, p), 0.0)))


def _to_block(arr: np.ndarray) -> np.ndarray:
    # assemble_eq1 slot order is (D, C, A, B) = (f_k, e_b, e_a, f_j)
    return np.transpose(arr, (2, 3, 1, 0, 4, 5, 6, 7))


BLOCK_SLOTS = (TORUS, SPHERE, SPHERE, TORUS)


def offdiagonal_blocks(conn: ConnectionField) -> OffDiagonalBlockField:
    """Harmonic and non-harmonic mixed blocks.

    The sphere curvature has no mixed component, so the non-harmonic block is
    the full block minus the harmonic one.
    """
    full = _to_block(assemble_eq1(conn, "full", BLOCK_SLOTS))
    harmonic = _to_block(assemble_eq1(conn, "harmonic", BLOCK_SLOTS))
    return OffDiagonalBlockField(conn.grid, harmonic, full - harmonic)


def quadratic_nonharmonic_block(conn: ConnectionField) -> np.ndarray:
    """Block of the terms quadratic in the non-harmonic torsion alone."""
    return _to_block(assemble_eq1(conn, "nonharmonic", BLOCK_SLOTS, terms="quadratic"))


# --------------------------------------------------------------------------
# off-diagonal scan


@dataclass(frozen=True)
class ScanRow:
    split: str
    x: int
    y: int
    z: int
    sup: float
    l2: float
    flagged: bool

    @property
    def slot(self) -> str:
        target = "V2" if self.z in SPHERE else "V1"
        return f"({FRAME_LABELS[self.x]},{FRAME_LABELS[self.y]};{FRAME_LABELS[self.z]}->{target})"


def offdiagonal_scan(R: CurvatureField, tol: float = 1e-8) -> list[ScanRow]:
    """Norms of ``Proj_opposite R(E_A, E_B) E_C`` for every slot and split."""
    fields = {"full": R.riemann}
    if R.harmonic is not None:
        fields.update(R.splits)
    rows = []
    for split in SPLITS:
        if split not in fields:
            continue
        riemann = np.asarray(fields[split])
        for A in range(4):
            for B in range(A + 1, 4):
                for C in range(4):
                    target = list(TORUS if C in SPHERE else SPHERE)
                    sq = np.sum(riemann[target, C, A, B] ** 2, axis=0)
                    sup = float(np.sqrt(np.max(sq)))
                    l2 = float(np.sqrt(max(integrate(np.broadcast_to(sq, R.grid.shape), R.grid), 0.0)))
                    rows.append(ScanRow(split, A, B, C, sup, l2, sup > tol))
    return rows


def flagged_slots(rows, split: str = "full") -> list[ScanRow]:
    return [r for r in rows if r.split == split and r.flagged]


# --------------------------------------------------------------------------
# orthogonality lemma


@dataclass(frozen=True)
class LemmaRecord:
    sample_id: int
    seed: int
    grid: str
    c: float
    norm_h: float
    norm_nh: float
    inner: float
    inner_swapped: float
    c_linear: float
    c_quadratic: float
    skipped: bool = False

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _cosine(x: float, nx: float, ny: float) -> float:
    return float(x / (nx * ny)) if nx > 0 and ny > 0 else 0.0


def lemma_record(cfg: ExperimentConfig, sample_id: int, spec: PotentialSpec, grid_spec: GridSpec) -> LemmaRecord:
    grid = grid_for(grid_spec)
    conn = calibrated_connection(sample_torsion(cfg, spec, grid), cfg.convention)
    blocks = offdiagonal_blocks(conn)
    norm_h, norm_nh = blocks.norm("harmonic"), blocks.norm("nonharmonic")
    tag = grid_tag(grid_spec)
    if norm_nh == 0.0 or spec.amplitude == 0:
        return LemmaRecord(sample_id, spec.seed, tag, 0.0, norm_h, 0.0, 0.0, 0.0, 0.0, 0.0, skipped=True)
    inner = blocks.inner("harmonic", "nonharmonic")
    swapped = blocks.inner("nonharmonic", "harmonic")
    # split the non-harmonic block into its parts linear and quadratic in T_nh
    quad = quadratic_nonharmonic_block(conn)
    lin = blocks.nonharmonic - quad
    h = blocks.harmonic

    def pair(X, Y):
        return integrate(np.einsum("ajbk...,ajbk...->...", X, Y), grid)

    c_lin = _cosine(pair(h, lin), norm_h, np.sqrt(max(pair(lin, lin), 0.0)))
    c_quad = _cosine(pair(h, quad), norm_h, np.sqrt(max(pair(quad, quad), 0.0)))
    return LemmaRecord(sample_id, spec.seed, tag, _cosine(inner, norm_h, norm_nh), norm_h, norm_nh, inner, swapped, c_lin, c_quad)


def refinement_grids(base: GridSpec, thetas=(32, 40)) -> list[GridSpec]:
    return [base] + [base.refined(n) for n in thetas]


@dataclass(frozen=True)
class LemmaResult:
    records: list
    holds: bool
    counter_observation: dict | None

    @property
    def skipped(self) -> list:
        return sorted({r.sample_id for r in self.records if r.skipped})


def _decreasing(values, floor=FLOOR) -> bool:
    values = [abs(v) for v in values]
    return all(b <= max(a, floor) for a, b in zip(values, values[1:]))


def lemma_orthogonality(cfg: ExperimentConfig, grids=None) -> LemmaResult:
    """Measure the normalized mixed-block pairing ``c`` per sample and grid.

    The claim is treated as falsifiable: it holds for a sample when ``|c|``
    is within the ``lemma`` tolerance on the finest grid and does not grow
    under refinement.  Violations are collected into a counter-observation
    record that reproduces the run.
    """
    cfg.klass.require_nontrivial()
    grids = list(grids) if grids is not None else refinement_grids(cfg.grid)
    jobs = [(i, spec, g) for i, spec in enumerate(cfg.potential_specs) for g in grids]
    records = parallel_map(lambda job: lemma_record(cfg, *job), jobs, cfg.workers)
    violations = []
    for i, spec in enumerate(cfg.potential_specs):
        rows = [r for r in records if r.sample_id == i]
        if any(r.skipped for r in rows):
            continue
        cs = [r.c for r in rows]
        if abs(cs[-1]) > cfg.tol("lemma") or not _decreasing(cs):
            violations.append(
                {
                    "sample_id": i,
                    "potential": spec.__dict__,
                    "grids": [r.grid for r in rows],
                    "c": cs,
                    "c_linear": [r.c_linear for r in rows],
                    "c_quadratic": [r.c_quadratic for r in rows],
                    "norm_h": [r.norm_h for r in rows],
                    "norm_nh": [r.norm_nh for r in rows],
                }
            )
    counter = None
    if violations:
        counter = {
            "claim": "<R_h, R_nh> = 0 in L2 for every admissible sample",
            "observed": "normalized pairing c is non-zero and does not decay under refinement",
            "tolerance": cfg.tol("lemma"),
            "class": [cfg.klass.a, cfg.klass.b],
            "convention": cfg.convention,
            "violations": violations,
        }
    return LemmaResult(records, not violations, counter)


# --------------------------------------------------------------------------
# non-cancellation


@dataclass(frozen=True)
class NoncancellationRow:
    sample_id: int
    seed: int
    norm_Rh: float
    norm_Rnh: float
    cross: float
    norm_Rfull: float
    flag: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def noncancellation_row(cfg: ExperimentConfig, sample_id: int, spec: PotentialSpec | None) -> NoncancellationRow:
    conn = calibrated_connection(sample_torsion(cfg, spec), cfg.convention)
    blocks = offdiagonal_blocks(conn)
    norm_h, norm_nh, norm_full = blocks.norm("harmonic"), blocks.norm("nonharmonic"), blocks.norm("full")
    cross = blocks.inner("harmonic", "nonharmonic")
    # the measured full norm must be consistent with Pythagoras plus cross term
    pythagoras_ok = norm_full**2 >= norm_h**2 - 2.0 * abs(cross) - cfg.tol("pythagoras") * max(norm_h**2, 1.0)
    flag = norm_full < cfg.tol("noncancel_ratio") * norm_h or not pythagoras_ok
    seed = -1 if spec is None else spec.seed
    return NoncancellationRow(sample_id, seed, norm_h, norm_nh, cross, norm_full, bool(flag))


def noncancellation_certificate(cfg: ExperimentConfig) -> list[NoncancellationRow]:
    cfg.klass.require_nontrivial()
    jobs = list(enumerate(cfg.potential_specs))
    return parallel_map(lambda job: noncancellation_row(cfg, *job), jobs, cfg.workers)


def harmonic_norm_spread(rows) -> float:
    """Relative spread of the harmonic block norm across samples."""
    norms = np.array([r.norm_Rh for r in rows])
    if norms.size == 0 or norms.max() == 0:
        return 0.0
    return float((norms.max() - norms.min()) / norms.max())


# --------------------------------------------------------------------------
# Ricci probe


@dataclass(frozen=True)
class RicciRow:
    sample_id: int
    seed: int
    label: str
    ricci_mixed_sup: float
    riemann_offdiag_sup: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def mixed_entry_sup(riemann: np.ndarray) -> float:
    """Largest ``|g(R(E_A, E_B) E_C, E_D)|`` with C and D in different factors."""
    upper = np.abs(riemann[np.ix_(TORUS, SPHERE)])
    lower = np.abs(riemann[np.ix_(SPHERE, TORUS)])
    return float(max(upper.max(), lower.max()))


def ricci_mixed_entry_sup(R: CurvatureField) -> float:
    ric = ricci(R).ric
    return float(max(np.abs(ric[np.ix_(SPHERE, TORUS)]).max(), np.abs(ric[np.ix_(TORUS, SPHERE)]).max()))


def _ricci_row(cfg: ExperimentConfig, sample_id: int, spec: PotentialSpec | None) -> RicciRow:
    conn = sample_connection(cfg, spec)
    R = curvature_from_eq1(conn)
    label = "harmonic" if spec is None else "sample"
    seed = -1 if spec is None else spec.seed
    return RicciRow(sample_id, seed, label, ricci_mixed_entry_sup(R), mixed_entry_sup(R.riemann))


def ricci_diagonality_probe(cfg: ExperimentConfig) -> list[RicciRow]:
    """Mixed Ricci block next to the mixed Riemann blocks (largest entries).

    Row ``-1`` uses zero potentials (the harmonic torsion alone, or no torsion
    for the trivial class); the seeded rows are reported without assertion.
    """
    jobs = [(-1, None)]
    if not cfg.is_baseline:
        jobs += list(enumerate(cfg.potential_specs))
    return parallel_map(lambda job: _ricci_row(cfg, *job), jobs, cfg.workers)


# --------------------------------------------------------------------------
# exterior calculus identity suite


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    status: str  # PASS, FAIL or REPORT

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check(name: str, value: float, tolerance: float, report_only: bool = False) -> Check:
    if report_only:
        return Check(name, float(value), float(tolerance), "REPORT")
    return Check(name, float(value), float(tolerance), "PASS" if value <= tolerance else "FAIL")


def _rel_sup(x: FormField, scale: FormField) -> float:
    s = float(np.max(np.abs(scale.components)))
    return float(np.max(np.abs(x.components))) / (s if s > 0 else 1.0)


def calculus_suite(cfg: ExperimentConfig) -> list[Check]:
    """Identity checks on the potential dictionary of the first sample."""
    tol = cfg.tol("calculus")
    grid = grid_for(cfg.grid)
    spec = cfg.potential_specs[0] if cfg.potential_specs else PotentialSpec()
    if spec.amplitude == 0:
        spec = PotentialSpec(spec.sphere_degree, spec.torus_kmax, 0.1, spec.seed)
    klass = CalibrationClass(1.0, 0.0) if cfg.klass.is_trivial else cfg.klass
    T = admissible_from_spec(klass, spec, grid)
    eta, mu = T.eta, T.mu
    # a 1-form and a 3-form from the same dictionary
    alpha = hodge_star(d(eta))
    beta = T.t_flat
    checks = [
        check("d(d(eta))", _rel_sup(d(T.exact), eta), tol),
        check("d(d(star d eta))", _rel_sup(d(d(alpha)), alpha), tol),
        check("codiff(codiff(mu))", _rel_sup(codifferential(T.coexact), mu), tol),
        check("codiff(codiff(T))", _rel_sup(codifferential(codifferential(beta)), beta), tol),
    ]
    worst = 0.0
    for form in (FormField(0, eta.components[:1], grid), alpha, eta, beta, mu):
        k = form.degree
        sign = (-1) ** (k * (4 - k))
        worst = max(worst, _rel_sup(hodge_star(hodge_star(form)) - sign * form, form))
    checks.append(check("star(star) = +-id", worst, tol))
    pairs = ((eta, beta), (alpha, eta), (beta, mu))
    worst = 0.0
    for a, b in pairs:
        lhs, rhs = l2_inner(d(a), b), l2_inner(a, codifferential(b))
        worst = max(worst, abs(lhs - rhs) / max(l2_norm(d(a)) * l2_norm(b), 1e-300))
    checks.append(check("<d a, b> = <a, codiff b>", worst, tol))
    total = l2_norm(beta) ** 2
    pyth = total - l2_norm(T.harmonic_part) ** 2 - l2_norm(T.exact) ** 2 - l2_norm(T.coexact) ** 2
    checks.append(check("Hodge Pythagoras", abs(pyth) / total, tol))
    a, b = harmonic_coefficients(beta)
    checks.append(check("class recovery", abs(a - klass.a) + abs(b - klass.b), tol))
    checks.append(check("total volume", abs(float(np.sum(grid.weights)) - TOTAL_VOLUME) / TOTAL_VOLUME, tol))
    return checks


# --------------------------------------------------------------------------
# grid convergence


def quadrature_oracle_error(grid: QuadratureGrid) -> float:
    """Relative error integrating ``exp(X + sin x)``, a non-band-limited field."""
    theta, phi, x, _ = grid.coordinates()
    values = np.broadcast_to(np.exp(np.sin(theta) * np.cos(phi) + np.sin(x)), grid.shape)
    exact = 4.0 * np.pi * np.sinh(1.0) * 2.0 * np.pi * float(np.i0(1.0)) * 2.0 * np.pi
    return abs(integrate(values, grid) - exact) / exact


def adjointness_residual(grid: QuadratureGrid) -> float:
    """Relative ``<d a, b> - <a, codiff b>`` for non-band-limited forms."""
    theta, phi, x, y = grid.coordinates()
    st, ct = np.sin(theta), np.cos(theta)
    X, Y, Z = st * np.cos(phi), st * np.sin(phi), ct
    one = np.ones(grid.shape)
    f = np.exp(X + 0.5 * Z + np.sin(x)) * one
    h = np.exp(Y - Z + np.cos(y) + np.sin(x)) * one
    # f dY^dx + h vol_S2 and f dX^dy-type pieces keep every component smooth at the poles
    alpha = FormField.from_components(2, grid, {(0, 2): f * ct * np.sin(phi), (1, 2): f * st * np.cos(phi), (0, 1): h * st})
    beta = FormField.from_components(
        3, grid, {(0, 1, 3): st * h, (0, 2, 3): f * ct * np.cos(phi), (1, 2, 3): -f * st * np.sin(phi)}
    )
    da = d(alpha)
    return abs(l2_inner(da, beta) - l2_inner(alpha, codifferential(beta))) / (l2_norm(da) * l2_norm(beta))


def constant_integral_error(grid: QuadratureGrid) -> float:
    return abs(float(integrate_many(np.ones((1,) + grid.shape), grid)[0]) - TOTAL_VOLUME) / TOTAL_VOLUME


def fitted_order(resolutions, values, floor=FLOOR):
    """Least-squares algebraic decay order; ``None`` when all values sit at the floor."""
    r = np.log(np.asarray(resolutions, dtype=float))
    v = np.abs(np.asarray(values, dtype=float))
    keep = v > floor
    if keep.sum() < 2:
        return None
    slope = np.polyfit(r[keep], np.log(v[keep]), 1)[0]
    return float(-slope)


@dataclass(frozen=True)
class ConvergenceRow:
    quantity: str
    grid: str
    n_theta: int
    value: float


def convergence_study(cfg: ExperimentConfig, grids) -> tuple[list[ConvergenceRow], dict]:
    """Key scalars per grid and their fitted decay orders."""
    grids = list(grids)
    if len(grids) < 3:
        raise ConfigError(f"convergence_study needs at least 3 grids, got {len(grids)}")
    sizes = [int(np.prod(g.shape)) for g in grids]
    if any(b <= a for a, b in zip(sizes, sizes[1:])) or any(b.n_theta <= a.n_theta for a, b in zip(grids, grids[1:])):
        raise ConfigError("grids must be strictly increasing in resolution")
    has_torsion = not cfg.klass.is_trivial
    spec = cfg.potential_specs[0] if cfg.potential_specs else None

    def per_grid(gs: GridSpec):
        grid = grid_for(gs)
        conn = sample_connection(cfg, spec, grid)
        R_eq1 = assemble_eq1(conn, "full")
        scale = max(float(np.max(np.abs(R_eq1))), 1.0)
        out = {
            "dual_path_gap": float(np.max(np.abs(R_eq1 - assemble_gamma(conn)))) / scale,
            "adjointness_residual": adjointness_residual(grid),
            "quadrature_error": quadrature_oracle_error(grid),
            "constant_integral_error": constant_integral_error(grid),
        }
        if has_torsion and spec is not None and spec.amplitude > 0:
            out["lemma_abs_c"] = abs(lemma_record(cfg, 0, spec, gs).c)
        return out

    results = parallel_map(per_grid, grids, cfg.workers)
    rows = []
    for gs, res in zip(grids, results):
        for key, value in res.items():
            rows.append(ConvergenceRow(key, grid_tag(gs), gs.n_theta, value))
    orders = {}
    for key in results[0]:
        orders[key] = fitted_order([g.n_theta for g in grids], [res[key] for res in results])
    return rows, orders


def default_convergence_grids(base: GridSpec) -> list[GridSpec]:
    return refinement_grids(base, (base.n_theta + 8, base.n_theta + 16))


# --------------------------------------------------------------------------
# gauge check


def gauge_shift_gap(cfg: ExperimentConfig, spec: PotentialSpec | None, shift: float | None = None) -> float:
    """Relative change of the mixed-block L2 norms when the phi origin moves.

    The default shift is half a longitude cell, so no node is shared.
    """
    shift = np.pi / cfg.grid.n_phi if shift is None else shift
    norms = []
    for origin in (0.0, shift):
        grid = grid_for(cfg.grid, origin)
        conn = calibrated_connection(sample_torsion(cfg, spec, grid), cfg.convention)
        blocks = offdiagonal_blocks(conn)
        norms.append(np.array([blocks.norm("harmonic"), blocks.norm("nonharmonic"), blocks.norm("full")]))
    return float(np.max(np.abs(norms[0] - norms[1])) / max(np.max(norms[0]), 1e-300))
