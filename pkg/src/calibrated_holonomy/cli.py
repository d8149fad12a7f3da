"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a
configuration or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import harness
from .calibration import CalibrationClass, PotentialSpec
from .curvature import (
    RIEMANN_LC_FRAME,
    assemble_eq1,
    assemble_gamma,
    block_norms,
    compat_residual,
    curvature_from_eq1,
    ricci,
)
from .errors import ConfigError
from .geometry import GridSpec
from .holonomy import VIOLATED, holonomy_report, parallel_transport, rectangle_loop

DEFAULT_OUTPUT = "results"
U64 = 2**64


# --------------------------------------------------------------------------
# configuration


def _take(section: dict, name: str, allowed: dict) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{name} must be a JSON object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(unknown)}")
    out = dict(allowed)
    out.update(section)
    return out


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; every field has a documented default."""

    grid: GridSpec = GridSpec()
    klass: CalibrationClass = CalibrationClass()
    sphere_degree: int = 1
    torus_kmax: int = 1
    amplitude: float = 0.1
    seed: int = 7
    count: int = 20
    convention: str = "standard"
    tolerances: dict = field(default_factory=dict)
    output_dir: str = DEFAULT_OUTPUT

    def __post_init__(self):
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count < 1:
            raise ConfigError(f"potentials.count must be a positive integer, got {self.count!r}")
        object.__setattr__(self, "tolerances", harness.check_tolerances(self.tolerances))
        if self.convention not in ("standard", "paper-literal"):
            raise ConfigError(f"convention must be 'standard' or 'paper-literal', got {self.convention!r}")
        # validates degree, kmax, amplitude and every per-sample seed
        self.potential_specs()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        top = _take(
            data,
            "config",
            {"grid": {}, "class": {}, "potentials": {}, "convention": "standard", "tolerances": {}, "output_dir": DEFAULT_OUTPUT},
        )
        grid = _take(top["grid"], "grid", GridSpec().as_dict())
        klass = _take(top["class"], "class", {"a": 1.0, "b": 0.0})
        pots = _take(
            top["potentials"],
            "potentials",
            {"sphere_degree": 1, "torus_kmax": 1, "amplitude": 0.1, "seed": 7, "count": 20},
        )
        if not isinstance(top["tolerances"], dict):
            raise ConfigError("tolerances must be a JSON object")
        if not isinstance(top["output_dir"], str):
            raise ConfigError("output_dir must be a string")
        return cls(
            grid=GridSpec(**grid),
            klass=CalibrationClass(_number(klass["a"], "class.a"), _number(klass["b"], "class.b")),
            sphere_degree=pots["sphere_degree"],
            torus_kmax=pots["torus_kmax"],
            amplitude=_number(pots["amplitude"], "potentials.amplitude"),
            seed=pots["seed"],
            count=pots["count"],
            convention=top["convention"],
            tolerances=top["tolerances"],
            output_dir=top["output_dir"],
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def replace(self, **changes) -> "RunConfig":
        values = {name: getattr(self, name) for name in self.__dataclass_fields__}
        values.update(changes)
        return RunConfig(**values)

    def potential_specs(self) -> tuple:
        return tuple(
            PotentialSpec(self.sphere_degree, self.torus_kmax, self.amplitude, self.seed + i) for i in range(self.count)
        )

    def experiment(self, workers: int = 1) -> harness.ExperimentConfig:
        return harness.ExperimentConfig(
            self.klass, self.potential_specs(), self.grid, self.convention, self.tolerances, workers
        )

    def as_dict(self) -> dict:
        return {
            "grid": self.grid.as_dict(),
            "class": {"a": self.klass.a, "b": self.klass.b},
            "potentials": {
                "sphere_degree": self.sphere_degree,
                "torus_kmax": self.torus_kmax,
                "amplitude": self.amplitude,
                "seed": self.seed,
                "count": self.count,
            },
            "convention": self.convention,
            "tolerances": dict(self.tolerances),
            "output_dir": self.output_dir,
        }

    @property
    def is_baseline(self) -> bool:
        return self.klass.is_trivial and self.amplitude == 0


# --------------------------------------------------------------------------
# output


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


class Reporter:
    """Writes report files into one directory and prints check lines."""

    def __init__(self, command: str, cfg: RunConfig, out=sys.stdout):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.checks: list[harness.Check] = []
        self.dir = Path(cfg.output_dir)
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output_dir {self.dir}: {exc}") from exc

    def _write(self, name: str, text: str):
        try:
            with open(self.dir / name, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {self.dir / name}: {exc}") from exc

    def config_line(self) -> str:
        return json.dumps(self.cfg.as_dict(), sort_keys=True)

    def csv(self, name: str, header, rows):
        buf = io.StringIO()
        buf.write(f"# config: {self.config_line()}\r\n")
        writer = csv.writer(buf)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        self._write(name, buf.getvalue())

    def json(self, name: str, payload: dict):
        body = {"config": self.cfg.as_dict(), "command": self.command, **payload}
        self._write(name, json.dumps(_plain(body), sort_keys=True, indent=2) + "\n")

    def add(self, item: harness.Check):
        self.checks.append(item)
        print(f"{item.status} {self.command}: {item.name} = {item.value:.6g} (tol {item.tolerance:.3g})", file=self.out)

    def exit_code(self) -> int:
        return 0 if all(c.passed for c in self.checks) else 1


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _require_nontrivial_or_baseline(cfg: RunConfig):
    if cfg.klass.is_trivial and not cfg.is_baseline:
        cfg.klass.require_nontrivial()


def _first_sample(cfg: RunConfig, exp: harness.ExperimentConfig):
    return None if cfg.amplitude == 0 else exp.potential_specs[0]


# --------------------------------------------------------------------------
# subcommands


def cmd_verify_calculus(cfg: RunConfig, rep: Reporter, workers: int):
    exp = cfg.experiment(workers)
    checks = harness.calculus_suite(exp)
    for c in checks:
        rep.add(c)
    rep.json("calculus_report.json", {"checks": [c.as_dict() for c in checks], "passed": rep.exit_code() == 0})


def cmd_curvature_report(cfg: RunConfig, rep: Reporter, workers: int):
    _require_nontrivial_or_baseline(cfg)
    exp = cfg.experiment(workers)
    literal = cfg.convention == "paper-literal"
    conn = harness.sample_connection(exp, _first_sample(cfg, exp))
    R = curvature_from_eq1(conn)
    gap = float(np.max(np.abs(R.riemann - assemble_gamma(conn))))
    rep.add(harness.check("dual-path gap (sup)", gap, exp.tol("dual_path"), report_only=literal))
    rep.add(harness.check("metric compatibility", compat_residual(conn), exp.tol("calculus")))
    blocks = {"full": block_norms(R.riemann, R.grid).as_dict()}
    for name, part in R.splits.items():
        blocks[name] = block_norms(np.ascontiguousarray(np.broadcast_to(part, R.riemann.shape)), R.grid).as_dict()
    payload = {"dual_path_gap": gap, "blocks": blocks, "ricci_mixed_sup": harness.ricci_mixed_entry_sup(R)}
    if cfg.is_baseline:
        closed = RIEMANN_LC_FRAME.reshape((4, 4, 4, 4, 1, 1, 1, 1))
        rep.add(harness.check("closed-form product curvature", float(np.max(np.abs(R.riemann - closed))), exp.tol("dual_path")))
        target = np.diag([1.0, 1.0, 0.0, 0.0]).reshape(4, 4, 1, 1, 1, 1)
        rep.add(harness.check("Ricci = diag(1,1,0,0)", float(np.max(np.abs(ricci(R).ric - target))), exp.tol("ricci")))
    else:
        zero = harness.sample_connection(exp, None)
        entry = assemble_eq1(zero, "full", ([2], [0], [0], [2]))[0, 0, 0, 0]
        expected = cfg.klass.a**2
        payload["harmonic_entry_e1f1e1f1"] = {"min": float(entry.min()), "max": float(entry.max()), "expected": expected}
        rep.add(
            harness.check(
                "g(R_h(e1,f1)e1,f1) = a^2", float(np.max(np.abs(entry - expected))), exp.tol("dual_path"), report_only=literal
            )
        )
    payload["checks"] = [c.as_dict() for c in rep.checks]
    rep.json("curvature_report.json", payload)


def default_loops(steps: int = 32):
    base = (np.pi / 2 - 0.1, 0.0, 0.0, 0.0)
    return {
        "torus": rectangle_loop(base, (2, 3), (1.0, 1.0), steps),
        "sphere": rectangle_loop(base, (0, 1), (0.2, 0.2), steps),
        "mixed": rectangle_loop(base, (0, 2), (0.2, 0.2), steps),
    }


def cmd_holonomy(cfg: RunConfig, rep: Reporter, workers: int):
    _require_nontrivial_or_baseline(cfg)
    exp = cfg.experiment(workers)
    conn = harness.sample_connection(exp, _first_sample(cfg, exp))
    R = curvature_from_eq1(conn)
    loops = default_loops()
    report = holonomy_report(R, conn, (), exp.tol("splitting"), exp.tol("closure"))
    transports = harness.parallel_map(lambda loop: parallel_transport(conn, loop), loops.values(), workers)
    rows = []
    for (name, loop), tr in zip(loops.items(), transports):
        M = tr.matrix
        u, v = (i for i, (p, q) in enumerate(zip(loop.waypoints[0], loop.waypoints[2])) if p != q)
        rows.append(
            [
                name,
                *loop.base_point,
                u,
                v,
                loop.waypoints[2][u] - loop.waypoints[0][u],
                loop.waypoints[2][v] - loop.waypoints[0][v],
                tr.offdiag_norm(),
                float(np.arctan2(M[1, 0], M[0, 0])),
                float(np.linalg.norm(M - np.eye(4))),
                tr.orthogonality_defect,
            ]
        )
    rep.csv(
        "loops.csv",
        ["loop", "theta", "phi", "x", "y", "axis_u", "axis_v", "side_u", "side_v", "offdiag_norm", "sphere_angle", "identity_defect", "orthogonality_defect"],
        rows,
    )
    if cfg.is_baseline:
        rep.add(harness.check("splitting preserved (commutator norm)", report.splitting_commutator_norm, exp.tol("splitting")))
        torus = dict(zip(loops, transports))["torus"]
        rep.add(harness.check("flat-factor loop identity", float(np.linalg.norm(torus.matrix - np.eye(4))), exp.tol("transport")))
    else:
        need = 0.5 * cfg.klass.norm_sq
        ok = report.verdict == VIOLATED and report.splitting_commutator_norm >= need
        rep.add(harness.Check("splitting violated, commutator >= 0.5(a^2+b^2)", report.splitting_commutator_norm, need, "PASS" if ok else "FAIL"))
    payload = report.as_dict()
    payload["transport_matrices"] = {name: t.matrix.tolist() for name, t in zip(loops, transports)}
    payload["orthogonality_defect"] = max(t.orthogonality_defect for t in transports)
    payload["checks"] = [c.as_dict() for c in rep.checks]
    rep.json("holonomy_report.json", payload)


def cmd_scan(cfg: RunConfig, rep: Reporter, workers: int):
    cfg.klass.require_nontrivial()
    exp = cfg.experiment(workers)
    tol = exp.tol("flag")
    jobs = [(-1, None)] + list(enumerate(exp.potential_specs))

    def run(job):
        i, spec = job
        R = curvature_from_eq1(harness.sample_connection(exp, spec))
        return i, spec, harness.offdiagonal_scan(R, tol)

    results = harness.parallel_map(run, jobs, workers)
    rows, fewest = [], None
    for i, spec, scan in results:
        seed = -1 if spec is None else spec.seed
        for r in scan:
            rows.append([i, seed, r.split, r.slot, r.x, r.y, r.z, r.sup, r.l2, r.flagged])
        n = len(harness.flagged_slots(scan, "full"))
        fewest = n if fewest is None else min(fewest, n)
    rep.csv("scan.csv", ["sample_id", "seed", "split", "slot", "x", "y", "z", "sup", "l2", "flagged"], rows)
    ok = fewest >= 1
    rep.add(harness.Check("full-curvature slots flagged (fewest per sample)", float(fewest), 1.0, "PASS" if ok else "FAIL"))


def cmd_lemma(cfg: RunConfig, rep: Reporter, workers: int):
    cfg.klass.require_nontrivial()
    exp = cfg.experiment(workers)
    result = harness.lemma_orthogonality(exp)
    rows = [
        [r.sample_id, r.seed, r.grid, r.c, r.norm_h, r.norm_nh, r.inner, r.c_linear, r.c_quadratic, r.skipped]
        for r in result.records
    ]
    rep.csv("lemma.csv", ["sample_id", "seed", "grid", "c", "norm_h", "norm_nh", "inner", "c_linear", "c_quadratic", "skipped"], rows)
    for i in result.skipped:
        print(f"NOTICE lemma: sample {i} skipped (zero non-harmonic block)", file=rep.out)
    active = [r for r in result.records if not r.skipped]
    sym = max((abs(r.inner - r.inner_swapped) / max(abs(r.inner), 1.0) for r in active), default=0.0)
    rep.add(harness.check("pairing symmetry", sym, 1e-12))
    worst = max((abs(r.c) for r in active), default=0.0)
    rep.add(harness.check("orthogonality |c| (worst sample, all grids)", worst, exp.tol("lemma")))
    path = rep.dir / "lemma_counter_observation.json"
    if result.counter_observation is not None:
        rep.json("lemma_counter_observation.json", result.counter_observation)
        print(f"COUNTER-OBSERVATION lemma: {len(result.counter_observation['violations'])} sample(s), see {path}", file=rep.out)
    elif path.exists():
        path.unlink()


def cmd_noncancel(cfg: RunConfig, rep: Reporter, workers: int):
    cfg.klass.require_nontrivial()
    exp = cfg.experiment(workers)
    rows = harness.noncancellation_certificate(exp)
    rep.csv(
        "noncancellation.csv",
        ["sample_id", "seed", "norm_Rh", "norm_Rnh", "cross", "norm_Rfull", "flag"],
        [[r.sample_id, r.seed, r.norm_Rh, r.norm_Rnh, r.cross, r.norm_Rfull, r.flag] for r in rows],
    )
    flags = sum(r.flag for r in rows)
    rep.add(harness.check("flagged samples", float(flags), 0.0))
    rep.add(harness.check("harmonic block norm spread", harness.harmonic_norm_spread(rows), exp.tol("sample_independence")))


def cmd_ricci(cfg: RunConfig, rep: Reporter, workers: int):
    _require_nontrivial_or_baseline(cfg)
    exp = cfg.experiment(workers)
    rows = harness.ricci_diagonality_probe(exp)
    rep.csv(
        "ricci.csv",
        ["sample_id", "seed", "label", "ricci_mixed_sup", "riemann_offdiag_sup"],
        [[r.sample_id, r.seed, r.label, r.ricci_mixed_sup, r.riemann_offdiag_sup] for r in rows],
    )
    head = rows[0]
    rep.add(harness.check("Ricci mixed block (zero potentials)", head.ricci_mixed_sup, exp.tol("ricci")))
    if cfg.is_baseline:
        rep.add(harness.check("Riemann mixed block (T = 0)", head.riemann_offdiag_sup, exp.tol("ricci")))
    else:
        rep.add(harness.check("Riemann mixed block (zero potentials)", head.riemann_offdiag_sup, 0.0, report_only=True))
    for r in rows[1:]:
        rep.add(harness.check(f"Ricci mixed block (sample {r.sample_id})", r.ricci_mixed_sup, 0.0, report_only=True))


def cmd_converge(cfg: RunConfig, rep: Reporter, workers: int):
    _require_nontrivial_or_baseline(cfg)
    exp = cfg.experiment(workers)
    grids = harness.default_convergence_grids(cfg.grid)
    rows, orders = harness.convergence_study(exp, grids)
    rep.csv(
        "convergence.csv",
        ["quantity", "grid", "n_theta", "value", "fitted_order"],
        [[r.quantity, r.grid, r.n_theta, r.value, orders[r.quantity]] for r in rows],
    )
    by_key: dict = {}
    for r in rows:
        by_key.setdefault(r.quantity, []).append(r.value)
    literal = cfg.convention == "paper-literal"
    rep.add(harness.check("dual-path gap (relative, worst grid)", max(by_key["dual_path_gap"]), exp.tol("dual_path"), report_only=literal))
    rep.add(harness.check("constant integral (worst grid)", max(by_key["constant_integral_error"]), 1e-12))
    for key in ("adjointness_residual", "quadrature_error"):
        order = orders[key]
        spectral = order is None or order > 4.0
        value = float("inf") if order is None else order
        rep.add(harness.Check(f"{key} decay order > 4 (or at floor)", value, 4.0, "PASS" if spectral else "FAIL"))
    if "lemma_abs_c" in by_key:
        rep.add(harness.check("lemma |c| (finest grid)", by_key["lemma_abs_c"][-1], exp.tol("lemma"), report_only=True))


COMMANDS = {
    "verify-calculus": cmd_verify_calculus,
    "curvature-report": cmd_curvature_report,
    "holonomy": cmd_holonomy,
    "scan": cmd_scan,
    "lemma": cmd_lemma,
    "noncancel": cmd_noncancel,
    "ricci": cmd_ricci,
    "converge": cmd_converge,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="calibrated-holonomy", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--output", help="output directory (overrides output_dir)")
    parser.add_argument("--workers", type=int, default=1, help="worker threads for independent samples")
    parser.add_argument("--convention", choices=("standard", "paper-literal"))
    parser.add_argument("--seed-override", type=int, help="replace the base potential seed (unsigned 64-bit)")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {}
    if args.output is not None:
        changes["output_dir"] = args.output
    if args.convention is not None:
        changes["convention"] = args.convention
    if args.seed_override is not None:
        if not 0 <= args.seed_override < U64:
            raise ConfigError(f"seed-override must be an unsigned 64-bit integer, got {args.seed_override}")
        changes["seed"] = args.seed_override
    if args.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {args.workers}")
    return cfg.replace(**changes) if changes else cfg


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve_config(args)
        rep = Reporter(args.command, cfg, out)
        COMMANDS[args.command](cfg, rep, args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return rep.exit_code()


if __name__ == "__main__":
    sys.exit(main())
