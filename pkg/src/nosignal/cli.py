"""Command-line front end: ``nosignal run|verify|sweep``.

Configs are flat JSON objects; every key is optional and unknown keys are
rejected. Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 bad config.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import difflib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .marginals import distribution_distance
from .dynamics import (
    ExplicitUnitary,
    FreeOnly,
    default_barrier_height,
    default_edge_smoothing,
    make_schedule_slit,
    random_unitary,
)
from .verifier import (
    BANDWIDTH_TOL,
    NO_SIGNAL_TOL,
    Aperture,
    Scenario,
    bandwidth_check,
    compare_distributions,
    default_suite,
    measurement_branches,
    run_scenario,
    slit_width_sweep,
)

OPERATIONS = ("free", "slit", "unitary", "schedule")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved run configuration.

    Lengths are in the units of ``grid_l``; ``None`` for ``slit_half_width``,
    ``barrier_height`` and ``edge_smoothing`` selects 4 node spacings, fifty
    times the largest lattice kinetic energy, and 4 node spacings. ``None``
    for ``aperture_half_width`` means Alice does not measure. ``schedule`` is
    a list of ``[half_width, duration]`` pairs and ``widths`` a list of slit
    half-widths for ``sweep``.
    """

    grid_l: float = 8.0
    grid_n: int = 256
    sigma_k: float = 0.5
    k_cut: float = 1.5
    phase_seed: Optional[int] = None
    mass1: float = 1.0
    mass2: float = 1.0
    hbar: float = 1.0
    t_pre: float = 1.0
    t_op: float = 2.0
    t_post: float = 2.0
    n_steps: int = 400
    operation: str = "slit"
    slit_center: float = 0.0
    slit_half_width: Optional[float] = None
    barrier_height: Optional[float] = None
    edge_smoothing: Optional[float] = None
    schedule: Optional[list] = None
    unitary_seed: Optional[int] = None
    aperture_center: float = 0.0
    aperture_half_width: Optional[float] = None
    widths: Optional[list] = None
    tolerance: float = NO_SIGNAL_TOL
    bandwidth_tolerance: float = BANDWIDTH_TOL
    seed: int = 0
    out_dir: Optional[str] = None

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        unknown = [k for k in data if k not in fields]
        if unknown:
            k = unknown[0]
            hint = difflib.get_close_matches(k, fields, n=1)
            raise ConfigError(f"unknown key {k!r}" + (f" (did you mean {hint[0]!r}?)" if hint else ""))
        values = {}
        for k, v in data.items():
            values[k] = _coerce(k, v, cls.__annotations__[k])
        return cls(**values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(key, value, annotation):
    optional = "Optional" in annotation
    base = annotation.replace("Optional[", "").rstrip("]")
    if value is None:
        if optional:
            return None
        raise ConfigError(f"field {key!r}: null is not allowed")
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field {key!r}: expected a number, got {value!r}")
        return float(value)
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"field {key!r}: expected an integer, got {value!r}")
        return value
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"field {key!r}: expected a string, got {value!r}")
        return value
    if base == "list":
        if not isinstance(value, list):
            raise ConfigError(f"field {key!r}: expected a list, got {value!r}")
        return value
    raise AssertionError(annotation)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.from_mapping(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def base_scenario(cfg: RunConfig) -> Scenario:
    try:
        s = Scenario(grid_l=cfg.grid_l, grid_n=cfg.grid_n, sigma_k=cfg.sigma_k, k_cut=cfg.k_cut,
                     phase_seed=cfg.phase_seed, mass1=cfg.mass1, mass2=cfg.mass2, hbar=cfg.hbar,
                     t_pre=cfg.t_pre, t_op=cfg.t_op, n_steps=cfg.n_steps, t_post=cfg.t_post,
                     operation=FreeOnly(), name="baseline")
        s.grid  # validates L and N
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    for key in ("t_pre", "t_op", "t_post"):
        if getattr(cfg, key) < 0:
            raise ConfigError(f"field {key!r}: must be non-negative")
    if cfg.n_steps < 1:
        raise ConfigError("field 'n_steps': must be >= 1")
    if not 0 < cfg.k_cut < s.grid.nyquist:
        raise ConfigError(f"field 'k_cut': must lie in (0, {s.grid.nyquist:g}) for this grid")
    if cfg.sigma_k <= 0:
        raise ConfigError("field 'sigma_k': must be positive")
    return s


def build_variant(cfg: RunConfig, base: Scenario) -> Scenario:
    g = base.grid
    V0 = cfg.barrier_height if cfg.barrier_height is not None else default_barrier_height(g, cfg.mass1, cfg.hbar)
    s = cfg.edge_smoothing if cfg.edge_smoothing is not None else default_edge_smoothing(g)
    a = cfg.slit_half_width if cfg.slit_half_width is not None else 4 * g.node_spacing
    try:
        if cfg.operation == "free":
            op = FreeOnly()
        elif cfg.operation == "slit":
            op = base.slit(a, cfg.slit_center, V0, s).as_operation(g)
        elif cfg.operation == "unitary":
            useed = cfg.seed if cfg.unitary_seed is None else cfg.unitary_seed
            op = ExplicitUnitary(random_unitary(g.num_points, useed))
        elif cfg.operation == "schedule":
            if not cfg.schedule:
                raise ConfigError("field 'schedule': required and non-empty for operation 'schedule'")
            pairs = []
            for item in cfg.schedule:
                if not (isinstance(item, list) and len(item) == 2):
                    raise ConfigError(f"field 'schedule': entries must be [half_width, duration], got {item!r}")
                pairs.append((float(item[0]), float(item[1])))
            op = make_schedule_slit(g, pairs, V0, s, cfg.slit_center)
        else:
            raise ConfigError(f"field 'operation': expected one of {', '.join(OPERATIONS)}, got {cfg.operation!r}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    aperture = None
    if cfg.aperture_half_width is not None:
        if cfg.aperture_half_width < 0:
            raise ConfigError("field 'aperture_half_width': must be non-negative")
        aperture = Aperture(cfg.aperture_center, cfg.aperture_half_width)
    return base.replace(operation=op, aperture=aperture, name=f"variant ({cfg.operation})")


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def _versions() -> dict:
    return {"nosignal": __version__, "numpy": np.__version__, "python": platform.python_version()}


def _resolve_out_dir(args, cfg: RunConfig | None) -> Path:
    out = args.out_dir or (cfg.out_dir if cfg else None) or os.environ.get("NOSIGNAL_OUT_DIR") or "nosignal_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.grid_n is not None:
        changes["grid_n"] = args.grid_n
    if args.grid_l is not None:
        changes["grid_l"] = args.grid_l
    if args.tolerance is not None:
        changes["tolerance"] = args.tolerance
    return dataclasses.replace(cfg, **changes)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    base = base_scenario(cfg)
    variant = build_variant(cfg, base)
    out = _resolve_out_dir(args, cfg)
    cfg = dataclasses.replace(cfg, out_dir=str(out))
    t0 = time.perf_counter()

    _, D_base = run_scenario(base)
    state, D_var = run_scenario(variant)
    comparison = compare_distributions(D_base, D_var, base.name, variant.name, cfg.tolerance)
    bandwidth = bandwidth_check(D_var, cfg.k_cut, cfg.bandwidth_tolerance, label=variant.name)
    metrics = {}
    if variant.aperture is not None:
        branches = measurement_branches(state, variant.aperture)
        metrics["p_inside"] = branches.p_inside
        if branches.inside is not None:
            metrics["conditional_tv"] = distribution_distance(branches.inside, D_base).total_variation

    with open(out / "distributions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k2", "D_baseline", "D_variant", "abs_diff"])
        for k, a, b in zip(D_base.k, D_base.values, D_var.values):
            w.writerow([_fmt(k), _fmt(a), _fmt(b), _fmt(abs(a - b))])

    verdicts = [comparison.passed, bandwidth.passed]
    report = {
        "command": "run",
        "config": cfg.to_dict(),
        "comparison": comparison.as_dict(),
        "bandwidth": bandwidth.as_dict(),
        "metrics": metrics,
        "passed": all(verdicts),
        "versions": _versions(),
        "runtime": {"seconds": time.perf_counter() - t0, "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")},
    }
    _write_json(out / "report.json", report)
    print(f"{'PASS' if comparison.passed else 'FAIL'}  no-signal: max_abs={comparison.max_abs:.3e} "
          f"tv={comparison.total_variation:.3e} tol={cfg.tolerance:.0e}")
    print(f"{'PASS' if bandwidth.passed else 'FAIL'}  bandwidth: mass(|k2|>{cfg.k_cut:g})={bandwidth.mass_outside:.3e}")
    return 0 if all(verdicts) else 1


def cmd_verify(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = _apply_overrides(cfg, args)
    base = base_scenario(cfg)
    t0 = time.perf_counter()
    report = default_suite(base, seed=cfg.seed, tol=cfg.tolerance, inject_fault=args.inject_fault)
    for line in report.summary_lines():
        print(line)
    print(f"{'PASS' if report.passed else 'FAIL'}  overall")
    if args.out_dir or os.environ.get("NOSIGNAL_OUT_DIR"):
        out = _resolve_out_dir(args, None)
        payload = {
            "command": "verify",
            "config": cfg.to_dict(),
            "report": report.as_dict(),
            "versions": _versions(),
            "runtime": {"seconds": time.perf_counter() - t0, "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")},
        }
        _write_json(out / "report.json", payload)
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if not cfg.widths:
        raise ConfigError(f"{args.config}: field 'widths': required and non-empty for sweep")
    try:
        widths = [float(w) for w in cfg.widths]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'widths': {exc}") from exc
    base = base_scenario(cfg)
    out = _resolve_out_dir(args, cfg)
    cfg = dataclasses.replace(cfg, out_dir=str(out))
    t0 = time.perf_counter()
    rows = slit_width_sweep(base, widths, cfg.tolerance, cfg.slit_center)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["width", "marginal_maxabs", "marginal_tv", "conditional_tv"])
        for r in rows:
            w.writerow([_fmt(r.width), _fmt(r.marginal_maxabs), _fmt(r.marginal_tv), _fmt(r.conditional_tv)])
    verdicts = [r.passed for r in rows if r.passed is not None]
    for r in rows:
        tag = {True: "PASS", False: "FAIL", None: "INFO"}[r.passed]
        print(f"{tag}  width={r.width:.6g} marginal_maxabs={_fmt(r.marginal_maxabs) or 'n/a'} "
              f"conditional_tv={_fmt(r.conditional_tv) or 'n/a'}")
    _write_json(out / "report.json", {
        "command": "sweep",
        "config": cfg.to_dict(),
        "rows": [r.as_dict() for r in rows],
        "passed": all(verdicts),
        "versions": _versions(),
        "runtime": {"seconds": time.perf_counter() - t0, "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")},
    })
    return 0 if all(verdicts) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="output directory (fallback: $NOSIGNAL_OUT_DIR, then ./nosignal_out)")
    common.add_argument("--seed", type=int, help="seed for randomized operations")
    common.add_argument("--grid-n", type=int, help="number of lattice nodes per axis")
    common.add_argument("--grid-l", type=float, help="box half-width")
    common.add_argument("--tolerance", type=float, help="no-signaling max-abs tolerance")

    ap = argparse.ArgumentParser(prog="nosignal", description="Check that nothing done to particle 1 changes the wavenumber statistics of particle 2.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="compare one configured scenario with free flight")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify", parents=[common], help="run the default no-signaling suite")
    p.add_argument("--config")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", parents=[common], help="vary the slit width")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
