"""Command-line experiment runner.

Each subcommand reads one table of a TOML config file (``[convergence]``,
``[fourier]``, ...) and writes CSV files plus a JSON manifest next to each
one. Missing keys fall back to ``DEFAULTS``. Command-line flags override
the file: ``--out``, ``--threads``, ``--seed-base`` and the generic
``--set section.key=value`` (value parsed as a TOML literal).

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from . import __version__
from .analysis import (
    FourierConfig,
    combined_csv,
    combined_sweep,
    dispersion_dissipation,
    khat_grid,
    max_dissipation_csv,
    max_dissipation_sweep,
    sbp_csv,
    sbp_sweep,
)
from .element import LAYOUTS, MASS_QUADRATURE, BasisSpec, BasisVariant, build_operators, node_set
from .io import csv_text
from .rbf import Kernel, condition_rows_to_csv, condition_sweep
from .solver import (
    CASES,
    BlowUpError,
    BurgersEnsembleConfig,
    Mesh1D,
    TimeStepRule,
    burgers_initial_state,
    burgers_run,
    energy_spectrum,
    run_case,
    sample_equispaced,
)

log = logging.getLogger("rbffr")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
SUBCOMMANDS = ("convergence", "fourier", "sbp", "condition", "burgers")
CONVERGENCE_HEADER = ("case", "basis", "kernel", "eps", "layout", "centres", "n_s", "N", "dx", "L1", "L2", "Linf", "t_end")
SPECTRUM_HEADER = ("f", "E")

DEFAULTS: dict[str, dict[str, Any]] = {
    "convergence": {
        "case": ["sine_adv", "gaussian_adv_diff"],
        "variant": "polynomial",
        "kernel": "GA",
        "layout": ["legendre"],
        "centres": "same",
        "n_s": [3],
        "N": [5, 10, 20, 40],
        "alpha": 1.0,
        "cfl": 0.4,
        "cfl_diffusive": 0.4,
    },
    "fourier": {
        "variant": "polynomial",
        "layout": ["legendre"],
        "n_s": [3],
        "alpha": 1.0,
        "k_points": 256,
        "times": [1.0, 2.0],
        "sweep_eps": [],
    },
    "sbp": {
        "eps": [1.0, 0.5, 0.25, 0.125, 0.0625],
        "layout": list(LAYOUTS),
        "n_s": [3, 4, 5],
        "mass_order": MASS_QUADRATURE,
    },
    "condition": {
        "eps": [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
        "layout": list(LAYOUTS),
        "n": [3, 4, 5],
        "mode": ["direct", "stable"],
    },
    "burgers": {
        "variant": "polynomial",
        "layout": ["legendre"],
        "n_s": [4],
        "N": 300,
        "runs": 20,
        "mu": 2e-3,
        "project_flux": True,
        "t_end": 0.1,
        "rho": 0.1,
        "k_max": 2048,
        "alpha": 1.0,
    },
}

# keys accepted without a default
OPTIONAL_KEYS = {
    "convergence": {"eps", "t_end"},
    "fourier": {"eps"},
    "burgers": {"eps", "seeds"},
}


class ConfigError(ValueError):
    def __init__(self, diagnostics: Sequence[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


# -- config ---------------------------------------------------------------


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from exc


def apply_overrides(raw: dict, sets: Sequence[str]) -> dict:
    out = copy.deepcopy(raw)
    for item in sets:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError([f"--set {item!r}: expected section.key=value"])
        try:
            parsed = tomllib.loads(f"v = {value}")["v"]
        except tomllib.TOMLDecodeError:
            parsed = value
        out.setdefault(section, {})[name] = parsed
    return out


def section_config(raw: dict, name: str) -> dict:
    cfg = copy.deepcopy(DEFAULTS[name])
    cfg.update(raw.get(name, {}))
    return cfg


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _check_list(diag, sec, cfg, key, pred, what):
    vals = _as_list(cfg.get(key, []))
    if not vals:
        diag.append(f"{sec}.{key}: list must not be empty")
    for v in vals:
        if isinstance(v, bool) or not pred(v):
            diag.append(f"{sec}.{key}: {v!r} is not {what}")


def _is_int(lo, hi=None):
    return lambda v: isinstance(v, int) and v >= lo and (hi is None or v <= hi)


def _pos(v):
    return isinstance(v, (int, float)) and math.isfinite(v) and v > 0


def validate(raw: dict, only: str | None = None) -> list[str]:
    """Every problem found in ``raw``; empty when the config is usable."""
    diag: list[str] = []
    for sec in raw:
        if sec not in DEFAULTS:
            diag.append(f"{sec}: unknown section (expected one of {', '.join(SUBCOMMANDS)})")
        elif not isinstance(raw[sec], dict):
            diag.append(f"{sec}: must be a table")
    sections = [only] if only else [s for s in SUBCOMMANDS if isinstance(raw.get(s, {}), dict)]
    for sec in sections:
        if not isinstance(raw.get(sec, {}), dict):
            continue
        cfg = section_config(raw, sec)
        for key in cfg:
            if key not in DEFAULTS[sec] and key not in OPTIONAL_KEYS.get(sec, ()):
                diag.append(f"{sec}.{key}: unknown key")
        layout_ok = lambda v: v in LAYOUTS  # noqa: E731
        if "layout" in cfg:
            _check_list(diag, sec, cfg, "layout", layout_ok, f"a layout ({', '.join(LAYOUTS)})")
        if "variant" in cfg:
            variant = cfg["variant"]
            if variant not in [v.value for v in BasisVariant]:
                diag.append(f"{sec}.variant: {variant!r} is not one of polynomial, rbf_direct, rbf_ga")
            elif variant != "polynomial":
                if "eps" not in cfg:
                    diag.append(f"{sec}.eps: required for {variant} bases")
                else:
                    _check_list(diag, sec, cfg, "eps", _pos, "a positive shape parameter")
        elif "eps" in cfg:
            _check_list(diag, sec, cfg, "eps", _pos, "a positive shape parameter")
        if "n_s" in cfg:
            _check_list(diag, sec, cfg, "n_s", _is_int(2, 10), "an integer in [2, 10]")
        if "alpha" in cfg and not (isinstance(cfg["alpha"], (int, float)) and 0 <= cfg["alpha"] <= 1):
            diag.append(f"{sec}.alpha: must lie in [0, 1]")

        if sec == "convergence":
            _check_list(diag, sec, cfg, "case", lambda v: v in CASES, f"a case ({', '.join(CASES)})")
            _check_list(diag, sec, cfg, "N", _is_int(2), "an integer >= 2")
            if cfg["kernel"] not in [k.value for k in Kernel]:
                diag.append(f"{sec}.kernel: {cfg['kernel']!r} is not a known kernel")
            elif cfg["variant"] == "rbf_ga" and cfg["kernel"] != "GA":
                diag.append(f"{sec}.kernel: the stable basis needs kernel GA")
            if cfg["centres"] != "same" and cfg["centres"] not in LAYOUTS:
                diag.append(f"{sec}.centres: {cfg['centres']!r} is not 'same' or a layout")
            if "t_end" in cfg and not _pos(cfg["t_end"]):
                diag.append(f"{sec}.t_end: must be positive")
            for key in ("cfl", "cfl_diffusive"):
                if not _pos(cfg[key]):
                    diag.append(f"{sec}.{key}: must be positive")
        elif sec == "fourier":
            if not _is_int(1, 100000)(cfg["k_points"]):
                diag.append(f"{sec}.k_points: must be a positive integer")
            times = _as_list(cfg["times"])
            if any(not isinstance(t, (int, float)) or t < 0 for t in times):
                diag.append(f"{sec}.times: must be non-negative numbers")
            if any(not _pos(e) for e in _as_list(cfg["sweep_eps"])):
                diag.append(f"{sec}.sweep_eps: must be positive")
        elif sec == "sbp":
            if not _is_int(2)(cfg["mass_order"]):
                diag.append(f"{sec}.mass_order: must be an integer >= 2")
        elif sec == "condition":
            _check_list(diag, sec, cfg, "n", _is_int(2, 10), "an integer in [2, 10]")
            _check_list(diag, sec, cfg, "mode", lambda v: v in ("direct", "stable"), "'direct' or 'stable'")
        elif sec == "burgers":
            for key in ("N", "runs", "k_max"):
                if not _is_int(1)(cfg[key]):
                    diag.append(f"{sec}.{key}: must be a positive integer")
            for key in ("mu", "t_end", "rho"):
                if not _pos(cfg[key]):
                    diag.append(f"{sec}.{key}: must be positive")
            if not isinstance(cfg["project_flux"], bool):
                diag.append(f"{sec}.project_flux: must be true or false")
            if "seeds" in cfg:
                _check_list(diag, sec, cfg, "seeds", _is_int(0), "a non-negative integer")
    return diag


# -- output ---------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    mass_quadrature: int = MASS_QUADRATURE
    runs: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _emit(out: Path, name: str, text: str, manifest: RunManifest, t0: float) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(text, encoding="utf-8")
    manifest.wall_time = round(time.perf_counter() - t0, 3)
    (out / f"{name}.manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _spec(variant: str, layout: str, n: int, eps, kernel: str = "GA", centres: str = "same") -> BasisSpec:
    pts = node_set(layout, n)
    if variant == "polynomial":
        return BasisSpec.polynomial(pts)
    ctr = pts if centres == "same" else node_set(centres, n)
    if variant == "rbf_direct":
        return BasisSpec.rbf_direct(pts, eps, ctr, Kernel(kernel))
    return BasisSpec.rbf_ga(pts, eps, ctr)


def _eps_list(cfg):
    return [None] if cfg["variant"] == "polynomial" else _as_list(cfg["eps"])


def _tag(spec: BasisSpec) -> str:
    return spec.label().replace("/", "_")


# -- subcommands ----------------------------------------------------------


def run_convergence(cfg: dict, out: Path, threads: int) -> list[Path]:
    t0 = time.perf_counter()
    rule = TimeStepRule(cfg["cfl"], cfg["cfl_diffusive"])
    jobs = []
    for case in _as_list(cfg["case"]):
        for eps in _eps_list(cfg):
            for layout in _as_list(cfg["layout"]):
                for n in _as_list(cfg["n_s"]):
                    spec = _spec(cfg["variant"], layout, n, eps, cfg["kernel"], cfg["centres"])
                    for N in _as_list(cfg["N"]):
                        jobs.append((case, spec, N))
    ops_cache = {}
    for _, spec, _ in jobs:
        if spec.label() not in ops_cache:
            ops_cache[spec.label()] = build_operators(spec)

    def work(job):
        case, spec, N = job
        try:
            return run_case(case, spec, N, cfg.get("t_end"), rule, cfg["alpha"], ops_cache[spec.label()])
        except BlowUpError as exc:
            raise RuntimeError(f"{case} {spec.label()} N={N}: {exc}") from exc

    results = _pmap(work, jobs, threads)
    rows, runs = [], []
    for (case, spec, N), res in zip(jobs, results):
        c = CASES[case]
        t_end = c.t_end if cfg.get("t_end") is None else cfg["t_end"]
        centres = spec.centres.kind.value if spec.centres is not None else ""
        kernel = "" if spec.variant is BasisVariant.POLYNOMIAL else spec.kernel.value
        eps = "" if spec.eps is None else float(spec.eps)
        rows.append((case, spec.variant.value, kernel, eps, spec.points.kind.value, centres, spec.n, N,
                     (c.x_max - c.x_min) / N, res.norms.L1, res.norms.L2, res.norms.Linf, float(t_end)))
        runs.append({"case": case, "basis": spec.label(), "N": N, "dt": res.dt, "steps": res.steps})
    manifest = RunManifest("convergence", cfg, runs=runs)
    return [_emit(out, "convergence", csv_text(CONVERGENCE_HEADER, rows), manifest, t0)]


def run_fourier(cfg: dict, out: Path, threads: int) -> list[Path]:
    t0 = time.perf_counter()
    paths = []
    grid = khat_grid(cfg["k_points"])
    note = {"k_hat": "k h / n_s with h = 2", "frequency": "omega h / n_s"}
    for eps in _eps_list(cfg):
        for layout in _as_list(cfg["layout"]):
            for n in _as_list(cfg["n_s"]):
                spec = _spec(cfg["variant"], layout, n, eps)
                fc = FourierConfig(build_operators(spec), alpha=cfg["alpha"], k_hat=grid)
                res = dispersion_dissipation(fc, threads)
                tag = _tag(spec)
                man = RunManifest("fourier", cfg, runs=[{"basis": spec.label(), **note}])
                paths.append(_emit(out, f"dispersion_{tag}", res.to_csv(), man, t0))
                comb = combined_sweep(fc, [float(t) for t in _as_list(cfg["times"])], threads)
                paths.append(_emit(out, f"combined_{tag}", combined_csv(comb), man, t0))
    sweep = _as_list(cfg["sweep_eps"])
    if sweep:
        for layout in _as_list(cfg["layout"]):
            rows = max_dissipation_sweep(sweep, _as_list(cfg["n_s"]), layout, alpha=cfg["alpha"],
                                         npts=cfg["k_points"], threads=threads)
            man = RunManifest("fourier", cfg, runs=[{"layout": layout, **note}])
            paths.append(_emit(out, f"max_dissipation_{layout}", max_dissipation_csv(rows), man, t0))
    return paths


def run_sbp(cfg: dict, out: Path, threads: int) -> list[Path]:
    t0 = time.perf_counter()
    rows = sbp_sweep(_as_list(cfg["eps"]), _as_list(cfg["n_s"]), _as_list(cfg["layout"]), cfg["mass_order"])
    man = RunManifest("sbp", cfg, mass_quadrature=cfg["mass_order"])
    return [_emit(out, "sbp", sbp_csv(rows), man, t0)]


def run_condition(cfg: dict, out: Path, threads: int) -> list[Path]:
    t0 = time.perf_counter()
    rows = []
    for mode in _as_list(cfg["mode"]):
        for n in _as_list(cfg["n"]):
            rows.extend(condition_sweep(_as_list(cfg["layout"]), n, _as_list(cfg["eps"]), mode))
    return [_emit(out, "condition", condition_rows_to_csv(rows), RunManifest("condition", cfg), t0)]


def burgers_seeds(cfg: dict, seed_base: int | None) -> list[int]:
    if "seeds" in cfg and seed_base is None:
        return [int(s) for s in _as_list(cfg["seeds"])]
    base = 0 if seed_base is None else seed_base
    return [base + i for i in range(cfg["runs"])]


def run_burgers(cfg: dict, out: Path, threads: int, seed_base: int | None = None) -> list[Path]:
    t0 = time.perf_counter()
    seeds = burgers_seeds(cfg, seed_base)
    ens = BurgersEnsembleConfig(cfg["rho"], cfg["k_max"], tuple(seeds), cfg["t_end"], cfg["mu"], cfg["alpha"],
                                bool(cfg["project_flux"]))
    mesh = Mesh1D(0.0, 2.0 * math.pi, cfg["N"])
    paths = []
    for eps in _eps_list(cfg):
        for layout in _as_list(cfg["layout"]):
            for n in _as_list(cfg["n_s"]):
                spec = _spec(cfg["variant"], layout, n, eps)
                ops = build_operators(spec)

                def work(seed):
                    try:
                        init = sample_equispaced(burgers_initial_state(ens, seed, mesh, ops))
                        state, dt = burgers_run(ens, seed, mesh, ops)
                    except BlowUpError as exc:
                        raise RuntimeError(f"burgers {spec.label()} seed={seed}: {exc}") from exc
                    return init, sample_equispaced(state), dt

                res = _pmap(work, seeds, threads)
                f0, E0 = energy_spectrum([r[0] for r in res])
                f1, E1 = energy_spectrum([r[1] for r in res])
                tag = _tag(spec)
                man = RunManifest("burgers", {**cfg, "seeds": seeds},
                                  runs=[{"basis": spec.label(), "seed": s, "dt": r[2]} for s, r in zip(seeds, res)])
                paths.append(_emit(out, f"spectrum_{tag}_t0", csv_text(SPECTRUM_HEADER, zip(f0.tolist(), E0.tolist())), man, t0))
                paths.append(_emit(out, f"spectrum_{tag}", csv_text(SPECTRUM_HEADER, zip(f1.tolist(), E1.tolist())), man, t0))
    return paths


RUNNERS = {
    "convergence": run_convergence,
    "fourier": run_fourier,
    "sbp": run_sbp,
    "condition": run_condition,
}


def run(command: str, raw: dict, out: Path, threads: int = 1, seed_base: int | None = None) -> list[Path]:
    diag = validate(raw, command)
    if diag:
        raise ConfigError(diag)
    cfg = section_config(raw, command)
    if command == "burgers":
        return run_burgers(cfg, out, threads, seed_base)
    return RUNNERS[command](cfg, out, threads)


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with one table per subcommand")
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads")
    common.add_argument("--seed-base", type=int, default=None, help="Burgers seeds are seed_base + run index")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config key; may be repeated")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="rbffr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS + ("validate",):
        sub.add_parser(name, parents=[common])
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        raw = apply_overrides(load_config(args.config), args.set)
        if args.seed_base is not None and args.seed_base < 0:
            raise ConfigError(["--seed-base: must be non-negative"])
        if args.threads < 1:
            raise ConfigError(["--threads: must be at least 1"])
        if args.command == "validate":
            diag = validate(raw)
            for d in diag:
                print(d)
            return EXIT_CONFIG if diag else EXIT_OK
        paths = run(args.command, raw, Path(args.out), args.threads, args.seed_base)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK
