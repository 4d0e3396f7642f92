"""``czmcal`` command line.

Exit status: 0 success, 1 reproduction mismatch (``rerun``), 2 configuration
error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError, DataError, NumericalError
from .io import read_json, write_json
from .pipeline import STAGE_RUNNERS, build_manifest, run_pipeline

log = logging.getLogger("czmcal")

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3, 4
COMMANDS = ("simulate", "synth", "calibrate", "discrepancy", "uq", "sobol", "pipeline")


def _global_flags(p: argparse.ArgumentParser, defaults: bool) -> None:
    # accepted before or after the subcommand; only the top level sets defaults
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--config", type=Path, default=d(None), help="JSON run configuration")
    p.add_argument("--seed", type=int, default=d(None),
                   help="global seed (overrides the config)")
    p.add_argument("--out-dir", type=Path, default=d(Path("out")), help="output directory")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads, 0 = all cores")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="czmcal", description=(
        "Rate-dependent cohesive interface: DCB simulation, Bayesian calibration, "
        "discrepancy modelling, uncertainty propagation and Sobol sensitivity."))
    _global_flags(p, defaults=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, defaults=False)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    add("simulate", help="load-opening curves at the configured parameters")
    s = add("synth", help="synthetic observations at the configured parameters")
    s.add_argument("--noise-sigma", type=float)
    s.add_argument("--n-points", type=int)
    c = add("calibrate", help="sample the parameter posterior")
    c.add_argument("--observations", type=Path)
    c.add_argument("--per-rate", action="store_true", help="one posterior per rate")
    c.add_argument("--walkers", type=int)
    c.add_argument("--steps", type=int)
    d = add("discrepancy", help="fit one discrepancy GP per rate")
    d.add_argument("--observations", type=Path)
    d.add_argument("--summary", type=Path, help="posterior summary table")
    d.add_argument("--n-train", type=int)
    u = add("uq", help="propagate the posterior and build predictive bands")
    u.add_argument("--observations", type=Path)
    u.add_argument("--samples", type=Path, help="posterior samples table")
    u.add_argument("--summary", type=Path)
    u.add_argument("--gp-dir", type=Path, help="directory with gp_<rate>.json dumps")
    u.add_argument("--alpha", type=float, action="append", dest="alphas")
    u.add_argument("--n-samples", type=int)
    o = add("sobol", help="Sobol indices of the peak load")
    o.add_argument("--n-base", type=int)
    o.add_argument("--rate", type=float)
    add("pipeline", help="synth, calibrate, discrepancy, uq and sobol in turn")
    r = add("rerun", help="repeat a run from its manifest and compare artifacts")
    r.add_argument("manifest", type=Path)
    return p


def _resolve(path, base: Path):
    if path is None:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else (base / p).resolve())


def load_config(args) -> RunConfig:
    if args.config is None:
        cfg, base = RunConfig(), Path.cwd()
    else:
        cfg, base = RunConfig.load(args.config), args.config.resolve().parent
    for key in ("observations", "samples", "summary", "gp_dir"):
        setattr(cfg.paths, key, _resolve(getattr(cfg.paths, key), base))
    if args.seed is not None:
        cfg.seed = args.seed
    overrides = {
        ("synth", "noise_sigma"): "noise_sigma", ("synth", "n_points"): "n_points",
        ("sampler", "per_rate"): "per_rate", ("sampler", "n_walkers"): "walkers",
        ("sampler", "n_steps"): "steps", ("gp", "n_train"): "n_train",
        ("uq", "alphas"): "alphas", ("uq", "n_samples"): "n_samples",
        ("sobol", "n_base"): "n_base", ("sobol", "rate"): "rate",
    }
    for (block, field), arg in overrides.items():
        value = getattr(args, arg, None)
        if value not in (None, False):
            setattr(getattr(cfg, block), field, value)
    for key in ("observations", "samples", "summary", "gp_dir"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg.paths, key, str(Path(value).resolve()))
    cfg.validate(None if args.command == "pipeline" else args.command)
    return cfg


def execute(command: str, cfg: RunConfig, out_dir: Path, threads: int) -> dict:
    """Run one command and write its manifest; returns the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    n = (os.cpu_count() or 1) if threads == 0 else threads
    pool = ThreadPoolExecutor(n) if n > 1 else None
    t0 = time.perf_counter()
    try:
        map_fn = pool.map if pool else None
        if command == "pipeline":
            artifacts = run_pipeline(cfg, out_dir, map_fn)
        else:
            artifacts = {command: STAGE_RUNNERS[command](cfg, out_dir, map_fn)}
    finally:
        if pool:
            pool.shutdown()
    manifest = build_manifest(command, cfg, out_dir, artifacts, time.perf_counter() - t0, n)
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def rerun(manifest_path: Path, out_dir: Path, threads: int) -> int:
    old = read_json(manifest_path)
    cfg = RunConfig.from_dict(old["config"])
    new = execute(old["command"], cfg, out_dir, threads)
    bad = []
    for stage, files in old["artifacts"].items():
        for name, digest in files.items():
            if new["artifacts"].get(stage, {}).get(name) != digest:
                bad.append(f"{stage}/{name}")
    if bad:
        print("artifacts differ: " + ", ".join(bad), file=sys.stderr)
        return EXIT_MISMATCH
    n = sum(len(v) for v in old["artifacts"].values())
    print(f"all {n} artifacts reproduced bit-identically in {out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            return rerun(args.manifest, args.out_dir, args.threads)
        cfg = load_config(args)
        manifest = execute(args.command, cfg, args.out_dir, args.threads)
        n = sum(len(v) for v in manifest["artifacts"].values())
        print(f"{args.command}: wrote {n} files to {args.out_dir} "
              f"({manifest['wall_time_s']:.1f} s)")
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
