"""Command-line entry point: ``darkprobe run <config>`` and ``darkprobe list-fixtures``.

Exit codes: 0 on success, 2 for configuration problems, 3 when a module
reports a numerical-quality or other domain error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import yaml
from pydantic import ValidationError

from . import __version__
from .errors import DarkProbeError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("darkprobe")


class ConfigError(Exception):
    pass


def load_config(path: Path) -> dict:
    """Read a YAML (or JSON, which YAML accepts) config file into a dict."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    return data


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        # drop the union tag pydantic inserts after the discriminator
        loc = [str(p) for p in err["loc"]]
        if len(loc) > 1 and loc[0] in _experiment_names():
            loc = loc[1:]
        lines.append(f"  {'.'.join(loc) or '<root>'}: {err['msg']}")
    return "invalid config:\n" + "\n".join(lines)


def _experiment_names():
    from .experiments import EXPERIMENTS

    return EXPERIMENTS


def _limit_threads(n: int | None):
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n) if n else None


def run(config_path: Path, output_dir: Path | None = None, seed: int | None = None,
        threads: int | None = None) -> int:
    from . import experiments, io

    try:
        data = load_config(config_path)
        if seed is not None:
            data["seed"] = seed
        config = experiments.parse_config(data)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(format_validation_error(exc), file=sys.stderr)
        return EXIT_CONFIG

    out = Path(output_dir or config.output_dir or f"out-{config.experiment}")
    limiter = _limit_threads(threads)
    start = time.perf_counter()
    try:
        result = experiments.run_experiment(config)
    except DarkProbeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    wall = time.perf_counter() - start

    out.mkdir(parents=True, exist_ok=True)
    files = [io.write_csv(out / f"{config.experiment}-{name}.csv", table)
             for name, table in result.tables.items()]
    manifest = io.write_manifest(
        out, files, experiment=config.experiment, version=__version__, seed=config.seed,
        parameters=config.model_dump(mode="json"), summary=result.summary,
        wall_time_seconds=wall, config_file=str(config_path))
    log.info("wrote %d files and %s", len(files), manifest)
    print(json.dumps(io._jsonable(result.summary), sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="darkprobe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a YAML/JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--output-dir", type=Path, default=None)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP threads")

    sub.add_parser("list-fixtures", help="print the named parameter sets")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-fixtures":
        from .fixtures import format_catalog

        print(format_catalog())
        return EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.config, args.output_dir, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
