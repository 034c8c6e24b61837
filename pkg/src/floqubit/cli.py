"""Command-line runner: ``floqubit run|bench|validate <config.toml>``.

Config layout (TOML)::

    schema_version = 1
    experiment = "xgate"
    out_dir = "out/xgate"      # optional, --out-dir wins
    seed = 0                   # optional
    [params]
    omega0_ghz = 5.02
    ...
    [integrator]               # optional overrides
    tolerance = 1e-9

Exit codes: 0 success, 2 config error, 3 physics or convergence error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import re
import sys
import types
import typing
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .experiments import EXPERIMENTS, with_integrator
from .initialization import BoundaryNotFound
from .io import Manifest, config_hash
from .propagator import ConvergenceError, IntegratorConfig
from .readout.circuit import LabelingError
from .readout.lindblad import LindbladError
from .twotone import AnticrossingError

SCHEMA_VERSION = 1
TOP_KEYS = {"schema_version", "experiment", "out_dir", "seed", "workers", "params", "integrator"}
EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS = 0, 2, 3
PHYSICS_ERRORS = (ConvergenceError, AnticrossingError, LindbladError, BoundaryNotFound, LabelingError)

logger = logging.getLogger("floqubit")


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ResolvedConfig:
    experiment: str
    params: object
    integrator: IntegratorConfig
    seed: int
    out_dir: Path | None
    workers: int | None

    def to_dict(self) -> dict:
        """Everything that determines the results (not where or how fast they are computed)."""
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "params": dataclasses.asdict(self.params),
            "integrator": self.integrator.to_dict(),
        }


def _line_of(text: str, key: str, table: str | None = None) -> int | None:
    """1-based line where ``key = ...`` is set (inside ``[table]`` if given)."""
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            if table is not None and key is None and current == table:
                return i
            continue
        if key is not None and current == table and re.match(rf"^\"?{re.escape(key)}\"?\s*=", s):
            return i
    return None


def _where(text: str, key: str | None, table: str | None) -> str:
    line = _line_of(text, key, table)
    return f"line {line}" if line is not None else "config"


def _coerce(value, tp, name: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], name)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{name}: expected a list")
        return tuple(_coerce(v, args[0], name) for v in value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true or false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    return value


def _build(cls, table: dict, text: str, section: str):
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in table:
        if key not in fields:
            raise ConfigError(f"{_where(text, key, section)}: unknown key '{key}' in [{section}]")
    kwargs = {}
    for name, f in fields.items():
        if name in table:
            try:
                kwargs[name] = _coerce(table[name], hints[name], name)
            except ConfigError as err:
                raise ConfigError(f"{_where(text, name, section)}: {err}") from None
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{_where(text, None, section)}: missing required key '{name}' in [{section}]")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"[{section}]: {err}") from None


def parse_config(text: str) -> ResolvedConfig:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"TOML syntax error: {err}") from None
    for key in doc:
        if key not in TOP_KEYS:
            raise ConfigError(f"{_where(text, key, None)}: unknown key '{key}'")
    if "schema_version" not in doc:
        raise ConfigError("config: missing required key 'schema_version'")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"{_where(text, 'schema_version', None)}: unsupported schema_version {doc['schema_version']!r}"
        )
    if "experiment" not in doc:
        raise ConfigError("config: missing required key 'experiment'")
    name = doc["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"{_where(text, 'experiment', None)}: unknown experiment {name!r}; expected one of {sorted(EXPERIMENTS)}"
        )
    exp = EXPERIMENTS[name]
    for section in ("params", "integrator"):
        if section in doc and not isinstance(doc[section], dict):
            raise ConfigError(f"{_where(text, section, None)}: '{section}' must be a table")
    params = _build(exp.params, doc.get("params", {}), text, "params")
    overrides = doc.get("integrator", {})
    integ_fields = {f.name for f in dataclasses.fields(IntegratorConfig)}
    for key in overrides:
        if key not in integ_fields:
            raise ConfigError(f"{_where(text, key, 'integrator')}: unknown key '{key}' in [integrator]")
    try:
        integrator = with_integrator(exp, overrides)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"[integrator]: {err}") from None
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"{_where(text, 'seed', None)}: seed must be an integer")
    workers = doc.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ConfigError(f"{_where(text, 'workers', None)}: workers must be a positive integer")
    out_dir = Path(doc["out_dir"]) if "out_dir" in doc else None
    return ResolvedConfig(name, params, integrator, seed, out_dir, workers)


def load_config(path) -> ResolvedConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    return parse_config(text)


def execute(cfg: ResolvedConfig, out_dir: Path, workers: int | None) -> Manifest:
    out_dir.mkdir(parents=True, exist_ok=True)
    config = cfg.to_dict()
    manifest = Manifest(out_dir, config)
    # Only synthetic generators draw random numbers; seeding here keeps them reproducible.
    np.random.seed(cfg.seed)
    exp = EXPERIMENTS[cfg.experiment]
    exp.runner(cfg.params, cfg.integrator, manifest, config, workers)
    manifest.write()
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="floqubit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"floqubit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_ in (("run", "run an experiment"), ("bench", "time a quasiphase scan per point"),
                       ("validate", "check a config without running it")):
        sp = sub.add_parser(cmd, help=help_)
        sp.add_argument("config")
        sp.add_argument("--out-dir", type=Path)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.command == "bench" and cfg.experiment not in ("solver-bench", "quasiphase-scan"):
            raise ConfigError(f"bench needs a solver-bench or quasiphase-scan config, got {cfg.experiment!r}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg.experiment} (config hash {config_hash(cfg.to_dict())})")
        return EXIT_OK

    if args.command == "bench" and cfg.experiment == "quasiphase-scan":
        from .experiments import BenchParams

        p = cfg.params
        bench = BenchParams(p.omega0_ghz, p.eps_d1_ghz, p.omega_d1_ghz, p.eps_d2_ghz,
                            ratio_min=p.ratio_min, ratio_max=p.ratio_max)
        cfg = dataclasses.replace(cfg, experiment="solver-bench", params=bench,
                                  integrator=EXPERIMENTS["solver-bench"].integrator)

    out_dir = args.out_dir or cfg.out_dir or Path("out") / cfg.experiment
    workers = args.workers or cfg.workers or os.cpu_count() or 1
    try:
        manifest = execute(cfg, out_dir, workers)
    except PHYSICS_ERRORS as err:
        print(f"physics error ({type(err).__name__}): {err}", file=sys.stderr)
        return EXIT_PHYSICS
    print(f"{cfg.experiment}: wrote {len(manifest.files)} files to {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
