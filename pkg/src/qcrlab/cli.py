"""Command-line runner: ``qcrlab verify`` and ``qcrlab list``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .model_quadric import FD_STEP, GOLDEN_CALIBRATION
from .report import CheckResult, sig3
from .suites import REGISTRY, SUITES, Context, checks_for, run_check

MAX_N = 3
MAX_SAMPLES = 1000


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    suite: str = "all"
    p: int = 1
    q: int = 0
    seed: int = 0
    samples: int | None = None
    fd_step: float = FD_STEP
    tol: dict[str, float] = field(default_factory=dict)
    format: str = "json"
    out: str | None = None
    points: str | None = None
    heis_points: str | None = None
    timing: bool = False
    jobs: int = 1
    allow_large: bool = False

    def validate(self) -> None:
        if self.suite not in (*SUITES, "all"):
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.p < 0 or self.q < 0:
            raise ConfigError("p and q must be nonnegative")
        if self.p + self.q > MAX_N and not self.allow_large:
            raise ConfigError(f"p + q > {MAX_N} is beyond desk scale (use --allow-large)")
        if self.samples is not None and not 1 <= self.samples <= MAX_SAMPLES:
            raise ConfigError(f"samples must lie in [1, {MAX_SAMPLES}]")
        if not self.fd_step > 0:
            raise ConfigError("fd_step must be positive")
        if self.format not in ("json", "text"):
            raise ConfigError("format must be json or text")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")
        unknown = sorted(set(self.tol) - set(REGISTRY) - {"t_covariance", "pullback_exact"})
        if unknown:
            raise ConfigError(f"unknown tolerance names: {', '.join(unknown)}")


@dataclass
class Report:
    suite: str
    parameters: dict[str, Any]
    checks: list[CheckResult]
    calibration: dict[str, float]
    version: str
    runtime_ms: float | None = None
    input_problems: list[str] = field(default_factory=list)

    @property
    def failed(self) -> int:
        return sum(c.status == "fail" for c in self.checks)

    def counts(self) -> dict[str, int]:
        out = {"pass": 0, "fail": 0, "skipped": 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    def to_dict(self) -> dict[str, Any]:
        d = {
            "tool": "qcrlab",
            "version": self.version,
            "suite": self.suite,
            "parameters": self.parameters,
            "calibration": self.calibration,
            "summary": self.counts(),
            "checks": [_record(c) for c in self.checks],
        }
        if self.input_problems:
            d["input_problems"] = self.input_problems
        if self.runtime_ms is not None:
            d["runtime_ms"] = round(self.runtime_ms, 1)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"qcrlab {self.version}  suite={self.suite}  " + "  ".join(
            f"{k}={v}" for k, v in self.parameters.items() if k in ("p", "q", "seed"))]
        width = max((len(c.name) for c in self.checks), default=10)
        for c in self.checks:
            extra = c.details.get("reason", "") if c.skipped else f"max_residual={sig3(c.max_residual)}"
            lines.append(f"{c.name:<{width}}  {c.status:<7}  {extra}")
        counts = self.counts()
        lines.append(f"{counts['pass']} passed, {counts['fail']} failed, {counts['skipped']} skipped")
        if self.runtime_ms is not None:
            lines.append(f"runtime {self.runtime_ms:.0f} ms")
        lines.extend(f"input: {msg}" for msg in self.input_problems)
        return "\n".join(lines) + "\n"


def _fmt(v: Any) -> Any:
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, float):
        return sig3(v)
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _fmt(x) for k, x in v.items()}
    try:
        return sig3(float(v))
    except (TypeError, ValueError):
        return str(v)


def _record(c: CheckResult) -> dict[str, Any]:
    return {
        "name": c.name,
        "status": c.status,
        "max_residual": sig3(c.max_residual),
        "samples_used": int(c.samples_used),
        "details": _fmt(c.details),
    }


def _run_one(args: tuple[str, Context]) -> CheckResult:
    name, ctx = args
    return run_check(REGISTRY[name], ctx)


def run_suite(cfg: RunConfig) -> Report:
    cfg.validate()
    start = time.perf_counter()
    problems: list[str] = []
    points, heis = [], []
    if cfg.points:
        from .model_quadric import load_points_csv

        points, bad = load_points_csv(cfg.points, cfg.p, cfg.q)
        problems.extend(f"{cfg.points}: {b}" for b in bad)
    if cfg.heis_points:
        from .heisenberg import load_heis_csv

        heis, bad = load_heis_csv(cfg.heis_points, cfg.p, cfg.q)
        problems.extend(f"{cfg.heis_points}: {b}" for b in bad)
    ctx = Context(cfg.p, cfg.q, cfg.seed, cfg.samples, cfg.fd_step, dict(cfg.tol), points, heis)
    names = [s.name for s in checks_for(cfg.suite)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, [(n, ctx) for n in names]))
    else:
        results = [_run_one((n, ctx)) for n in names]
    results.sort(key=lambda r: r.name)
    params = {
        "p": cfg.p,
        "q": cfg.q,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "fd_step": sig3(cfg.fd_step),
        "tol_overrides": {k: sig3(v) for k, v in sorted(cfg.tol.items())},
        "points": cfg.points,
        "heis_points": cfg.heis_points,
    }
    runtime = (time.perf_counter() - start) * 1000.0 if cfg.timing else None
    return Report(cfg.suite, params, results, asdict(GOLDEN_CALIBRATION), __version__, runtime, problems)


# argument handling -------------------------------------------------------------

_FIELD_TYPES = {"p": int, "q": int, "seed": int, "samples": int, "fd_step": float, "jobs": int}
_BOOL_FIELDS = {"timing", "allow_large"}


def _parse_tol(item: str) -> tuple[str, float]:
    name, sep, val = item.partition("=")
    if not sep:
        raise ConfigError(f"tolerance override must be name=value, got {item!r}")
    try:
        return name.strip(), float(val)
    except ValueError as exc:
        raise ConfigError(f"bad tolerance value in {item!r}") from exc


def read_config_file(path: str) -> dict[str, Any]:
    """Flat ``key = value`` file; keys mirror the long flags; ``tol`` may repeat."""
    out: dict[str, Any] = {"tol": {}}
    known = {f.name for f in fields(RunConfig)}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not sep or key not in known:
            raise ConfigError(f"{path}:{lineno}: unrecognized line {raw!r}")
        try:
            if key == "tol":
                name, tv = _parse_tol(val)
                out["tol"][name] = tv
            elif key in _BOOL_FIELDS:
                out[key] = val.lower() in ("1", "true", "yes", "on")
            elif key in _FIELD_TYPES:
                out[key] = _FIELD_TYPES[key](val)
            else:
                out[key] = val
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcrlab", description="Numerical checks for quaternionic CR geometry.")
    parser.add_argument("--version", action="version", version=f"qcrlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run a check suite")
    v.add_argument("--config", help="key = value file; flags override its values")
    v.add_argument("--suite", choices=[*SUITES, "all"])
    v.add_argument("--p", type=int)
    v.add_argument("--q", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--samples", type=int)
    v.add_argument("--tol", action="append", default=[], metavar="NAME=VAL")
    v.add_argument("--fd-step", type=float, dest="fd_step")
    v.add_argument("--format", choices=["json", "text"])
    v.add_argument("--out")
    v.add_argument("--points", help="CSV of quadric points, 4(n+1) reals per row")
    v.add_argument("--heis-points", dest="heis_points", help="CSV of Heisenberg points, 3 + 4n reals per row")
    v.add_argument("--timing", action="store_true", default=None, help="include runtime in the report")
    v.add_argument("--jobs", type=int)
    v.add_argument("--allow-large", action="store_true", default=None, dest="allow_large")
    ls = sub.add_parser("list", help="list registered checks")
    ls.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = read_config_file(ns.config) if ns.config else {"tol": {}}
    for f in fields(RunConfig):
        if f.name == "tol":
            continue
        val = getattr(ns, f.name, None)
        if val is not None:
            values[f.name] = val
    tol = dict(values.pop("tol", {}))
    for item in ns.tol:
        name, val = _parse_tol(item)
        tol[name] = val
    return RunConfig(tol=tol, **values)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "list":
        for spec in checks_for(ns.suite):
            gate = f"n >= {spec.min_n}" + ("" if spec.max_n is None else f", n <= {spec.max_n}")
            print(f"{spec.suite:<11} {spec.name:<30} tol={sig3(spec.tol)}  {gate}")
        return 0
    try:
        cfg = config_from_args(ns)
        report = run_suite(cfg)
    except (ConfigError, OSError, TypeError) as exc:
        print(f"qcrlab: error: {exc}", file=sys.stderr)
        return 2
    text = report.to_json() if cfg.format == "json" else report.to_text()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if report.failed == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
