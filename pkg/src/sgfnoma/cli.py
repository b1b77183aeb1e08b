"""Batch experiment driver: writes CSV tables for power sweeps.

Usage::

    python -m sgfnoma sweep --ps-sweep 0:40:5 --p0-policy equal --m-users 1,5 --out out.csv
    python -m sgfnoma validate --ps-db 0,10,20 --m-users 1,2,3
    python -m sgfnoma admission --ps-sweep -10:40:10 --r0 0.5 --m-users 5
    python -m sgfnoma ergodic --ps-sweep 0:40:10 --schemes scheme_i,scheme_ii,proposed

Settings may also come from a flat ``key = value`` file given with
``--config``; command-line flags override the file, which overrides the
defaults.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import analytic
from .model import Scheme, SystemParams, derive_constants
from .montecarlo import simulate

NA = "NA_DOMAIN"

SWEEP_COLUMNS = ["snr_db", "p0_db", "ps_db", "m_users", "r0", "rs", "scheme", "metric",
                 "value", "stderr", "trials", "seed"]
ADMISSION_COLUMNS = ["snr_db", "p0_db", "ps_db", "m_users", "r0", "user_index", "prob",
                     "stderr", "trials", "seed"]
VALIDATE_COLUMNS = ["snr_db", "p0_db", "ps_db", "m_users", "r0", "rs", "mc", "mc_stderr",
                    "exact", "quadrature", "highsnr", "diversity", "exact_quad_diff",
                    "mc_z", "verdict"]


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    ps_db: tuple = (0.0, 10.0, 20.0, 30.0, 40.0)
    p0_policy: str = "equal"
    p0_db: float = 10.0
    r0: float = 1.0
    rs: float = 0.9
    m_users: tuple = (1, 5)
    schemes: tuple = ("scheme_i", "scheme_ii", "proposed")
    trials: int = 10**7
    seed: int = 1
    out: str = "-"
    workers: int = 1
    tol_quad: float = 1e-8
    tol_sigma: float = 3.0

    def validate(self):
        if not self.ps_db:
            raise ConfigError("empty power grid")
        if not self.m_users or any(m < 1 for m in self.m_users):
            raise ConfigError("m_users must be a nonempty list of positive integers")
        if not self.schemes:
            raise ConfigError("empty scheme list")
        for s in self.schemes:
            try:
                Scheme(s)
            except ValueError:
                raise ConfigError(f"unknown scheme {s!r}") from None
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        self.power_pair(0.0)
        return self

    def power_pair(self, ps_db):
        """Linear (p0, ps) for a grid point given in ps dB."""
        ps = db_to_linear(ps_db)
        policy = self.p0_policy
        if policy == "equal":
            return ps, ps
        if policy == "fixed":
            return db_to_linear(self.p0_db), ps
        if policy.startswith("ratio:"):
            try:
                ratio = float(policy.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad p0 policy {policy!r}") from None
            if not ratio > 0:
                raise ConfigError("p0 ratio must be positive")
            return ratio * ps, ps
        raise ConfigError(f"unknown p0 policy {policy!r}; use equal, fixed or ratio:<x>")


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def fmt(x):
    """Shortest text that parses back to the same value."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def parse_grid(text):
    """``"a:b:c"`` (inclusive range) or a comma list of dB values."""
    text = text.strip()
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad sweep {text!r}; expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad sweep {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad dB list {text!r}") from None


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad integer list {text!r}") from None


def _str_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


_CONVERTERS = {
    "ps_db": parse_grid,
    "ps_sweep": parse_grid,
    "p0_policy": str,
    "p0_db": float,
    "r0": float,
    "rs": float,
    "m_users": _int_list,
    "schemes": _str_list,
    "trials": lambda v: int(float(v)),
    "seed": int,
    "out": str,
    "workers": int,
    "tol_quad": float,
    "tol_sigma": float,
}


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONVERTERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONVERTERS[key](val)
    return values


def build_config(args) -> SweepConfig:
    merged = {}
    if args.config:
        merged.update(read_config_file(args.config))
    for key in _CONVERTERS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = _CONVERTERS[key](val) if isinstance(val, str) else val
    if "ps_sweep" in merged:
        merged["ps_db"] = merged.pop("ps_sweep")
    known = {f.name for f in fields(SweepConfig)}
    return SweepConfig(**{k: v for k, v in merged.items() if k in known}).validate()


def _grid(config):
    for ps_db in config.ps_db:
        p0, ps = config.power_pair(ps_db)
        for m in config.m_users:
            yield ps_db, SystemParams(p0, ps, config.r0, config.rs, m)


def _prefix(ps_db, params):
    return [ps_db, 10 * math.log10(params.p0), ps_db, params.m_users, params.r0, params.rs]


def _analytic_or_na(fn, params):
    try:
        return fn(params)
    except analytic.DomainError:
        return NA


def sweep_rows(config: SweepConfig, metric="outage"):
    schemes = [Scheme(s) for s in config.schemes]
    for ps_db, params in _grid(config):
        summary = simulate(params, config.trials, config.seed, schemes, workers=config.workers)
        pre = _prefix(ps_db, params)
        for s in schemes:
            est = summary.outage(s) if metric == "outage" else summary.ergodic_rate(s)
            name = "outage_mc" if metric == "outage" else "ergodic_mc"
            yield pre + [s.value, name, est.value, est.stderr, est.trials, est.seed]
        if metric == "outage" and Scheme.PROPOSED in schemes:
            exact = _analytic_or_na(lambda p: analytic.outage_exact(p).total, params)
            for name, value in (
                ("outage_exact", exact),
                ("outage_highsnr", _analytic_or_na(analytic.outage_highsnr, params)),
                ("outage_diversity", _analytic_or_na(_diversity, params)),
            ):
                yield pre + [Scheme.PROPOSED.value, name, value, None, None, None]


def _diversity(params):
    if not derive_constants(params).valid:
        raise analytic.DomainError("eps0*epss >= 1")
    return analytic.outage_diversity(params)


def admission_rows(config: SweepConfig):
    for ps_db, params in _grid(config):
        dist = simulate(params, config.trials, config.seed, (Scheme.PROPOSED,),
                        admission=True, workers=config.workers).admission()
        pre = [ps_db, 10 * math.log10(params.p0), ps_db, params.m_users, params.r0]
        for k in range(params.m_users):
            yield pre + [k + 1, dist.probs[k], dist.stderrs[k], dist.trials, dist.seed]


def validate_rows(config: SweepConfig):
    """Yield ``(row, passed)``; ``passed`` is None when no verdict applies."""
    for ps_db, params in _grid(config):
        summary = simulate(params, config.trials, config.seed, (Scheme.PROPOSED,),
                           workers=config.workers)
        mc = summary.outage(Scheme.PROPOSED)
        quad = analytic.outage_quadrature(params)
        exact = _analytic_or_na(lambda p: analytic.outage_exact(p).total, params)
        highsnr = _analytic_or_na(analytic.outage_highsnr, params)
        diversity = _analytic_or_na(_diversity, params)
        if exact == NA:
            row = _prefix(ps_db, params) + [mc.value, mc.stderr, NA, quad, highsnr, diversity,
                                            NA, NA, "NA"]
            yield row, None
            continue
        diff = abs(exact - quad)
        # score-test standard error under the analytic value
        se = math.sqrt(exact * (1.0 - exact) / mc.trials)
        z = abs(mc.value - exact) / se if se > 0 else (0.0 if mc.value == exact else math.inf)
        passed = diff < config.tol_quad and z < config.tol_sigma
        row = _prefix(ps_db, params) + [mc.value, mc.stderr, exact, quad, highsnr, diversity,
                                        diff, z, "PASS" if passed else "FAIL"]
        yield row, passed


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from exc


def cmd_sweep(config: SweepConfig):
    write_csv(config.out, SWEEP_COLUMNS, sweep_rows(config, "outage"))
    return 0


def cmd_ergodic(config: SweepConfig):
    write_csv(config.out, SWEEP_COLUMNS, sweep_rows(config, "ergodic"))
    return 0


def cmd_admission(config: SweepConfig):
    write_csv(config.out, ADMISSION_COLUMNS, admission_rows(config))
    return 0


def cmd_validate(config: SweepConfig):
    results = list(validate_rows(config))
    write_csv(config.out, VALIDATE_COLUMNS, (row for row, _ in results))
    return 1 if any(ok is False for _, ok in results) else 0


COMMANDS = {
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "admission": cmd_admission,
    "ergodic": cmd_ergodic,
}


def make_parser():
    parser = argparse.ArgumentParser(prog="sgfnoma", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--p0-db", type=float)
    grid = parser.add_mutually_exclusive_group()
    grid.add_argument("--ps-db", help="comma list of ps values in dB")
    grid.add_argument("--ps-sweep", help="start:stop:step in dB, stop inclusive")
    parser.add_argument("--p0-policy", help="equal | fixed | ratio:<p0/ps>")
    parser.add_argument("--r0", type=float)
    parser.add_argument("--rs", type=float)
    parser.add_argument("--m-users", help="comma list of grant-free user counts")
    parser.add_argument("--schemes", help="comma list of scheme_i, scheme_ii, proposed, oma")
    parser.add_argument("--trials", type=lambda v: int(float(v)))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output path, '-' for stdout")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--tol-quad", type=float, help="validate: exact vs quadrature")
    parser.add_argument("--tol-sigma", type=float, help="validate: exact vs Monte Carlo")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        config = build_config(args)
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
