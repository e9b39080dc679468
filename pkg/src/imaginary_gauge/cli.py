"""Command-line front end: ``imgauge <command> [options]``.

Every physical input is in units of kappa (kappa = 1 internally): energies
and frequencies in kappa, times in 1/kappa.  Each artifact starts with a
metadata record (version, config and its hash, numerical settings) followed by
a data section that is byte-identical between runs of the same config.
"""
from __future__ import annotations

import argparse
from dataclasses import asdict, dataclass, fields
from dataclasses import field as dc_field
import hashlib
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__, chain, gauge, perturbation, ring, scan
from .numerics import ConvergenceError, DEFAULT_QUAD_TOL, DomainError

COMMANDS = ("spectrum", "dynamics", "quasienergy", "tongues", "perturb", "check-condition")
METADATA_PREFIX = "# imgauge-metadata "


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class RunConfig:
    command: str
    topology: str = "chain"
    n: int | None = None
    kappa: float = 1.0
    field: dict[str, Any] | None = None
    t_end: float | None = None
    init: str | None = None
    steps: int = chain.DEFAULT_STEPS
    tol: float = DEFAULT_QUAD_TOL
    threshold: float = scan.DEFAULT_THRESHOLD
    omega: list[float] = dc_field(default_factory=lambda: list(scan.DEFAULT_OMEGA_AXIS))
    h1: list[float] = dc_field(default_factory=lambda: list(scan.DEFAULT_H1_AXIS))
    detuning_tol: float = perturbation.DEFAULT_DETUNING_TOL
    stride: int = 1
    workers: int | None = None
    output: str | None = None
    format: str = "csv"

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
        if "command" not in data:
            raise ConfigError(["config key 'command' is required"])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def validate(self) -> None:
        """Raise ``ConfigError`` listing every violated constraint."""
        err = []
        if self.command not in COMMANDS:
            err.append(f"command must be one of {list(COMMANDS)}, got {self.command!r}")
        if self.topology not in ("ring", "chain"):
            err.append(f"topology must be 'ring' or 'chain', got {self.topology!r}")
        needs_n = self.command != "check-condition"
        if needs_n:
            if not isinstance(self.n, int) or isinstance(self.n, bool):
                err.append("n (site count) is required and must be an integer")
            else:
                lo = 3 if self.topology == "ring" else 2
                if self.n < lo:
                    err.append(f"n must be >= {lo} for a {self.topology}")
        if not (isinstance(self.kappa, (int, float)) and self.kappa > 0):
            err.append("kappa must be positive")
        if self.field is None:
            if self.command in ("dynamics", "quasienergy", "perturb", "check-condition", "tongues"):
                err.append("field is required")
        elif not isinstance(self.field, dict):
            err.append("field must be an object")
        elif self.command == "tongues":
            if self.field.get("type") not in ("square", "sin"):
                err.append("tongues needs field type 'square' or 'sin'")
        else:
            err.extend(gauge.field_errors(self.field))
        if self.command in ("tongues", "perturb") and self.topology != "chain":
            err.append(f"{self.command} is defined for the chain topology only")
        if self.command == "spectrum" and self.topology == "chain" and self.field \
                and self.field.get("type") != "constant":
            err.append("chain spectrum takes a constant field; use quasienergy for a driven chain")
        if self.command == "dynamics":
            if not (isinstance(self.t_end, (int, float)) and self.t_end >= 0):
                err.append("t_end is required and must be non-negative")
            if not self.init:
                err.append("init is required (site:<n> or vector:<path>)")
            elif not (self.init.startswith("site:") or self.init.startswith("vector:")):
                err.append("init must be site:<n> or vector:<path>")
            elif self.init.startswith("site:") and isinstance(self.n, int):
                try:
                    site = int(self.init[5:])
                    first = 0 if self.topology == "ring" else 1
                    if not first <= site < first + self.n:
                        err.append(f"init site must lie in {first}..{first + self.n - 1}")
                except ValueError:
                    err.append("init site must be an integer")
        if not (isinstance(self.steps, int) and self.steps >= 1):
            err.append("steps must be a positive integer")
        if not self.tol > 0:
            err.append("tol must be positive")
        if not self.threshold > 0:
            err.append("threshold must be positive")
        for name in ("omega", "h1"):
            ax = getattr(self, name)
            if not (isinstance(ax, (list, tuple)) and len(ax) == 3 and ax[2] >= 1 and ax[1] >= ax[0]):
                err.append(f"{name} axis must be [start, stop, count] with stop >= start, count >= 1")
        if self.command == "tongues" and not err and self.omega[0] <= 0:
            err.append("omega axis must start above zero")
        if not (isinstance(self.stride, int) and self.stride >= 1):
            err.append("stride must be a positive integer")
        if self.workers is not None and not (isinstance(self.workers, int) and self.workers >= 1):
            err.append("workers must be a positive integer")
        if self.format not in ("csv", "json"):
            err.append("format must be 'csv' or 'json'")
        if err:
            raise ConfigError(err)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return None if not math.isfinite(x) else float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _num(x: float) -> str:
    return repr(float(x))


def _spec(cfg: RunConfig):
    # all inputs are kappa-normalized, so the lattice is built with kappa = 1
    return ring.RingSpec(cfg.n) if cfg.topology == "ring" else chain.ChainSpec(cfg.n)


def _initial_vector(cfg: RunConfig) -> np.ndarray:
    kind, _, arg = cfg.init.partition(":")
    if kind == "site":
        c = np.zeros(cfg.n, complex)
        c[int(arg) - (0 if cfg.topology == "ring" else 1)] = 1.0
        return c
    with open(arg) as fh:
        raw = json.load(fh)
    vals = [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in raw]
    if len(vals) != cfg.n:
        raise ConfigError([f"initial vector in {arg} has {len(vals)} entries, expected {cfg.n}"])
    return np.asarray(vals)


def _energy_table(E, mu=None) -> tuple[list[str], list[list[float]]]:
    header = ["l", "re_E", "im_E"] + (["re_mu", "im_mu"] if mu is not None else [])
    rows = []
    for l, e in enumerate(E):
        row = [l, e.real, e.imag]
        if mu is not None:
            row += [mu[l].real, mu[l].imag]
        rows.append(row)
    return header, rows


def cmd_spectrum(cfg):
    spec = _spec(cfg)
    f = gauge.from_dict(cfg.field or {"type": "constant", "h0": 0.0})
    if cfg.topology == "chain":
        E = chain.stationary_spectrum(spec).astype(complex)
        extra = {"note": "real and independent of a static field"}
    elif isinstance(f, gauge.Constant):
        E = ring.stationary_spectrum(spec, f.h0).values
        extra = {}
    else:
        E = ring.quasienergies(spec, f).values
        extra = {"note": "period-averaged quasi energies"}
    header, rows = _energy_table(E)
    return header, rows, {"max_im": float(np.max(np.abs(E.imag))), **extra}


def cmd_quasienergy(cfg):
    spec = _spec(cfg)
    f = gauge.from_dict(cfg.field)
    if cfg.topology == "ring":
        E = ring.quasienergies(spec, f).values
        mu = np.exp(-1j * E * f.period)
        info = {"branch": "exact, unfolded", "max_im": float(np.max(np.abs(E.imag)))}
    else:
        res = chain.monodromy(spec, f, cfg.steps)
        E, mu = res.quasi_energies.values, res.floquet_multipliers
        info = {"branch": res.quasi_energies.branch, "max_im": res.instability,
                "imbalance": res.imbalance, "exact_product": res.exact,
                "error_estimate": res.error_estimate}
    header, rows = _energy_table(E, mu)
    return header, rows, info


def cmd_dynamics(cfg):
    spec = _spec(cfg)
    f = gauge.from_dict(cfg.field)
    traj = chain.simulate(spec, f, _initial_vector(cfg), cfg.t_end, cfg.steps)
    labels = range(cfg.n) if cfg.topology == "ring" else range(1, cfg.n + 1)
    header = ["t"] + [f"{p}_c{n}" for n in labels for p in ("re", "im")] + [f"abs_c{n}" for n in labels]
    keep = list(range(0, len(traj.times), cfg.stride))
    if keep[-1] != len(traj.times) - 1:
        keep.append(len(traj.times) - 1)
    rows = []
    for k in keep:
        c = traj.amplitudes[k]
        rows.append([traj.times[k]] + [x for z in c for x in (z.real, z.imag)] + list(np.abs(c)))
    return header, rows, {"samples": len(keep), "max_abs": float(traj.norms.max())}


def cmd_tongues(cfg):
    spec = _spec(cfg)
    grid = scan.tongue_scan(spec, cfg.field["type"], scan.axis(*cfg.omega), scan.axis(*cfg.h1),
                            cfg.steps, cfg.threshold, cfg.workers)
    tips = scan.tongue_tips(grid)
    info = {"warnings": grid.nan_count, "unreliable_cells": int(grid.unreliable.sum()),
            "tongue_tips": tips,
            "tongues_below_4kappa": sum(t < 4.0 for t in tips)}
    return grid, info


def cmd_perturb(cfg):
    spec = _spec(cfg)
    f = gauge.from_dict(cfg.field)
    setup = perturbation.build_setup(spec)
    slow = perturbation.build_R(setup, f, cfg.detuning_tol)
    resonances = [[n, m, l, f.omega] for n, m, l in slow.harmonics_used]
    return {"N": cfg.n, "field": f.to_dict(), "resonances": resonances,
            "growth_rate": perturbation.predicted_growth_rate(slow)}


def cmd_check_condition(cfg):
    f = gauge.from_dict(cfg.field)
    s = gauge.sinh_average(f, cfg.tol)
    c = gauge.cosh_average(f, cfg.tol)
    return {"sinh_average": s, "cosh_average": c, "kappa_eff": c * cfg.kappa,
            "pseudo_hermitian": gauge.is_pseudo_hermitian_condition(f, 1e-10)}


def run(cfg: RunConfig) -> str:
    """Execute ``cfg`` and return the artifact text."""
    cfg.validate()
    meta = {"program": "imgauge", "version": __version__, "config": cfg.to_dict(),
            "config_hash": cfg.digest(), "kappa": cfg.kappa, "units": "kappa-normalized",
            "steps": cfg.steps, "tol": cfg.tol, "threshold": cfg.threshold}
    if cfg.command == "tongues":
        grid, info = cmd_tongues(cfg)
        meta.update(info)
        if cfg.format == "csv":
            body = "\n".join(grid.csv_lines()) + "\n"
        else:
            body = None
            data = {"omega_over_kappa": grid.omega_axis, "h1": grid.h1_axis,
                    "max_im_quasienergy_over_kappa": grid.measure, "unstable": grid.flags}
    elif cfg.command in ("perturb", "check-condition"):
        data = cmd_perturb(cfg) if cfg.command == "perturb" else cmd_check_condition(cfg)
        if cfg.format == "csv":
            if cfg.command == "perturb":
                lines = ["n,m,l,omega_over_kappa"] + [",".join(map(str, r[:3])) + "," + _num(r[3])
                                                     for r in data["resonances"]]
                meta["growth_rate"] = data["growth_rate"]
            else:
                lines = ["key,value"] + [f"{k},{v}" for k, v in data.items()]
            body = "\n".join(lines) + "\n"
        else:
            body = None
    else:
        handler = {"spectrum": cmd_spectrum, "quasienergy": cmd_quasienergy,
                   "dynamics": cmd_dynamics}[cfg.command]
        header, rows, info = handler(cfg)
        meta.update(info)
        if cfg.format == "csv":
            lines = [",".join(header)]
            lines += [",".join(str(v) if isinstance(v, int) else _num(v) for v in r) for r in rows]
            body = "\n".join(lines) + "\n"
        else:
            body = None
            data = [dict(zip(header, r)) for r in rows]
    meta = _jsonable(meta)
    if body is not None:
        return METADATA_PREFIX + json.dumps(meta, sort_keys=True) + "\n" + body
    return json.dumps({"metadata": meta, "data": _jsonable(data)}, sort_keys=True) + "\n"


def read_metadata(text: str) -> dict[str, Any]:
    """Metadata record of an artifact produced by :func:`run` (CSV or JSON)."""
    if text.startswith(METADATA_PREFIX):
        return json.loads(text.splitlines()[0][len(METADATA_PREFIX):])
    return json.loads(text)["metadata"]


def data_section(text: str) -> str:
    """Everything after the metadata record."""
    if text.startswith(METADATA_PREFIX):
        return text.split("\n", 1)[1]
    return json.dumps(json.loads(text)["data"], sort_keys=True)


def _axis(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("axis must be start:stop:count")
    return [float(parts[0]), float(parts[1]), int(parts[2])]


def _field(text: str) -> dict[str, Any]:
    try:
        return gauge.parse_field(text)
    except (DomainError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError([message])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imgauge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        # defaults are None so that only explicit flags override a --config file
        p.add_argument("--config", help="JSON file with RunConfig keys")
        # choices are checked by RunConfig.validate so that all errors are reported together
        p.add_argument("--topology", default=None, help="ring or chain")
        p.add_argument("--n", type=int, default=None, help="number of sites")
        p.add_argument("--kappa", type=float, default=None, help="hopping rate, echoed in metadata")
        p.add_argument("--field", type=_field, default=None,
                       help="e.g. constant:h0=1, sin:h1=0.4,omega=1, square:h1=0.4,omega=1.4, "
                            "twolevel:h1=1,h2=0.5,t1=2,period=6")
        p.add_argument("--t-end", dest="t_end", type=float, default=None)
        p.add_argument("--init", default=None, help="site:<n> or vector:<path to JSON list>")
        p.add_argument("--steps", type=int, default=None, help="steps per period")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--omega", type=_axis, default=None, help="start:stop:count in kappa")
        p.add_argument("--h1", type=_axis, default=None, help="start:stop:count")
        p.add_argument("--detuning-tol", dest="detuning_tol", type=float, default=None)
        p.add_argument("--stride", type=int, default=None, help="keep every k-th sample")
        p.add_argument("--workers", type=int, default=None,
                       help=f"scan processes (overrides ${scan.WORKERS_ENV})")
        p.add_argument("--output", "-o", default=None, help="file path (default stdout)")
        p.add_argument("--format", default=None, help="csv or json")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    data: dict[str, Any] = {}
    if ns.config:
        with open(ns.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError(["config file must hold a JSON object"])
    data["command"] = ns.command
    for f in fields(RunConfig):
        if f.name in ("command",):
            continue
        val = getattr(ns, f.name, None)
        if val is not None:
            data[f.name] = val
    return RunConfig.from_dict(data)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        text = run(cfg)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"error": "invalid configuration", "details": exc.errors}) + "\n")
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps({"error": "io", "details": [str(exc)]}) + "\n")
        return 2
    except (DomainError, ConvergenceError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "details": [str(exc)]}) + "\n")
        return 1
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the flush at exit
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return 0


if __name__ == "__main__":
    sys.exit(main())
