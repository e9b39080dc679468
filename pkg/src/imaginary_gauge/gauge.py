"""Imaginary gauge fields h(t) and their period averages.

All fields are immutable.  Periodic fields know their own jump/kink times so
that quadrature can split there, and evaluation at a jump returns the
right-limit value.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
import math
from typing import Any

import numpy as np

from .numerics import DEFAULT_QUAD_TOL, DomainError, integrate, integrate_periodic

TWO_PI = 2.0 * math.pi


class GaugeField:
    """Base class for a real field ``h(t)`` with period ``self.period``."""

    kind: str = ""
    period: float
    omega: float

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Jump or kink times inside ``[0, period)``."""
        return ()

    def _reduced(self, t):
        r = np.mod(np.asarray(t, dtype=float), self.period)
        # tiny negative t rounds up to exactly one period
        return np.where(r >= self.period, 0.0, r)

    def __call__(self, t):
        raise NotImplementedError

    def value_at(self, t: float) -> float:
        return float(self(t))

    def negated(self) -> "GaugeField":
        raise NotImplementedError

    def breakpoints_between(self, a: float, b: float) -> list[float]:
        """All breakpoints (periodically repeated) inside ``(a, b)``."""
        T = self.period
        pts = []
        for k in range(math.floor(a / T), math.floor(b / T) + 1):
            pts.extend(k * T + p for p in (0.0,) + self.breakpoints)
        return sorted(p for p in pts if a < p < b)

    def integral_of(self, func, a: float, b: float, tol: float = DEFAULT_QUAD_TOL) -> float:
        """``int_a^b func(h(t)) dt`` for a scalar function ``func``."""
        return integrate(lambda t: func(self.value_at(t)), a, b, tol,
                         self.breakpoints_between(a, b))

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.kind, **asdict(self)}


@dataclass(frozen=True)
class Constant(GaugeField):
    """Static field ``h0``; ``omega`` only sets the nominal Floquet period."""

    h0: float
    omega: float = 1.0
    kind = "constant"

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    def __call__(self, t):
        return np.full(np.shape(t), float(self.h0)) if np.ndim(t) else float(self.h0)

    def negated(self):
        return Constant(-self.h0, self.omega)

    def to_dict(self):
        return {"type": self.kind, "h0": self.h0, "omega": self.omega}


@dataclass(frozen=True)
class Sinusoidal(GaugeField):
    """``h(t) = h1 sin(omega t)``."""

    h1: float
    omega: float
    kind = "sin"

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    def __call__(self, t):
        # reduce first so value_at(t + T) == value_at(t) bit for bit
        return self.h1 * np.sin(self.omega * self._reduced(t))

    def negated(self):
        return Sinusoidal(-self.h1, self.omega)

    def to_dict(self):
        return {"type": self.kind, "h1": self.h1, "omega": self.omega}


@dataclass(frozen=True)
class SquareWave(GaugeField):
    """``+h1`` on ``(0, T/2)``, ``-h1`` on ``(T/2, T)``."""

    h1: float
    omega: float
    kind = "square"

    @property
    def period(self) -> float:
        return TWO_PI / self.omega

    @property
    def breakpoints(self):
        return (0.5 * self.period,)

    def __call__(self, t):
        tm = self._reduced(t)
        return np.where(tm < 0.5 * self.period, self.h1, -self.h1) * 1.0

    def negated(self):
        return SquareWave(-self.h1, self.omega)

    def to_dict(self):
        return {"type": self.kind, "h1": self.h1, "omega": self.omega}


@dataclass(frozen=True)
class PiecewiseTwoLevel(GaugeField):
    """``+h1`` on ``(0, t1)`` and ``-h2`` on ``(t1, T)`` with ``h1, h2 > 0``."""

    h1: float
    h2: float
    t1: float
    period: float
    kind = "twolevel"

    def __post_init__(self):
        if not 0.0 < self.t1 < self.period:
            raise DomainError(f"need 0 < t1 < period, got t1={self.t1}, period={self.period}")

    @classmethod
    def balanced(cls, h1: float, t1: float, period: float) -> "PiecewiseTwoLevel":
        """Choose ``h2`` so that ``t1 sinh h1 = (T - t1) sinh h2``."""
        return cls(h1, math.asinh(t1 / (period - t1) * math.sinh(h1)), t1, period)

    @property
    def omega(self) -> float:
        return TWO_PI / self.period

    @property
    def breakpoints(self):
        return (self.t1,)

    def __call__(self, t):
        return np.where(self._reduced(t) < self.t1, self.h1, -self.h2) * 1.0

    def negated(self):
        return PiecewiseTwoLevel(-self.h1, -self.h2, self.t1, self.period)

    def to_dict(self):
        return {"type": self.kind, "h1": self.h1, "h2": self.h2, "t1": self.t1,
                "period": self.period}


@dataclass(frozen=True)
class Sampled(GaugeField):
    """Periodic linear interpolation through ``(times[k], values[k])``.

    ``times`` must be strictly increasing inside ``[0, period)``; the segment
    after the last sample wraps around to the first one.
    """

    times: tuple[float, ...]
    values: tuple[float, ...]
    period: float
    kind = "sampled"

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(x) for x in self.times))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        t = np.asarray(self.times)
        if len(t) == 0 or len(t) != len(self.values):
            raise DomainError("times and values must be non-empty and of equal length")
        if not self.period > 0 or t[0] < 0 or t[-1] >= self.period or np.any(np.diff(t) <= 0):
            raise DomainError("sample times must increase strictly inside [0, period)")

    @property
    def omega(self) -> float:
        return TWO_PI / self.period

    @property
    def breakpoints(self):
        return tuple(x for x in self.times if x > 0.0)

    def __call__(self, t):
        xp = np.concatenate([self.times, [self.times[0] + self.period]])
        fp = np.concatenate([self.values, [self.values[0]]])
        tm = self._reduced(t)
        tm = np.where(tm < xp[0], tm + self.period, tm)
        return np.interp(tm, xp, fp)

    def negated(self):
        return Sampled(self.times, tuple(-v for v in self.values), self.period)

    def to_dict(self):
        return {"type": self.kind, "times": list(self.times), "values": list(self.values),
                "period": self.period}


def value_at(f: GaugeField, t: float) -> float:
    return f.value_at(t)


def sinh_average(f: GaugeField, tol: float = DEFAULT_QUAD_TOL) -> float:
    """``(1/T) int_0^T sinh h(t) dt``."""
    if isinstance(f, Constant):
        return math.sinh(f.h0)
    return integrate_periodic(lambda t: math.sinh(f.value_at(t)), f.period, tol, f.breakpoints)


def cosh_average(f: GaugeField, tol: float = DEFAULT_QUAD_TOL) -> float:
    """``(1/T) int_0^T cosh h(t) dt``; equals ``kappa_eff / kappa``."""
    if isinstance(f, Constant):
        return math.cosh(f.h0)
    return integrate_periodic(lambda t: math.cosh(f.value_at(t)), f.period, tol, f.breakpoints)


def mean(f: GaugeField, tol: float = DEFAULT_QUAD_TOL) -> float:
    if isinstance(f, Constant):
        return float(f.h0)
    return integrate_periodic(f.value_at, f.period, tol, f.breakpoints)


def is_pseudo_hermitian_condition(f: GaugeField, tol: float = 1e-10) -> bool:
    """True when the period average of ``sinh h`` vanishes within ``tol``."""
    return abs(sinh_average(f)) <= tol


_ALIASES = {"constant": "constant", "const": "constant",
            "sin": "sin", "sinusoidal": "sin",
            "square": "square", "squarewave": "square",
            "twolevel": "twolevel", "piecewise": "twolevel",
            "sampled": "sampled"}

_REQUIRED = {"constant": ("h0",), "sin": ("h1", "omega"), "square": ("h1", "omega"),
             "twolevel": ("h1", "h2", "t1", "period"), "sampled": ("times", "values", "period")}


def field_errors(spec: dict[str, Any]) -> list[str]:
    """Every problem with a JSON field description (empty list when valid)."""
    errors = []
    kind = _ALIASES.get(str(spec.get("type", "")).lower())
    if kind is None:
        return [f"field.type must be one of {sorted(set(_ALIASES.values()))}, got {spec.get('type')!r}"]
    params = dict(spec)
    params.pop("type")
    if kind in ("sin", "square", "twolevel") and "omega" in params and "period" in params:
        errors.append("field: give either omega or period, not both")
    if kind in ("sin", "square") and "period" in params and "omega" not in params:
        params["omega"] = None
    if kind == "twolevel" and "omega" in params and "period" not in params:
        params["period"] = None
    for key in _REQUIRED[kind]:
        if key not in params:
            errors.append(f"field.{key} is required for type {kind!r}")
    allowed = set(_REQUIRED[kind]) | {"omega", "period"}
    for key in params:
        if key not in allowed:
            errors.append(f"field.{key} is not a parameter of type {kind!r}")
    for key in ("omega", "period"):
        val = spec.get(key)
        if val is not None and not (isinstance(val, (int, float)) and val > 0):
            errors.append(f"field.{key} must be a positive number")
    if kind == "twolevel" and not errors:
        T = spec.get("period") or TWO_PI / spec["omega"]
        if not 0 < spec["t1"] < T:
            errors.append("field.t1 must satisfy 0 < t1 < period")
        if spec["h1"] <= 0 or spec["h2"] <= 0:
            errors.append("field.h1 and field.h2 must be positive for type 'twolevel'")
    return errors


def from_dict(spec: dict[str, Any]) -> GaugeField:
    """Build a field from ``{type, h0|h1|h2, omega|period, t1}`` (kappa-normalized units)."""
    errors = field_errors(spec)
    if errors:
        raise DomainError("; ".join(errors))
    kind = _ALIASES[str(spec["type"]).lower()]
    if kind == "constant":
        return Constant(float(spec["h0"]), float(spec.get("omega", 1.0)))
    if kind in ("sin", "square"):
        omega = spec.get("omega") or TWO_PI / spec["period"]
        cls = Sinusoidal if kind == "sin" else SquareWave
        return cls(float(spec["h1"]), float(omega))
    if kind == "twolevel":
        period = spec.get("period") or TWO_PI / spec["omega"]
        return PiecewiseTwoLevel(float(spec["h1"]), float(spec["h2"]), float(spec["t1"]), float(period))
    return Sampled(tuple(spec["times"]), tuple(spec["values"]), float(spec["period"]))


def parse_field(text: str) -> dict[str, Any]:
    """Parse the compact CLI form ``type:key=value,key=value`` into a field dict.

    >>> parse_field("sin:h1=0.4,omega=1.4142")
    {'type': 'sin', 'h1': 0.4, 'omega': 1.4142}
    """
    kind, _, rest = text.partition(":")
    out: dict[str, Any] = {"type": kind.strip()}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise DomainError(f"bad field parameter {item!r}; expected key=value")
        out[key.strip()] = float(val)
    return out
