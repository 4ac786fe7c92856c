"""Diffusion channel responses for spherical receivers in an unbounded 3-D medium.

Covers the fully absorbing receiver (first-hit rate and its erf-form time
integral) and the transparent passive receiver (occupancy probability of a
molecule inside the receiver volume).  All quantities are per released
molecule; all math is in SI units (meters, seconds).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ConfigError

ABSORBING = "absorbing"
PASSIVE = "passive"

# The passive occupancy formula is only a valid far-field approximation while
# the receiver subtends a small angle from the transmitter.
PASSIVE_GEOMETRY_LIMIT = 0.15


@dataclass(frozen=True)
class ChannelParams:
    """Physical geometry and diffusion constants.

    d : transmitter to nearest receiver-surface point, m
    r : receiver radius, m
    D : diffusion coefficient, m^2/s
    kind : ``"absorbing"`` or ``"passive"``
    V : receiver volume, m^3; derived as (4/3) pi r^3 when omitted
    allow_invalid_geometry : accept a passive geometry violating
        r/(r+d) < 0.15 with a warning instead of rejecting it
    """

    d: float
    r: float
    D: float
    kind: str = ABSORBING
    V: float | None = None
    allow_invalid_geometry: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        problems = []
        for name in ("d", "r", "D"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.kind not in (ABSORBING, PASSIVE):
            problems.append(f"kind must be {ABSORBING!r} or {PASSIVE!r}, got {self.kind!r}")
        sphere = 4.0 / 3.0 * math.pi * self.r ** 3 if self.r > 0 else None
        if self.V is None:
            object.__setattr__(self, "V", sphere)
        elif not self.V > 0:
            problems.append(f"V must be > 0, got {self.V!r}")
        elif sphere is not None and not math.isclose(self.V, sphere, rel_tol=1e-6):
            problems.append(f"V={self.V!r} inconsistent with (4/3)*pi*r^3={sphere!r}")
        if not problems and self.kind == PASSIVE:
            ratio = self.r / (self.r + self.d)
            if ratio >= PASSIVE_GEOMETRY_LIMIT:
                msg = (f"passive geometry r/(r+d)={ratio:.4f} >= "
                       f"{PASSIVE_GEOMETRY_LIMIT} invalidates the occupancy model")
                if self.allow_invalid_geometry:
                    warnings.warn(msg, stacklevel=2)
                else:
                    problems.append(msg + " (set allow_invalid_geometry to override)")
        if problems:
            raise ConfigError("invalid channel parameters", problems)


def _require_kind(p: ChannelParams, kind: str) -> None:
    if p.kind != kind:
        raise ValueError(f"operation requires a {kind} receiver, got {p.kind}")


def _erf_term(t, p: ChannelParams):
    """erf(d / sqrt(4 D t)) with the limits erf(+inf)=1 at t=0 and 0 at t=inf."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    pos = t > 0
    with np.errstate(divide="ignore"):
        out[pos] = erf(p.d / np.sqrt(4.0 * p.D * t[pos]))
    return out


def hit_rate(t, p: ChannelParams):
    """First-hit rate h(t) (1/s) of a molecule on the absorbing sphere.

    h(t) = r/(d+r) * d / sqrt(4 pi D t^3) * exp(-d^2 / (4 D t)); the t -> 0+
    limit is 0 but the expression divides by t^(3/2), so t must be > 0.
    """
    _require_kind(p, ABSORBING)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("hit_rate requires t > 0")
    geom = p.r / (p.d + p.r)
    out = geom * p.d / np.sqrt(4.0 * math.pi * p.D * t ** 3) * np.exp(-p.d ** 2 / (4.0 * p.D * t))
    return out if out.ndim else float(out)


def hit_fraction(t1, t2, p: ChannelParams):
    """Expected fraction of molecules absorbed during [t1, t2].

    Equals the integral of ``hit_rate`` over the interval, evaluated in closed
    erf form; bounded by r/(d+r).  t1 = 0 and t2 = inf are valid limits.
    """
    _require_kind(p, ABSORBING)
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if np.any(t1 < 0) or np.any(t2 < 0):
        raise ValueError("interval endpoints must be nonnegative")
    if np.any(t1 > t2):
        raise ValueError("interval must satisfy t1 <= t2")
    geom = p.r / (p.d + p.r)
    out = geom * (_erf_term(t1, p) - _erf_term(t2, p))
    # identical endpoints cancel exactly; guard tiny negative round-off
    out = np.where(out < 0, 0.0, out)
    return out if out.ndim else float(out)


def tap_fraction(i: int, w, Ts: float, p: ChannelParams):
    """Absorbed fraction for interference tap ``i``: the window shifted by i*Ts."""
    if i < 0:
        raise ValueError("tap index must be >= 0")
    return hit_fraction(w.t1 + i * Ts, w.t2 + i * Ts, p)


def passive_prob(t, p: ChannelParams):
    """Probability p(t) that a molecule occupies the passive receiver volume at t.

    p(t) = V / (4 pi D t)^(3/2) * exp(-(d+r)^2 / (4 D t)); valid under
    r/(r+d) < 0.15 (checked at parameter construction).  t must be > 0.
    """
    _require_kind(p, PASSIVE)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("passive_prob requires t > 0")
    out = p.V / (4.0 * math.pi * p.D * t) ** 1.5 * np.exp(-(p.d + p.r) ** 2 / (4.0 * p.D * t))
    return out if out.ndim else float(out)


def sample_prob(n: int, i: int, cfg, p: ChannelParams):
    """Occupancy probability at sample ``n`` for interference tap ``i``.

    Samples are taken at f(n) = n * t_s; the tap shifts time by i * Ts.  The
    (n, i) = (0, 0) point uses the t -> 0+ limit, which is 0.
    """
    if n < 0 or n > cfg.N:
        raise ValueError(f"sample index must be in [0, {cfg.N}]")
    if i < 0:
        raise ValueError("tap index must be >= 0")
    t = n * cfg.t_s + i * cfg.Ts
    if t == 0:
        return 0.0
    return passive_prob(t, p)


def peak_time(p: ChannelParams) -> float:
    """Time at which the channel response attains its maximum.

    Stationary point of ``hit_rate`` (d^2 / 6D) for the absorbing receiver and
    of ``passive_prob`` ((d+r)^2 / 6D) for the passive one.
    """
    if p.kind == ABSORBING:
        return p.d ** 2 / (6.0 * p.D)
    return (p.d + p.r) ** 2 / (6.0 * p.D)
