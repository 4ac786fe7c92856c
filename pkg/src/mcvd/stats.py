"""Per-tap Gaussian statistics of the received molecule count.

A symbol's count decomposes over interference taps i = 0..L (i = 0 is the
desired signal, i >= 1 the i-th past symbol).  Each tap contributes, per
released molecule, a mean coefficient and a variance coefficient; the
receiver count for a bit pattern is Gaussian with mean Q * sum(b_i * mean_i)
and variance Q * sum(b_i * var_i).

``reuse_adjusted_stats`` models the receiver that subtracts the count
collected during a reusable prefix [0, t_u] of the symbol from the count of
the detection window: tap means subtract, tap variances add.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .channel import ABSORBING, PASSIVE, ChannelParams
from .errors import ConfigError


@dataclass(frozen=True)
class LinkConfig:
    """Transmission parameters.

    Q : molecules released per '1' bit
    Ts : symbol duration, s
    L : ISI length (number of interfering past symbols)
    N : samples per symbol (passive receiver)
    t_s : sampling interval, s; defaults to Ts / N
    """

    Q: int
    Ts: float
    L: int
    N: int = 1
    t_s: float | None = None

    def __post_init__(self) -> None:
        problems = []
        if not (isinstance(self.Q, (int, np.integer)) and self.Q >= 0):
            problems.append(f"Q must be a nonnegative integer, got {self.Q!r}")
        if not self.Ts > 0:
            problems.append(f"Ts must be > 0, got {self.Ts!r}")
        if not (isinstance(self.L, (int, np.integer)) and self.L >= 0):
            problems.append(f"L must be a nonnegative integer, got {self.L!r}")
        if not self.N >= 1:
            problems.append(f"N must be >= 1, got {self.N!r}")
        if self.t_s is None:
            object.__setattr__(self, "t_s", self.Ts / self.N)
        if not problems and not (0 < self.t_s <= self.Ts):
            problems.append(f"t_s must be in (0, Ts], got {self.t_s!r}")
        if problems:
            raise ConfigError("invalid link configuration", problems)


def validate_link(cfg: LinkConfig, p: ChannelParams, *, allow_slow_channel: bool = False) -> None:
    """Reject configurations whose symbol duration does not clear the response peak.

    The duration-reuse analysis requires Ts > peak_time so that the desired
    response is increasing while every interference tap is decreasing over
    the head of the symbol.
    """
    tpk = channel.peak_time(p)
    if cfg.Ts <= tpk:
        msg = f"Ts={cfg.Ts} must exceed the channel peak time {tpk:.6g}"
        if not allow_slow_channel:
            raise ConfigError(msg + " (set allow_slow_channel to override)", [msg])
        import warnings

        warnings.warn(msg, stacklevel=2)


@dataclass(frozen=True)
class DetectionWindow:
    """Counting window of a symbol: continuous [t1, t2] or sampled [n1, n2]."""

    t1: float | None = None
    t2: float | None = None
    n1: int | None = None
    n2: int | None = None

    def __post_init__(self) -> None:
        timed = self.t1 is not None or self.t2 is not None
        sampled = self.n1 is not None or self.n2 is not None
        if timed == sampled:
            raise ValueError("specify exactly one of (t1, t2) or (n1, n2)")
        if timed:
            if self.t1 is None or self.t2 is None or not 0 <= self.t1 < self.t2:
                raise ValueError(f"need 0 <= t1 < t2, got ({self.t1!r}, {self.t2!r})")
        else:
            if self.n1 is None or self.n2 is None or not 0 <= self.n1 <= self.n2:
                raise ValueError(f"need 0 <= n1 <= n2, got ({self.n1!r}, {self.n2!r})")

    @property
    def sampled(self) -> bool:
        return self.n1 is not None

    def check_bounds(self, cfg: LinkConfig) -> None:
        if self.sampled:
            if self.n2 > cfg.N:
                raise ValueError(f"n2={self.n2} exceeds N={cfg.N}")
        elif self.t2 > cfg.Ts:
            raise ValueError(f"t2={self.t2} exceeds Ts={cfg.Ts}")


@dataclass(frozen=True)
class ReusableWindow:
    """Reusable prefix of the symbol: [0, t_u] continuous or samples 0..n_u.

    The prefix must end strictly below the paired detection window's lower
    edge.  ``t_u = 0`` is the zero-length (empty) prefix; ``n_u = 0`` still
    contains sample 0.
    """

    t_u: float | None = None
    n_u: int | None = None

    def __post_init__(self) -> None:
        timed = self.t_u is not None
        sampled = self.n_u is not None
        if timed == sampled:
            raise ValueError("specify exactly one of t_u or n_u")
        if timed and self.t_u < 0:
            raise ValueError(f"t_u must be >= 0, got {self.t_u!r}")
        if sampled and self.n_u < 0:
            raise ValueError(f"n_u must be >= 0, got {self.n_u!r}")

    @property
    def sampled(self) -> bool:
        return self.n_u is not None

    def check_pairing(self, w: DetectionWindow) -> None:
        if self.sampled != w.sampled:
            raise ValueError("reusable and detection windows must use the same form")
        if self.sampled:
            if self.n_u >= w.n1:
                raise ValueError(f"n_u={self.n_u} must be < n1={w.n1}")
        elif self.t_u >= w.t1:
            raise ValueError(f"t_u={self.t_u} must be < t1={w.t1}")


@dataclass(frozen=True)
class TapStats:
    """Per-molecule (mean, variance) coefficients for taps 0..L.

    ``adjusted`` marks reuse-subtracted statistics, whose means may be
    negative; variance coefficients are nonnegative always.
    """

    mean: np.ndarray
    var: np.ndarray
    kind: str
    adjusted: bool = False

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        var = np.atleast_1d(np.asarray(self.var, dtype=float))
        if mean.shape != var.shape or mean.ndim != 1:
            raise ValueError("mean and var must be 1-D arrays of equal length")
        if np.any(var < 0):
            raise ValueError("variance coefficients must be nonnegative")
        if not self.adjusted and np.any(mean < 0):
            raise ValueError("plain-window mean coefficients must be nonnegative")
        mean.flags.writeable = False
        var.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def taps(self) -> int:
        return len(self.mean) - 1

    def __eq__(self, other) -> bool:  # array fields defeat dataclass eq
        return (isinstance(other, TapStats)
                and self.kind == other.kind
                and self.adjusted == other.adjusted
                and np.array_equal(self.mean, other.mean)
                and np.array_equal(self.var, other.var))


def _sample_sums(lo: int, hi: int, cfg: LinkConfig, p: ChannelParams) -> np.ndarray:
    """sum_{n=lo..hi} p_{n,i} for each tap i, with the p(0) = 0 convention."""
    n = np.arange(lo, hi + 1, dtype=float)
    out = np.empty(cfg.L + 1)
    for i in range(cfg.L + 1):
        t = n * cfg.t_s + i * cfg.Ts
        pos = t > 0
        vals = np.zeros_like(t)
        if pos.any():
            vals[pos] = channel.passive_prob(t[pos], p)
        out[i] = vals.sum()
    return out


def window_stats(w: DetectionWindow, cfg: LinkConfig, p: ChannelParams) -> TapStats:
    """Per-tap statistics of the plain detection-window count.

    Absorbing taps are binomial per molecule: variance F (1 - F).  Passive
    taps sum the per-sample occupancy probabilities, and the variance
    coefficient equals the mean coefficient.
    """
    w.check_bounds(cfg)
    if p.kind == ABSORBING:
        if w.sampled:
            raise ValueError("absorbing receiver uses a continuous window")
        mean = np.array([channel.tap_fraction(i, w, cfg.Ts, p) for i in range(cfg.L + 1)])
        return TapStats(mean, mean * (1.0 - mean), ABSORBING)
    if not w.sampled:
        raise ValueError("passive receiver uses a sampled window")
    mean = _sample_sums(w.n1, w.n2, cfg, p)
    return TapStats(mean, mean.copy(), PASSIVE)


def reuse_adjusted_stats(w: DetectionWindow, r: ReusableWindow, cfg: LinkConfig,
                         p: ChannelParams) -> TapStats:
    """Statistics of (window count) - (reusable-prefix count).

    Means subtract and variances add, tap by tap.  Subtraction may overshoot,
    so adjusted means can be negative.
    """
    r.check_pairing(w)
    base = window_stats(w, cfg, p)
    if p.kind == ABSORBING:
        prefix = DetectionWindow(t1=0.0, t2=r.t_u) if r.t_u > 0 else None
        if prefix is None:
            sub_mean = np.zeros(cfg.L + 1)
            sub_var = np.zeros(cfg.L + 1)
        else:
            sub = window_stats(prefix, cfg, p)
            sub_mean, sub_var = sub.mean, sub.var
    else:
        sub_mean = _sample_sums(0, r.n_u, cfg, p)
        sub_var = sub_mean
    return TapStats(base.mean - sub_mean, base.var + sub_var, p.kind, adjusted=True)
