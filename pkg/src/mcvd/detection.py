"""Threshold detection over the ISI-induced Gaussian mixture.

With L interfering symbols, the received count follows one of 2^(L+1)
equiprobable Gaussian components indexed by the bit pattern
(x_k, x_{k-1}, ..., x_{k-L}).  A single threshold decides the current bit;
the exact error probability averages the component tail probabilities.
Log-domain evaluation keeps thresholds comparable far below the smallest
representable probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp
from scipy.stats import binom, poisson

from . import rng
from .channel import ABSORBING, ChannelParams
from .stats import DetectionWindow, LinkConfig, ReusableWindow, TapStats, reuse_adjusted_stats, window_stats

MAX_ISI_LENGTH = 20  # 2^(L+1) mixture components are enumerated explicitly
SIM_CHUNK = 1 << 16  # trials per worker chunk; fixed so results ignore worker count


@dataclass(frozen=True)
class BerPoint:
    """One evaluated operating point."""

    scheme: str
    Q: int
    threshold: float
    analytic_pe: float
    empirical_pe: float | None = None
    trials: int = 0
    ci95: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.analytic_pe <= 1.0:
            raise ValueError(f"analytic_pe out of [0, 1]: {self.analytic_pe!r}")
        if self.empirical_pe is not None:
            if not 0.0 <= self.empirical_pe <= 1.0:
                raise ValueError(f"empirical_pe out of [0, 1]: {self.empirical_pe!r}")
            if self.trials <= 0:
                raise ValueError("trials must be > 0 when empirical_pe is present")
        if self.ci95 < 0:
            raise ValueError("ci95 must be >= 0")


def _patterns(n_taps: int) -> np.ndarray:
    """(2^n_taps, n_taps) 0/1 matrix; column i is the bit of tap i."""
    if n_taps - 1 > MAX_ISI_LENGTH:
        raise ValueError(f"ISI length {n_taps - 1} exceeds enumeration guard {MAX_ISI_LENGTH}")
    idx = np.arange(2 ** n_taps, dtype=np.int64)
    return (idx[:, None] >> np.arange(n_taps)[None, :]) & 1


def mixture_components(ts: TapStats, Q: int):
    """All (pattern, mean, variance) triples of the received-count mixture.

    Patterns are bit vectors (x_k, x_{k-1}, ..., x_{k-L}); each contributes
    mean Q * sum(b_i mean_i) and variance Q * sum(b_i var_i).
    """
    pats = _patterns(ts.taps + 1)
    mu = Q * pats @ ts.mean
    s2 = Q * pats @ ts.var
    return [(tuple(int(b) for b in pats[j]), float(mu[j]), float(s2[j]))
            for j in range(len(pats))]


def _mixture_arrays(ts: TapStats, Q: float):
    pats = _patterns(ts.taps + 1)
    return pats, Q * pats @ ts.mean, Q * pats @ ts.var


def analytic_log_ber(ts: TapStats, Q: float, thresholds) -> np.ndarray:
    """log of the average error probability at each threshold.

    Zero-variance components are deterministic point masses decided by the
    ``count >= threshold`` rule.
    """
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    pats, mu, s2 = _mixture_arrays(ts, Q)
    b0 = pats[:, 0].astype(bool)
    logp = np.full((len(mu), len(thresholds)), -np.inf)
    spread = s2 > 0
    if spread.any():
        z = (thresholds[None, :] - mu[spread, None]) / np.sqrt(s2[spread, None])
        # error: decide 1 (count >= xi) on a 0-bit, or decide 0 on a 1-bit
        logp[spread] = np.where(b0[spread, None], log_ndtr(z), log_ndtr(-z))
    if (~spread).any():
        decide_one = mu[~spread, None] >= thresholds[None, :]
        err = np.where(b0[~spread, None], ~decide_one, decide_one)
        logp[~spread] = np.where(err, 0.0, -np.inf)
    return logsumexp(logp, axis=0) - (ts.taps + 1) * math.log(2.0)


def analytic_ber(ts: TapStats, Q: float, threshold: float) -> float:
    """Average bit error probability of the threshold detector."""
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return float(np.exp(analytic_log_ber(ts, Q, threshold)[0]))


def threshold_grid(ts: TapStats, Q: float, points: int = 2048) -> np.ndarray:
    """Uniform grid covering [min mean - 6 sigma_max, max mean + 6 sigma_max]."""
    if points < 1:
        raise ValueError("grid needs at least one point")
    _, mu, s2 = _mixture_arrays(ts, Q)
    smax = math.sqrt(float(s2.max()))
    lo = float(mu.min()) - 6.0 * smax
    hi = float(mu.max()) + 6.0 * smax
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, points)


def optimal_threshold(ts: TapStats, Q: float, points: int = 2048):
    """Exhaustive-search threshold: (xi*, P_e*) minimizing the analytic BER.

    Ties break toward the smallest threshold.  The search compares log
    probabilities, so it stays discriminating when P_e underflows.
    """
    grid = threshold_grid(ts, Q, points)
    logpe = analytic_log_ber(ts, Q, grid)
    i = int(np.argmin(logpe))
    return float(grid[i]), float(np.exp(logpe[i]))


def _sim_words(mode: str, L: int) -> int:
    if mode == "gaussian":
        return 4  # bit, window normal, reuse normal, padding
    return 1 + 2 * (L + 1)  # bit + per-tap window and reuse draws


def _prefix_stats(w: DetectionWindow, r: ReusableWindow | None, cfg: LinkConfig,
                  p: ChannelParams) -> TapStats | None:
    """Stats of the reusable-prefix count alone, or None for no reuse."""
    if r is None:
        return None
    r.check_pairing(w)
    if not r.sampled:
        if r.t_u == 0:
            return None
        return window_stats(DetectionWindow(t1=0.0, t2=r.t_u), cfg, p)
    lo = DetectionWindow(n1=0, n2=r.n_u)
    return window_stats(lo, cfg, p)


def _chunk_errors(seed: int, start: int, count: int, L: int, Q: int, xi: float,
                  mode: str, stats_w: TapStats, stats_r: TapStats | None) -> int:
    """Errors among decisions [start, start+count); streams indexed by symbol."""
    words = _sim_words(mode, L)
    u = rng.trial_uniforms(seed, start, count + L, words)
    bits = (u[:, 0] >= 0.5).astype(np.int8)  # bit of symbol start+j
    if mode == "gaussian":
        mu_w = np.convolve(bits.astype(float), Q * stats_w.mean)[L:L + count]
        v_w = np.convolve(bits.astype(float), Q * stats_w.var)[L:L + count]
        value = mu_w + np.sqrt(v_w) * rng.normals_from_uniforms(u[L:, 1])
        if stats_r is not None:
            mu_r = np.convolve(bits.astype(float), Q * stats_r.mean)[L:L + count]
            v_r = np.convolve(bits.astype(float), Q * stats_r.var)[L:L + count]
            value = value - (mu_r + np.sqrt(v_r) * rng.normals_from_uniforms(u[L:, 2]))
    else:
        value = np.zeros(count)
        for i in range(L + 1):
            active = bits[L - i:L - i + count].astype(bool)
            value += _tap_draw(u[L:, 1 + i], active, Q, stats_w, i)
            if stats_r is not None:
                value -= _tap_draw(u[L:, 2 + L + i], active, Q, stats_r, i)
    decisions = value >= xi
    return int(np.count_nonzero(decisions != bits[L:].astype(bool)))


def _tap_draw(u: np.ndarray, active: np.ndarray, Q: int, ts: TapStats, tap: int) -> np.ndarray:
    """Particle-level count of one tap: binomial thinning of the Q molecules
    for the absorbing receiver, Poisson occupancy total for the passive one.
    Streams are consumed for inactive bits too, keeping the layout fixed."""
    out = np.zeros(len(u))
    if not active.any():
        return out
    if ts.kind == ABSORBING:
        out[active] = binom.ppf(u[active], Q, float(ts.mean[tap]))
    else:
        out[active] = poisson.ppf(u[active], Q * float(ts.mean[tap]))
    return out


def simulate_ber(cfg: LinkConfig, p: ChannelParams, w: DetectionWindow,
                 r: ReusableWindow | None, xi: float, trials: int, seed: int,
                 mode: str = "gaussian", jobs: int = 1, scheme: str = "") -> BerPoint:
    """Monte Carlo bit error rate of the threshold detector.

    Simulates an i.i.d. equiprobable bit stream with an L-symbol warm-up; each
    decided symbol draws its detection-window count and, when reuse is active,
    its reusable-prefix count, subtracts the two and compares against ``xi``.
    Per-symbol counter-based streams make the estimate bit-identical for a
    fixed seed regardless of ``jobs``.

    ``mode="gaussian"`` samples the Gaussian tap model (matching the analytic
    mixture); ``mode="binomial"`` samples particle-level counts.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in ("gaussian", "binomial"):
        raise ValueError(f"unknown mode {mode!r}")
    w.check_bounds(cfg)
    stats_w = window_stats(w, cfg, p)
    stats_r = _prefix_stats(w, r, cfg, p)
    if stats_r is None:
        adjusted = TapStats(stats_w.mean, stats_w.var, stats_w.kind, adjusted=True)
    else:
        adjusted = TapStats(stats_w.mean - stats_r.mean, stats_w.var + stats_r.var,
                            stats_w.kind, adjusted=True)

    chunks = [(start, min(SIM_CHUNK, trials - start)) for start in range(0, trials, SIM_CHUNK)]
    args = [(seed, start, count, cfg.L, cfg.Q, xi, mode, stats_w, stats_r)
            for start, count in chunks]
    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            errors = sum(pool.map(lambda a: _chunk_errors(*a), args))
    else:
        errors = sum(_chunk_errors(*a) for a in args)

    pe = errors / trials
    ci = 1.96 * math.sqrt(pe * (1.0 - pe) / trials)
    return BerPoint(scheme=scheme, Q=cfg.Q, threshold=xi,
                    analytic_pe=analytic_ber(adjusted, cfg.Q, xi),
                    empirical_pe=pe, trials=trials, ci95=ci)
