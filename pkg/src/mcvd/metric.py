"""Amplitude-domain BER surrogate (mSINAR) and reusable-duration objectives.

The metric compares the desired tap's amplitude against the interference
amplitudes plus the per-tap noise amplitudes, and saturates at 1 once the
molecule budget reaches a cutoff ``q_cutoff``; beyond the cutoff the budget
is frozen at the cutoff value so the metric (and everything optimized
against it) stops depending on Q.

The interference-only simplification drops the noise amplitudes and reduces,
for the continuous receiver, to an integral of the ISI-minus-desired rate
over the reusable prefix.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from . import channel
from .channel import ChannelParams
from .stats import DetectionWindow, LinkConfig, ReusableWindow, TapStats, reuse_adjusted_stats, window_stats


def amplitude_ratio(ts: TapStats, q: float) -> float:
    """Raw metric value for a molecule budget ``q`` (no cutoff applied).

    mean[0] / (sum of interference means + sqrt(2/q) * sum of per-tap noise
    amplitudes).  Strictly increasing in q; equals 1 exactly at the cutoff.
    """
    if not q > 0:
        raise ValueError("molecule budget must be > 0")
    noise = math.sqrt(2.0 / q) * np.sqrt(ts.var).sum()
    return float(ts.mean[0] / (ts.mean[1:].sum() + noise))


def q_cutoff(ts: TapStats) -> float:
    """Molecule count at which the raw metric reaches 1, or inf if it never does.

    Solves A - B = C / sqrt(Q) with A the desired half-amplitude, B the
    summed interference half-amplitudes and C the summed per-tap noise
    amplitudes; unreachable (A <= B) gives inf.
    """
    a = 0.5 * float(ts.mean[0])
    b = 0.5 * float(ts.mean[1:].sum())
    c = float(np.sqrt(ts.var / 2.0).sum())
    if a <= b:
        return math.inf
    return (c / (a - b)) ** 2


def msinar(ts: TapStats, Q: float) -> float:
    """Saturating metric value in (0, 1].

    Budgets at or above the cutoff evaluate with Q frozen at the cutoff,
    giving exactly 1; round-off is clipped back into (0, 1].
    """
    if not Q > 0:
        raise ValueError("Q must be > 0")
    q_hat = q_cutoff(ts)
    value = amplitude_ratio(ts, min(Q, q_hat))
    value = min(value, 1.0)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"metric fell outside (0, 1]: {value!r}")
    return value


def _effective_budget(Q: float, q_hat: float) -> float:
    return min(Q, q_hat) if math.isfinite(q_hat) else Q


def msinar_objective_tu(t_u: float, w: DetectionWindow, cfg: LinkConfig, p: ChannelParams,
                        Q: float, q_hat: float | None = None) -> float:
    """Reuse-adjusted metric ratio as a function of the reusable cutoff ``t_u``.

    The noise term uses the plain-window cutoff budget once Q reaches it,
    making the objective Q-invariant beyond the cutoff.  ``q_hat`` may be
    passed to avoid recomputing it in grid searches.
    """
    if not 0 <= t_u < w.t1:
        raise ValueError(f"t_u must be in [0, {w.t1}), got {t_u!r}")
    if q_hat is None:
        q_hat = q_cutoff(window_stats(w, cfg, p))
    adj = reuse_adjusted_stats(w, ReusableWindow(t_u=t_u), cfg, p)
    return amplitude_ratio(adj, _effective_budget(Q, q_hat))


def msinar_objective_nu(n_u: int, w: DetectionWindow, cfg: LinkConfig, p: ChannelParams,
                        Q: float, q_hat: float | None = None) -> float:
    """Sampled-receiver counterpart of ``msinar_objective_tu`` over samples 0..n_u."""
    if not 0 <= n_u < w.n1:
        raise ValueError(f"n_u must be in [0, {w.n1}), got {n_u!r}")
    if q_hat is None:
        q_hat = q_cutoff(window_stats(w, cfg, p))
    adj = reuse_adjusted_stats(w, ReusableWindow(n_u=n_u), cfg, p)
    return amplitude_ratio(adj, _effective_budget(Q, q_hat))


def isi_excess_rate(t, cfg: LinkConfig, p: ChannelParams):
    """Total interference rate minus desired rate at time t into the symbol:
    sum_{k=1..L} h(t + k Ts) - h(t).  Positive while interference dominates.
    """
    t = np.asarray(t, dtype=float)
    isi = np.zeros_like(t)
    for k in range(1, cfg.L + 1):
        isi = isi + channel.hit_rate(t + k * cfg.Ts, p)
    out = isi - channel.hit_rate(t, p)
    return out if out.ndim else float(out)


def msid_objective_tu(t_u: float, cfg: LinkConfig, p: ChannelParams) -> float:
    """Interference-minus-desired mass collected over the reusable prefix.

    Adaptive quadrature of ``isi_excess_rate`` over [0, t_u] at 1e-10
    relative tolerance; increasing exactly while the integrand is positive,
    so its maximizer is the integrand's sign change.
    """
    if t_u < 0:
        raise ValueError("t_u must be >= 0")
    if t_u == 0:
        return 0.0
    val, _ = integrate.quad(lambda t: isi_excess_rate(t, cfg, p), 0.0, t_u,
                            epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def msid_form_tu(t_u: float, w: DetectionWindow, cfg: LinkConfig, p: ChannelParams,
                 Q: float, q_hat: float | None = None) -> float:
    """Mid-step interference-dominance form of the reuse objective.

    Signed sum of (prefix - window) tap fractions, desired tap negated, minus
    the window-only noise amplitudes at the effective budget; the prefix
    noise is neglected.  Shares its argmax with ``msinar_objective_tu`` up to
    the approximation error.
    """
    if not 0 <= t_u < w.t1:
        raise ValueError(f"t_u must be in [0, {w.t1}), got {t_u!r}")
    if q_hat is None:
        q_hat = q_cutoff(window_stats(w, cfg, p))
    base = window_stats(w, cfg, p)
    prefix = np.array([channel.hit_fraction(k * cfg.Ts, t_u + k * cfg.Ts, p)
                       for k in range(cfg.L + 1)])
    signs = np.where(np.arange(cfg.L + 1) == 0, -1.0, 1.0)
    q_eff = _effective_budget(Q, q_hat)
    noise = math.sqrt(2.0 / q_eff) * np.sqrt(base.var).sum()
    return float((signs * (prefix - base.mean)).sum() - noise)


def msid_objective_nu(n_u: int, cfg: LinkConfig, p: ChannelParams) -> float:
    """Sampled interference-minus-desired mass over samples 0..n_u."""
    if n_u < 0:
        raise ValueError("n_u must be >= 0")
    total = 0.0
    for n in range(n_u + 1):
        for k in range(1, cfg.L + 1):
            total += channel.sample_prob(n, k, cfg, p)
        total -= channel.sample_prob(n, 0, cfg, p)
    return total


def noise_neglect_ratio(t_u: float, w: DetectionWindow, cfg: LinkConfig, p: ChannelParams) -> float:
    """Ratio of neglected prefix noise variance to window noise variance.

    The interference-only simplification assumes this is small; callers
    attach a diagnostic warning when it exceeds 0.1.
    """
    base = window_stats(w, cfg, p)
    if t_u <= 0:
        return 0.0
    prefix = window_stats(DetectionWindow(t1=0.0, t2=t_u), cfg, p) if not w.sampled else None
    if prefix is None:
        raise ValueError("noise_neglect_ratio applies to the continuous receiver")
    denom = float(base.var.sum())
    return float(prefix.var.sum() / denom) if denom > 0 else math.inf
