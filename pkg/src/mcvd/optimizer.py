"""Detection-window and reusable-duration optimization.

The detection window maximizes the saturating amplitude metric over a grid
of candidate windows; once the molecule budget reaches the smallest cutoff
among all windows the search freezes at that budget, so the window (and its
lower edge, the convergence limit of t1*) stops depending on Q.

The reusable-duration cutoff is computed four ways, from most expensive to
cheapest: exhaustive BER search (ideal), grid maximization of the reuse
metric (numerical), bisection of the interference-minus-desired rate (root),
and the closed-form quadratic approximation of that root (closed form).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import channel, detection, metric
from .channel import ABSORBING, PASSIVE, ChannelParams
from .errors import ApproximationBreakdown, NumericalError
from .stats import DetectionWindow, LinkConfig, ReusableWindow, TapStats, reuse_adjusted_stats, window_stats

WINDOW_STEPS = 2000       # time-grid resolution of the window search: step Ts/2000
SEARCH_POINTS = 400       # default reusable-duration grid
IDEAL_THRESHOLD_POINTS = 32768  # threshold resolution inside the ideal search
ROOT_EPS = 1e-6           # lower bracket for the rate-crossing bisection, s
ROOT_TOL = 1e-9           # bisection tolerance, s


@dataclass(frozen=True)
class OptimizationResult:
    """Reusable-duration answers plus the closed-form intermediates.

    ``bar_edge`` is the high-budget limit of the detection window's lower
    edge (a time for the absorbing receiver, a sample index for the passive
    one).  ``candidates`` maps any of ideal/numerical/root/closed_form to the
    value each method produced.
    """

    kind: str
    bar_edge: float
    pre_estimate: float | None = None
    alpha: float | None = None
    beta: float | None = None
    ln_correction: float | None = None
    candidates: dict = field(default_factory=dict)
    clamp_applied: bool = False


def _link_key(cfg: LinkConfig) -> tuple:
    return (cfg.Ts, cfg.L, cfg.N, cfg.t_s)


def _tap_survivals(cfg: LinkConfig, p: ChannelParams, t: np.ndarray) -> list[np.ndarray]:
    """G_k(t) = fraction absorbed in [t + k Ts, inf); F_k(a, b) = G_k(a) - G_k(b)."""
    return [np.asarray(channel.hit_fraction(t + k * cfg.Ts, np.inf, p))
            for k in range(cfg.L + 1)]


def _tap_prefix_sums(cfg: LinkConfig, p: ChannelParams) -> np.ndarray:
    """S[k, n] = sum of occupancy probabilities of samples 0..n-1 for tap k."""
    n = np.arange(cfg.N + 1, dtype=float)
    rows = []
    for k in range(cfg.L + 1):
        t = n * cfg.t_s + k * cfg.Ts
        pos = t > 0
        vals = np.zeros_like(t)
        if pos.any():
            vals[pos] = channel.passive_prob(t[pos], p)
        rows.append(vals)
    P = np.array(rows)
    return np.concatenate([np.zeros((cfg.L + 1, 1)), np.cumsum(P, axis=1)], axis=1)


def _window_value_tables(cfg, p, steps):
    """A (desired half-amplitude), B (interference half-amplitudes), C (noise
    amplitudes) and validity mask over all candidate windows."""
    if p.kind == ABSORBING:
        t = np.linspace(0.0, cfg.Ts, steps + 1)
        G = _tap_survivals(cfg, p, t)
        lo, hi = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
        valid = t[:, None] < t[None, :]
        A = 0.5 * (G[0][:, None] - G[0][None, :])
        B = np.zeros_like(A)
        C = np.zeros_like(A)
        for k in range(cfg.L + 1):
            Fk = G[k][:, None] - G[k][None, :]
            C += np.sqrt(np.clip(Fk * (1.0 - Fk), 0.0, None) / 2.0)
            if k >= 1:
                B += 0.5 * Fk
        edges = (t[lo], t[hi])
    else:
        S = _tap_prefix_sums(cfg, p)
        n1, n2 = np.meshgrid(np.arange(cfg.N + 1), np.arange(cfg.N + 1), indexing="ij")
        valid = n1 <= n2
        sums = S[:, n2 + 1] - S[:, n1]  # (L+1, N+1, N+1); lower index n1, upper n2
        A = 0.5 * sums[0]
        B = 0.5 * sums[1:].sum(axis=0) if cfg.L else np.zeros_like(A)
        C = np.sqrt(np.clip(sums, 0.0, None) / 2.0).sum(axis=0)
        edges = (n1, n2)
    return A, B, C, valid, edges


def _pick(value: np.ndarray, valid: np.ndarray, edges) -> tuple:
    """Grid argmax with deterministic tie-breaking: widest window, smallest edge."""
    # degenerate windows whose absorbed mass underflows entirely yield 0/0
    masked = np.where(valid & ~np.isnan(value), value, -np.inf)
    best = masked.max()
    if not np.isfinite(best):
        raise NumericalError("window search produced no finite objective value")
    lo, hi = edges
    ties = masked == best
    width = np.where(ties, hi - lo, -np.inf)
    widest = width == width.max()
    lo_candidates = np.where(widest, lo, np.inf)
    i, j = np.unravel_index(np.argmin(lo_candidates), lo_candidates.shape)
    return lo[i, j], hi[i, j]


def _window_search(cfg: LinkConfig, p: ChannelParams, Q: float, steps: int):
    A, B, C, valid, edges = _window_value_tables(cfg, p, steps)
    with np.errstate(divide="ignore", invalid="ignore"):
        qhat = np.where(valid & (A > B), (C / (A - B)) ** 2, np.inf)
    qhat_star = float(qhat.min())
    q_eff = min(Q, qhat_star)
    with np.errstate(divide="ignore", invalid="ignore"):
        if math.isinf(q_eff):
            value = A / B  # no finite cutoff anywhere: high-budget limit
        else:
            value = A / (B + C / math.sqrt(q_eff))
    lo, hi = _pick(value, valid, edges)
    return lo, hi, qhat_star


def optimal_window(cfg: LinkConfig, p: ChannelParams, Q: float,
                   steps: int = WINDOW_STEPS) -> DetectionWindow:
    """Detection window maximizing the saturating metric on a (t1, t2) grid.

    Budgets at or above the grid-wide cutoff evaluate at the cutoff, making
    the result budget-invariant there; pass ``Q = math.inf`` for that frozen
    limit directly.  Ties break toward the widest window, then the smallest
    lower edge.
    """
    if not Q > 0:
        raise ValueError("Q must be > 0")
    lo, hi, _ = _window_search(cfg, p, Q, steps)
    if p.kind == ABSORBING:
        return DetectionWindow(t1=float(lo), t2=float(hi))
    return DetectionWindow(n1=int(lo), n2=int(hi))


@lru_cache(maxsize=128)
def _frozen_window_cached(link_key: tuple, p: ChannelParams, steps: int) -> tuple:
    cfg = LinkConfig(Q=1, Ts=link_key[0], L=link_key[1], N=link_key[2], t_s=link_key[3])
    return _window_search(cfg, p, math.inf, steps)


def frozen_window(cfg: LinkConfig, p: ChannelParams, steps: int = WINDOW_STEPS) -> DetectionWindow:
    """High-budget limit of the optimal detection window."""
    lo, hi, _ = _frozen_window_cached(_link_key(cfg), p, steps)
    if p.kind == ABSORBING:
        return DetectionWindow(t1=float(lo), t2=float(hi))
    return DetectionWindow(n1=int(lo), n2=int(hi))


def bar_t1(cfg: LinkConfig, p: ChannelParams, steps: int = WINDOW_STEPS) -> float:
    """Convergence limit of the continuous window's lower edge."""
    if p.kind != ABSORBING:
        raise ValueError("bar_t1 applies to the absorbing receiver")
    return frozen_window(cfg, p, steps).t1


def bar_n1(cfg: LinkConfig, p: ChannelParams, steps: int = WINDOW_STEPS) -> int:
    """Convergence limit of the sampled window's first sample."""
    if p.kind != PASSIVE:
        raise ValueError("bar_n1 applies to the passive receiver")
    return frozen_window(cfg, p, steps).n1


def root_residual(t, cfg: LinkConfig, p: ChannelParams):
    """Interference-minus-desired rate: positive while the reusable prefix helps."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("root_residual requires t > 0")
    return metric.isi_excess_rate(t, cfg, p)


def _root_tu(cfg: LinkConfig, p: ChannelParams) -> tuple[float, bool]:
    lo, hi = ROOT_EPS, channel.peak_time(p)
    f_lo = root_residual(lo, cfg, p)
    f_hi = root_residual(hi, cfg, p)
    if f_lo <= 0:
        return lo, False  # interference never dominates: degenerate prefix
    if f_hi >= 0:
        return bar_t1(cfg, p), True  # no sign change below the peak: cap
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if root_residual(mid, cfg, p) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


def root_tu(cfg: LinkConfig, p: ChannelParams) -> float:
    """Bisection root of the rate crossing, capped at ``bar_t1`` when absent."""
    return _root_tu(cfg, p)[0]


def root_nu(cfg: LinkConfig, p: ChannelParams) -> int:
    """Last sample of the contiguous prefix where interference outweighs signal.

    Scans upward from sample 0 and stops at the first sample where the summed
    interference drops below the desired probability; the crossing is taken
    as the last sample before that failure.
    """
    if p.kind != PASSIVE:
        raise ValueError("root_nu applies to the passive receiver")
    last = 0
    for n in range(cfg.N + 1):
        isi = sum(channel.sample_prob(n, k, cfg, p) for k in range(1, cfg.L + 1))
        if isi >= channel.sample_prob(n, 0, cfg, p):
            last = n
        else:
            return n - 1
    return last


def _quadratic_pieces(Ts: float, m2: float, ln_corr: float):
    alpha = (51.0 * Ts - 51.0 * Ts * ln_corr - 15.0 * m2 * Ts) / (14.0 * m2 * Ts ** 2)
    beta = (60.0 * Ts - 14.0 * Ts * ln_corr - 37.0 * m2) / (14.0 * m2 * Ts)
    return alpha, beta


def _pre_estimate(Ts: float, m2: float) -> float:
    a0 = 60.0 * Ts - 37.0 * m2
    b0 = 51.0 * Ts - 15.0 * m2 * Ts
    return (-a0 + math.sqrt(a0 * a0 + 56.0 * b0 * m2 * Ts)) / b0


def _solve_quadratic(alpha: float, beta: float, intermediates: dict) -> float:
    disc = beta * beta + 4.0 * alpha
    intermediates["discriminant"] = disc
    if disc < 0:
        raise ApproximationBreakdown("negative discriminant in the reusable-duration "
                                     "approximation", intermediates)
    if alpha == 0:
        raise ApproximationBreakdown("degenerate (zero) quadratic coefficient", intermediates)
    value = (-beta + math.sqrt(disc)) / (2.0 * alpha)
    if not value > 0 or not math.isfinite(value):
        raise ApproximationBreakdown(f"non-positive approximate root {value!r}", intermediates)
    return value


def closed_form_tu(cfg: LinkConfig, p: ChannelParams) -> OptimizationResult:
    """Closed-form reusable cutoff for the absorbing receiver.

    Seeds the interference correction with a geometry-only estimate, folds the
    summed tap ratios into a log term, solves the resulting quadratic and
    clamps at the window-edge limit.  Numeric pathologies raise
    ``ApproximationBreakdown`` with the intermediates attached.
    """
    if p.kind != ABSORBING:
        raise ValueError("closed_form_tu applies to the absorbing receiver")
    if cfg.L < 1:
        raise ValueError("closed-form cutoff needs at least one interference tap")
    Ts = cfg.Ts
    m2 = p.d ** 2 / (4.0 * p.D)  # (d / sqrt(4 D))^2, in s
    t_hat = _pre_estimate(Ts, m2)
    ratios = sum(channel.hit_rate(k * Ts + t_hat, p) for k in range(1, cfg.L + 1))
    corr = ratios / channel.hit_rate(Ts + t_hat, p)
    inter = {"pre_estimate": t_hat, "correction_sum": float(corr)}
    if not corr > 0:
        raise ApproximationBreakdown("degenerate tap-ratio sum", inter)
    ln_corr = math.log(corr)
    alpha, beta = _quadratic_pieces(Ts, m2, ln_corr)
    inter.update(alpha=alpha, beta=beta, ln_correction=ln_corr)
    value = _solve_quadratic(alpha, beta, inter)
    bar = bar_t1(cfg, p)
    clamped = value > bar
    return OptimizationResult(kind=ABSORBING, bar_edge=bar, pre_estimate=t_hat,
                              alpha=alpha, beta=beta, ln_correction=ln_corr,
                              candidates={"closed_form": min(value, bar)},
                              clamp_applied=clamped)


def closed_form_nu(cfg: LinkConfig, p: ChannelParams) -> OptimizationResult:
    """Closed-form reusable sample cutoff for the passive receiver.

    Same quadratic as the continuous case with the passive geometry constant;
    the result is floored to a sample index (undershooting keeps the
    interference-dominance inequality satisfied) and clamped one sample below
    the window-edge limit.
    """
    if p.kind != PASSIVE:
        raise ValueError("closed_form_nu applies to the passive receiver")
    if cfg.L < 1:
        raise ValueError("closed-form cutoff needs at least one interference tap")
    Ts = cfg.Ts
    m2 = (p.d + p.r) ** 2 / (4.0 * p.D)
    n_hat = int(math.floor(_pre_estimate(Ts, m2) / cfg.t_s))
    n_hat = min(n_hat, cfg.N)
    denom = channel.sample_prob(n_hat, 1, cfg, p)
    inter = {"pre_estimate": n_hat}
    if denom == 0:
        raise ApproximationBreakdown("first-tap probability vanished at the seed sample",
                                     inter)
    corr = sum(channel.sample_prob(n_hat, k, cfg, p) for k in range(1, cfg.L + 1)) / denom
    ln_corr = math.log(corr)
    alpha, beta = _quadratic_pieces(Ts, m2, ln_corr)
    inter.update(alpha=alpha, beta=beta, ln_correction=ln_corr, correction_sum=corr)
    value = _solve_quadratic(alpha, beta, inter)
    bar = bar_n1(cfg, p)
    n_value = int(math.floor(value / cfg.t_s))
    clamped = n_value > bar - 1
    return OptimizationResult(kind=PASSIVE, bar_edge=bar, pre_estimate=n_hat,
                              alpha=alpha, beta=beta, ln_correction=ln_corr,
                              candidates={"closed_form": min(n_value, bar - 1)},
                              clamp_applied=clamped)


def _tu_grid(w: DetectionWindow, points: int) -> np.ndarray:
    return np.linspace(0.0, w.t1, points, endpoint=False)


def numerical_tu(w: DetectionWindow, cfg: LinkConfig, p: ChannelParams, Q: float,
                 points: int = SEARCH_POINTS) -> float:
    """Grid maximizer of the reuse metric over t_u in [0, t1); ties -> smallest."""
    grid = _tu_grid(w, points)
    q_hat = metric.q_cutoff(window_stats(w, cfg, p))
    values = np.array([metric.msinar_objective_tu(tu, w, cfg, p, Q, q_hat=q_hat)
                       for tu in grid])
    return float(grid[int(np.argmax(values))])


def numerical_nu(w: DetectionWindow, cfg: LinkConfig, p: ChannelParams, Q: float) -> int:
    """Exhaustive maximizer of the sampled reuse metric over n_u in [0, n1)."""
    if w.n1 < 1:
        raise NumericalError("detection window has no reusable prefix (n1 = 0)")
    q_hat = metric.q_cutoff(window_stats(w, cfg, p))
    values = [metric.msinar_objective_nu(nu, w, cfg, p, Q, q_hat=q_hat)
              for nu in range(w.n1)]
    return int(np.argmax(values))


def _ideal_search(w: DetectionWindow, cfg: LinkConfig, p: ChannelParams, Q: float,
                  candidates, threshold_points: int):
    best = (math.inf, None)
    for cand in candidates:
        reuse = ReusableWindow(t_u=float(cand)) if not w.sampled else ReusableWindow(n_u=int(cand))
        adj = reuse_adjusted_stats(w, reuse, cfg, p)
        grid = detection.threshold_grid(adj, Q, threshold_points)
        log_pe = float(detection.analytic_log_ber(adj, Q, grid).min())
        if log_pe < best[0]:
            best = (log_pe, cand)
    return best[1]


def ideal_tu(w: DetectionWindow, cfg: LinkConfig, p: ChannelParams, Q: float,
             points: int = SEARCH_POINTS,
             threshold_points: int = IDEAL_THRESHOLD_POINTS) -> float:
    """Benchmark cutoff: exhaustive BER minimization with per-candidate
    exhaustive thresholds, on the same grid the metric search uses."""
    return float(_ideal_search(w, cfg, p, Q, _tu_grid(w, points), threshold_points))


def ideal_nu(w: DetectionWindow, cfg: LinkConfig, p: ChannelParams, Q: float,
             threshold_points: int = IDEAL_THRESHOLD_POINTS) -> int:
    if w.n1 < 1:
        raise NumericalError("detection window has no reusable prefix (n1 = 0)")
    return int(_ideal_search(w, cfg, p, Q, range(w.n1), threshold_points))


def optimize(cfg: LinkConfig, p: ChannelParams, Q: float,
             points: int = SEARCH_POINTS,
             threshold_points: int = IDEAL_THRESHOLD_POINTS,
             include_ideal: bool = True) -> OptimizationResult:
    """All reusable-duration candidates for one operating point."""
    w = optimal_window(cfg, p, Q)
    if p.kind == ABSORBING:
        result = closed_form_tu(cfg, p)
        root, root_clamped = _root_tu(cfg, p)
        cands = dict(result.candidates, root=root,
                     numerical=numerical_tu(w, cfg, p, Q, points))
        if include_ideal:
            cands["ideal"] = ideal_tu(w, cfg, p, Q, points, threshold_points)
    else:
        result = closed_form_nu(cfg, p)
        cands = dict(result.candidates, root=root_nu(cfg, p),
                     numerical=numerical_nu(w, cfg, p, Q))
        if include_ideal:
            cands["ideal"] = ideal_nu(w, cfg, p, Q, threshold_points)
        root_clamped = False
    return OptimizationResult(kind=result.kind, bar_edge=result.bar_edge,
                              pre_estimate=result.pre_estimate, alpha=result.alpha,
                              beta=result.beta, ln_correction=result.ln_correction,
                              candidates=cands,
                              clamp_applied=result.clamp_applied or root_clamped)
