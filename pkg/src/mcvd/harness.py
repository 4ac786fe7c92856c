"""Experiment orchestration: config files, scheme-comparison sweeps, CIR export.

Schemes
-------
conventional_ook      full-symbol counting window, no reuse
optimal_window        metric-optimal detection window, no reuse
proposed_numerical    optimal window + grid-maximized reusable cutoff
proposed_theoretical  optimal window + closed-form reusable cutoff
ideal                 optimal window + exhaustive-BER reusable cutoff

Every scheme uses the exhaustive-search detection threshold.  Sweeps are
deterministic for a fixed seed: each (scheme, Q) point derives its own
counter-based stream, and rows are emitted in canonical order (schemes as
listed, then ascending Q) regardless of how the work is scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from . import channel, detection, metric, optimizer
from .channel import ABSORBING, PASSIVE, ChannelParams
from .detection import BerPoint
from .errors import ConfigError, McvdError, NumericalError
from .stats import DetectionWindow, LinkConfig, ReusableWindow, reuse_adjusted_stats, validate_link, window_stats

SCHEMES = ("conventional_ook", "optimal_window", "proposed_numerical",
           "proposed_theoretical", "ideal")

CSV_HEADER = "scheme,receiver,Ts_s,L,Q,t1_s,t2_s,tu_s,n1,n2,nu,threshold,pe_analytic,pe_mc,trials,ci95"

MIN_TRIALS = 10_000

# Implementer defaults; the reference geometry keeps the symbol duration well
# past the response peak and, for the passive receiver, respects the
# far-field validity bound r/(r+d) < 0.15.
DEFAULTS = {
    ABSORBING: dict(d_um=3.2, r_um=4.5, D_um2_per_s=79.4, Ts_s=0.2, L=3,
                    Q=[300, 1000, 3000, 10000, 30000, 100000]),
    PASSIVE: dict(d_um=10.0, r_um=1.5, D_um2_per_s=79.4, Ts_s=1.0, L=3,
                  Q=[3000, 10000, 30000, 100000, 300000]),
}
COMMON_DEFAULTS = dict(trials=100_000, seed=20250809, mode="gaussian",
                       schemes=["conventional_ook", "optimal_window",
                                "proposed_numerical", "proposed_theoretical"],
                       delta_t_s=1e-4)
GRID_DEFAULTS = dict(tu_points=400, threshold_points=2048)

_CONFIG_KEYS = {"receiver", "d_um", "r_um", "D_um2_per_s", "Ts_s", "L", "Q",
                "trials", "seed", "mode", "schemes", "grid", "delta_t_s",
                "override_validity", "allow_slow_channel"}


@dataclass(frozen=True)
class GridSpec:
    tu_points: int = 400
    threshold_points: int = 2048


@dataclass(frozen=True)
class ExperimentConfig:
    receiver: str
    d_um: float
    r_um: float
    D_um2_per_s: float
    Ts_s: float
    L: int
    q_values: tuple
    trials: int
    seed: int
    mode: str
    schemes: tuple
    grid: GridSpec
    delta_t_s: float
    override_validity: bool = False
    allow_slow_channel: bool = False

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(d=self.d_um * 1e-6, r=self.r_um * 1e-6,
                             D=self.D_um2_per_s * 1e-12, kind=self.receiver,
                             allow_invalid_geometry=self.override_validity)

    def sampling(self) -> tuple[float, int]:
        """Sampling interval (one sixth of the peak time) and samples per symbol."""
        t_s = channel.peak_time(self.channel) / 6.0
        return t_s, int(math.floor(self.Ts_s / t_s))

    def link(self, Q: int) -> LinkConfig:
        if self.receiver == PASSIVE:
            t_s, N = self.sampling()
            return LinkConfig(Q=int(Q), Ts=self.Ts_s, L=self.L, N=N, t_s=t_s)
        return LinkConfig(Q=int(Q), Ts=self.Ts_s, L=self.L)


def load_config(path, override_validity: bool = False) -> ExperimentConfig:
    """Parse and validate a YAML/JSON experiment description.

    Missing keys fall back to the per-receiver defaults; every violated
    invariant is reported in one ConfigError.
    """
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError:
        raise
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    return build_config(raw, override_validity=override_validity)


def build_config(raw: dict, override_validity: bool = False) -> ExperimentConfig:
    problems = [f"unknown key {k!r}" for k in raw if k not in _CONFIG_KEYS]
    receiver = raw.get("receiver", ABSORBING)
    if receiver not in (ABSORBING, PASSIVE):
        raise ConfigError(f"receiver must be {ABSORBING!r} or {PASSIVE!r}, got {receiver!r}",
                          [f"bad receiver {receiver!r}"])
    merged = {**DEFAULTS[receiver], **COMMON_DEFAULTS,
              "grid": dict(GRID_DEFAULTS), "override_validity": False,
              "allow_slow_channel": False}
    for key, value in raw.items():
        if key == "grid":
            if not isinstance(value, dict):
                problems.append("grid must be a mapping")
                continue
            bad = [k for k in value if k not in GRID_DEFAULTS]
            problems.extend(f"unknown grid key {k!r}" for k in bad)
            merged["grid"].update({k: v for k, v in value.items() if k not in bad})
        elif key != "receiver":
            merged[key] = value
    if override_validity:
        merged["override_validity"] = True

    q_raw = merged["Q"] if isinstance(merged["Q"], (list, tuple)) else [merged["Q"]]
    q_values = []
    for q in q_raw:
        if not (isinstance(q, (int, np.integer)) or (isinstance(q, float) and q.is_integer())):
            problems.append(f"Q entries must be integers, got {q!r}")
        elif q <= 0:
            problems.append(f"Q entries must be positive, got {q!r}")
        else:
            q_values.append(int(q))
    if not q_values:
        problems.append("Q list must be nonempty")
    schemes = merged["schemes"] if isinstance(merged["schemes"], (list, tuple)) else [merged["schemes"]]
    unknown = [s for s in schemes if s not in SCHEMES]
    problems.extend(f"unknown scheme {s!r}" for s in unknown)
    if not schemes:
        problems.append("schemes list must be nonempty")
    if merged["mode"] not in ("gaussian", "binomial"):
        problems.append(f"mode must be gaussian or binomial, got {merged['mode']!r}")
    if not isinstance(merged["trials"], (int, np.integer)) or merged["trials"] < MIN_TRIALS:
        problems.append(f"trials must be an integer >= {MIN_TRIALS} for BER output")
    if not isinstance(merged["seed"], (int, np.integer)) or not 0 <= merged["seed"] < 2 ** 64:
        problems.append(f"seed must be an integer in [0, 2^64), got {merged['seed']!r}")
    grid = merged["grid"]
    for key in GRID_DEFAULTS:
        if not isinstance(grid[key], (int, np.integer)) or grid[key] < 2:
            problems.append(f"grid.{key} must be an integer >= 2")
    if not (isinstance(merged["delta_t_s"], (int, float)) and merged["delta_t_s"] > 0):
        problems.append(f"delta_t_s must be > 0, got {merged['delta_t_s']!r}")

    cfg = None
    if not problems:
        cfg = ExperimentConfig(receiver=receiver, d_um=float(merged["d_um"]),
                               r_um=float(merged["r_um"]),
                               D_um2_per_s=float(merged["D_um2_per_s"]),
                               Ts_s=float(merged["Ts_s"]), L=int(merged["L"]),
                               q_values=tuple(q_values), trials=int(merged["trials"]),
                               seed=int(merged["seed"]), mode=merged["mode"],
                               schemes=tuple(schemes),
                               grid=GridSpec(int(grid["tu_points"]), int(grid["threshold_points"])),
                               delta_t_s=float(merged["delta_t_s"]),
                               override_validity=bool(merged["override_validity"]),
                               allow_slow_channel=bool(merged["allow_slow_channel"]))
        try:
            p = cfg.channel
            validate_link(cfg.link(q_values[0]), p,
                          allow_slow_channel=cfg.allow_slow_channel)
        except ConfigError as exc:
            problems.extend(exc.violations or [str(exc)])
    if problems:
        raise ConfigError("invalid experiment configuration:\n  - " + "\n  - ".join(problems),
                          problems)
    return cfg


def config_dict(cfg: ExperimentConfig) -> dict:
    """Canonical plain-data form of a config; load(save(x)) == x."""
    return {
        "receiver": cfg.receiver,
        "d_um": cfg.d_um,
        "r_um": cfg.r_um,
        "D_um2_per_s": cfg.D_um2_per_s,
        "Ts_s": cfg.Ts_s,
        "L": cfg.L,
        "Q": list(cfg.q_values),
        "trials": cfg.trials,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "schemes": list(cfg.schemes),
        "grid": {"tu_points": cfg.grid.tu_points,
                 "threshold_points": cfg.grid.threshold_points},
        "delta_t_s": cfg.delta_t_s,
        "override_validity": cfg.override_validity,
        "allow_slow_channel": cfg.allow_slow_channel,
    }


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_dict(cfg), fh, sort_keys=False)


@dataclass(frozen=True)
class SweepRow:
    """One (scheme, Q) operating point with the windows and intermediates used."""

    scheme: str
    receiver: str
    Ts_s: float
    L: int
    Q: int
    t1_s: float | None
    t2_s: float | None
    tu_s: float | None
    n1: int | None
    n2: int | None
    nu: int | None
    threshold: float
    pe_analytic: float
    pe_mc: float
    trials: int
    ci95: float
    extras: dict = field(default_factory=dict, compare=False)


def _row_seed(seed: int, scheme_index: int, q_index: int) -> int:
    ss = np.random.SeedSequence((seed, scheme_index, q_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _full_window(cfg: ExperimentConfig, link: LinkConfig) -> DetectionWindow:
    if cfg.receiver == PASSIVE:
        return DetectionWindow(n1=0, n2=link.N)
    return DetectionWindow(t1=0.0, t2=link.Ts)


def _resolve_reuse(cfg: ExperimentConfig, link, p, scheme: str, w: DetectionWindow,
                   extras: dict) -> ReusableWindow | None:
    if scheme in ("conventional_ook", "optimal_window"):
        return None
    if cfg.receiver == ABSORBING:
        if scheme == "proposed_numerical":
            tu = optimizer.numerical_tu(w, link, p, link.Q, cfg.grid.tu_points)
        elif scheme == "ideal":
            tu = optimizer.ideal_tu(w, link, p, link.Q, cfg.grid.tu_points)
        else:
            result = optimizer.closed_form_tu(link, p)
            extras.update(alpha=result.alpha, beta=result.beta,
                          ln_correction=result.ln_correction,
                          pre_estimate=result.pre_estimate,
                          bar_edge=result.bar_edge,
                          clamp_applied=result.clamp_applied)
            tu = result.candidates["closed_form"]
            cap = w.t1 * (1.0 - 1.0 / cfg.grid.tu_points)
            if tu > cap:  # keep the reuse prefix strictly below the window edge
                extras["reuse_clamped_to_window"] = True
                tu = cap
        return ReusableWindow(t_u=float(tu))
    if scheme == "proposed_numerical":
        nu = optimizer.numerical_nu(w, link, p, link.Q)
    elif scheme == "ideal":
        nu = optimizer.ideal_nu(w, link, p, link.Q)
    else:
        result = optimizer.closed_form_nu(link, p)
        extras.update(alpha=result.alpha, beta=result.beta,
                      ln_correction=result.ln_correction,
                      pre_estimate=result.pre_estimate,
                      bar_edge=result.bar_edge,
                      clamp_applied=result.clamp_applied)
        nu = result.candidates["closed_form"]
        if w.n1 < 1:
            raise NumericalError("detection window has no reusable prefix (n1 = 0)")
        if nu > w.n1 - 1:
            extras["reuse_clamped_to_window"] = True
            nu = w.n1 - 1
    return ReusableWindow(n_u=int(nu))


def run_sweep(cfg: ExperimentConfig, jobs: int = 1):
    """Evaluate every configured scheme at every Q.

    Returns (rows, failures); failures collect per-point errors as
    (scheme, Q, message) without aborting the rest of the sweep.
    """
    p = cfg.channel
    rows: list[SweepRow] = []
    failures: list[tuple[str, int, str]] = []
    windows: dict[int, DetectionWindow] = {}
    for si, scheme in enumerate(cfg.schemes):
        for qi, Q in enumerate(cfg.q_values):
            link = cfg.link(Q)
            try:
                if scheme == "conventional_ook":
                    w = _full_window(cfg, link)
                else:
                    if Q not in windows:
                        windows[Q] = optimizer.optimal_window(link, p, Q)
                    w = windows[Q]
                extras: dict = {}
                reuse = _resolve_reuse(cfg, link, p, scheme, w, extras)
                stats = (reuse_adjusted_stats(w, reuse, link, p) if reuse is not None
                         else window_stats(w, link, p))
                extras["q_cutoff"] = metric.q_cutoff(window_stats(w, link, p))
                xi, pe = detection.optimal_threshold(stats, Q, cfg.grid.threshold_points)
                point = detection.simulate_ber(link, p, w, reuse, xi, cfg.trials,
                                               _row_seed(cfg.seed, si, qi), cfg.mode,
                                               jobs=jobs, scheme=scheme)
                t_s = link.t_s
                rows.append(SweepRow(
                    scheme=scheme, receiver=cfg.receiver, Ts_s=cfg.Ts_s, L=cfg.L, Q=Q,
                    t1_s=w.t1 if not w.sampled else w.n1 * t_s,
                    t2_s=w.t2 if not w.sampled else w.n2 * t_s,
                    tu_s=(None if reuse is None
                          else (reuse.t_u if not w.sampled else reuse.n_u * t_s)),
                    n1=w.n1 if w.sampled else None,
                    n2=w.n2 if w.sampled else None,
                    nu=(reuse.n_u if (reuse is not None and w.sampled) else None),
                    threshold=xi, pe_analytic=pe, pe_mc=point.empirical_pe,
                    trials=cfg.trials, ci95=point.ci95, extras=extras))
            except (McvdError, ValueError) as exc:
                failures.append((scheme, Q, str(exc)))
    return rows, failures


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.17g}"


def write_csv(rows, path) -> None:
    """Sweep rows in the fixed column layout, floats at 17 significant digits."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fields = [r.scheme, r.receiver, _fmt(r.Ts_s), _fmt(r.L), _fmt(r.Q),
                      _fmt(r.t1_s), _fmt(r.t2_s), _fmt(r.tu_s), _fmt(r.n1),
                      _fmt(r.n2), _fmt(r.nu), _fmt(r.threshold),
                      _fmt(r.pe_analytic), _fmt(r.pe_mc), _fmt(r.trials),
                      _fmt(r.ci95)]
            fh.write(",".join(fields) + "\n")


def read_csv(path) -> list[SweepRow]:
    """Inverse of write_csv (extras are not persisted)."""
    rows = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            (scheme, receiver, Ts_s, L, Q, t1, t2, tu, n1, n2, nu,
             thr, pea, pem, trials, ci) = parts
            rows.append(SweepRow(
                scheme=scheme, receiver=receiver, Ts_s=float(Ts_s), L=int(L),
                Q=int(Q), t1_s=float(t1) if t1 else None,
                t2_s=float(t2) if t2 else None, tu_s=float(tu) if tu else None,
                n1=int(n1) if n1 else None, n2=int(n2) if n2 else None,
                nu=int(nu) if nu else None, threshold=float(thr),
                pe_analytic=float(pea), pe_mc=float(pem), trials=int(trials),
                ci95=float(ci)))
    return rows


def emit_plotdata(rows, path) -> None:
    """One (Q, analytic, empirical, ci95) series per scheme, as JSON."""
    if not rows:
        raise ValueError("no rows to emit")
    series: dict = {}
    for r in rows:
        entry = series.setdefault(r.scheme, {"Q": [], "pe_analytic": [],
                                             "pe_mc": [], "ci95": []})
        entry["Q"].append(r.Q)
        entry["pe_analytic"].append(r.pe_analytic)
        entry["pe_mc"].append(r.pe_mc)
        entry["ci95"].append(r.ci95)
    meta = {r.scheme: r.extras for r in rows if r.extras}
    doc = {"receiver": rows[0].receiver, "Ts_s": rows[0].Ts_s, "L": rows[0].L,
           "trials": rows[0].trials, "series": series, "intermediates": meta}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=float)
        fh.write("\n")


def export_cir(cfg: ExperimentConfig, path) -> np.ndarray:
    """Desired and per-tap interference responses on a uniform time grid.

    Columns: t, desired, isi_k1..isi_kL, isi_total.  Marker comment lines
    carry the window-edge limit, the rate-crossing reusable cutoff and the
    frozen optimal window.
    """
    p = cfg.channel
    link = cfg.link(cfg.q_values[0])
    dt = cfg.delta_t_s
    n = int(round(cfg.Ts_s / dt))
    t = np.arange(1, n + 1) * dt
    response = channel.hit_rate if cfg.receiver == ABSORBING else channel.passive_prob
    desired = response(t, p)
    taps = [response(t + k * cfg.Ts_s, p) for k in range(1, cfg.L + 1)]
    total = np.sum(taps, axis=0) if taps else np.zeros_like(t)
    table = np.column_stack([t, desired, *taps, total])

    w = optimizer.frozen_window(link, p)
    if cfg.receiver == ABSORBING:
        markers = {"bar_t1_s": optimizer.bar_t1(link, p),
                   "tu_root_s": optimizer.root_tu(link, p),
                   "window_t1_s": w.t1, "window_t2_s": w.t2}
    else:
        t_s = link.t_s
        markers = {"bar_n1": optimizer.bar_n1(link, p),
                   "nu_root": optimizer.root_nu(link, p),
                   "window_n1": w.n1, "window_n2": w.n2,
                   "t_s": t_s}
    header = ["t_s", "desired"] + [f"isi_k{k}" for k in range(1, cfg.L + 1)] + ["isi_total"]
    with open(path, "w", newline="") as fh:
        for name, value in markers.items():
            fh.write(f"# {name}={_fmt(value)}\n")
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return table
