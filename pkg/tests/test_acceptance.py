"""Acceptance gate: one test per release criterion, run at the tolerances
fixed below on the reference configurations (absorbing d=3.2um r=4.5um,
passive d=10um r=1.5um, D=79.4um^2/s, Ts=0.2s / 1.0s).

Each test prints a single CRITERION line so the suite doubles as a checklist:
    pytest tests/test_acceptance.py -v -s
"""

import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate

from mcvd import detection, harness, metric, optimizer
from mcvd.channel import ChannelParams, PASSIVE, hit_fraction, hit_rate, peak_time, sample_prob
from mcvd.stats import DetectionWindow, LinkConfig, ReusableWindow, TapStats, reuse_adjusted_stats, window_stats

ABS = ChannelParams(d=3.2e-6, r=4.5e-6, D=79.4e-12)
PAS = ChannelParams(d=10e-6, r=1.5e-6, D=79.4e-12, kind=PASSIVE)
ABS_SWEEP = (300, 1000, 3000, 10_000, 30_000, 100_000)
PAS_SWEEP = (3000, 10_000, 30_000, 100_000, 300_000)


def report(num, name, ok, detail=""):
    print(f"\nCRITERION {num} [{name}]: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {num} failed: {detail}"


def absorbing_link(Q, L, Ts=0.2):
    return LinkConfig(Q=Q, Ts=Ts, L=L)


def passive_link(Q, L, Ts=1.0):
    t_s = peak_time(PAS) / 6.0
    return LinkConfig(Q=Q, Ts=Ts, L=L, N=int(Ts // t_s), t_s=t_s)


def test_criterion_1_channel_math():
    """Closed-form interval fractions vs quadrature; peak time vs argmax."""
    rng = np.random.default_rng(20250809)
    tmax = peak_time(ABS)
    worst = 0.0
    for _ in range(1000):
        t1, t2 = np.sort(rng.uniform(1e-4, 10 * tmax, size=2))
        ref, _ = integrate.quad(lambda t: hit_rate(t, ABS), t1, t2, limit=200)
        worst = max(worst, abs(hit_fraction(t1, t2, ABS) - ref))
    from scipy.optimize import minimize_scalar

    t_num = minimize_scalar(lambda t: -hit_rate(t, ABS),
                            bounds=(1e-8, 10 * ABS.d ** 2 / ABS.D),
                            method="bounded", options={"xatol": 1e-12}).x
    rel = abs(peak_time(ABS) - t_num) / t_num
    ok = worst < 1e-9 and rel < 1e-6
    report(1, "channel math", ok,
           f"max |fraction - quadrature| = {worst:.2e}, peak rel err = {rel:.2e}")


def test_criterion_2_model_consistency():
    """Analytic mixture vs gaussian-mode Monte Carlo (3 SE), and gaussian vs
    particle-level sampling for Q >= 500 (4 combined SE)."""
    trials = 10 ** 6
    details = []
    ok = True
    for L in (0, 1, 3):
        for Q in (100, 1000, 10_000):
            cfg = absorbing_link(Q, L)
            w = optimizer.optimal_window(cfg, ABS, Q)
            reuse = None
            if L >= 1:
                reuse = ReusableWindow(t_u=optimizer.numerical_tu(w, cfg, ABS, Q))
                stats = reuse_adjusted_stats(w, reuse, cfg, ABS)
            else:
                stats = window_stats(w, cfg, ABS)
            xi, pe = detection.optimal_threshold(stats, Q)
            point = detection.simulate_ber(cfg, ABS, w, reuse, xi, trials,
                                           seed=100 + 7 * L + Q, mode="gaussian")
            se = max(math.sqrt(pe * (1 - pe) / trials), 1.0 / trials)
            gap = abs(point.empirical_pe - pe)
            if gap > 3 * se:
                ok = False
                details.append(f"gaussian L={L} Q={Q}: |{point.empirical_pe:.3e}-{pe:.3e}| > 3se")
            if Q >= 500:
                b = detection.simulate_ber(cfg, ABS, w, reuse, xi, trials,
                                           seed=200 + 7 * L + Q, mode="binomial")
                comb = max(math.sqrt(2 * pe * (1 - pe) / trials), 2.0 / trials)
                if abs(point.empirical_pe - b.empirical_pe) > 4 * comb:
                    ok = False
                    details.append(f"modes L={L} Q={Q}")
    report(2, "model consistency", ok,
           "; ".join(details) or "9 gaussian points within 3 SE, 6 mode pairs within 4 SE")


def test_criterion_3_optimizer_chain():
    """Absorbing, Ts = 0.2 s, L = 1: root bracketing, closed form within 20%
    of the root, metric search within 2 grid steps of the BER search."""
    cfg = absorbing_link(1000, 1)
    root = optimizer.root_tu(cfg, ABS)
    bracket = (optimizer.root_residual(root - 1e-6, cfg, ABS) > 0
               > optimizer.root_residual(root + 1e-6, cfg, ABS))
    closed = optimizer.closed_form_tu(cfg, ABS).candidates["closed_form"]
    rel = abs(closed - root) / root
    steps = []
    for Q in ABS_SWEEP:
        cfg_q = absorbing_link(Q, 1)
        w = optimizer.optimal_window(cfg_q, ABS, Q)
        step = w.t1 / 400
        tu_n = optimizer.numerical_tu(w, cfg_q, ABS, Q)
        tu_i = optimizer.ideal_tu(w, cfg_q, ABS, Q)
        steps.append(round((tu_n - tu_i) / step))
    ok = bracket and rel <= 0.2 and all(abs(s) <= 2 for s in steps)
    report(3, "optimizer chain", ok,
           f"bracket={bracket}, |closed-root|/root={rel:.3f}, "
           f"numerical-vs-ideal steps={steps}")


def _dominance_table(params, sweep, link_maker):
    table = {}
    for L in (1, 3, 10):
        for Q in sweep:
            cfg = link_maker(Q, L)
            w = optimizer.optimal_window(cfg, params, Q)
            plain = window_stats(w, cfg, params)
            _, pe_plain = detection.optimal_threshold(plain, Q)
            if params.kind == PASSIVE:
                reuse = ReusableWindow(n_u=optimizer.numerical_nu(w, cfg, params, Q))
            else:
                reuse = ReusableWindow(t_u=optimizer.numerical_tu(w, cfg, params, Q))
            adj = reuse_adjusted_stats(w, reuse, cfg, params)
            _, pe_prop = detection.optimal_threshold(adj, Q)
            table[(L, Q)] = (pe_plain, pe_prop)
    return table


def test_criterion_4_central_claim():
    """Reuse never hurts the analytic error rate; strictly helps at the
    largest interference length; the improvement grows with L."""
    problems = []
    for params, sweep, maker, tag in ((ABS, ABS_SWEEP, absorbing_link, "absorbing"),
                                      (PAS, PAS_SWEEP, passive_link, "passive")):
        table = _dominance_table(params, sweep, maker)
        for (L, Q), (pe_plain, pe_prop) in table.items():
            if pe_prop > pe_plain:
                problems.append(f"{tag} L={L} Q={Q}: {pe_prop:.3e} > {pe_plain:.3e}")
        if not any(table[(10, Q)][1] < table[(10, Q)][0] for Q in sweep):
            problems.append(f"{tag}: no strict improvement at L=10")
        for Q in sweep:
            gaps = [table[(L, Q)][0] - table[(L, Q)][1] for L in (1, 3, 10)]
            if not (gaps[0] <= gaps[1] + 1e-300 and gaps[1] <= gaps[2] + 1e-300):
                problems.append(f"{tag} Q={Q}: gaps {gaps} not nondecreasing")
    report(4, "central claim", not problems, "; ".join(problems) or
           "reuse dominates at every (L, Q) on both receivers, gap monotone in L")


def test_criterion_5_passive_discrete_solver():
    """Closed-form sample cutoff within one sample of the scan root; the
    interference-dominance inequality flips exactly past the root."""
    details = []
    ok = True
    for L in (3, 10):
        cfg = passive_link(10_000, L)
        nu = optimizer.root_nu(cfg, PAS)
        closed = optimizer.closed_form_nu(cfg, PAS).candidates["closed_form"]
        isi = lambda n: sum(sample_prob(n, k, cfg, PAS) for k in range(1, L + 1))
        holds = isi(nu) >= sample_prob(nu, 0, cfg, PAS)
        fails = isi(nu + 1) < sample_prob(nu + 1, 0, cfg, PAS)
        if abs(closed - nu) > 1 or not holds or not fails:
            ok = False
        details.append(f"L={L}: root={nu} closed={closed} boundary={holds and fails}")
    report(5, "passive discrete solver", ok, "; ".join(details))


def test_criterion_6_metric_contract():
    """Metric stays in (0, 1], hits 1 exactly at a finite cutoff, and grows
    with the budget below it."""
    rng = np.random.default_rng(17)
    ok = True
    detail = ""
    for trial in range(1000):
        taps = rng.integers(1, 7)
        mean = np.empty(taps + 1)
        mean[0] = rng.uniform(1e-4, 0.49)
        mean[1:] = rng.uniform(1e-6, 0.49, taps)
        ts = TapStats(mean, mean * (1 - mean), "absorbing")
        q_hat = metric.q_cutoff(ts)
        qs = [1.0, 10.0, 1e4, 1e8]
        vals = [metric.msinar(ts, q) for q in qs]
        if not all(0 < v <= 1 for v in vals):
            ok, detail = False, f"range violated at trial {trial}"
            break
        if math.isfinite(q_hat):
            if abs(metric.msinar(ts, q_hat) - 1.0) > 1e-9:
                ok, detail = False, f"cutoff fixed point violated at trial {trial}"
                break
            below = np.linspace(q_hat / 20, q_hat * 0.95, 7)
            raw = [metric.amplitude_ratio(ts, q) for q in below]
            if not np.all(np.diff(raw) > 0):
                ok, detail = False, f"monotonicity violated at trial {trial}"
                break
    report(6, "metric contract", ok, detail or "1000 randomized tap sets")


def test_criterion_7_cli_determinism(tmp_path):
    """Identical config and seed give byte-identical CSVs at different
    parallelism degrees."""
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("receiver: absorbing\nL: 3\nQ: [300, 1000]\ntrials: 20000\n"
                   "seed: 99\nschemes: [conventional_ook, optimal_window, "
                   "proposed_numerical, proposed_theoretical]\n")
    outputs = []
    for jobs, name in ((1, "a"), (6, "b")):
        out = subprocess.run([sys.executable, "-m", "mcvd.cli", "run",
                              "--config", str(cfg), "--out", str(tmp_path / name),
                              "--jobs", str(jobs)],
                             capture_output=True, text=True)
        assert out.returncode == 0, out.stderr
        outputs.append((tmp_path / name / "sweep.csv").read_bytes())
    ok = outputs[0] == outputs[1]
    report(7, "determinism", ok,
           f"{len(outputs[0])} CSV bytes identical across --jobs 1 and --jobs 6")
