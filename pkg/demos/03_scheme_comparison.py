"""BER-vs-budget comparison of the detection schemes, both receivers.

Replays the headline experiment: conventional full-symbol counting, the
optimized detection window alone, and the window plus a reusable prefix
chosen numerically or in closed form.  Analytic curves come from the Gaussian
mixture; markers are Monte Carlo estimates.

Run:  python demos/03_scheme_comparison.py          (about a minute)
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from mcvd import harness

here = os.path.dirname(__file__)
out_dir = os.path.join(here, "output")
os.makedirs(out_dir, exist_ok=True)

STYLE = {"conventional_ook": ("tab:gray", "s"),
         "optimal_window": ("tab:blue", "o"),
         "proposed_numerical": ("tab:orange", "^"),
         "proposed_theoretical": ("tab:purple", "v"),
         "ideal": ("tab:green", "x")}

fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
for ax, receiver, L, qs in ((axes[0], "absorbing", 3, [300, 1000, 3000]),
                            (axes[1], "passive", 3, [3000, 10000, 30000])):
    cfg = harness.build_config(dict(receiver=receiver, L=L, Q=qs, trials=200_000,
                                    seed=42,
                                    schemes=["conventional_ook", "optimal_window",
                                             "proposed_numerical",
                                             "proposed_theoretical"]))
    rows, failures = harness.run_sweep(cfg, jobs=4)
    assert not failures, failures
    csv_path = os.path.join(out_dir, f"sweep_{receiver}.csv")
    harness.write_csv(rows, csv_path)
    print(f"{receiver}: {len(rows)} rows -> {csv_path}")
    for scheme in cfg.schemes:
        sub = [r for r in rows if r.scheme == scheme]
        color, marker = STYLE[scheme]
        ax.semilogy([r.Q for r in sub], [max(r.pe_analytic, 1e-12) for r in sub],
                    color=color, label=scheme)
        ax.semilogy([r.Q for r in sub], [max(r.pe_mc, 1e-12) for r in sub],
                    color=color, marker=marker, ls="none", ms=5)
    ax.set_title(f"{receiver} receiver, L = {L}")
    ax.set_xlabel("molecules per bit Q")
    ax.set_ylabel("bit error probability")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
fig.tight_layout()
path = os.path.join(out_dir, "scheme_comparison.png")
fig.savefig(path, dpi=150)
print(f"figure -> {path}")
