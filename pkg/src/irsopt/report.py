"""Figure rendering for optimizer traces and sweep results.

Plots are written next to the delimited output they visualize; PNG metadata
is stripped so reruns with the same seed stay byte-identical.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def render_trace(trace_csv: str, png_path: str):
    """Objective average and movement norm against the iteration index."""
    ts, c0, move = [], [], []
    with open(trace_csv) as fh:
        for row in csv.DictReader(fh):
            ts.append(int(row["t"]))
            c0.append(float(row["c0"]))
            move.append(float(row["movement"]))
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax0.plot(ts, c0, lw=1.0)
    ax0.set_ylabel("surrogate objective average")
    ax0.grid(alpha=0.3)
    ax1.semilogy(ts, [max(m, 1e-300) for m in move], lw=1.0, color="tab:orange")
    ax1.set_ylabel("movement norm")
    ax1.set_xlabel("iteration")
    ax1.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path, **_SAVE_KW)
    plt.close(fig)


_AXIS_LABELS = {
    "irs_size": "IRS rows (= cols)",
    "rician": "serving-link Rician factor",
    "err_std": "CSI error std",
    "dist_user": "BS-user distance (m)",
    "dist_irs": "IRS x position (m)",
}


def render_sweep(csv_path: str, png_path: str, scenario: str, axis: str):
    """One line per design column of a sweep CSV, error bars from the se
    columns when present."""
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return
    xs = [float(r["axis_value"]) for r in rows]
    designs = [name for name in rows[0] if name not in ("axis_value",)
               and not name.endswith("_se")]
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in designs:
        ys, errs = [], []
        for r in rows:
            ys.append(float(r[name]) if r[name] != "" else float("nan"))
            se_col = r.get(name + "_se", "")
            errs.append(float(se_col) if se_col not in ("", None) else 0.0)
        ax.errorbar(xs, ys, yerr=[3 * e for e in errs], marker="o", ms=3,
                    capsize=2, lw=1.0, label=name)
    ax.set_xlabel(_AXIS_LABELS.get(axis, axis))
    ylabel = "ergodic rate (bit/s/Hz)" if scenario == "ergodic" \
        else "average goodput (bit/s/Hz)"
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, **_SAVE_KW)
    plt.close(fig)
