"""Figure rendering for study outputs.

Each CLI report path can drop a PNG next to its delimited output; the data
files stay the primary artifact and plots are best-effort companions.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, out_path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_sweep(rows: list[dict], axis: str, out_path, group_by: str | None = None):
    """Waiting time and age versus one swept axis, with batch-std error bars."""
    fig, (ax_wait, ax_age) = plt.subplots(1, 2, figsize=(9, 3.6))
    groups = sorted({row.get(group_by) for row in rows}) if group_by else [None]
    for group in groups:
        subset = [
            r for r in rows
            if (group_by is None or r.get(group_by) == group)
            and r.get("mean_waiting") is not None
        ]
        if not subset:
            continue
        xs = [r[axis] for r in subset]
        label = f"{group_by}={group}" if group_by else None
        ax_wait.errorbar(
            xs, [r["mean_waiting"] for r in subset],
            yerr=[r["std_waiting"] for r in subset], marker="o", capsize=2,
            label=label,
        )
        ax_age.errorbar(
            xs, [r["mean_age"] for r in subset],
            yerr=[r["std_age"] for r in subset], marker="s", capsize=2,
            label=label,
        )
    ax_wait.set_xlabel(axis)
    ax_wait.set_ylabel("mean waiting time (steps)")
    ax_age.set_xlabel(axis)
    ax_age.set_ylabel("mean end-to-end age (steps)")
    if group_by:
        ax_wait.legend(fontsize=8)
    return _finish(fig, out_path)


def plot_distill_schedule(rows: list[dict], out_path):
    """Fidelity trajectory of a banded or pumping schedule."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot([r["round"] for r in rows], [r["fidelity"] for r in rows], marker="o")
    ax.set_xlabel("round")
    ax.set_ylabel("fidelity")
    ax.set_ylim(0.45, 1.02)
    ax.axhline(1.0, color="grey", lw=0.6, ls=":")
    return _finish(fig, out_path)


def plot_design(rows: list[dict], out_path):
    """Rate and fidelity versus node count for a platform study."""
    feasible = [r for r in rows if r.get("rate_hz") is not None]
    fig, ax_rate = plt.subplots(figsize=(5.5, 3.8))
    ax_fid = ax_rate.twinx()
    ax_rate.plot(
        [r["nodes"] for r in feasible], [r["rate_hz"] for r in feasible],
        marker="o", color="tab:blue", label="rate",
    )
    ax_fid.plot(
        [r["nodes"] for r in feasible], [r["mean_fidelity"] for r in feasible],
        marker="s", color="tab:orange", label="fidelity",
    )
    for row in feasible:
        if row.get("optimal"):
            ax_rate.axvline(row["nodes"], color="grey", lw=0.8, ls="--")
    ax_rate.set_xlabel("number of nodes")
    ax_rate.set_ylabel("rate (Hz)", color="tab:blue")
    ax_fid.set_ylabel("mean end-to-end fidelity", color="tab:orange")
    return _finish(fig, out_path)
