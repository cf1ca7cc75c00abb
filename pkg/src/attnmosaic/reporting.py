"""Line-delimited run records and the figures rendered next to them.

Records are one self-contained JSON object per line with stable key
order, so a rerun with the same inputs is byte-identical. Figures are
rendered with the Agg backend into the same output directory as the
records; matplotlib is imported lazily to keep figure-free CLI runs
fast.
"""

from __future__ import annotations

import json
from pathlib import Path


def record_line(record: dict) -> str:
    """One record as a compact single JSON line (insertion-ordered keys)."""
    return json.dumps(record, separators=(",", ":"))


def write_records(records, stream) -> None:
    for record in records:
        stream.write(record_line(record) + "\n")


def save_records(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as stream:
        write_records(records, stream)
    return path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_attn_figure(records: list[dict], plan, path) -> Path:
    """Keep/drop block map of the last trial plus per-trial sparse-dense gap."""
    plt = _pyplot()
    fig, (ax_mask, ax_diff) = plt.subplots(1, 2, figsize=(10, 4))

    keep = plan.kept_rows[:, None] & plan.kept_cols[None, :]
    ax_mask.imshow(keep, cmap="Greys_r", interpolation="nearest",
                   aspect="auto", vmin=0, vmax=1)
    ax_mask.set_title(
        f"kept blocks (rows {plan.kept_row_fraction:.0%}, "
        f"cols {plan.kept_col_fraction:.0%})"
    )
    ax_mask.set_xlabel("key block")
    ax_mask.set_ylabel("query block")

    diffs = [r["max_abs_diff_vs_dense"] for r in records]
    ax_diff.plot(range(len(diffs)), diffs, marker="o")
    if any(d > 0 for d in diffs):
        ax_diff.set_yscale("log")
    ax_diff.set_title("max |sparse - dense| per trial")
    ax_diff.set_xlabel("trial")
    ax_diff.grid(True, alpha=0.3)

    return _save(fig, path)


def render_kv_figure(records: list[dict], path) -> Path:
    """Per-step decode error against the full-precision oracle."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    steps = [r["step"] for r in records]
    ax.plot(steps, [r["max_abs_err"] for r in records], marker=".", label="max abs err")
    ax.plot(steps, [r["mean_abs_err"] for r in records], marker=".", label="mean abs err")
    if any(r["max_abs_err"] > 0 for r in records):
        ax.set_yscale("log")
    last = records[-1]
    ratio = last["theoretical_cache_bits"] / last["baseline_cache_bits"]
    ax.set_title(f"decode error vs oracle (final cache ratio {ratio:.3f})")
    ax.set_xlabel("decode step")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def render_fit_figure(points, params, path) -> Path:
    """Input samples with the fitted curve overlaid."""
    import numpy as np

    from .curvefit import curve_value

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    xs, ys = points[:, 0], points[:, 1]
    ax.scatter(xs, ys, s=12, label="points")
    line_x = np.linspace(xs.min(), xs.max(), 400)
    ax.plot(line_x, curve_value(params, line_x), color="C1", label="fit")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path
