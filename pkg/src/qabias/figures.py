"""Deterministic vector-figure rendering for audit reports.

SVG output is pinned (fixed hash salt, no embedded timestamps) so equal
inputs produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import TwoSlopeNorm  # noqa: E402

from qabias.bias import ShiftMatrix  # noqa: E402
from qabias.qtypes import QUESTION_TYPES  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "qabias"
matplotlib.rcParams["svg.fonttype"] = "none"  # keep labels as text elements

_SVG_KWARGS = {"format": "svg", "metadata": {"Date": None}}


def render_heatmap(matrix: ShiftMatrix, out_path: Union[str, Path]) -> Path:
    """Annotator accuracy-shift heatmap.

    Diverging scale centered at shift 0: lighter = more negative shift,
    darker = more positive. Each cell is annotated with the shift on top
    and the raw accuracy underneath.
    """
    if matrix.k == 0:
        raise ValueError("empty shift matrix")
    shifts = [[s if s is not None else 0.0 for s in row] for row in matrix.shift]
    span = max(1.0, max(abs(s) for row in shifts for s in row))
    norm = TwoSlopeNorm(vcenter=0.0, vmin=-span, vmax=span)

    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * matrix.k, 1.0 + 0.9 * matrix.k))
    ax.imshow(shifts, cmap="YlGnBu", norm=norm)
    ax.set_xticks(range(matrix.k), labels=matrix.annotators, rotation=45, ha="right")
    ax.set_yticks(range(matrix.k), labels=matrix.annotators)
    ax.set_xlabel("evaluated on")
    ax.set_ylabel("trained on")
    for i in range(matrix.k):
        for j in range(matrix.k):
            shift = matrix.shift[i][j]
            acc = matrix.acc[i][j]
            top = f"{shift:+.1f}" if shift is not None else "n/a"
            bottom = f"{acc:.1f}" if acc is not None else "n/a"
            color = "black" if shifts[i][j] < span / 2 else "white"
            ax.text(j, i - 0.15, top, ha="center", va="center",
                    fontsize=8, color=color)
            ax.text(j, i + 0.2, bottom, ha="center", va="center",
                    fontsize=7, color=color)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, **_SVG_KWARGS)
    plt.close(fig)
    return out_path


def render_type_bars(
    type_accuracies: Mapping[str, tuple[float, int]], out_path: Union[str, Path]
) -> Path:
    """Per-question-type accuracy bars with the 20% chance reference line."""
    if not type_accuracies:
        raise ValueError("empty type-accuracy map")
    order = [t for t in QUESTION_TYPES if t in type_accuracies]
    accs = [type_accuracies[t][0] for t in order]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(order, accs, color="#4878a8")
    ax.axhline(20.0, color="#b04030", linestyle="--", linewidth=1,
               label="random guess (20%)")
    ax.set_ylabel("accuracy (%)")
    ax.set_xlabel("question type")
    ax.set_ylim(0, max(100.0, max(accs) + 5))
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, **_SVG_KWARGS)
    plt.close(fig)
    return out_path
