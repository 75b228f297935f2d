"""Figure rendering for the CLI report paths.

Figures are written to files next to the delimited output; nothing here is
interactive, so the Agg backend is forced before pyplot loads.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_weight_evolution(stages, labels, path, title="Belief mass by update step"):
    """One line per tracked node across update stages.

    `stages` is a list of {node_text: Fraction} maps, one per step, all over
    the same node set.
    """
    if not stages:
        raise ValueError("no stages to plot")
    nodes = sorted(stages[0])
    xs = range(len(stages))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for node in nodes:
        ys = [float(stage.get(node, 0)) for stage in stages]
        ax.plot(xs, ys, marker="o", linewidth=1.2, label=node if len(nodes) <= 12 else None)
    ax.set_xlabel("update step")
    ax.set_ylabel("weight")
    ax.set_xticks(list(xs), labels)
    ax.set_title(title)
    if len(nodes) <= 12:
        ax.legend(fontsize=7, loc="center left", bbox_to_anchor=(1.01, 0.5))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_batch_outcomes(stats, path, title="Self-play outcomes"):
    """Bar chart of a batch's outcome counts plus challenge accuracy."""
    fig, ax = plt.subplots(figsize=(6, 4))
    names = ["O wins", "E wins", "drawn", "unresolved", "forfeits"]
    values = [stats.o_wins, stats.e_wins, stats.drawn, stats.unresolved, stats.forfeits]
    ax.bar(names, values, color=["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"])
    ax.set_ylabel("games")
    ax.set_title(f"{title} (challenge accuracy {stats.challenge_accuracy:.3f})")
    for i, v in enumerate(values):
        ax.text(i, v, str(v), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
