"""Figure rendering for the preview stage.

Contact sheets show source crop, registered UV map and final UV map side
by side per cloned character; a summary figure plots cluster sizes and
qualification label counts.  All figures are rendered off-screen and saved
as PNG next to the delimited (JSON-lines / CSV) outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PANEL_TITLES = ("source crop", "registered UV", "final UV")


def save_contact_sheet(panels: list[np.ndarray | None], path: str | Path,
                       title: str = "") -> None:
    """Three-panel sheet: source crop | registered UV | final UV."""
    fig, axes = plt.subplots(1, 3, figsize=(9, 3.2))
    for ax, panel, name in zip(axes, panels, PANEL_TITLES):
        ax.set_title(name, fontsize=9)
        ax.axis("off")
        if panel is not None:
            ax.imshow(panel)
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def save_cluster_summary(cluster_sizes: list[int], label_counts: dict[str, int],
                         path: str | Path) -> None:
    """Cluster-size histogram next to a qualification label bar chart."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    if cluster_sizes:
        bins = np.arange(1, max(cluster_sizes) + 2) - 0.5
        ax1.hist(cluster_sizes, bins=bins, color="steelblue", edgecolor="black")
    ax1.set_title("cluster sizes", fontsize=9)
    ax1.set_xlabel("images per cluster")
    ax1.set_ylabel("clusters")
    if label_counts:
        names = sorted(label_counts)
        ax2.bar(names, [label_counts[n] for n in names], color="darkorange")
        ax2.tick_params(axis="x", labelrotation=30, labelsize=8)
    ax2.set_title("qualification labels", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
