"""Render the comparison report's trade-off charts to image files.

Two scatter charts accompany the CSV when plotting is requested: LP bound
loss against model-size reduction, and bound loss against LP wall time.
Matplotlib is imported lazily with the Agg backend so the rest of the
package works headless and without the plotting stack loaded.
"""

from __future__ import annotations

from .analysis import MetricsReport

_VARIANT_COLORS = {
    "da": "tab:blue",
    "fa": "tab:red",
    "pa": "tab:green",
    "pai": "tab:orange",
    "pae": "tab:purple",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def _scatter(plt, rows, x_key, y_key, x_label, y_label, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for row in rows:
        x = getattr(row, x_key)
        y = getattr(row, y_key)
        if x is None or y is None:
            continue
        ax.scatter(x, y, color=_VARIANT_COLORS.get(row.variant, "gray"), s=28)
        ax.annotate(row.label(), (x, y), textcoords="offset points", xytext=(4, 3), fontsize=8)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_compare_figures(report: MetricsReport, prefix: str) -> list[str]:
    """Write ``<prefix>_loss_vs_size.png`` and ``<prefix>_loss_vs_time.png``;
    returns the written paths."""
    plt = _pyplot()
    written = [
        _scatter(
            plt, report.rows, "size_red_pct", "bound_loss_pct",
            "size reduction vs disaggregated [%]", "LP bound loss [%]",
            f"{prefix}_loss_vs_size.png",
        ),
        _scatter(
            plt, report.rows, "lp_time_ms", "bound_loss_pct",
            "LP time [ms]", "LP bound loss [%]",
            f"{prefix}_loss_vs_time.png",
        ),
    ]
    return written
