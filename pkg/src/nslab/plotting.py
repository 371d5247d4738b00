"""Matplotlib defaults and figure rendering for the report path.

All figures render through the Agg backend so runs work headless; files are
written next to the delimited report output.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["apply_plot_style", "report_figure", "convergence_figure", "norms_figure"]


def apply_plot_style(width_pt: float = 420.0):
    """House style: serif, golden-ratio aspect, small legible sizes."""
    inches_per_pt = 1.0 / 72.27
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    width = width_pt * inches_per_pt
    plt.rcParams.update(
        {
            "font.family": "serif",
            "font.size": 10,
            "axes.labelsize": 10,
            "axes.titlesize": 10,
            "legend.fontsize": 8,
            "xtick.labelsize": 8,
            "ytick.labelsize": 8,
            "figure.figsize": (width, width * golden),
            "savefig.dpi": 150,
            "savefig.bbox": "tight",
            "axes.grid": True,
            "grid.alpha": 0.3,
        }
    )


def _logscale_sensible(values) -> bool:
    values = np.asarray([v for v in values if v > 0])
    return values.size > 1 and np.max(values) / max(np.min(values), 1e-300) > 50.0


def report_figure(report, path):
    """Render an estimate report: lhs and rhs over time, or bars for a
    single-row report."""
    apply_plot_style()
    fig, ax = plt.subplots()
    rows = report.rows
    if len(rows) == 1:
        row = rows[0]
        ax.bar([0, 1], [row["lhs"], row["rhs"]], color=["#88aadd", "#dd8877"])
        ax.set_xticks([0, 1], ["lhs", "rhs (bound)"])
        ax.set_title(f"{report.name}: margin {row['margin']:.3e}")
    else:
        t = [row["t"] for row in rows]
        lhs = [row["lhs"] for row in rows]
        rhs = [row["rhs"] for row in rows]
        ax.plot(t, lhs, "-", color="#335588", label="lhs")
        ax.plot(t, rhs, "--", color="#aa3322", label="rhs / tolerance")
        if _logscale_sensible(lhs + rhs):
            ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.legend()
        verdict = "pass" if report.passed else "FAIL"
        ax.set_title(f"{report.name} ({verdict}, min margin {report.min_margin:.3e})")
    fig.savefig(path)
    plt.close(fig)
    return path


def convergence_figure(values, errors, fitted_order, path, xlabel="dt"):
    """Log-log refinement plot with the fitted-order reference slope."""
    apply_plot_style()
    fig, ax = plt.subplots()
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ax.loglog(values, errors, "o-", color="#335588", label="measured error")
    if np.all(errors > 0):
        anchor = errors[-1] * (values / values[-1]) ** fitted_order
        ax.loglog(values, anchor, ":", color="#777777",
                  label=f"slope {fitted_order:.2f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)
    return path


def norms_figure(rows, path):
    """Norm-table time series (L2, first-gradient L2, sup norm)."""
    apply_plot_style()
    fig, ax = plt.subplots()
    t = [row["t"] for row in rows]
    for key, color in (("l2", "#335588"), ("grad1_l2", "#aa3322"), ("linf", "#338855")):
        ax.plot(t, [row[key] for row in rows], label=key, color=color)
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)
    return path
