"""Report figures rendered to image files next to the delimited output."""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _group_label(report) -> str:
    return f"n={report.n_customers}\n{report.problem_type}\n{report.depot_config}"


def render_report_figures(reports, out_dir, stem: str = "report") -> "list[Path]":
    """Write solver-comparison figures for a set of report rows.

    Produces a grouped total-cost bar chart and a 2x2 panel of the remaining
    metrics; returns the written paths.
    """
    reports = [r for r in reports if not math.isnan(r.total_cost)]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not reports:
        return []
    solvers = sorted({r.solver_name for r in reports})
    groups = sorted({(r.n_customers, r.problem_type, r.depot_config) for r in reports})
    by_key = {(r.solver_name, r.n_customers, r.problem_type, r.depot_config): r
              for r in reports}
    paths = []

    fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(groups)), 4.5))
    width = 0.8 / len(solvers)
    for s, solver in enumerate(solvers):
        xs, ys = [], []
        for g, group in enumerate(groups):
            row = by_key.get((solver,) + group)
            if row is not None:
                xs.append(g + (s - (len(solvers) - 1) / 2.0) * width)
                ys.append(row.total_cost)
        ax.bar(xs, ys, width=width, label=solver)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels([f"n={g[0]}\n{g[1]}\n{g[2]}" for g in groups], fontsize=8)
    ax.set_ylabel("Mean realized total cost (min)")
    ax.set_title("Total cost by solver and instance group")
    ax.legend()
    fig.tight_layout()
    cost_path = out_dir / f"{stem}_total_cost.png"
    fig.savefig(cost_path, dpi=120)
    plt.close(fig)
    paths.append(cost_path)

    metrics = (("cvr_percent", "CVR (%)"), ("feasibility", "Feasibility rate"),
               ("runtime_seconds", "Runtime (s)"), ("robustness", "Robustness (var)"))
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    for ax, (attr, label) in zip(axes.flat, metrics):
        for s, solver in enumerate(solvers):
            values = [getattr(r, attr) for r in reports
                      if r.solver_name == solver and not math.isnan(getattr(r, attr))]
            if values:
                ax.bar([s], [sum(values) / len(values)], width=0.6)
        ax.set_xticks(range(len(solvers)))
        ax.set_xticklabels(solvers, fontsize=8)
        ax.set_ylabel(label)
    fig.suptitle("Metric means by solver")
    fig.tight_layout()
    metrics_path = out_dir / f"{stem}_metrics.png"
    fig.savefig(metrics_path, dpi=120)
    plt.close(fig)
    paths.append(metrics_path)
    return paths
