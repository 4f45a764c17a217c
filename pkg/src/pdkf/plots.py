"""Figure rendering for experiment reports.

Renders the learning curves and the per-node steady-state comparison next to
the CSV outputs.  The CSVs remain the machine-readable contract; the figures
are a convenience for eyeballing results.
"""
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render_report(report, outdir):
    """Write curves.png and steady.png into outdir; returns the paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = {}

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for br in report.branches:
        ax.plot(br.curve_db, lw=1.0, label=f"{br.scheme}, L={br.L}")
    ax.set_xlabel("iteration $i$")
    ax.set_ylabel("network MSD (dB)")
    ax.set_title("Network MSD vs iteration")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    curves_path = os.path.join(outdir, "curves.png")
    fig.savefig(curves_path, dpi=150)
    plt.close(fig)
    paths["curves"] = curves_path

    fig, ax = plt.subplots(figsize=(7, 4.5))
    import numpy as np
    for br in report.branches:
        nodes = np.arange(1, br.msd_per_node_emp.shape[0] + 1)
        emp_db = 10 * np.log10(br.msd_per_node_emp)
        line, = ax.plot(nodes, emp_db, "o-", ms=4, lw=1.0,
                        label=f"{br.scheme}, L={br.L} (simulated)")
        if br.msd_per_node_theory is not None:
            theory_db = 10 * np.log10(br.msd_per_node_theory)
            ax.plot(nodes, theory_db, "s", ms=6, mfc="none",
                    color=line.get_color(), label=f"{br.scheme}, L={br.L} (theory)")
    ax.set_xlabel("node $k$")
    ax.set_ylabel("steady-state MSD (dB)")
    ax.set_title("Per-node steady-state MSD: simulation vs theory")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    steady_path = os.path.join(outdir, "steady.png")
    fig.savefig(steady_path, dpi=150)
    plt.close(fig)
    paths["steady"] = steady_path
    return paths
