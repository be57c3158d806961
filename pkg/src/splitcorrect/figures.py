"""Figure rendering for the CLI report paths (PNG files next to the CSVs)."""

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .grid import GridFunction  # noqa: E402


def save_convergence_figure(reports, path, title: str = "") -> None:
    """Log-log error-vs-step-size plot, one line per scheme and norm."""
    fig, axes = plt.subplots(1, 2, figsize=(9.5, 4.0), sharex=True)
    for rep in reports:
        taus = [r.tau for r in rep.rows]
        axes[0].loglog(taus, [r.err_linf for r in rep.rows], "o-", label=rep.scheme)
        axes[1].loglog(taus, [r.err_l2 for r in rep.rows], "o-", label=rep.scheme)
    for ax, name in zip(axes, ("linf error", "l2 error")):
        ax.set_xlabel("step size")
        ax.set_ylabel(name)
        ax.grid(True, which="both", alpha=0.3)
    axes[0].legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_field_figure(g: GridFunction, path, title: str = "") -> None:
    """Heatmap of a grid function over the unit square."""
    c = g.level.coords()
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    # values[i, j] is (x_i, y_j); pcolormesh wants the y-first layout
    mesh = ax.pcolormesh(c, c, g.values.T, shading="auto")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_amplification_figure(ratios, rhos, path, n_ratio: float) -> None:
    """Damping curve of the 5-point averaging sweep at a fixed second ratio."""
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    ax.plot(np.asarray(ratios), np.asarray(rhos), "-")
    ax.set_xlabel("frequency ratio m/(M+1)")
    ax.set_ylabel("amplification factor")
    ax.set_title(f"fixed n/(M+1) = {n_ratio:g}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
