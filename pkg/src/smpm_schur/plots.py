"""Figure rendering for study reports.

Renders the iteration-count and convergence panels of a study to an
image file next to the delimited output. All figures are drawn with the
Agg backend so the CLI works headless.
"""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

__all__ = ["render_study_figure", "render_residual_figure"]

_MODE_STYLE = {
    "plain": dict(color="tab:red", marker="o"),
    "jacobi": dict(color="tab:orange", marker="s"),
    "deflated": dict(color="tab:green", marker="^"),
    "jacobi-deflated": dict(color="tab:blue", marker="d"),
}


def _mode_rows(rows, mode):
    return [r for r in rows if r["mode"] == mode and r["k"] >= 0]


def _modes_present(rows):
    seen = []
    for r in rows:
        if r["mode"] not in seen:
            seen.append(r["mode"])
    return seen


def _finite(err):
    return err is not None and math.isfinite(err)


def _iterations_panel(ax, rows, xkey, xlabel):
    for mode in _modes_present(rows):
        sub = _mode_rows(rows, mode)
        if not sub:
            continue
        xs = [r[xkey] for r in sub]
        ys = [r["iterations"] for r in sub]
        ax.plot(xs, ys, label=mode, **_MODE_STYLE.get(mode, {}))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("GMRES iterations")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)


def _error_panel(ax, rows, xkey, xlabel, logx):
    for mode in _modes_present(rows):
        sub = [r for r in _mode_rows(rows, mode) if _finite(r["analytic_error"])]
        if not sub:
            continue
        xs = [r[xkey] for r in sub]
        ys = [r["analytic_error"] for r in sub]
        plot = ax.loglog if logx else ax.semilogy
        plot(xs, ys, label=mode, **_MODE_STYLE.get(mode, {}))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error vs analytic solution")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)


def render_study_figure(rows, kind, path):
    """Render the panels appropriate for the study kind; returns path."""
    rows = [dict(r) for r in rows]
    if kind in ("h", "single"):
        fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0))
        _iterations_panel(axes[0], rows, "mx", "elements per side")
        _error_panel(axes[1], rows, "mx", "elements per side", logx=True)
    elif kind == "p":
        for r in rows:
            r["p"] = r["n"] - 1
        fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0))
        _iterations_panel(axes[0], rows, "p", "polynomial order")
        _error_panel(axes[1], rows, "p", "polynomial order", logx=False)
    elif kind == "spectral":
        fixed_n = min(r["n"] for r in rows)
        h_rows = [r for r in rows if r["n"] == fixed_n]
        fixed_m = min(r["mx"] for r in rows)
        p_rows = [r for r in rows if r["mx"] == fixed_m]
        for r in p_rows:
            r["p"] = r["n"] - 1
        fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.0))
        _error_panel(axes[0], h_rows, "mx", f"elements per side (n={fixed_n})", logx=True)
        _error_panel(axes[1], p_rows, "p", f"polynomial order ({fixed_m}x{fixed_m} elements)", logx=False)
    else:
        raise ValueError(f"unknown study kind {kind!r}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_residual_figure(histories, path):
    """Semilog residual histories, one curve per labelled solve."""
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for label, residuals in histories.items():
        ax.semilogy(
            range(1, len(residuals) + 1),
            residuals,
            label=label,
            **_MODE_STYLE.get(label, {}),
        )
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
