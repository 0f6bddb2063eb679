"""PNG figures for run reports (Agg backend, no display needed)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {"figure.dpi": 110, "font.size": 9, "axes.grid": True, "grid.alpha": 0.3,
         "axes.spines.top": False, "axes.spines.right": False}


def _positive(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y, np.nan)


def plot_series(path, t, columns: dict, title: str = "", logy: bool = True, logx: bool = False) -> None:
    """One line per column against t."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        t = np.asarray(t, dtype=float)
        # log axes only when there is something positive to show
        logy = logy and any(np.any(np.asarray(y) > 0) for y in columns.values())
        logx = logx and bool(np.any(t > 0))
        for name, y in columns.items():
            yy = _positive(y) if logy else np.asarray(y, dtype=float)
            sel = t > 0 if logx else np.ones(t.size, bool)
            ax.plot(t[sel], yy[sel], label=name, lw=1.2)
        if logy:
            ax.set_yscale("log")
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel("t")
        if title:
            ax.set_title(title)
        if columns:
            ax.legend(fontsize=7, frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_slack(path, t, slacks: dict, title: str = "") -> None:
    """Slack series with the zero line marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for name, y in slacks.items():
            tt = np.asarray(t)
            ax.plot(tt[len(tt) - len(y):], y, label=name, lw=1.2)
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel("slack")
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7, frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_loglog_fit(path, t, y, slope: float, intercept: float, target: float, label: str) -> None:
    """Early-time data, the fitted power law and the target exponent through the first point."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        ax.loglog(t, y, "o", ms=3, label=label)
        ax.loglog(t, np.exp(intercept) * t**slope, "-", lw=1, label=f"fit slope {slope:.3f}")
        ax.loglog(t, y[0] * (t / t[0]) ** target, "--", lw=1, label=f"target {target:.3f}")
        ax.set_xlabel("t")
        ax.legend(fontsize=7, frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
