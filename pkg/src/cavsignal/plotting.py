"""Single-series line plots written as SVG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp, so identical data gives identical files
_RC = {
    "svg.hashsalt": "cavsignal",
    "svg.fonttype": "none",
    "font.size": 10.0,
    "axes.grid": True,
    "figure.figsize": (6.0, 4.0),
}


def plot_series(path, axis, values, *, xlabel: str, ylabel: str, title: str = "",
                loglog: bool = False, lightcone: float | None = None) -> None:
    """Plot ``values`` against ``axis`` and save to ``path``.

    ``lightcone`` draws a dashed vertical marker at that abscissa.
    """
    axis = np.asarray(axis, dtype=float)
    values = np.asarray(values, dtype=float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if loglog:
            keep = (axis > 0) & (values > 0)
            ax.loglog(axis[keep], values[keep], lw=1.2)
        else:
            ax.plot(axis, values, lw=1.2)
        if lightcone is not None:
            ax.axvline(lightcone, ls="--", color="0.4", lw=1.0)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
