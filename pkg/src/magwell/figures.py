"""Optional PNG rendering for sweep reports.

Everything here mirrors data already present in the CSV outputs; nothing
downstream consumes the images.  The Agg backend keeps rendering
headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be set first


def render_sweep_figure(records, path, fit=None) -> Path:
    """Ground eigenvalue against h, log-log, with an optional fit curve."""
    ok = [r for r in records if r.ok and r.eigenvalues]
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if ok:
        hs = [r.h for r in ok]
        lam = [r.eigenvalues[0] for r in ok]
        ax.loglog(hs, lam, "o", label="lambda0")
        if fit is not None and fit.powers:
            import numpy as np

            hh = np.geomspace(min(hs), max(hs), 200)
            model = sum(
                c * hh**p for p, c in zip(fit.powers, fit.coefficients)
            )
            label = " + ".join(
                f"{c:.3g} h^{p:g}" for p, c in zip(fit.powers, fit.coefficients)
            )
            ax.loglog(hh, model, "-", label=label)
    ax.set_xlabel("h")
    ax.set_ylabel("lowest eigenvalue")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_residual_figure(records, path, fit=None) -> Path:
    """Quasimode residuals against h with the fitted slope annotated."""
    ok = [r for r in records if r.ok and r.residual is not None]
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if ok:
        hs = [r.h for r in ok]
        res = [r.residual for r in ok]
        ax.loglog(hs, res, "s", label="residual")
        if fit is not None and fit.slope is not None:
            import numpy as np

            hh = np.geomspace(min(hs), max(hs), 200)
            import math

            curve = math.exp(fit.coefficients[0]) * hh**fit.slope
            ax.loglog(hh, curve, "-", label=f"slope {fit.slope:.3f}")
    ax.set_xlabel("h")
    ax.set_ylabel("quasimode residual")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
