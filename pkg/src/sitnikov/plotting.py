"""Static SVG figures of periodic and connecting orbits."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .kepler import x_of_t  # noqa: E402

golden_mean = (np.sqrt(5.0) - 1.0) / 2.0

params = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "svg.hashsalt": "sitnikov",  # stable element ids
}


def _figure(width=6.5, nrows=1):
    fig, ax = plt.subplots(nrows=nrows, ncols=1, figsize=(width, width * golden_mean * (0.7 if nrows > 1 else 1) * nrows),
                           sharex=True, squeeze=False)
    return fig, ax[:, 0]


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".") or "svg"
    # svg metadata carries a date by default; drop it for reproducible files
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def _envelope(ax, t):
    x = x_of_t(t)
    ax.fill_between(t, -x, x, color="0.9", lw=0, label="$\\pm x(t)$")
    ax.plot(t, x, color="0.6", lw=0.6)
    ax.plot(t, -x, color="0.6", lw=0.6)


def _integer_marks(ax, lo, hi, signs):
    if hi - lo > 24:
        signs = None  # labels would overlap
    for n in range(lo, hi + 1):
        ax.axvline(n, color="0.85", lw=0.4, zorder=0)
        if signs is not None and lo <= n < hi:
            ax.text(n + 0.5, 1.0, "+" if signs(n) > 0 else "−", transform=ax.get_xaxis_transform(),
                    ha="center", va="bottom", fontsize=7)


def plot_periodic(orbit, path):
    traj = orbit.traj
    t, y = traj.closed_times(), traj.closed_values()
    with plt.rc_context(params):
        fig, (ax,) = _figure()
        _envelope(ax, t)
        _integer_marks(ax, 0, orbit.N, orbit.symbols)
        ax.plot(t, y, color="#08589e", label="y(t)")
        ax.axhline(0.0, color="k", lw=0.4)
        ax.set_xlim(t[0], t[-1])
        ax.set_xlabel("t")
        ax.set_ylabel("y")
        ax.set_title(f"b = {orbit.symbols}   rho = {orbit.rho_hat:.10f}   M = {orbit.M}", fontsize=9, pad=12)
        ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)


def plot_connection(orbit, path):
    traj = orbit.traj
    t, y = traj.grid.times(False), traj.values
    lo, hi = orbit.window
    km, kp = orbit.spec.offsets()
    with plt.rc_context(params):
        fig, (ax, bx) = _figure(nrows=2)
        _envelope(ax, t)
        _integer_marks(ax, lo, hi, orbit.spec)
        if orbit.gamma_minus is not None:
            ax.plot(t, orbit.gamma_values("-"), color="#7bccc4", lw=0.8, ls="--", label="$\\gamma^-$")
        if orbit.gamma_plus is not None:
            ax.plot(t, orbit.gamma_values("+"), color="#e34a33", lw=0.8, ls=":", label="$\\gamma^+$")
        ax.plot(t, y, color="#08589e", label="$y^*$")
        ax.axvspan(km, kp, color="#fdbb84", alpha=0.25, lw=0, label="$[K^-, K^+]$")
        ax.axhline(0.0, color="k", lw=0.4)
        ax.set_xlim(lo, hi)
        ax.set_ylabel("y")
        ax.set_title(f"J = {orbit.j_hat:.10f}   window [{lo}, {hi}]   M = {traj.grid.M}", fontsize=9)
        ax.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0), frameon=False)

        for tails, color, label in ((orbit.tail_minus, "#7bccc4", "to $\\gamma^-$"), (orbit.tail_plus, "#e34a33", "to $\\gamma^+$")):
            if tails:
                k = np.array(sorted(tails))
                v = np.array([tails[i] for i in k])
                bx.semilogy(k + 0.5, np.maximum(v, 1e-18), "o-", ms=2.5, color=color, label=label)
        bx.axvspan(km, kp, color="#fdbb84", alpha=0.25, lw=0)
        bx.set_xlabel("t")
        bx.set_ylabel("$L^2$ tail residual")
        bx.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0), frameon=False)
        return _save(fig, path)
