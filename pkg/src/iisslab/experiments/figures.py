"""Figure rendering for the report path.

Each renderer reads the CSV files a scenario wrote and saves a PNG next to
them under figures/; scenarios whose data is absent are skipped silently so
`report` works on partial output directories.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .reporting import column, read_csv  # noqa: E402

__all__ = ["render_all_figures"]


def _load(out: Path, name: str):
    path = out / name
    if not path.exists():
        return None
    return read_csv(path)


def _save(fig, out: Path, name: str) -> Path:
    fig_dir = out / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    path = fig_dir / name
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def fig_linear_unbounded(out: Path):
    data = _load(out, "linear_unbounded__trajectory.csv")
    fals = _load(out, "linear_unbounded__falsification.csv")
    if data is None or fals is None:
        return None
    header, rows = data
    b = column(rows, header, "b")
    c = column(rows, header, "c")
    t = column(rows, header, "t")
    realized = column(rows, header, "realized_sup")
    predicted = column(rows, header, "predicted_sup")
    fh, frows = fals
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for bv, cv in sorted({(x, y) for x, y in zip(b, c)}):
        sel = (b == bv) & (c == cv)
        order = np.argsort(t[sel])
        ax1.plot(t[sel][order], realized[sel][order], lw=1.5,
                 label=f"b={bv:g}, c={cv:g}")
        ax1.plot(t[sel][order], predicted[sel][order], "k--", lw=0.7)
    ax1.set_xlabel("t")
    ax1.set_ylabel("sup-norm of the state")
    ax1.set_title("response vs. b c (1 - e^{-t}) (dashed)")
    ax1.legend(fontsize=7)
    slopes = column(frows, fh, "gain_slope")
    cs = column(frows, fh, "c")
    wt = column(frows, fh, "witness_time")
    for a in sorted(set(slopes)):
        sel = slopes == a
        ax2.plot(cs[sel], wt[sel], "o-", label=f"gain slope a={a:g}")
    ax2.set_xscale("log")
    ax2.set_xlabel("input parameter c")
    ax2.set_ylabel("witness time")
    ax2.set_title("time at which the response defeats a*r")
    ax2.legend(fontsize=7)
    return _save(fig, out, "linear_unbounded.png")


def _margin_panel(ax, rows, header, label_col=None):
    t = column(rows, header, "t")
    margin = column(rows, header, "margin")
    tol = column(rows, header, "tol")
    if label_col:
        labels = column(rows, header, label_col)
        for lv in sorted(set(labels)):
            sel = labels == lv
            ax.plot(t[sel], margin[sel], ".", ms=2.5, label=f"{label_col}={lv:g}")
        ax.legend(fontsize=7)
    else:
        ax.plot(t, margin, ".", ms=2.5)
    ax.plot(t, -tol, "r.", ms=1.0)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("t")
    ax.set_ylabel("margin (rhs - Vdot)")


def fig_linear_l2l4(out: Path):
    data = _load(out, "linear_l2l4__margins.csv")
    if data is None:
        return None
    header, rows = data
    fig, ax = plt.subplots(figsize=(6, 4))
    _margin_panel(ax, rows, header)
    ax.set_title("quadratic certificate margins (L2 state, L4 input)")
    return _save(fig, out, "linear_l2l4.png")


def fig_bilinear_instability(out: Path):
    traces = _load(out, "bilinear_instability__traces.csv")
    rates = _load(out, "bilinear_instability__rates.csv")
    if traces is None or rates is None:
        return None
    th, trows = traces
    rh, rrows = rates
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    cs = column(trows, th, "c")
    t = column(trows, th, "t")
    nrm = column(trows, th, "state_norm")
    for cv in sorted(set(cs)):
        sel = cs == cv
        ax1.semilogy(t[sel], nrm[sel], lw=1.2, label=f"u = {cv:g}")
    ax1.set_xlabel("t")
    ax1.set_ylabel("state norm")
    ax1.set_title("constant-input growth and decay")
    ax1.legend(fontsize=7)
    fitted = column(rrows, rh, "fitted_rate")
    predicted = column(rrows, rh, "predicted_rate")
    levels = column(rrows, rh, "c")
    ax2.plot(levels, predicted, "k--", lw=0.8, label="c - mu1")
    ax2.plot(levels, fitted, "o", ms=4, label="fitted")
    ax2.axhline(0.0, color="r", lw=0.6)
    ax2.set_xlabel("input level c")
    ax2.set_ylabel("exponential rate")
    ax2.set_title("fitted vs. spectral-shift rate")
    ax2.legend(fontsize=7)
    return _save(fig, out, "bilinear_instability.png")


def fig_reaction_diffusion(out: Path):
    margins = _load(out, "reaction_diffusion__iiss_margins.csv")
    coeffs = _load(out, "reaction_diffusion__coefficients.csv")
    if margins is None or coeffs is None:
        return None
    mh, mrows = margins
    ch, crows = coeffs
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    _margin_panel(ax1, mrows, mh, label_col="L")
    ax1.set_title("logarithmic-certificate margins")
    L = column(crows, ch, "L")
    coeff = column(crows, ch, "supply_coefficient")
    ax2.semilogy(L, coeff, "o-")
    ax2.set_xlabel("interval length L")
    ax2.set_ylabel("supply coefficient 1/(4(1-L)w)")
    ax2.set_title("ISS supply coefficient blows up as L -> 1")
    return _save(fig, out, "reaction_diffusion.png")


def fig_lp_iss(out: Path):
    data = _load(out, "lp_iss__bounds.csv")
    if data is None:
        return None
    header, rows = data
    runs = column(rows, header, "run", as_float=False)
    p = column(rows, header, "p")
    t = column(rows, header, "t")
    realized = column(rows, header, "realized")
    bound = column(rows, header, "bound")
    fig, ax = plt.subplots(figsize=(6, 4))
    shown = 0
    for run in sorted(set(runs)):
        for pv, style in ((1.0, "-"), (2.0, "--")):
            sel = (runs == run) & (p == pv)
            if not sel.any():
                continue
            order = np.argsort(t[sel])
            ax.plot(t[sel][order], bound[sel][order], style, lw=1.0,
                    label=f"{run} bound (p={pv:g})" if shown < 4 else None)
        sel = (runs == run) & (p == p[0])
        order = np.argsort(t[sel])
        ax.plot(t[sel][order], realized[sel][order], "k-", lw=0.8,
                label=f"{run} realized" if shown < 4 else None)
        shown += 1
        if shown >= 3:
            break
    ax.set_xlabel("t")
    ax.set_ylabel("norm / bound")
    ax.set_title("decay + Lp input gain dominates the response")
    ax.legend(fontsize=7)
    return _save(fig, out, "lp_iss.png")


def fig_bilinear_bound(out: Path):
    data = _load(out, "bilinear_bound__bounds.csv")
    if data is None:
        return None
    header, rows = data
    runs = column(rows, header, "run", as_float=False)
    t = column(rows, header, "t")
    realized = column(rows, header, "realized")
    triple = column(rows, header, "bound_gain_triple")
    growth = column(rows, header, "bound_growth_majorant")
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for run in sorted(set(runs))[:3]:
        sel = runs == run
        order = np.argsort(t[sel])
        ax.semilogy(t[sel][order], np.maximum(realized[sel][order], 1e-16),
                    "k-", lw=0.9)
        ax.semilogy(t[sel][order], triple[sel][order], "-", lw=1.0,
                    label=f"{run} gain triple")
        ax.semilogy(t[sel][order], np.maximum(growth[sel][order], 1e-16),
                    "--", lw=0.9, label=f"{run} growth majorant")
    ax.set_xlabel("t")
    ax.set_ylabel("norm / bound")
    ax.set_title("trajectory domination (black: realized)")
    ax.legend(fontsize=6)
    return _save(fig, out, "bilinear_bound.png")


RENDERERS = [fig_linear_unbounded, fig_linear_l2l4, fig_bilinear_instability,
             fig_reaction_diffusion, fig_lp_iss, fig_bilinear_bound]


def render_all_figures(out: Path) -> list[Path]:
    paths = []
    for renderer in RENDERERS:
        path = renderer(out)
        if path is not None:
            paths.append(path)
    return paths
