"""Figure rendering for scenario reports: PNG files written alongside the
delimited outputs.  CSV/JSON remain the data contract; figures are a
convenience view and can be disabled with --no-figures."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .report import ExperimentReport

_DPI = 150


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def render(report: ExperimentReport, out_dir: str) -> list[str]:
    """Render the figures appropriate to the scenario; returns written paths."""
    fn = _RENDERERS.get(report.scenario)
    if fn is None:
        return []
    try:
        return fn(report, out_dir)
    except Exception:  # figures must never fail a run
        return []


def _evolve_fig(report, out_dir):
    record = getattr(report, "_record", None)
    if record is None:
        return []
    t = np.asarray(record.times)
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for key in ("mass", "energy", "e_star", "e_star_star"):
        v = np.asarray(record.diagnostics[key], dtype=float)
        if np.isfinite(v).all() and abs(v[0]) > 0:
            axes[0].plot(t, np.abs(v - v[0]) / abs(v[0]), label=key)
    axes[0].set_yscale("log")
    axes[0].set_ylabel("relative drift")
    axes[0].legend(fontsize=8)
    axes[1].plot(t, record.diagnostics["hdot1"], label="hdot1")
    axes[1].plot(t, record.diagnostics["h1_star"], label="h1_star")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("norm")
    axes[1].legend(fontsize=8)
    fig.suptitle("evolution diagnostics")
    return [_save(fig, out_dir, "evolve_diagnostics.png")]


def _loglog_fit_fig(report, out_dir, table_key, xcol, ycol, fits, title, fname):
    rows = report.tables.get(table_key, [])
    if not rows:
        return []
    fig, ax = plt.subplots(figsize=(6, 4.5))
    xs = np.array([float(r[xcol]) for r in rows])
    ys = np.array([float(r[ycol]) for r in rows])
    ax.loglog(xs, ys, "o", alpha=0.6, label="measurements")
    for name, fit in fits.items():
        if "slope" in fit:
            slope, inter = fit["slope"], fit["intercept"]
            grid = np.linspace(np.log(xs.min()), np.log(xs.max()), 50)
            ax.plot(np.exp(grid), np.exp(inter + slope * grid), "-",
                    label=f"{name}: slope {slope:.3f}")
    ax.set_xlabel(xcol)
    ax.set_ylabel(ycol)
    ax.legend(fontsize=8)
    ax.set_title(title)
    return [_save(fig, out_dir, fname)]


def _strichartz_fig(report, out_dir):
    rows = report.tables.get("per_shell", [])
    if not rows:
        return []
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ps = sorted({r["p"] for r in rows})
    for p in ps:
        sub = [r for r in rows if r["p"] == p]
        Ns = np.array([r["N"] for r in sub], dtype=float)
        vals = np.array([r["lp_norm"] for r in sub], dtype=float)
        ax.loglog(Ns, vals, "o", alpha=0.5, label=f"p={p:g}")
        fit = report.fits.get(f"slope_p{p:g}")
        if fit:
            grid = np.linspace(np.log(Ns.min()), np.log(Ns.max()), 50)
            ax.plot(np.exp(grid), np.exp(fit["intercept"] + fit["slope"] * grid), "-",
                    label=f"fit {fit['slope']:.3f} (target {fit['target']:.2f})")
    ax.set_xlabel("shell N")
    ax.set_ylabel("space-time L^p norm")
    ax.legend(fontsize=8)
    ax.set_title("shell-localized dispersive decay")
    return [_save(fig, out_dir, "strichartz.png")]


def _bilinear_fig(report, out_dir):
    fit = report.fits.get("kappa")
    if not fit:
        return []
    fig, ax = plt.subplots(figsize=(6, 4.5))
    env = np.asarray(fit["envelopes"], dtype=float)
    prods = np.asarray(fit["mean_products"], dtype=float)
    ax.loglog(env, prods, "o", label="mean normalized product")
    grid = np.linspace(np.log(env.min()), np.log(env.max()), 50)
    ax.plot(np.exp(grid), np.exp(fit["intercept"] + fit["kappa"] * grid), "-",
            label=f"kappa = {fit['kappa']:.3f}")
    ax.set_xlabel("envelope N2/N1 + 1/N2")
    ax.set_ylabel("||P_N1 u1 P_N2 u2||_L2")
    ax.legend(fontsize=8)
    ax.set_title("bilinear interaction decay")
    return [_save(fig, out_dir, "bilinear.png")]


def _extinction_fig(report, out_dir):
    rows = report.tables.get("curve", [])
    if not rows:
        return []
    fig, ax = plt.subplots(figsize=(6, 4.5))
    Ns = sorted({r["N"] for r in rows})
    for N in Ns:
        sub = sorted((r for r in rows if r["N"] == N), key=lambda r: r["T"])
        ax.semilogx([r["T"] for r in sub], [r["z_value"] for r in sub],
                    "o-", label=f"N={N:g}")
    ax.set_xlabel("T")
    ax.set_ylabel("Z norm on [T N^-2, 1/T]")
    ax.legend(fontsize=8)
    ax.set_title("extinction of concentrated bubbles")
    return [_save(fig, out_dir, "extinction.png")]


def _trapping_fig(report, out_dir):
    out = []
    for variant in ("star", "star_star"):
        rows = report.tables.get(f"trapping_{variant}", [])
        if not rows:
            continue
        fig, ax = plt.subplots(figsize=(6, 3))
        t = [r["t"] for r in rows]
        for key in ("norm_below", "coercive", "energy_above"):
            ax.plot(t, [r[key] for r in rows], label=key)
        ax.set_ylim(-0.1, 1.2)
        ax.set_xlabel("t")
        ax.set_ylabel("inequality holds")
        ax.legend(fontsize=8)
        ax.set_title(f"trapping inequalities ({variant})")
        out.append(_save(fig, out_dir, f"trapping_{variant}.png"))
    return out


def _stability_fig(report, out_dir):
    rows = report.tables.get("distance_track", [])
    if not rows:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r["t"] for r in rows], [r["h1_distance"] for r in rows], "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("H1 distance")
    ax.set_title("perturbed-trajectory separation")
    return [_save(fig, out_dir, "stability.png")]


def _profile_suite_fig(report, out_dir):
    rows = report.tables.get("decay", [])
    if not rows:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    ks = [r["k"] for r in rows]
    ax.semilogy(ks, [max(r["h1_inner_normalized"], 1e-18) for r in rows], "o-",
                label="|<p1,p2>_H1| / (|p1||p2|)")
    ax.semilogy(ks, [max(r["l4_mass_normalized"], 1e-18) for r in rows], "s-",
                label="L4 mass overlap")
    ax.set_xlabel("frame index k")
    ax.legend(fontsize=8)
    ax.set_title("profile orthogonality along frames")
    return [_save(fig, out_dir, "profile_suite.png")]


def _blowup_fig(report, out_dir):
    rows = report.tables.get("hdot1_track", [])
    if not rows:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r["t"] for r in rows], [r["hdot1"] for r in rows], "o-")
    ax.set_xlabel("t")
    ax.set_ylabel("Hdot1 norm")
    ax.set_title(f"super-threshold probe (halt: {report.results.get('halt_reason')})")
    return [_save(fig, out_dir, "blowup_probe.png")]


_RENDERERS = {
    "evolve": _evolve_fig,
    "strichartz": _strichartz_fig,
    "bilinear": _bilinear_fig,
    "extinction": _extinction_fig,
    "trapping": _trapping_fig,
    "stability": _stability_fig,
    "profile_suite": _profile_suite_fig,
    "blowup_probe": _blowup_fig,
}
