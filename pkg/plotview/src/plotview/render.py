"""Figure rendering.

Every annotated quantity (peak, trough, staircase level, fitted slope) is
recomputed here from the CSV rows and must agree with the JSON sidecar to
1e-9; a mismatch aborts the render.
"""

from __future__ import annotations

import json
import math
import os

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .spec import FigureSpec  # noqa: E402

_STYLE = os.path.join(os.path.dirname(__file__), "style", "nsbesov.mplstyle")

MATCH_TOL = 1e-9


class RenderError(RuntimeError):
    pass


def read_csv(path: str):
    if not os.path.exists(path):
        raise RenderError(f"missing CSV {path}")
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise RenderError(f"empty CSV {path}: nothing to draw")
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        vals = []
        for tok in ln.split(","):
            try:
                vals.append(float(tok))
            except ValueError:
                vals.append({"true": True, "false": False}.get(tok, tok))
        rows.append(vals)
    cols = {h: [r[i] for r in rows] for i, h in enumerate(header)}
    return header, rows, cols


def load_sidecar(path: str) -> dict:
    if not os.path.exists(path):
        raise RenderError(f"missing JSON sidecar {path}")
    with open(path) as fh:
        return json.load(fh)


def _check(name: str, recomputed: float, recorded: float) -> None:
    if abs(recomputed - recorded) > MATCH_TOL * max(1.0, abs(recorded)):
        raise RenderError(
            f"annotation {name!r} disagrees with the sidecar: "
            f"recomputed {recomputed!r}, recorded {recorded!r}")


def render(spec: FigureSpec) -> str:
    with plt.style.context(_STYLE):
        if spec.kind in ("forcing_staircase", "solution_oscillation"):
            return _render_oscillation(spec)
        if spec.kind == "slope_fit":
            return _render_slope_fit(spec)
        return _render_ratio_histogram(spec)


def _cycles_from_csv(spec: FigureSpec):
    header, rows, cols = read_csv(spec.csv_paths["cycles"])
    side = load_sidecar(spec.sidecar)
    scalars = side["scalars"]
    peaks = cols["peak_lowblock"]
    troughs = cols["trough_norm"]
    wnorms = cols["forcing_window_norm"]
    # the renderer adds no numbers: recompute the annotated extrema and check
    for i, (p, v, w) in enumerate(zip(peaks, troughs, wnorms), start=1):
        _check(f"peak_{i}", p, scalars[f"peak_{i}"])
        _check(f"trough_{i}", v, scalars[f"trough_{i}"])
        _check(f"window_norm_{i}", w, scalars[f"window_norm_{i}"])
    if len(peaks) >= 2:
        spread = (max(peaks) - min(peaks)) / max(peaks)
        _check("peak_spread", spread, scalars["peak_spread"])
        ratio = max(b / a for a, b in zip(wnorms, wnorms[1:]))
        _check("staircase_ratio", ratio, scalars["staircase_ratio"])
    return cols, side


def _render_oscillation(spec: FigureSpec) -> str:
    cyc, side = _cycles_from_csv(spec)
    _, _, series = read_csv(spec.csv_paths["series"])
    two_panel = spec.kind == "solution_oscillation"
    if two_panel:
        fig, (ax_f, ax_u) = plt.subplots(
            2, 1, sharex=True, figsize=(7.0, 5.2),
            gridspec_kw={"height_ratios": [1.0, 1.6]})
    else:
        fig, ax_f = plt.subplots(figsize=(7.0, 2.8))
        ax_u = None

    # top panel: the forcing-norm staircase over its windows
    for k, (t0, t1, w) in enumerate(zip(cyc["T_k"], cyc["T_peak"],
                                        cyc["forcing_window_norm"]), start=1):
        ax_f.hlines(w, t0, t1, lw=2.2, color="C0")
        ax_f.annotate(f"{w:.3g}", xy=(0.5 * (t0 + t1), w),
                      xytext=(0, 5), textcoords="offset points",
                      ha="center", fontsize=8)
        ax_f.axvspan(t0, t1, alpha=0.08, color="C0")
    ax_f.set_yscale("log")
    ax_f.set_ylabel("forcing window norm")

    if two_panel:
        t = np.array(series["t"])
        crit = np.array(series["critical_norm"])
        low = np.array(series["low_block_sup"])
        pos = crit > 0
        ax_u.plot(t[pos], crit[pos], lw=1.0, color="C1",
                  label="critical norm")
        posl = low > 0
        ax_u.plot(t[posl], low[posl], lw=1.0, color="C2", ls="--",
                  label="low-block sup")
        for k, (tp, pk) in enumerate(zip(cyc["T_peak"], cyc["peak_lowblock"]),
                                     start=1):
            ax_u.plot([tp], [pk], "o", ms=5, color="C2")
            ax_u.annotate(f"peak {pk:.3g}", xy=(tp, pk), xytext=(4, 6),
                          textcoords="offset points", fontsize=8)
        for k, (tt, tr, thr) in enumerate(zip(cyc["T_trough"],
                                              cyc["trough_norm"],
                                              cyc["threshold"]), start=1):
            ax_u.plot([tt], [tr], "v", ms=5, color="C1")
            ax_u.annotate(f"trough {tr:.3g}", xy=(tt, tr), xytext=(4, -12),
                          textcoords="offset points", fontsize=8)
            ax_u.hlines(thr, cyc["T_k"][k - 1], tt, lw=0.8, ls=":",
                        color="0.4")
        for x in list(cyc["T_k"]) + list(cyc["T_peak"]):
            for ax in (ax_f, ax_u):
                ax.axvline(x, lw=0.6, ls=":", color="0.6")
        ax_u.set_yscale("log")
        ax_u.set_xlabel("t")
        ax_u.set_ylabel("solution norms")
        ax_u.legend(loc="upper right", fontsize=8)
    else:
        for x in list(cyc["T_k"]) + list(cyc["T_peak"]):
            ax_f.axvline(x, lw=0.6, ls=":", color="0.6")
        ax_f.set_xlabel("t")

    fig.suptitle(side["name"])
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output


def _render_slope_fit(spec: FigureSpec) -> str:
    _, _, cols = read_csv(spec.csv_paths["decay"])
    side = load_sidecar(spec.sidecar)
    scalars = side["scalars"]
    t = np.array(cols["t"])
    v = np.array(cols["norm"])
    w0 = scalars["w0"]
    x = np.log(1.0 + w0 * t)
    slope, intercept = np.polyfit(x, np.log(v), 1)
    _check("fit_slope", float(slope), scalars["fit_slope"])

    fig, ax = plt.subplots(figsize=(5.4, 3.8))
    ax.plot(np.exp(x), v, "o", ms=4, label="measured norm")
    ax.plot(np.exp(x), np.exp(intercept + slope * x), "-", lw=1.2,
            label=f"fit, slope {slope:.4f}")
    if "bound" in cols:
        ax.plot(np.exp(x), cols["bound"], ls="--", lw=1.0,
                label="decay certificate")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("1 + w0 t")
    ax.set_ylabel("forcing norm")
    ax.legend(fontsize=8)
    fig.suptitle(side["name"])
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output


def _render_ratio_histogram(spec: FigureSpec) -> str:
    _, rows, cols = read_csv(spec.csv_paths["ratios"])
    side = load_sidecar(spec.sidecar)
    names = cols["estimate"]
    base = np.array(cols["max_ratio_base"])
    refined = np.array(cols["max_ratio_refined"])
    for n, b in zip(names, base):
        _check(f"max_ratio_{n}", float(b), side["scalars"][f"max_ratio_{n}"])

    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    xs = np.arange(len(names))
    ax.bar(xs - 0.18, base, width=0.36, label="base grid")
    ax.bar(xs + 0.18, refined, width=0.36, label="refined grid")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("max measured ratio")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.suptitle(side["name"])
    fig.tight_layout()
    fig.savefig(spec.output)
    plt.close(fig)
    return spec.output


# ---------------------------------------------------------------------------
# run-directory driver


def discover_figures(run_dir: str, out_dir: str | None = None,
                     fmt: str = "svg"):
    """Figure specs for every recognized report in a run directory."""
    out_dir = out_dir or run_dir
    specs = []

    def p(name):
        return os.path.join(run_dir, name)

    for osc in ("oscillation_2d", "oscillation_nd"):
        if os.path.exists(p(f"{osc}.json")):
            specs.append(FigureSpec(
                "solution_oscillation",
                {"series": p(f"{osc}__series.csv"),
                 "cycles": p(f"{osc}__cycles.csv")},
                p(f"{osc}.json"),
                os.path.join(out_dir, f"{osc}_two_panel.{fmt}")))
    if os.path.exists(p("nonosc_power.json")):
        specs.append(FigureSpec(
            "slope_fit",
            {"decay": p("nonosc_power__force_decay.csv")},
            p("nonosc_power.json"),
            os.path.join(out_dir, f"nonosc_power_slope.{fmt}")))
    if os.path.exists(p("bilinear_ratios.json")):
        specs.append(FigureSpec(
            "ratio_histogram",
            {"ratios": p("bilinear_ratios__ratios.csv")},
            p("bilinear_ratios.json"),
            os.path.join(out_dir, f"bilinear_ratios.{fmt}")))
    return specs
