"""Figure data (CSV) and native SVG renderings."""

from __future__ import annotations

import math
import os
from collections import defaultdict

import numpy as np

from ..records import format_value
from .config import ExperimentConfig, resolve_lambda_grid
from .svg import Plot, Series
from .sweep import calibration, delta_on_grid

__all__ = ["figure1_table", "emit_figure1", "figure2_tables", "emit_figure2"]


def figure1_table(cfg: ExperimentConfig, points: int = 200) -> dict:
    """Normalized denominator ``(sqrt(m-1) - sqrt(delta(lam))) / sqrt(n)``.

    The grid spans the configured lambda range, and the calibrated
    lam_min, lam_best and lam_max are inserted as marked rows. An
    infeasible m yields ``feasible=False`` and no rows.
    """
    if cfg.regularizer != "l1":
        raise ValueError("the denominator figure is defined for l1 configs")
    calib = calibration(cfg)
    if not calib.feasible:
        return {"feasible": False, "rows": [], "calib": calib}
    grid = resolve_lambda_grid(cfg.lambda_grid, calib)
    lams = np.geomspace(grid.min(), grid.max(), points)
    marks = {"lam_min": calib.lam_min, "lam_best": calib.lam_best, "lam_max": calib.lam_max}
    entries = [(float(l), "") for l in lams]
    entries += [(float(v), name) for name, v in marks.items() if v is not None]
    entries.sort()
    deltas = delta_on_grid(cfg, [e[0] for e in entries])
    rows = []
    for (lam, mark), dl in zip(entries, deltas):
        y = (math.sqrt(cfg.m - 1) - math.sqrt(dl)) / math.sqrt(cfg.n)
        rows.append({"lambda": lam, "delta": float(dl), "y": y, "marker": mark})
    return {"feasible": True, "rows": rows, "calib": calib}


def _write_rows(path, cols, rows, comment=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(format_value(r[c]) for c in cols) + "\n")


def emit_figure1(cfg: ExperimentConfig, out_dir, points: int = 200) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    tab = figure1_table(cfg, points)
    csv_path = os.path.join(out_dir, "figure1.csv")
    svg_path = os.path.join(out_dir, "figure1.svg")
    note = f"n={cfg.n} m={cfg.m} k={cfg.k} feasible={int(tab['feasible'])}"
    _write_rows(csv_path, ("lambda", "delta", "y", "marker"), tab["rows"], note)
    rows = tab["rows"]
    plot = Plot(title=f"Normalized denominator, n={cfg.n}, m={cfg.m}, k={cfg.k}",
                xlabel="lambda", ylabel="(sqrt(m-1) - sqrt(delta)) / sqrt(n)", hline=0.0)
    plot.add(Series([r["lambda"] for r in rows], [r["y"] for r in rows], "navy", "denominator"))
    for name, color in (("lam_min", "gray"), ("lam_best", "green"), ("lam_max", "gray")):
        xs = [r["lambda"] for r in rows if r["marker"] == name]
        if xs:
            plot.add(Series(xs, [0.0] * len(xs), color, name, kind="vline", dash=True))
    if not tab["feasible"]:
        plot.title += " (infeasible: bound vacuous for every lambda)"
    plot.save(svg_path)
    return {"csv": csv_path, "svg": svg_path, **tab}


def figure2_tables(records) -> tuple:
    """Scatter rows and per-lambda curve rows (bound and sharp estimate,
    both divided by ``||z||``)."""
    recs = [r for r in records if not r.degenerate]
    if not records:
        raise ValueError("no records")
    points = [{"lambda": r.lam, "noise_family": r.noise_family, "noise_param": r.noise_param,
               "err_normalized": r.err_normalized,
               "bound_normalized": r.bound_l_t / r.z_norm,
               "sharp_normalized": r.sharp_est / r.z_norm,
               "violated": r.violated} for r in recs]
    by_lam = defaultdict(list)
    for p in points:
        by_lam[p["lambda"]].append(p)
    curves = []
    for lam in sorted(by_lam):
        ps = by_lam[lam]
        # the normalized curves depend on lambda only, up to rounding
        curves.append({"lambda": lam, "bound_normalized": ps[0]["bound_normalized"],
                       "sharp_normalized": ps[0]["sharp_normalized"]})
    return points, curves


_PALETTE = ("steelblue", "darkorange", "purple", "teal", "olive", "brown", "magenta")


def emit_figure2(records, out_dir, title: str = "") -> dict:
    os.makedirs(out_dir, exist_ok=True)
    points, curves = figure2_tables(records)
    pts_path = os.path.join(out_dir, "figure2_points.csv")
    cur_path = os.path.join(out_dir, "figure2_curves.csv")
    svg_path = os.path.join(out_dir, "figure2.svg")
    _write_rows(pts_path, ("lambda", "noise_family", "noise_param", "err_normalized",
                           "bound_normalized", "sharp_normalized", "violated"), points)
    _write_rows(cur_path, ("lambda", "bound_normalized", "sharp_normalized"), curves)
    plot = Plot(title=title or "Normalized error vs lambda", xlabel="lambda",
                ylabel="||x_hat - x0|| / ||z||")
    groups = defaultdict(list)
    for p in points:
        groups[(p["noise_family"], p["noise_param"])].append(p)
    for i, (key, ps) in enumerate(sorted(groups.items())):
        plot.add(Series([p["lambda"] for p in ps], [p["err_normalized"] for p in ps],
                        _PALETTE[i % len(_PALETTE)], f"{key[0]} {key[1]}", kind="scatter"))
    plot.add(Series([c["lambda"] for c in curves], [c["bound_normalized"] for c in curves],
                    "red", "bound l(t)/||z||"))
    plot.add(Series([c["lambda"] for c in curves], [c["sharp_normalized"] for c in curves],
                    "black", "sharp estimate"))
    plot.save(svg_path)
    return {"points_csv": pts_path, "curves_csv": cur_path, "svg": svg_path,
            "points": points, "curves": curves}
