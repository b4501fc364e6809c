"""Rendering of diagnostic results as text, CSV and static SVG.

All output is deterministic: fixed float formatting, stable iteration
order, no timestamps. Atomic writes go through a temp file so partial
reports never appear under the target name.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .c2st import C2stResult
from .sbc import EcdfReport, RankMatrix

HIST_BINS = 10

# qualitative palette, cycled across parameters
PALETTE = ("#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
           "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0", "#000000")


@dataclass
class DiagnosticsReport:
    """Container tying together the pieces of one diagnostic run."""

    title: str
    ranks: dict = field(default_factory=dict)        # label -> RankMatrix
    ecdf: dict = field(default_factory=dict)         # label -> EcdfReport
    c2st: dict = field(default_factory=dict)         # label -> C2stResult
    contraction: dict = field(default_factory=dict)  # label -> (names, values)


def _param_names(obj, n: int) -> list[str]:
    names = getattr(obj, "param_names", None)
    return list(names) if names else [f"param_{i}" for i in range(n)]


def _band_vertices(rep: EcdfReport) -> list[tuple[float, float, float]]:
    """Corner points (t, lower, upper) of the clipped constant-width band."""
    h = rep.halfwidth
    ts = sorted({0.0, min(h, 1.0), max(1.0 - h, 0.0), 1.0})
    return [(t, max(t - h, 0.0), min(t + h, 1.0)) for t in ts]


def _rank_lines(label: str, rm: RankMatrix) -> list[str]:
    out = [f"[ranks {label}]",
           f"simulations: {rm.n_sims} kept of {rm.n_requested} requested "
           f"(failed {rm.n_failed}, flagged {'yes' if rm.flagged else 'no'})",
           f"posterior draws per simulation: {rm.n_draws}"]
    names = _param_names(rm, rm.n_params)
    for p, name in enumerate(names):
        counts, _ = np.histogram(rm.ranks[:, p], bins=HIST_BINS,
                                 range=(-0.5, rm.n_draws + 0.5))
        out.append(f"{name}: histogram " + " ".join(str(c) for c in counts))
    return out


def _ecdf_lines(label: str, rep: EcdfReport) -> list[str]:
    out = [f"[ecdf {label}]",
           f"level: {rep.level:.3f}  family_size: {rep.family_size}  "
           f"halfwidth: {rep.halfwidth:.6f}  grid_points: {rep.grid.size}",
           "band vertices (t, lower, upper): " + " ".join(
               f"({t:.6f},{lo:.6f},{hi:.6f})" for t, lo, hi in _band_vertices(rep))]
    names = _param_names(rep, rep.ecdf.shape[0])
    for p, name in enumerate(names):
        verdict = "inside" if rep.inside[p] else "OUTSIDE"
        out.append(f"{name}: sup_dev {rep.sup_dev[p]:.6f} {verdict}")
    out.append(f"all inside: {'yes' if rep.all_inside else 'no'}")
    return out


def _c2st_lines(label: str, res: C2stResult) -> list[str]:
    out = [f"[c2st {label}]",
           f"pairs: {res.n_pairs}  unit: {res.unit}  "
           f"high_variance: {'yes' if res.high_variance else 'no'}",
           "accuracies: " + " ".join(f"{a:.4f}" for a in np.asarray(res.accuracies)),
           f"mean accuracy: {res.mean_accuracy:.4f}",
           f"T_obs: {res.t_obs:.6f}"]
    if res.p_value is not None:
        out.append("T_perm: " + " ".join(f"{t:.6f}" for t in res.t_perm))
        out.append(f"p_value: {res.p_value:.4f}")
    return out


def render_text(report: DiagnosticsReport) -> str:
    lines = [f"report: {report.title}", ""]
    for label, rm in report.ranks.items():
        lines.extend(_rank_lines(label, rm))
        lines.append("")
    for label, rep in report.ecdf.items():
        lines.extend(_ecdf_lines(label, rep))
        lines.append("")
    for label, res in report.c2st.items():
        lines.extend(_c2st_lines(label, res))
        lines.append("")
    for label, (names, values) in report.contraction.items():
        lines.append(f"[contraction {label}]")
        for name, v in zip(names, values):
            lines.append(f"{name}: {v:.4f}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_text(report: DiagnosticsReport, path) -> None:
    _atomic_write(path, render_text(report))


def write_ecdf_csv(report: DiagnosticsReport, path) -> None:
    """Long-format ECDF curves and band edges for external plotting."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "param", "t", "ecdf", "lower", "upper"])
        for label, rep in report.ecdf.items():
            names = _param_names(rep, rep.ecdf.shape[0])
            lower, upper = rep.lower, rep.upper
            for p, name in enumerate(names):
                for g in range(rep.grid.size):
                    writer.writerow([label, name, f"{rep.grid[g]:.6f}",
                                     f"{rep.ecdf[p, g]:.6f}",
                                     f"{lower[g]:.6f}", f"{upper[g]:.6f}"])
    os.replace(tmp, path)


def _svg_panel(label: str, rep: EcdfReport, x0: float, y0: float,
               width: float, height: float) -> list[str]:
    """One panel of ECDF deviation curves with the confidence band."""
    h = rep.halfwidth
    span = max(2.5 * h, float(np.abs(rep.ecdf - rep.grid).max()) * 1.2, 1e-3)

    def sx(t):
        return x0 + t * width

    def sy(d):
        return y0 + height / 2 - d / span * (height / 2)

    parts = [f'<text x="{x0:.1f}" y="{y0 - 6:.1f}" font-size="13" '
             f'font-family="sans-serif">{label}</text>']
    band = (f"M {sx(0):.2f} {sy(h):.2f} L {sx(1):.2f} {sy(h):.2f} "
            f"L {sx(1):.2f} {sy(-h):.2f} L {sx(0):.2f} {sy(-h):.2f} Z")
    parts.append(f'<path d="{band}" fill="#d0d7e5" stroke="none"/>')
    parts.append(f'<line x1="{sx(0):.2f}" y1="{sy(0):.2f}" x2="{sx(1):.2f}" '
                 f'y2="{sy(0):.2f}" stroke="#666666" stroke-width="1"/>')
    names = _param_names(rep, rep.ecdf.shape[0])
    for p, name in enumerate(names):
        color = PALETTE[p % len(PALETTE)]
        pts = " ".join(f"{sx(t):.2f},{sy(d):.2f}"
                       for t, d in zip(rep.grid, rep.ecdf[p] - rep.grid))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.2"><title>{name}</title></polyline>')
    parts.append(f'<rect x="{x0:.1f}" y="{y0:.1f}" width="{width:.1f}" '
                 f'height="{height:.1f}" fill="none" stroke="#333333"/>')
    return parts


def write_ecdf_svg(report: DiagnosticsReport, path, panel_width: int = 360,
                   panel_height: int = 200) -> None:
    """Static SVG of rank-ECDF deviations, one panel per label."""
    margin, gap = 20, 40
    n = max(len(report.ecdf), 1)
    total_w = 2 * margin + panel_width
    total_h = margin + n * (panel_height + gap)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" '
             f'height="{total_h}" viewBox="0 0 {total_w} {total_h}">',
             f'<rect width="{total_w}" height="{total_h}" fill="#ffffff"/>']
    y = margin + 20
    for label, rep in report.ecdf.items():
        parts.extend(_svg_panel(label, rep, margin, y, panel_width, panel_height))
        y += panel_height + gap
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")


def write_report(report: DiagnosticsReport, directory) -> dict:
    """Write text, CSV and SVG renderings; returns the paths written."""
    os.makedirs(directory, exist_ok=True)
    paths = {"text": os.path.join(directory, "report.txt")}
    write_text(report, paths["text"])
    if report.ecdf:
        paths["csv"] = os.path.join(directory, "ecdf.csv")
        paths["svg"] = os.path.join(directory, "ecdf.svg")
        write_ecdf_csv(report, paths["csv"])
        write_ecdf_svg(report, paths["svg"])
    return paths
