"""Calibration and bias-detection diagnostics for learned posteriors."""

from .c2st import C2stResult, c2st, c2st_pvalue, c2st_statistic
from .metrics import posterior_contraction
from .report import (
    DiagnosticsReport,
    render_text,
    write_ecdf_csv,
    write_ecdf_svg,
    write_report,
    write_text,
)
from .sbc import EcdfReport, RankMatrix, ecdf_uniformity, sbc_ranks

__all__ = [
    "C2stResult",
    "DiagnosticsReport",
    "EcdfReport",
    "RankMatrix",
    "c2st",
    "c2st_pvalue",
    "c2st_statistic",
    "ecdf_uniformity",
    "posterior_contraction",
    "render_text",
    "sbc_ranks",
    "write_ecdf_csv",
    "write_ecdf_svg",
    "write_report",
    "write_text",
]
