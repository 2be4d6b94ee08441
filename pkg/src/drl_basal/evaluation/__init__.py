from .agp import AGP, agp
from .cvga import CVGAPoint, ZONE_TABLE, cvga_point, cvga_points, zone_label
from .metrics import (
    METRIC_NAMES,
    GlycemicReport,
    glycemic_summary,
    metrics,
    read_reports,
    risk_indices,
    risk_transform,
    write_reports,
)
from .stats import WilcoxonResult, compare, wilcoxon_signed_rank, write_comparison
from .svg import agp_svg, curve_svg, cvga_svg
from .trace import Trace

__all__ = [
    "AGP", "CVGAPoint", "GlycemicReport", "METRIC_NAMES", "Trace", "WilcoxonResult",
    "ZONE_TABLE", "agp", "agp_svg", "compare", "curve_svg", "cvga_point", "cvga_points",
    "cvga_svg", "glycemic_summary", "metrics", "read_reports", "risk_indices",
    "risk_transform", "wilcoxon_signed_rank", "write_comparison", "write_reports", "zone_label",
]
