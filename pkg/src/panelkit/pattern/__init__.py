from .bezier import control_point, sample_boundary, sample_edge
from .io import load_point_cloud, parse_pattern, save_point_cloud, serialize_pattern
from .metrics import average_report, pattern_metrics, stitch_pr
from .raster import panel_iou, rasterize_panel
from .types import E_MAX, NUM_CLASSES, GarmentSample, MetricsReport, Panel, SewingPattern

__all__ = [
    "Panel",
    "SewingPattern",
    "GarmentSample",
    "MetricsReport",
    "E_MAX",
    "NUM_CLASSES",
    "sample_edge",
    "sample_boundary",
    "control_point",
    "rasterize_panel",
    "panel_iou",
    "pattern_metrics",
    "stitch_pr",
    "average_report",
    "serialize_pattern",
    "parse_pattern",
    "save_point_cloud",
    "load_point_cloud",
]
