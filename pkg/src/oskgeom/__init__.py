"""oskgeom: orientation-sensitive keypoint geometry for rotated boxes.

Library surface:

* :mod:`oskgeom.geom`    - quads, keypoints, exact and rasterized IoU
* :mod:`oskgeom.reorder` - canonical vertex ordering and angle statistics
* :mod:`oskgeom.codec`   - anisotropic heatmap encode/decode, BCE loss
* :mod:`oskgeom.attn`    - sampling patterns and feature-fusion masks
* :mod:`oskgeom.evalkit` - matching, AP/mAP, rotated NMS
* :mod:`oskgeom.dataio`  - annotation parsing and synthetic datasets
"""

from .backend import ACTIVE_BACKEND
from .codec import (
    Heatmap,
    OshConfig,
    Roi,
    bce_grad,
    bce_loss,
    decode,
    encode,
    expand_roi,
    extract_peak,
    map_to_heatmap,
    read_heatmap,
    rotate_covariance,
    write_heatmap,
)
from .errors import (
    DegenerateQuadError,
    EmptyHistogramError,
    EmptyUnionError,
    GeometryError,
    InvalidHeatmapError,
    NonConvexInputError,
    OskgeomError,
    ParseError,
    SelfIntersectingError,
    ShapeMismatchError,
)
from .geom import (
    KeypointSet,
    Point2,
    Quad,
    iou_exact,
    iou_pixel,
    keypoints_from_quad,
    quad_from_points,
)
from .reorder import (
    AngleHistogram,
    ReorderConfig,
    angle_histogram,
    first_edge_angle,
    reorder_keypoints,
    select_min_confusion_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "AngleHistogram",
    "DegenerateQuadError",
    "EmptyHistogramError",
    "EmptyUnionError",
    "GeometryError",
    "Heatmap",
    "InvalidHeatmapError",
    "KeypointSet",
    "NonConvexInputError",
    "OshConfig",
    "OskgeomError",
    "ParseError",
    "Point2",
    "Quad",
    "ReorderConfig",
    "Roi",
    "SelfIntersectingError",
    "ShapeMismatchError",
    "angle_histogram",
    "bce_grad",
    "bce_loss",
    "decode",
    "encode",
    "expand_roi",
    "extract_peak",
    "first_edge_angle",
    "iou_exact",
    "iou_pixel",
    "keypoints_from_quad",
    "map_to_heatmap",
    "quad_from_points",
    "read_heatmap",
    "reorder_keypoints",
    "rotate_covariance",
    "select_min_confusion_threshold",
    "write_heatmap",
]
