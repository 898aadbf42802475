"""Contour-point scene text detection toolkit.

Library layout:

* ``geometry``   polygons, boxes, rasterization, distance transform, IoU
* ``labels``     contour-band labels and ground-truth boxes from annotations
* ``rpn``        pre-defined point proposals, offset refinement, IoU-driven fitting
* ``losses``     IoU loss, class-balanced BCE, smooth-L1, gradient checking
* ``lotm``       directional 1xk / kx1 texture kernels, forward/backward, trainer
* ``decode``     directional NMS, point re-scoring, alpha-shape reconstruction
* ``evaluation`` polygon matching and precision/recall/F reporting
* ``formats``    dataset parsers, heatmap binary files, SVG overlays
* ``synthetic``  seeded synthetic scenes with texts and streak distractors
* ``cli``        the ``contourkit`` command
"""

from .decode import (
    ContourCandidates,
    DecodeConfig,
    Detection,
    alpha_shape,
    cluster_points,
    decode_region,
    directional_nms,
    rescore,
)
from .errors import (
    ContourKitError,
    DegenerateGeometry,
    FormatError,
    InvalidConfig,
    InvalidGrid,
    InvalidInput,
    InvalidPolygon,
    NumericalError,
    ParseError,
    PlacementError,
    TooFewCandidates,
)
from .evaluation import (
    BucketResult,
    MatchResult,
    bucketed_prf,
    match_detections,
    metrics_report,
    prf,
)
from .geometry import (
    box_iou,
    euclidean_distance_transform,
    point_in_polygon,
    polygon_area,
    polygon_iou,
    rasterize_polygon,
)
from .labels import AnnotationRecord, build_training_sample, contour_band_label, proposal_gt_box
from .losses import (
    GradCheckReport,
    LossWeights,
    balanced_bce,
    combined_loss,
    cross_entropy,
    gradient_check,
    iou_loss,
    smooth_l1,
)
from .lotm import (
    DirectionalKernel,
    TrainConfig,
    directional_conv,
    load_kernel,
    lotm_backward,
    lotm_forward,
    save_kernel,
    sigmoid_grid,
    train_toy,
)
from .rpn import PredefinedPoints, bound_points, fit_proposal, make_predefined_points, refine_points
from .synthetic import SyntheticScene, generate_synthetic_scene, streak_mask

__version__ = "0.1.0"
