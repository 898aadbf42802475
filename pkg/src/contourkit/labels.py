"""Training targets from polygon annotations.

Two targets are produced per image: a thin contour-band mask along each text
polygon's inner boundary (supervising both directional heatmaps), and the
tight axis-aligned box around each polygon (supervising proposal regression).
Regions flagged DO-NOT-CARE contribute an ignore mask instead, so losses can
zero them out without reshaping any grid.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidPolygon
from .geometry import (
    as_polygon,
    euclidean_distance_transform,
    rasterize_polygon,
)


@dataclass
class AnnotationRecord:
    """One annotated text region: polygon, DO-NOT-CARE flag, transcription."""

    polygon: np.ndarray
    ignore: bool = False
    transcription: Optional[str] = None


def contour_band_label(poly, height: int, width: int, band: float = 2.0) -> np.ndarray:
    """Bool mask of the polygon's inner contour band.

    A pixel is labeled iff it is inside the rasterized polygon and its
    distance to the nearest background pixel is in (0, band]. The default
    band of 2.0 yields the roughly two-pixel-wide inner edge.
    """
    if band <= 0:
        raise ValueError(f"band must be positive, got {band}")
    mask = rasterize_polygon(poly, height, width)
    dist = euclidean_distance_transform(mask)
    return mask & (dist <= band)


def proposal_gt_box(poly) -> np.ndarray:
    """Tight axis-aligned box (min x, min y, max x, max y) over the vertices."""
    p = as_polygon(poly)
    return np.array(
        [p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max()],
        dtype=np.float64,
    )


def build_training_sample(records, height: int, width: int, band: float = 2.0):
    """Assemble per-image targets from a list of AnnotationRecord.

    Returns (contour label mask, list of gt boxes, ignore mask):
    the label is the union of contour bands over non-ignored records, the box
    list holds one tight box per non-ignored record, and the ignore mask is
    the union of rasterized ignored polygons.
    """
    label = np.zeros((height, width), dtype=bool)
    ignore_mask = np.zeros((height, width), dtype=bool)
    boxes = []
    for idx, rec in enumerate(records):
        try:
            if rec.ignore:
                ignore_mask |= rasterize_polygon(rec.polygon, height, width)
            else:
                label |= contour_band_label(rec.polygon, height, width, band)
                boxes.append(proposal_gt_box(rec.polygon))
        except InvalidPolygon as exc:
            raise InvalidPolygon(f"record {idx}: {exc}") from exc
    return label, boxes, ignore_mask
