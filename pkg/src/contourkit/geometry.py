"""Shared geometric primitives: polygons, boxes, rasters, and IoU computations.

Conventions used throughout the toolkit:

* a polygon is an ``(N, 2)`` float array of ``(x, y)`` vertices in pixel
  coordinates, either winding, at least 3 vertices;
* an axis-aligned box is a length-4 float array ``(x_tl, y_tl, x_rb, y_rb)``;
* a float grid is an ``(H, W)`` float64 array indexed ``[row, col]``;
* a bit mask is an ``(H, W)`` bool array;
* the center of pixel ``(row=i, col=j)`` is the point ``(j + 0.5, i + 0.5)``.
"""

import math

import numpy as np
from scipy import ndimage

from .errors import InvalidConfig, InvalidGrid, InvalidPolygon


def as_polygon(vertices) -> np.ndarray:
    """Validate and return a polygon as an (N, 2) float64 array.

    Raises InvalidPolygon for fewer than 3 vertices, a malformed shape, or
    non-finite coordinates.
    """
    poly = np.asarray(vertices, dtype=np.float64)
    if poly.ndim != 2 or poly.shape[1] != 2:
        raise InvalidPolygon(f"expected (N, 2) vertex array, got shape {poly.shape}")
    if poly.shape[0] < 3:
        raise InvalidPolygon(f"polygon needs at least 3 vertices, got {poly.shape[0]}")
    if not np.isfinite(poly).all():
        raise InvalidPolygon("polygon has non-finite coordinates")
    return poly


def as_box(box) -> np.ndarray:
    """Validate and return a box as a length-4 float64 array (x_tl, y_tl, x_rb, y_rb)."""
    b = np.asarray(box, dtype=np.float64).reshape(-1)
    if b.shape != (4,):
        raise InvalidGrid(f"expected 4 box coordinates, got shape {b.shape}")
    if not np.isfinite(b).all():
        raise InvalidGrid("box has non-finite coordinates")
    if b[0] > b[2] or b[1] > b[3]:
        raise InvalidGrid(f"box corners out of order: {b.tolist()}")
    return b


def box_area(box) -> float:
    b = as_box(box)
    return float((b[2] - b[0]) * (b[3] - b[1]))


def polygon_area(poly) -> float:
    """Absolute shoelace area of a polygon in px^2; 0 for degenerate rings."""
    p = as_polygon(poly)
    x, y = p[:, 0], p[:, 1]
    # shoelace sum over edges (i, i+1 mod N)
    s = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
    return abs(s) / 2.0


def _points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd test for an (M, 2) point array; boundary points count as inside."""
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    boundary = np.zeros(len(points), dtype=bool)
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        # exact on-segment check: zero cross product within the segment bbox
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_seg = (
            (cross == 0.0)
            & (px >= min(x1, x2))
            & (px <= max(x1, x2))
            & (py >= min(y1, y2))
            & (py <= max(y1, y2))
        )
        boundary |= on_seg
        if y1 == y2:
            continue  # horizontal edges never toggle the crossing parity
        straddles = (y1 > py) != (y2 > py)
        with np.errstate(invalid="ignore"):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= straddles & (px < xint)
    return inside | boundary


def point_in_polygon(point, poly) -> bool:
    """True if the point is inside the polygon (even-odd rule, boundary inclusive)."""
    p = as_polygon(poly)
    pt = np.asarray(point, dtype=np.float64).reshape(1, 2)
    return bool(_points_in_polygon(pt, p)[0])


def rasterize_polygon(poly, height: int, width: int) -> np.ndarray:
    """Rasterize a polygon onto an (height, width) bool mask.

    Bit (i, j) is set iff the pixel center (j + 0.5, i + 0.5) lies inside the
    polygon (boundary inclusive).
    """
    p = as_polygon(poly)
    if height < 1 or width < 1:
        raise InvalidGrid(f"grid dimensions must be >= 1, got {height}x{width}")
    mask = np.zeros((height, width), dtype=bool)
    # only rows/cols whose centers can fall inside the polygon's bbox matter
    xmin, ymin = p.min(axis=0)
    xmax, ymax = p.max(axis=0)
    j0 = max(0, int(math.floor(xmin - 0.5)))
    j1 = min(width, int(math.ceil(xmax + 0.5)))
    i0 = max(0, int(math.floor(ymin - 0.5)))
    i1 = min(height, int(math.ceil(ymax + 0.5)))
    if j0 >= j1 or i0 >= i1:
        return mask
    jj, ii = np.meshgrid(np.arange(j0, j1), np.arange(i0, i1))
    centers = np.column_stack([jj.ravel() + 0.5, ii.ravel() + 0.5]).astype(np.float64)
    hit = _points_in_polygon(centers, p).reshape(i1 - i0, j1 - j0)
    mask[i0:i1, j0:j1] = hit
    return mask


def euclidean_distance_transform(mask) -> np.ndarray:
    """Distance (between pixel centers) from each foreground pixel to the
    nearest background pixel; 0 on background.

    Every position outside the grid counts as background, so foreground
    touching the border gets distance 1 there.
    """
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise InvalidGrid(f"mask must be 2-D, got shape {m.shape}")
    padded = np.pad(m, 1, mode="constant", constant_values=False)
    dist = ndimage.distance_transform_edt(padded)
    return np.ascontiguousarray(dist[1:-1, 1:-1], dtype=np.float64)


def box_iou(a, b) -> float:
    """Exact intersection-over-union of two axis-aligned boxes, in [0, 1].

    Boxes with zero area give 0 (avoids 0/0 on identical degenerate boxes).
    """
    ba, bb = as_box(a), as_box(b)
    iw = min(ba[2], bb[2]) - max(ba[0], bb[0])
    ih = min(ba[3], bb[3]) - max(ba[1], bb[1])
    inter = max(0.0, iw) * max(0.0, ih)
    union = box_area(ba) + box_area(bb) - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


def polygon_iou(a, b, resolution: int = 256) -> float:
    """Rasterization-based IoU of two polygons, in [0, 1].

    Both polygons are drawn on a common grid scaled so the larger dimension
    of their joint bounding box spans `resolution` cells. Exact polygon
    clipping is deliberately avoided (ground-truth text polygons are concave).
    """
    pa, pb = as_polygon(a), as_polygon(b)
    if resolution < 16:
        raise InvalidConfig(f"resolution must be >= 16, got {resolution}")
    lo = np.minimum(pa.min(axis=0), pb.min(axis=0))
    hi = np.maximum(pa.max(axis=0), pb.max(axis=0))
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if span <= 0.0:
        return 0.0
    scale = resolution / span
    w = max(1, int(math.ceil((hi[0] - lo[0]) * scale)))
    h = max(1, int(math.ceil((hi[1] - lo[1]) * scale)))
    ma = rasterize_polygon((pa - lo) * scale, h, w)
    mb = rasterize_polygon((pb - lo) * scale, h, w)
    union = np.logical_or(ma, mb).sum()
    if union == 0:
        return 0.0
    inter = np.logical_and(ma, mb).sum()
    return float(inter / union)
