"""Scale-insensitive proposal geometry.

A proposal is represented by a small set of pre-defined points (box center
plus boundary points). Predicted dimensionless offsets move each point by a
fraction of the current box width/height, and the refined points are bounded
back into an axis-aligned box by a max-min reduction with a center clamp.
Because training is driven purely by IoU between boxes, the whole scheme is
insensitive to scale.

`fit_proposal` is a desk-scale demonstration: it fits the offsets to a target
box by gradient descent on the smoothed negative log-IoU loss, routing
subgradients through the max-min reduction to the arg-extreme points.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, InvalidInput
from .geometry import as_box
from .losses import iou_loss


@dataclass
class PredefinedPoints:
    """Point layout of one proposal: row 0 is the box center."""

    points: np.ndarray  # (n, 2) float64
    source_box: np.ndarray  # (4,) float64; provides w_c, h_c

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def width(self) -> float:
        return float(self.source_box[2] - self.source_box[0])

    @property
    def height(self) -> float:
        return float(self.source_box[3] - self.source_box[1])


def make_predefined_points(box, n: int) -> PredefinedPoints:
    """Lay out n pre-defined points in a box.

    n=5: center + the four corners (top-left, top-right, bottom-right,
    bottom-left). n=9 additionally inserts the four edge midpoints.
    """
    b = as_box(box)
    if n not in (5, 9):
        raise InvalidConfig(f"point count must be 5 or 9, got {n}")
    x0, y0, x1, y1 = b
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    pts = [(cx, cy), (x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    if n == 9:
        pts += [(cx, y0), (x1, cy), (cx, y1), (x0, cy)]
    return PredefinedPoints(np.array(pts, dtype=np.float64), b)


def refine_points(pre: PredefinedPoints, offsets) -> np.ndarray:
    """Apply dimensionless offsets: R_l = (x_l + w_c*dx_l, y_l + h_c*dy_l)."""
    d = np.asarray(offsets, dtype=np.float64)
    if d.shape != (pre.n, 2):
        raise InvalidConfig(
            f"expected {pre.n} offset pairs, got shape {d.shape}"
        )
    scale = np.array([pre.width, pre.height])
    return pre.points + d * scale


def bound_points(refined, center) -> np.ndarray:
    """Bound refined points into a box and clamp it to contain the center.

    The box is (min x, min y, max x, max y) over the points; the refined
    center (x', y') then widens it if needed: x_tl <- min(x_tl, x') and so on.
    """
    pts = np.asarray(refined, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise InvalidInput("need at least one refined point")
    c = np.asarray(center, dtype=np.float64).reshape(2)
    return np.array(
        [
            min(pts[:, 0].min(), c[0]),
            min(pts[:, 1].min(), c[1]),
            max(pts[:, 0].max(), c[0]),
            max(pts[:, 1].max(), c[1]),
        ]
    )


def fit_proposal(init, gt, n: int = 9, lr: float = 0.05, steps: int = 500):
    """Fit a proposal box to a target by gradient descent over point offsets.

    Offsets start at zero (a fresh regression head); each step refines the
    points, bounds them into a box, evaluates the IoU loss against `gt`, and
    backpropagates. The max-min reduction routes each box coordinate's
    gradient entirely to the arg-extreme point (lowest index on ties).

    When the boxes do not overlap the IoU loss carries no localization
    signal (only the degenerate shrink direction), so the update is
    suppressed and the trajectory stays flat.

    Returns (final box, per-step loss array).
    """
    if steps < 1:
        raise InvalidConfig(f"steps must be >= 1, got {steps}")
    if lr <= 0:
        raise InvalidConfig(f"learning rate must be positive, got {lr}")
    g = as_box(gt)
    pre = make_predefined_points(init, n)
    offsets = np.zeros((pre.n, 2))
    losses = np.zeros(steps)
    box = pre.source_box.copy()
    for t in range(steps):
        refined = refine_points(pre, offsets)
        box = bound_points(refined, refined[0])
        loss, dbox = iou_loss(box, g)
        losses[t] = loss
        iw = min(box[2], g[2]) - max(box[0], g[0])
        ih = min(box[3], g[3]) - max(box[1], g[1])
        if iw <= 0.0 or ih <= 0.0:
            continue  # disjoint: no useful gradient, leave offsets untouched
        grad = np.zeros_like(offsets)
        grad[np.argmin(refined[:, 0]), 0] += dbox[0] * pre.width
        grad[np.argmin(refined[:, 1]), 1] += dbox[1] * pre.height
        grad[np.argmax(refined[:, 0]), 0] += dbox[2] * pre.width
        grad[np.argmax(refined[:, 1]), 1] += dbox[3] * pre.height
        offsets -= lr * grad
    refined = refine_points(pre, offsets)
    box = bound_points(refined, refined[0])
    return box, losses
