"""Training-objective mathematics with analytic gradients.

The box-regression loss is a smoothed negative log-IoU; contour heatmaps use
class-balanced binary cross-entropy; the box branch keeps the conventional
smooth-L1 / cross-entropy forms. Everything returns (loss, gradient) pairs so
callers can run plain gradient descent, and `gradient_check` verifies any of
them against central finite differences.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGrid, InvalidInput, NumericalError
from .geometry import as_box, box_area

# probability clamp preventing log(0)
EPS = 1e-7


@dataclass
class LossWeights:
    """Balance weights of the combined objective (all default to 1)."""

    arpn_reg: float = 1.0
    hcp: float = 1.0
    vcp: float = 1.0
    box_cls: float = 1.0
    box_reg: float = 1.0


@dataclass
class GradCheckReport:
    """Outcome of one analytic-vs-numeric gradient comparison."""

    max_rel_error: float
    per_param: np.ndarray = field(repr=False)
    step: float = 1e-5

    def ok(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def iou_loss(pred, gt):
    """Smoothed negative log-IoU of two boxes, with its analytic gradient.

    loss = -log((I + 1) / (U + 1)) with I the intersection area and
    U = area(pred) + area(gt) - I. Returns (loss, dloss/dpred) where the
    gradient is over (x_tl, y_tl, x_rb, y_rb) of the predicted box.

    The loss is piecewise smooth; at ties between pred and gt edges the
    subgradient routes to the gt side (derivative 0), and the exact minimum
    pred == gt reports a zero gradient.
    """
    p, g = as_box(pred), as_box(gt)
    if np.array_equal(p, g):
        return 0.0, np.zeros(4)

    iw = min(p[2], g[2]) - max(p[0], g[0])
    ih = min(p[3], g[3]) - max(p[1], g[1])
    inter = max(0.0, iw) * max(0.0, ih)
    area_p = box_area(p)
    union = area_p + box_area(g) - inter
    loss = float(np.log(union + 1.0) - np.log(inter + 1.0))

    w, h = p[2] - p[0], p[3] - p[1]
    d_area = np.array([-h, -w, h, w])
    d_inter = np.zeros(4)
    if iw > 0.0 and ih > 0.0:
        if p[0] > g[0]:
            d_inter[0] = -ih
        if p[1] > g[1]:
            d_inter[1] = -iw
        if p[2] < g[2]:
            d_inter[2] = ih
        if p[3] < g[3]:
            d_inter[3] = iw
    grad = (d_area - d_inter) / (union + 1.0) - d_inter / (inter + 1.0)
    return loss, grad


def balanced_bce(pred, label, ignore=None):
    """Class-balanced binary cross-entropy over a heatmap.

    Per pixel: -(N_neg/N) * y * log(p) - (N_pos/N) * (1-y) * log(1-p), with
    the positive/negative counts taken over non-ignored pixels and the result
    averaged over non-ignored pixels. If either class is empty the weights
    fall back to plain BCE. Predictions are clamped to [EPS, 1-EPS].

    Returns (loss, dloss/dpred) with zero gradient on ignored or clamped
    pixels.
    """
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(label, dtype=bool)
    if p.shape != y.shape:
        raise InvalidGrid(f"pred shape {p.shape} != label shape {y.shape}")
    if ignore is None:
        valid = np.ones_like(y, dtype=bool)
    else:
        ig = np.asarray(ignore, dtype=bool)
        if ig.shape != y.shape:
            raise InvalidGrid(f"ignore shape {ig.shape} != label shape {y.shape}")
        valid = ~ig

    n = int(valid.sum())
    if n == 0:
        return 0.0, np.zeros_like(p)
    n_pos = int((y & valid).sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        w_pos = w_neg = 1.0
    else:
        w_pos = n_neg / n
        w_neg = n_pos / n

    pc = np.clip(p, EPS, 1.0 - EPS)
    yf = y.astype(np.float64)
    per_pixel = -w_pos * yf * np.log(pc) - w_neg * (1.0 - yf) * np.log(1.0 - pc)
    loss = float(per_pixel[valid].sum() / n)

    grad = (-w_pos * yf / pc + w_neg * (1.0 - yf) / (1.0 - pc)) / n
    grad[~valid] = 0.0
    grad[(p <= EPS) | (p >= 1.0 - EPS)] = 0.0  # clamp is flat
    return loss, grad


def smooth_l1(pred, target, beta: float = 1.0):
    """Elementwise smooth-L1 averaged over elements; returns (loss, grad)."""
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(target, dtype=np.float64).reshape(-1)
    if p.shape != t.shape:
        raise InvalidInput(f"length mismatch: {p.shape} vs {t.shape}")
    if beta <= 0:
        raise InvalidInput(f"beta must be positive, got {beta}")
    d = p - t
    quad = np.abs(d) < beta
    per = np.where(quad, 0.5 * d * d / beta, np.abs(d) - 0.5 * beta)
    grad = np.where(quad, d / beta, np.sign(d)) / p.size
    return float(per.mean()), grad


def cross_entropy(prob: float, label: int):
    """Binary cross-entropy of a scalar probability; returns (loss, grad)."""
    pc = min(max(float(prob), EPS), 1.0 - EPS)
    y = float(label)
    loss = -y * np.log(pc) - (1.0 - y) * np.log(1.0 - pc)
    if prob <= EPS or prob >= 1.0 - EPS:
        grad = 0.0
    else:
        grad = -y / pc + (1.0 - y) / (1.0 - pc)
    return float(loss), float(grad)


def combined_loss(
    arpn_cls: float,
    arpn_reg: float,
    hcp: float,
    vcp: float,
    box_cls: float,
    box_reg: float,
    weights: LossWeights = None,
) -> float:
    """Weighted sum of the six objective components."""
    w = weights if weights is not None else LossWeights()
    parts = [arpn_cls, arpn_reg, hcp, vcp, box_cls, box_reg]
    for name, v in zip(
        ("arpn_cls", "arpn_reg", "hcp", "vcp", "box_cls", "box_reg"), parts
    ):
        if not np.isfinite(v) or v < 0:
            raise InvalidInput(f"component {name} must be finite and >= 0, got {v}")
    return float(
        arpn_cls
        + w.arpn_reg * arpn_reg
        + w.hcp * hcp
        + w.vcp * vcp
        + w.box_cls * box_cls
        + w.box_reg * box_reg
    )


def gradient_check(evaluator, params, step: float = 1e-5) -> GradCheckReport:
    """Compare an analytic gradient against central finite differences.

    `evaluator` maps a flat float parameter array to (loss, grad). The caller
    is responsible for keeping params away from non-differentiable kinks
    (within ~10*step); there the comparison is meaningless.

    Relative error per parameter: |analytic - numeric| / max(1, |a|, |n|).
    """
    x = np.asarray(params, dtype=np.float64).reshape(-1).copy()
    loss0, grad0 = evaluator(x)
    grad0 = np.asarray(grad0, dtype=np.float64).reshape(-1)
    if not np.isfinite(loss0) or not np.isfinite(grad0).all():
        raise NumericalError("evaluator produced non-finite loss or gradient")
    numeric = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += step
        lp = evaluator(xp)[0]
        xm = x.copy()
        xm[i] -= step
        lm = evaluator(xm)[0]
        if not (np.isfinite(lp) and np.isfinite(lm)):
            raise NumericalError(f"non-finite evaluation while probing parameter {i}")
        numeric[i] = (lp - lm) / (2.0 * step)
    denom = np.maximum(1.0, np.maximum(np.abs(grad0), np.abs(numeric)))
    rel = np.abs(grad0 - numeric) / denom
    return GradCheckReport(float(rel.max()), rel, step)
