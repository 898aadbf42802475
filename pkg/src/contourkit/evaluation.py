"""Polygon-level detection metrics.

Detections are matched one-to-one against ground truth greedily in descending
score order at an IoU threshold (rasterized polygon IoU). Regions flagged
DO-NOT-CARE absorb detections without counting them. This is an IoU-threshold
protocol, i.e. an approximation of the official DetEval-style scripts, and
reports label it as such.
"""

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .decode import Detection
from .errors import InvalidConfig, InvalidPolygon
from .geometry import polygon_area, polygon_iou

PROTOCOL = "iou-greedy (IoU-threshold approximation, not DetEval)"


@dataclass
class MatchResult:
    """Counts and matched pairs of one evaluation run."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    pairs: list = field(default_factory=list)  # (det index, gt index, iou)
    ignored_det_indices: list = field(default_factory=list)

    @property
    def ignored_dets(self) -> int:
        return len(self.ignored_det_indices)


def match_detections(dets, gts, iou_thresh: float = 0.5, resolution: int = 256) -> MatchResult:
    """Greedy score-ordered one-to-one matching of detections to ground truth.

    Each detection (best score first, ties by index) matches the unmatched
    non-ignored ground-truth polygon with the highest IoU if that IoU reaches
    the threshold. A detection whose only qualifying overlap is with a
    DO-NOT-CARE region is discarded from the counts; ignored regions may
    absorb any number of detections. Leftover detections are false positives,
    leftover non-ignored ground truths are false negatives.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise InvalidConfig(f"iou_thresh must be in (0, 1), got {iou_thresh}")
    result = MatchResult()
    care = [i for i, g in enumerate(gts) if not g.ignore]
    dontcare = [i for i, g in enumerate(gts) if g.ignore]
    taken = set()
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    for di in order:
        det = dets[di]
        best_gi, best_iou = None, 0.0
        try:
            for gi in care:
                if gi in taken:
                    continue
                iou = polygon_iou(det.polygon, gts[gi].polygon, resolution)
                if iou > best_iou:
                    best_gi, best_iou = gi, iou
        except InvalidPolygon as exc:
            raise InvalidPolygon(f"detection {di} / gt {gi}: {exc}") from exc
        if best_gi is not None and best_iou >= iou_thresh:
            taken.add(best_gi)
            result.tp += 1
            result.pairs.append((di, best_gi, best_iou))
            continue
        ignored_iou = max(
            (polygon_iou(det.polygon, gts[gi].polygon, resolution) for gi in dontcare),
            default=0.0,
        )
        if ignored_iou >= iou_thresh:
            result.ignored_det_indices.append(di)
        else:
            result.fp += 1
    result.fn = len(care) - result.tp
    return result


def prf(m: MatchResult):
    """(recall, precision, f_measure) with 0/0 -> 0 conventions."""
    recall = m.tp / (m.tp + m.fn) if (m.tp + m.fn) > 0 else 0.0
    precision = m.tp / (m.tp + m.fp) if (m.tp + m.fp) > 0 else 0.0
    f = 2.0 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    return recall, precision, f


@dataclass
class BucketResult:
    """Per-size-bucket counts and metrics."""

    label: str
    tp: int
    fp: int
    fn: int
    recall: float
    precision: float
    f_measure: float


def area_tertiles(gts) -> list:
    """Default size-bucket boundaries: area tertiles of the non-ignored GT set."""
    areas = sorted(polygon_area(g.polygon) for g in gts if not g.ignore)
    if len(areas) < 3:
        return []
    return [
        float(np.quantile(areas, 1 / 3)),
        float(np.quantile(areas, 2 / 3)),
    ]


def bucketed_prf(dets, gts, boundaries, iou_thresh: float = 0.5, resolution: int = 256):
    """Size-bucketed metrics: a matched pair is valid only within one bucket.

    Ground truths and detections are assigned to buckets by polygon area
    (`boundaries` ascending; bucket b covers [b_prev, b_next) with the last
    bucket open-ended). Pairs whose detection and ground truth land in
    different buckets are invalid: the detection counts as a false positive
    in its bucket and the ground truth as a false negative in its own.
    Detections absorbed by DO-NOT-CARE regions stay excluded everywhere.
    """
    bounds = [float(b) for b in boundaries]
    if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
        raise InvalidConfig(f"bucket boundaries must be sorted ascending: {bounds}")
    n_buckets = len(bounds) + 1
    match = match_detections(dets, gts, iou_thresh, resolution)

    det_bucket = [bisect_right(bounds, polygon_area(d.polygon)) for d in dets]
    gt_bucket = [bisect_right(bounds, polygon_area(g.polygon)) for g in gts]

    valid_pairs = [(di, gi) for di, gi, _ in match.pairs if det_bucket[di] == gt_bucket[gi]]
    valid_dets = {di for di, _ in valid_pairs}
    valid_gts = {gi for _, gi in valid_pairs}
    absorbed = set(match.ignored_det_indices)

    results = []
    for b in range(n_buckets):
        tp = sum(1 for di, _ in valid_pairs if det_bucket[di] == b)
        fp = sum(
            1
            for di in range(len(dets))
            if det_bucket[di] == b and di not in valid_dets and di not in absorbed
        )
        fn = sum(
            1
            for gi in range(len(gts))
            if gt_bucket[gi] == b and not gts[gi].ignore and gi not in valid_gts
        )
        r, p, f = prf(MatchResult(tp=tp, fp=fp, fn=fn))
        lo = "0" if b == 0 else f"{bounds[b - 1]:g}"
        hi = "inf" if b == n_buckets - 1 else f"{bounds[b]:g}"
        results.append(BucketResult(f"[{lo},{hi})", tp, fp, fn, r, p, f))
    return results


def metrics_report(match: MatchResult, buckets=None, iou_thresh: float = 0.5) -> str:
    """Human- and machine-readable metrics report.

    Key = value lines followed by `bucket,recall,precision,f` rows with 4
    decimal places; the global row is labeled `all`.
    """
    recall, precision, f = prf(match)
    lines = [
        f"protocol = {PROTOCOL}",
        f"iou_thresh = {iou_thresh:g}",
        f"tp = {match.tp}",
        f"fp = {match.fp}",
        f"fn = {match.fn}",
        f"ignored_detections = {match.ignored_dets}",
        f"recall = {recall:.4f}",
        f"precision = {precision:.4f}",
        f"f_measure = {f:.4f}",
        "",
        "bucket,recall,precision,f",
        f"all,{recall:.4f},{precision:.4f},{f:.4f}",
    ]
    for b in buckets or []:
        lines.append(f"{b.label},{b.recall:.4f},{b.precision:.4f},{b.f_measure:.4f}")
    return "\n".join(lines) + "\n"
