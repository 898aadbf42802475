"""Seeded synthetic scenes for the desk-scale pipeline.

A scene is an intensity grid holding textured quadrilateral "text" regions
(high-frequency texture in both directions, so both directional derivatives
respond) and 1-px vertical streak distractors (strong response in exactly one
direction; the false-positive prototype). Streaks carry no annotation. The
smooth background ramp has zero second derivative, so derivative-style
kernels stay silent on it.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, PlacementError
from .geometry import rasterize_polygon
from .labels import AnnotationRecord

PLACEMENT_RETRIES = 200
CLEARANCE = 6  # min pixel gap between placed elements


@dataclass
class StreakSegment:
    """A 1-px-wide vertical line distractor: column, first row, last row."""

    col: int
    row0: int
    row1: int


@dataclass
class SyntheticScene:
    image: np.ndarray  # (H, W) float64 intensities in [0, 1]
    records: list = field(default_factory=list)  # AnnotationRecord per text
    streaks: list = field(default_factory=list)  # StreakSegment per distractor


def streak_mask(scene: SyntheticScene) -> np.ndarray:
    """Bool mask of all streak pixels in the scene."""
    mask = np.zeros(scene.image.shape, dtype=bool)
    for s in scene.streaks:
        mask[s.row0 : s.row1 + 1, s.col] = True
    return mask


def _boxes_overlap(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def generate_synthetic_scene(
    seed: int,
    height: int = 128,
    width: int = 128,
    n_texts: int = 3,
    n_streaks: int = 2,
) -> SyntheticScene:
    """Deterministically build one scene from a seed.

    Text proxies are convex quadrilaterals (jittered rectangles) filled with
    per-pixel uniform texture; streaks are bright vertical 1-px segments that
    never intersect any text region. Raises PlacementError when the requested
    element count cannot be placed without overlap.
    """
    if height < 32 or width < 32:
        raise InvalidConfig(f"scene dimensions must be >= 32, got {height}x{width}")
    rng = np.random.default_rng(seed)

    # smooth diagonal ramp background: linear, second derivative zero
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    image = 0.05 + 0.05 * (xx / max(1, width - 1) + yy / max(1, height - 1)) / 2.0

    occupied = []  # clearance-expanded bounding boxes of placed elements
    records = []
    for _ in range(n_texts):
        for attempt in range(PLACEMENT_RETRIES):
            w = int(rng.integers(20, min(52, width // 2) + 1))
            h = int(rng.integers(12, min(32, height // 2) + 1))
            x0 = int(rng.integers(2, width - w - 2))
            y0 = int(rng.integers(2, height - h - 2))
            guard = (x0 - CLEARANCE, y0 - CLEARANCE, x0 + w + CLEARANCE, y0 + h + CLEARANCE)
            if any(_boxes_overlap(guard, other) for other in occupied):
                continue
            jitter = rng.uniform(-2.0, 2.0, (4, 2))
            quad = np.array(
                [[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]],
                dtype=np.float64,
            ) + jitter
            quad[:, 0] = np.clip(quad[:, 0], 1.0, width - 1.0)
            quad[:, 1] = np.clip(quad[:, 1], 1.0, height - 1.0)
            mask = rasterize_polygon(quad, height, width)
            image[mask] = rng.uniform(0.35, 1.0, int(mask.sum()))
            occupied.append(guard)
            records.append(AnnotationRecord(quad, ignore=False, transcription="text"))
            break
        else:
            raise PlacementError(
                f"could not place text {len(records) + 1}/{n_texts} after {PLACEMENT_RETRIES} tries"
            )

    streaks = []
    min_len = min(48, height - 12)
    max_len = min(72, height - 8)
    for _ in range(n_streaks):
        for attempt in range(PLACEMENT_RETRIES):
            length = int(rng.integers(min_len, max_len + 1))
            col = int(rng.integers(2, width - 2))
            row0 = int(rng.integers(2, height - length - 2))
            guard = (col - CLEARANCE, row0 - CLEARANCE, col + 1 + CLEARANCE, row0 + length + CLEARANCE)
            if any(_boxes_overlap(guard, other) for other in occupied):
                continue
            image[row0 : row0 + length, col] = 1.0
            occupied.append(guard)
            streaks.append(StreakSegment(col, row0, row0 + length - 1))
            break
        else:
            raise PlacementError(
                f"could not place streak {len(streaks) + 1}/{n_streaks} after {PLACEMENT_RETRIES} tries"
            )

    return SyntheticScene(image, records, streaks)
