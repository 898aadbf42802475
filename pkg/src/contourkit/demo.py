"""End-to-end desk-scale pipeline on synthetic scenes.

Generates seeded scenes, trains the two directional kernels on contour-band
labels, decodes held-out scenes into polygons (clustering candidates into
regions first), evaluates them against the scene annotations, and optionally
writes kernels, loss curve, overlays, and a metrics report to a directory.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decode import (
    ContourCandidates,
    DecodeConfig,
    adaptive_alpha,
    candidate_points,
    cluster_points,
    detection_from_candidates,
    extract_candidates,
)
from .evaluation import MatchResult, match_detections, metrics_report, prf
from .formats import atomic_write, render_overlay_svg, serialize_detections
from .labels import build_training_sample
from .lotm import TrainConfig, lotm_forward, save_kernel, train_toy
from .synthetic import generate_synthetic_scene

TRAIN_SCENES = 16
EVAL_SCENES = 8
SCENE_SIZE = 128
TRAIN_STEPS = 200
TRAIN_LR = 2.0


@dataclass
class DemoResult:
    hk: object
    vk: object
    loss_curve: np.ndarray
    detections: list = field(default_factory=list)  # list per held-out scene
    match: MatchResult = None
    recall: float = 0.0
    precision: float = 0.0
    f_measure: float = 0.0


def decode_scene_candidates(cands: ContourCandidates, cfg: DecodeConfig):
    """Split a whole-image candidate set into regions and reconstruct each.

    Single-linkage clustering at the adaptive alpha distance separates
    instances; each cluster with enough points becomes one Detection.
    """
    if len(cands) < cfg.min_candidates:
        return []
    pts = candidate_points(cands)
    link = adaptive_alpha(pts, max(cfg.alpha_scale, 2.0))
    dets = []
    for group in cluster_points(pts, link):
        sub = ContourCandidates(cands.points[group], cands.grid_shape)
        det = detection_from_candidates(sub, cfg)
        if det is not None:
            dets.append(det)
    return dets


def run_demo(
    seed: int,
    out_dir=None,
    single_direction: bool = False,
    skip_rescoring: bool = False,
    threads: int = 1,
    n_train: int = TRAIN_SCENES,
    n_eval: int = EVAL_SCENES,
    steps: int = TRAIN_STEPS,
    learning_rate: float = TRAIN_LR,
    size: int = SCENE_SIZE,
) -> DemoResult:
    """Run the full synthetic pipeline; see the module docstring."""
    train_scenes = [
        generate_synthetic_scene(seed + i, size, size) for i in range(n_train)
    ]
    eval_scenes = [
        generate_synthetic_scene(seed + 10_000 + i, size, size) for i in range(n_eval)
    ]

    dataset = []
    for scene in train_scenes:
        label, _, _ = build_training_sample(scene.records, size, size)
        dataset.append((scene.image[np.newaxis], label))
    cfg_train = TrainConfig(steps=steps, learning_rate=learning_rate, seed=seed)
    hk, vk, curve = train_toy(dataset, cfg_train)

    decode_cfg = DecodeConfig(
        single_direction=single_direction, skip_rescoring=skip_rescoring
    )

    def decode_one(scene):
        hmap, vmap = lotm_forward(scene.image[np.newaxis], hk, vk)
        cands = extract_candidates(hmap, vmap, decode_cfg)
        return cands, decode_scene_candidates(cands, decode_cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            decoded = list(pool.map(decode_one, eval_scenes))
    else:
        decoded = [decode_one(s) for s in eval_scenes]

    total = MatchResult()
    per_scene_dets = []
    for scene, (_, dets) in zip(eval_scenes, decoded):
        per_scene_dets.append(dets)
        m = match_detections(dets, scene.records, iou_thresh=0.5)
        total.tp += m.tp
        total.fp += m.fp
        total.fn += m.fn
    recall, precision, f = prf(total)
    result = DemoResult(hk, vk, curve, per_scene_dets, total, recall, precision, f)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_kernel(os.path.join(out_dir, "hk.txt"), hk)
        save_kernel(os.path.join(out_dir, "vk.txt"), vk)
        atomic_write(
            os.path.join(out_dir, "loss_curve.csv"),
            "step,loss\n" + "".join(f"{i},{v:.10g}\n" for i, v in enumerate(curve)),
        )
        for idx, (scene, (cands, dets)) in enumerate(zip(eval_scenes, decoded)):
            svg = render_overlay_svg(
                size, size, scene.records, dets, candidates=cands.points
            )
            atomic_write(os.path.join(out_dir, f"eval_{idx:02d}.svg"), svg)
            atomic_write(
                os.path.join(out_dir, f"eval_{idx:02d}.dets.jsonl"),
                serialize_detections(dets),
            )
        atomic_write(
            os.path.join(out_dir, "metrics.txt"),
            metrics_report(total, iou_thresh=0.5),
        )
    return result
