"""Seeded gradient-check suites shared by the CLI and the acceptance tests.

Each suite builds random instances away from non-differentiable kinks (box
edges never aligned closer than 1e-2, probabilities inside the clamp) and
compares the analytic gradient against central finite differences.
"""

import numpy as np

from .losses import balanced_bce, cross_entropy, gradient_check, iou_loss, smooth_l1
from .lotm import HORIZONTAL, VERTICAL, DirectionalKernel, lotm_backward

TOLERANCE = 1e-4


def _random_overlapping_boxes(rng):
    """A (pred, gt) pair with positive overlap and no near-aligned edges."""
    while True:
        gx = rng.uniform(0.0, 10.0)
        gy = rng.uniform(0.0, 10.0)
        gw = rng.uniform(2.0, 8.0)
        gh = rng.uniform(2.0, 8.0)
        gt = np.array([gx, gy, gx + gw, gy + gh])
        shift = rng.uniform(-0.4, 0.4, 2) * (gw, gh)
        grow = rng.uniform(0.6, 1.5, 2)
        pred = np.array(
            [
                gx + shift[0],
                gy + shift[1],
                gx + shift[0] + gw * grow[0],
                gy + shift[1] + gh * grow[1],
            ]
        )
        iw = min(pred[2], gt[2]) - max(pred[0], gt[0])
        ih = min(pred[3], gt[3]) - max(pred[1], gt[1])
        if iw < 1e-2 or ih < 1e-2:
            continue
        if np.abs(pred - gt).min() < 1e-2:
            continue  # too close to a max/min tie
        return pred, gt


def iou_loss_suite(seed: int = 0, n: int = 40):
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n):
        pred, gt = _random_overlapping_boxes(rng)
        reports.append(gradient_check(lambda p: iou_loss(p, gt), pred))
    return reports


def balanced_bce_suite(seed: int = 0, n: int = 40):
    rng = np.random.default_rng(seed)
    reports = []
    for i in range(n):
        shape = (int(rng.integers(3, 9)), int(rng.integers(3, 9)))
        pred = rng.uniform(0.05, 0.95, shape)
        label = rng.random(shape) < 0.4
        ignore = (rng.random(shape) < 0.2) if i % 2 else None

        def evaluate(flat, label=label, ignore=ignore, shape=shape):
            loss, grad = balanced_bce(flat.reshape(shape), label, ignore)
            return loss, grad.reshape(-1)

        reports.append(gradient_check(evaluate, pred.reshape(-1)))
    return reports


def smooth_l1_suite(seed: int = 0, n: int = 20):
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n):
        m = int(rng.integers(2, 8))
        target = rng.uniform(-3.0, 3.0, m)
        beta = float(rng.uniform(0.5, 2.0))
        # keep |pred - target| away from the quadratic/linear switch at beta
        diff = rng.uniform(0.1, 0.8 * beta, m) * rng.choice([-1.0, 1.0], m)
        bump = rng.random(m) < 0.5
        diff[bump] = (beta + rng.uniform(0.2, 2.0, m)[bump]) * np.sign(diff[bump])
        pred = target + diff

        def evaluate(p, target=target, beta=beta):
            return smooth_l1(p, target, beta)

        reports.append(gradient_check(evaluate, pred))
    return reports


def cross_entropy_suite(seed: int = 0, n: int = 20):
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n):
        label = int(rng.integers(0, 2))

        def evaluate(p, label=label):
            loss, grad = cross_entropy(float(p[0]), label)
            return loss, np.array([grad])

        reports.append(gradient_check(evaluate, np.array([rng.uniform(0.05, 0.95)])))
    return reports


def lotm_suite(seed: int = 0, n: int = 30):
    rng = np.random.default_rng(seed)
    reports = []
    for i in range(n):
        channels = int(rng.integers(1, 3))
        k = int(rng.choice([1, 3, 5, 7]))
        h = int(rng.integers(5, 12))
        w = int(rng.integers(5, 12))
        features = rng.normal(0.0, 1.0, (channels, h, w))
        label = rng.random((h, w)) < 0.35
        ignore = (rng.random((h, w)) < 0.15) if i % 3 == 0 else None
        size = channels * k

        def evaluate(params, features=features, label=label, ignore=ignore,
                     channels=channels, k=k, size=size):
            hk = DirectionalKernel(HORIZONTAL, params[:size].reshape(channels, k),
                                   float(params[size]))
            vk = DirectionalKernel(VERTICAL, params[size + 1 : 2 * size + 1].reshape(channels, k),
                                   float(params[2 * size + 1]))
            loss, grads = lotm_backward(features, hk, vk, label, ignore)
            flat = np.concatenate(
                [
                    grads["hk_weights"].reshape(-1),
                    [grads["hk_bias"]],
                    grads["vk_weights"].reshape(-1),
                    [grads["vk_bias"]],
                ]
            )
            return loss, flat

        params = np.concatenate(
            [
                rng.uniform(-0.5, 0.5, size),
                [rng.uniform(-0.5, 0.5)],
                rng.uniform(-0.5, 0.5, size),
                [rng.uniform(-0.5, 0.5)],
            ]
        )
        reports.append(gradient_check(evaluate, params))
    return reports


def run_all(seed: int = 0):
    """All suites as (name, reports) pairs, in a stable order."""
    return [
        ("iou_loss", iou_loss_suite(seed)),
        ("balanced_bce", balanced_bce_suite(seed + 1)),
        ("smooth_l1", smooth_l1_suite(seed + 2)),
        ("cross_entropy", cross_entropy_suite(seed + 3)),
        ("lotm_backward", lotm_suite(seed + 4)),
    ]
