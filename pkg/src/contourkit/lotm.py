"""Orthogonal texture modeling with trainable directional kernels.

Two parallel branches slide a 1 x k kernel along rows and a k x 1 kernel
along columns of a feature stack, each followed by a sigmoid, producing one
heatmap per direction. Either map responds only to intensity structure along
its own axis, which is what lets the decoder discard unidirectional patterns.

Forward, exact backprop (through the class-balanced BCE supervision), a small
deterministic gradient-descent trainer, and a textual kernel checkpoint
format live here. Convolution is correlation (no kernel flip) with zero
padding along the kernel axis only, keeping the output the same size.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, InvalidGrid, InvalidInput
from .losses import balanced_bce

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass
class DirectionalKernel:
    """1 x k (horizontal) or k x 1 (vertical) convolution weights + bias."""

    orientation: str
    weights: np.ndarray  # (channels_in, k) float64
    bias: float = 0.0

    def __post_init__(self):
        if self.orientation not in (HORIZONTAL, VERTICAL):
            raise InvalidConfig(f"unknown orientation {self.orientation!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise InvalidConfig(
                f"weights must be (channels, k), got shape {self.weights.shape}"
            )
        if self.k % 2 == 0:
            raise InvalidConfig(f"kernel size must be odd, got {self.k}")
        if not np.isfinite(self.weights).all() or not np.isfinite(self.bias):
            raise InvalidConfig("kernel has non-finite parameters")

    @property
    def channels_in(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]


def _as_feature_stack(features) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 2:
        f = f[np.newaxis]
    if f.ndim != 3:
        raise InvalidGrid(f"features must be (C, H, W), got shape {f.shape}")
    return f


def directional_conv(features, kernel: DirectionalKernel) -> np.ndarray:
    """Correlate a feature stack with a directional kernel.

    Zero padding of (k-1)/2 is applied along the kernel's axis only, so the
    output grid keeps the input height and width. Horizontal kernels mix
    values along each row, vertical kernels along each column.
    """
    f = _as_feature_stack(features)
    if kernel.channels_in != f.shape[0]:
        raise InvalidConfig(
            f"kernel expects {kernel.channels_in} channels, features have {f.shape[0]}"
        )
    _, h, w = f.shape
    half = (kernel.k - 1) // 2
    out = np.full((h, w), kernel.bias, dtype=np.float64)
    if kernel.orientation == HORIZONTAL:
        pad = np.pad(f, ((0, 0), (0, 0), (half, half)))
        for t in range(kernel.k):
            out += np.tensordot(kernel.weights[:, t], pad[:, :, t : t + w], axes=(0, 0))
    else:
        pad = np.pad(f, ((0, 0), (half, half), (0, 0)))
        for t in range(kernel.k):
            out += np.tensordot(kernel.weights[:, t], pad[:, t : t + h, :], axes=(0, 0))
    return out


def sigmoid_grid(grid) -> np.ndarray:
    """Elementwise logistic sigmoid, numerically stable for large |x|."""
    x = np.asarray(grid, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lotm_forward(features, hk: DirectionalKernel, vk: DirectionalKernel):
    """Run both directional branches; returns (Hmap, Vmap) in (0, 1)."""
    if hk.orientation != HORIZONTAL or vk.orientation != VERTICAL:
        raise InvalidConfig(
            f"expected horizontal+vertical kernels, got {hk.orientation}+{vk.orientation}"
        )
    hmap = sigmoid_grid(directional_conv(features, hk))
    vmap = sigmoid_grid(directional_conv(features, vk))
    return hmap, vmap


def lotm_backward(features, hk, vk, label, ignore=None):
    """Loss and exact parameter gradients of both branches.

    Both heatmaps are supervised with the same contour label through the
    class-balanced BCE; the total loss is the sum of the two branch losses.
    Returns (loss, {"hk_weights", "hk_bias", "vk_weights", "vk_bias"}).
    """
    f = _as_feature_stack(features)
    y = np.asarray(label, dtype=bool)
    if y.shape != f.shape[1:]:
        raise InvalidGrid(f"label shape {y.shape} != feature shape {f.shape[1:]}")
    loss = 0.0
    grads = {}
    for name, kernel in (("hk", hk), ("vk", vk)):
        z = directional_conv(f, kernel)
        p = sigmoid_grid(z)
        branch_loss, dp = balanced_bce(p, y, ignore)
        loss += branch_loss
        dz = dp * p * (1.0 - p)
        _, h, w = f.shape
        half = (kernel.k - 1) // 2
        dw = np.zeros_like(kernel.weights)
        if kernel.orientation == HORIZONTAL:
            pad = np.pad(f, ((0, 0), (0, 0), (half, half)))
            for t in range(kernel.k):
                dw[:, t] = np.tensordot(dz, pad[:, :, t : t + w], axes=([0, 1], [1, 2]))
        else:
            pad = np.pad(f, ((0, 0), (half, half), (0, 0)))
            for t in range(kernel.k):
                dw[:, t] = np.tensordot(dz, pad[:, t : t + h, :], axes=([0, 1], [1, 2]))
        grads[f"{name}_weights"] = dw
        grads[f"{name}_bias"] = float(dz.sum())
    return float(loss), grads


@dataclass
class TrainConfig:
    """Hyperparameters of the toy gradient-descent trainer."""

    steps: int = 200
    learning_rate: float = 0.5
    seed: int = 0
    k: int = 3

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidConfig(f"steps must be >= 1, got {self.steps}")
        if self.learning_rate < 0:
            raise InvalidConfig(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.k < 1 or self.k % 2 == 0:
            raise InvalidConfig(f"kernel size must be odd >= 1, got {self.k}")


def train_toy(dataset, cfg: TrainConfig):
    """Fit both directional kernels on (features, label) pairs.

    Plain gradient descent from seeded uniform [-0.1, 0.1] parameters; the
    per-step loss is the mean branch-sum loss over the dataset, recorded
    before each update. Deterministic given the seed.

    Returns (hk, vk, loss curve).
    """
    if not dataset:
        raise InvalidInput("dataset is empty")
    stacks = [_as_feature_stack(f) for f, _ in dataset]
    channels = stacks[0].shape[0]
    for s in stacks:
        if s.shape[0] != channels:
            raise InvalidInput("inconsistent channel counts in dataset")

    rng = np.random.default_rng(cfg.seed)
    hk = DirectionalKernel(
        HORIZONTAL, rng.uniform(-0.1, 0.1, (channels, cfg.k)), float(rng.uniform(-0.1, 0.1))
    )
    vk = DirectionalKernel(
        VERTICAL, rng.uniform(-0.1, 0.1, (channels, cfg.k)), float(rng.uniform(-0.1, 0.1))
    )
    curve = np.zeros(cfg.steps)
    for step in range(cfg.steps):
        total = 0.0
        acc = {
            "hk_weights": np.zeros_like(hk.weights),
            "hk_bias": 0.0,
            "vk_weights": np.zeros_like(vk.weights),
            "vk_bias": 0.0,
        }
        for feats, label in zip(stacks, (lbl for _, lbl in dataset)):
            loss, grads = lotm_backward(feats, hk, vk, label)
            total += loss
            for key in acc:
                acc[key] = acc[key] + grads[key]
        m = len(dataset)
        curve[step] = total / m
        lr = cfg.learning_rate
        hk = DirectionalKernel(HORIZONTAL, hk.weights - lr * acc["hk_weights"] / m,
                               hk.bias - lr * acc["hk_bias"] / m)
        vk = DirectionalKernel(VERTICAL, vk.weights - lr * acc["vk_weights"] / m,
                               vk.bias - lr * acc["vk_bias"] / m)
    return hk, vk, curve


def second_difference_kernel(
    orientation: str, gain: float = 4.0, channels: int = 1
) -> DirectionalKernel:
    """Fixed 1-D second-difference kernel [-g, 2g, -g] along one axis.

    Responds strongly to 1-px lines and high-frequency texture along its own
    axis, stays at zero on constant or linear-ramp intensity. Useful as an
    oracle texture model in tests and demos.
    """
    base = gain * np.array([-1.0, 2.0, -1.0])
    return DirectionalKernel(orientation, np.tile(base, (channels, 1)), 0.0)


def save_kernel(path, kernel: DirectionalKernel) -> None:
    """Write a kernel as a textual key-value checkpoint (17 significant digits)."""
    flat = " ".join(format(v, ".17g") for v in kernel.weights.reshape(-1))
    text = (
        f"orientation {kernel.orientation}\n"
        f"k {kernel.k}\n"
        f"channels {kernel.channels_in}\n"
        f"weights {flat}\n"
        f"bias {format(kernel.bias, '.17g')}\n"
    )
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def load_kernel(path) -> DirectionalKernel:
    """Read a kernel checkpoint written by `save_kernel`."""
    fields = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition(" ")
            fields[key] = value
    try:
        orientation = fields["orientation"]
        k = int(fields["k"])
        channels = int(fields["channels"])
        weights = np.array([float(v) for v in fields["weights"].split()])
        bias = float(fields["bias"])
    except (KeyError, ValueError) as exc:
        raise InvalidConfig(f"malformed kernel checkpoint {path}: {exc}") from exc
    if weights.size != channels * k:
        raise InvalidConfig(
            f"checkpoint {path}: expected {channels * k} weights, got {weights.size}"
        )
    return DirectionalKernel(orientation, weights.reshape(channels, k), bias)
