"""Stochastic disturbance cropping of person images.

With probability rho an image is re-cropped: the top 0-0.1H and bottom
0-0.5H are removed, and one of three side strategies (left, right, both)
removes an independent 0-tau*W slice per selected side.  Crops are pure
sub-rectangles, never resampled.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ImageTooSmall

TOP_MAX = 0.1
BOTTOM_MAX = 0.5

SWEEP_GRID = [
    (0.0, 0.0), (0.1, 0.0), (0.2, 0.0), (0.3, 0.0), (0.4, 0.0), (0.5, 0.0),
    (0.3, 0.1), (0.3, 0.2), (0.3, 0.3), (0.3, 0.4),
]

_STRATEGIES = ("left", "right", "both")


@dataclass(frozen=True)
class CropPolicy:
    probability: float = 0.3     # rho
    side_rate: float = 0.3       # tau
    top_max: float = TOP_MAX
    bottom_max: float = BOTTOM_MAX

    def __post_init__(self):
        for name in ("probability", "side_rate", "top_max", "bottom_max"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class CropLog:
    image_id: str
    cropped: bool
    top: int = 0
    bottom: int = 0
    strategy: str | None = None
    left: int = 0
    right: int = 0

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "cropped": self.cropped,
            "top": self.top,
            "bottom": self.bottom,
            "strategy": self.strategy,
            "left": self.left,
            "right": self.right,
        }


def image_rng(seed: int, image_id: str) -> np.random.Generator:
    """Per-image RNG stream keyed by (global seed, image id).

    Hash-derived so reproducibility does not depend on worker scheduling.
    """
    digest = hashlib.sha256(f"{seed}:{image_id}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def disturb_crop(image: np.ndarray, policy: CropPolicy, rng: np.random.Generator,
                 image_id: str = "") -> tuple[np.ndarray, CropLog]:
    """Apply the disturbance-cropping policy to one image.

    Removal amounts are drawn as continuous pixels and floored, which keeps
    every removed margin within its stated bound; remaining width and height
    are clamped to at least 1 pixel.
    """
    h, w = image.shape[:2]
    if h < 4 or w < 4:
        raise ImageTooSmall(f"image {w}x{h} below 4x4 minimum")

    if rng.random() >= policy.probability:
        return image.copy(), CropLog(image_id, cropped=False)

    top = int(rng.uniform(0.0, policy.top_max * h))
    bottom = int(rng.uniform(0.0, policy.bottom_max * h))
    strategy = _STRATEGIES[int(rng.integers(3))]
    left = right = 0
    if strategy in ("left", "both"):
        left = int(rng.uniform(0.0, policy.side_rate * w))
    if strategy in ("right", "both"):
        right = int(rng.uniform(0.0, policy.side_rate * w))

    # clamp so at least one row/column survives
    bottom = min(bottom, h - 1 - top)
    right = min(right, w - 1 - left)

    cropped = image[top:h - bottom, left:w - right].copy()
    return cropped, CropLog(image_id, True, top, bottom, strategy, left, right)
