"""Shared test utilities and the acceptance-criteria result registry."""

from __future__ import annotations

import numpy as np

ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def record_criterion(name: str, passed: bool) -> None:
    ACCEPTANCE_RESULTS.append((name, passed))


def random_homography(rng: np.random.Generator, scale: float = 100.0) -> np.ndarray:
    """Random well-conditioned projective map: mild perspective on top of a
    random affine transform."""
    while True:
        a = np.eye(2) + rng.uniform(-0.3, 0.3, size=(2, 2))
        if abs(np.linalg.det(a)) < 0.3:
            continue
        m = np.eye(3)
        m[:2, :2] = a
        m[:2, 2] = rng.uniform(-0.2 * scale, 0.2 * scale, size=2)
        m[2, :2] = rng.uniform(-1e-4, 1e-4, size=2)
        return m / m[2, 2]


def scatter_points(rng: np.random.Generator, n: int, scale: float = 100.0) -> np.ndarray:
    """Random points with a non-degenerate spread (no near-collinear sets)."""
    while True:
        pts = rng.uniform(0.0, scale, size=(n, 2))
        centered = pts - pts.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        if s[-1] > 0.05 * scale:
            return pts
