"""Built-in fallback feature extractor for the cell search.

Used when no ingested feature map is available, so the pipeline can run
without any neural adapter.  The clothes crop is box-averaged onto a
48x16 grid and each cell gets a 4-dim descriptor: mean R, G, B plus mean
gradient magnitude.
"""

from __future__ import annotations

import numpy as np

from .datamodel import FeatureMap

GRID_H = 48
GRID_W = 16
FALLBACK_DIM = 4


def _box_average(values: np.ndarray, grid_h: int, grid_w: int) -> np.ndarray:
    """Average an (H, W) array over a grid_h x grid_w partition."""
    h, w = values.shape
    row_edges = np.linspace(0, h, grid_h + 1).round().astype(int)
    col_edges = np.linspace(0, w, grid_w + 1).round().astype(int)
    out = np.zeros((grid_h, grid_w), dtype=np.float64)
    for i in range(grid_h):
        r0, r1 = row_edges[i], max(row_edges[i + 1], row_edges[i] + 1)
        for j in range(grid_w):
            c0, c1 = col_edges[j], max(col_edges[j + 1], col_edges[j] + 1)
            out[i, j] = values[r0:r1, c0:c1].mean()
    return out


def extract_fallback_features(crop: np.ndarray, grid_h: int = GRID_H,
                              grid_w: int = GRID_W) -> FeatureMap:
    """Mean-RGB + gradient-magnitude feature grid of a clothes crop."""
    img = crop.astype(np.float64)
    gray = img.mean(axis=2)
    gy, gx = np.gradient(gray)
    grad = np.hypot(gx, gy)
    channels = [img[:, :, 0], img[:, :, 1], img[:, :, 2], grad]
    grid = np.stack([_box_average(c, grid_h, grid_w) for c in channels], axis=2)
    return FeatureMap(grid.astype(np.float32))
