"""Homogeneous cloth-cell search, scaling and mirror-tile expansion.

The search sweeps every square block of the feature grid and minimizes
(mean per-channel standard deviation) / (block area).  Standard deviations
are unbiased (n-1 denominator).  Ties are broken toward the larger area,
then the smaller row, then the smaller column, which makes the sweep fully
deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .datamodel import FeatureMap, Rect
from .errors import BlockOutOfBounds, GridTooSmall, SideTooSmall

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockStats:
    mean: np.ndarray   # (d,)
    std: np.ndarray    # (d,), unbiased
    count: int


@dataclass(frozen=True)
class BlockSelection:
    row: int
    col: int
    side: int
    ratio: float

    @property
    def area(self) -> int:
        return self.side * self.side


def round_half_up(v) -> np.ndarray | int:
    """Round-half-up, the discretization convention used throughout."""
    out = np.floor(np.asarray(v, dtype=float) + 0.5).astype(int)
    return int(out) if out.ndim == 0 else out


def block_stats(f: FeatureMap, row: int, col: int, side: int) -> BlockStats:
    if side < 2:
        raise SideTooSmall(f"side {side} < 2")
    if row < 0 or col < 0 or row + side > f.height or col + side > f.width:
        raise BlockOutOfBounds(f"block ({row},{col},side={side}) outside {f.height}x{f.width} grid")
    block = f.values[row:row + side, col:col + side].reshape(-1, f.dim).astype(np.float64)
    return BlockStats(block.mean(axis=0), block.std(axis=0, ddof=1), block.shape[0])


def _ratios_for_side(values: np.ndarray, side: int) -> np.ndarray:
    """Objective value for every placement of one block side.

    Returns an (h-side+1, w-side+1) array of (mean channel std) / area.
    """
    windows = sliding_window_view(values, (side, side), axis=(0, 1))
    # windows: (rows, cols, d, side, side)
    flat = windows.reshape(windows.shape[0], windows.shape[1], windows.shape[2], -1)
    std = flat.astype(np.float64).std(axis=3, ddof=1)
    return std.mean(axis=2) / float(side * side)


def rank_blocks(f: FeatureMap, min_side: int = 2, max_side: int | None = None) -> list[BlockSelection]:
    """All candidate blocks ordered best-first under the declared tie-break."""
    h, w = f.height, f.width
    if max_side is None:
        max_side = min(h, w)
    max_side = min(max_side, h, w)
    if min_side < 2:
        raise SideTooSmall(f"min_side {min_side} < 2")
    if max_side < min_side:
        raise GridTooSmall(f"grid {h}x{w} too small for min_side {min_side}")
    candidates = []
    for side in range(min_side, max_side + 1):
        ratios = _ratios_for_side(f.values, side)
        for (r, c), ratio in np.ndenumerate(ratios):
            candidates.append(BlockSelection(int(r), int(c), side, float(ratio)))
    candidates.sort(key=lambda b: (b.ratio, -b.area, b.row, b.col))
    return candidates


def find_homogeneous_cell(f: FeatureMap, min_side: int = 2,
                          max_side: int | None = None) -> BlockSelection:
    """Exhaustive sweep for the block minimizing (mean std) / area."""
    h, w = f.height, f.width
    if max_side is None:
        max_side = min(h, w)
    max_side = min(max_side, h, w)
    if min_side < 2:
        raise SideTooSmall(f"min_side {min_side} < 2")
    if max_side < min_side:
        raise GridTooSmall(f"grid {h}x{w} too small for min_side {min_side}")

    best: BlockSelection | None = None
    for side in range(min_side, max_side + 1):
        ratios = _ratios_for_side(f.values, side)
        idx = np.unravel_index(np.argmin(ratios), ratios.shape)  # first min: smallest row, col
        cand = BlockSelection(int(idx[0]), int(idx[1]), side, float(ratios[idx]))
        if best is None or cand.ratio < best.ratio or (
                cand.ratio == best.ratio and cand.area > best.area):
            best = cand
    assert best is not None
    return best


def block_to_image_rect(sel: BlockSelection, grid: tuple[int, int], clothes_rect: Rect) -> Rect:
    """Linearly map a feature-grid block to pixel coordinates in the clothes image."""
    gh, gw = grid
    x = clothes_rect.x + sel.col / gw * clothes_rect.w
    y = clothes_rect.y + sel.row / gh * clothes_rect.h
    w = sel.side / gw * clothes_rect.w
    h = sel.side / gh * clothes_rect.h
    xi, yi = round_half_up(x), round_half_up(y)
    wi, hi = max(1, round_half_up(w)), max(1, round_half_up(h))
    # clamp inside the clothes rect
    xi = min(max(xi, int(clothes_rect.x)), int(clothes_rect.x2) - 1)
    yi = min(max(yi, int(clothes_rect.y)), int(clothes_rect.y2) - 1)
    wi = min(wi, int(clothes_rect.x2) - xi)
    hi = min(hi, int(clothes_rect.y2) - yi)
    return Rect(xi, yi, max(1, wi), max(1, hi))


@dataclass(frozen=True)
class ScaledCellSpec:
    scaled_width: int
    scaled_height: int


def scale_cell(cell_dims: tuple[int, int], clothes_dims: tuple[int, int],
               target_rect_dims: tuple[int, int]) -> ScaledCellSpec:
    """Scale the cell proportionally to the registered target area.

    W_s = W_a / W_c * W_t (same vertically), rounded half-up with floor 1.
    """
    wa, ha = cell_dims
    wc, hc = clothes_dims
    wt, ht = target_rect_dims
    ws = max(1, round_half_up(wa / wc * wt))
    hs = max(1, round_half_up(ha / hc * ht))
    return ScaledCellSpec(ws, hs)


def resize_bilinear(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resample of an (H, W, 3) uint8 image to (height, width)."""
    sh, sw = image.shape[:2]
    if (sw, sh) == (width, height):
        return image.copy()
    # half-pixel-centered sampling grid, clamped to the source
    xs = (np.arange(width) + 0.5) * sw / width - 0.5
    ys = (np.arange(height) + 0.5) * sh / height - 0.5
    xs = np.clip(xs, 0, sw - 1)
    ys = np.clip(ys, 0, sh - 1)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]
    src = image.astype(np.float64)
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def mirror_tiled(cell: np.ndarray, height: int, width: int) -> np.ndarray:
    """Tile the cell from the origin, mirroring on odd tile columns/rows.

    Adjacent tiles share equal boundary rows/columns, so seams are
    continuous.
    """
    block = np.concatenate([
        np.concatenate([cell, cell[:, ::-1]], axis=1),
        np.concatenate([cell[::-1, :], cell[::-1, ::-1]], axis=1),
    ], axis=0)
    ch2, cw2 = block.shape[:2]
    reps_y = -(-height // ch2)
    reps_x = -(-width // cw2)
    tiled = np.tile(block, (reps_y, reps_x, 1))
    return tiled[:height, :width]


def expand_cell(cell: np.ndarray, spec: ScaledCellSpec | None,
                canvas: np.ndarray, fill_region: np.ndarray) -> np.ndarray:
    """Fill the masked canvas region with the (optionally rescaled) cell.

    Pixels outside ``fill_region`` are untouched; every pixel inside it is
    written.  An empty fill region is a warned no-op.
    """
    if not np.any(fill_region):
        log.warning("expand_cell: empty fill region, nothing to do")
        return canvas.copy()
    if spec is not None:
        cell = resize_bilinear(cell, spec.scaled_width, spec.scaled_height)
    h, w = canvas.shape[:2]
    tiled = mirror_tiled(cell, h, w)
    out = canvas.copy()
    out[fill_region] = tiled[fill_region]
    return out
