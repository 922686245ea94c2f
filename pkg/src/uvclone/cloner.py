"""Per-garment cloning onto UV templates and outfit composition.

Regular templates get registered mapping (per-part homography warps) with
homogeneous expansion for the rest of the canvas; irregular templates are
filled purely by expansion at the cell's original scale.  A part whose
homography cannot be fit degrades to expansion for that part instead of
sinking the whole garment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cell import (
    BlockSelection,
    block_to_image_rect,
    expand_cell,
    find_homogeneous_cell,
    rank_blocks,
    scale_cell,
)
from .datamodel import (
    FeatureMap,
    GarmentAnnotation,
    Rect,
    garment_slot,
)
from .errors import (
    CategoryMismatch,
    ConflictingGarments,
    DegeneratePolygon,
    MissingBackParts,
    NoGarments,
)
from .features import extract_fallback_features
from .homography import Correspondences, warp_parts
from .templates import UvTemplate, rasterize_polygon

log = logging.getLogger(__name__)

SUSPECT_RMSE_PX = 5.0

METHOD_REGISTERED = "registered+expansion"
METHOD_EXPANSION = "expansion-only"


@dataclass(frozen=True)
class CloneResult:
    image_id: str
    category: int
    template_id: str
    uv_map: np.ndarray
    cell_rect: Rect                       # in full-image coordinates
    method: str
    homography_rmse: dict[str, float] | None = None
    registered_map: np.ndarray | None = None
    failed_parts: tuple[str, ...] = ()

    @property
    def suspect(self) -> bool:
        if not self.homography_rmse:
            return False
        return any(r > SUSPECT_RMSE_PX for r in self.homography_rmse.values())


@dataclass(frozen=True)
class OutfitRecord:
    image_id: str
    upper: CloneResult | None = None
    lower: CloneResult | None = None
    dress: CloneResult | None = None

    @property
    def results(self) -> list[CloneResult]:
        return [r for r in (self.upper, self.lower, self.dress) if r is not None]


def mask_garment(image: np.ndarray, g: GarmentAnnotation) -> np.ndarray:
    """Crop the garment bbox and black out everything outside the keypoint
    polygon (schema order, closed)."""
    bbox = g.bbox.as_int()
    crop = image[bbox.y:bbox.y + bbox.h, bbox.x:bbox.x + bbox.w].copy()
    local = g.keypoints - np.array([bbox.x, bbox.y], dtype=float)
    # shoelace area of the keypoint polygon
    x, y = local[:, 0], local[:, 1]
    area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    if area < 4.0:
        raise DegeneratePolygon(f"garment polygon area {area:.2f} px^2 < 4")
    inside = rasterize_polygon(local, (bbox.w, bbox.h))
    crop[~inside] = 0
    return crop


def _feature_grid(crop: np.ndarray, feature: FeatureMap | None) -> FeatureMap:
    return feature if feature is not None else extract_fallback_features(crop)


def choose_cell(crop: np.ndarray, feature: FeatureMap | None) -> tuple[BlockSelection, Rect]:
    """Best homogeneous block avoiding blacked-out pixels.

    Candidates are walked best-first; the first block whose image rect has
    no black pixels wins.  When every block touches black, the one with the
    smallest black fraction (best-first on ties) wins.
    """
    f = _feature_grid(crop, feature)
    grid = (f.height, f.width)
    crop_rect = Rect(0, 0, crop.shape[1], crop.shape[0])
    black = np.all(crop == 0, axis=2)

    if not black.any():
        sel = find_homogeneous_cell(f)
        return sel, block_to_image_rect(sel, grid, crop_rect)

    best = None
    best_fraction = np.inf
    for sel in rank_blocks(f):
        rect = block_to_image_rect(sel, grid, crop_rect)
        ri, rj = int(rect.y), int(rect.x)
        fraction = float(black[ri:ri + int(rect.h), rj:rj + int(rect.w)].mean())
        if fraction == 0.0:
            return sel, rect
        if fraction < best_fraction:
            best, best_fraction = (sel, rect), fraction
    assert best is not None
    return best


def _cut_cell(crop: np.ndarray, rect: Rect) -> np.ndarray:
    r = rect.as_int()
    return crop[r.y:r.y + r.h, r.x:r.x + r.w].copy()


def _target_dims(parts) -> tuple[int, int]:
    """Bounding dimensions of the registered target area across parts."""
    x0 = min(p.target_rect.x for p in parts)
    y0 = min(p.target_rect.y for p in parts)
    x1 = max(p.target_rect.x2 for p in parts)
    y1 = max(p.target_rect.y2 for p in parts)
    return int(round(x1 - x0)), int(round(y1 - y0))


def _base_canvas(t: UvTemplate) -> np.ndarray:
    if t.base_image is not None:
        return t.base_image.copy()
    w, h = t.canvas
    return np.zeros((h, w, 3), dtype=np.uint8)


def _register_parts(crop: np.ndarray, g: GarmentAnnotation, t: UvTemplate,
                    canvas: np.ndarray, parts) -> tuple[np.ndarray, dict, list[str]]:
    bbox = g.bbox.as_int()
    origin = np.array([bbox.x, bbox.y], dtype=float)
    specs = []
    for part in parts:
        image_kps = g.keypoints[list(part.image_keypoint_indices)] - origin
        corr = Correspondences(part.uv_keypoints, image_kps)
        specs.append((part.name, corr, part.mask))
    warped, results = warp_parts(crop, specs, canvas)
    rmse = {}
    failed = []
    for name, res in results.items():
        if isinstance(res, Exception):
            log.warning("part %s degraded to expansion: %s", name, res)
            failed.append(name)
        else:
            rmse[name] = res.rmse
    return warped, rmse, failed


def clone_regular(image: np.ndarray, g: GarmentAnnotation, t: UvTemplate,
                  feature: FeatureMap | None = None, image_id: str = "") -> CloneResult:
    """Registered mapping into the template parts plus expansion elsewhere."""
    if t.kind != "regular":
        raise CategoryMismatch(f"template {t.template_id} is not regular")
    if t.category != g.category:
        raise CategoryMismatch(
            f"garment category {g.category} vs template category {t.category}")
    return _clone_with_parts(image, g, t, t.parts, {"front": (image, g)}, feature, image_id)


def clone_regular_multiview(front: tuple[np.ndarray, GarmentAnnotation],
                            back: tuple[np.ndarray, GarmentAnnotation],
                            t: UvTemplate, feature: FeatureMap | None = None,
                            image_id: str = "") -> CloneResult:
    """Front-designated parts warp from the front image, back parts from the
    back image; the expansion cell comes from the front image."""
    if not any(p.view == "back" for p in t.parts):
        raise MissingBackParts(f"template {t.template_id} has no back parts")
    image, g = front
    if t.category != g.category:
        raise CategoryMismatch(
            f"garment category {g.category} vs template category {t.category}")
    return _clone_with_parts(image, g, t, t.parts,
                             {"front": front, "back": back}, feature, image_id)


def _clone_with_parts(image, g, t, parts, views, feature, image_id) -> CloneResult:
    canvas = _base_canvas(t)
    front_crop = mask_garment(*views["front"])
    crops = {"front": front_crop}
    if "back" in views:
        crops["back"] = mask_garment(*views["back"])

    rmse: dict[str, float] = {}
    failed: list[str] = []
    for view_name in ("front", "back"):
        view_parts = [p for p in parts if p.view == view_name]
        if not view_parts or view_name not in crops:
            continue
        crop_v = crops[view_name]
        _, g_v = views[view_name]
        canvas, r, f = _register_parts(crop_v, g_v, t, canvas, view_parts)
        rmse.update(r)
        failed.extend(f)
    registered = canvas.copy()

    sel, cell_rect = choose_cell(front_crop, feature)
    cell = _cut_cell(front_crop, cell_rect)

    ok_parts = [p for p in parts if p.name in rmse]
    fill = t.fill_region.copy()
    for p in parts:
        if p.name in failed:
            fill |= p.mask
    if ok_parts:
        wt, ht = _target_dims(ok_parts)
        spec = scale_cell((cell.shape[1], cell.shape[0]),
                          (front_crop.shape[1], front_crop.shape[0]), (wt, ht))
        method = METHOD_REGISTERED
    else:
        spec = None
        method = METHOD_EXPANSION
        fill[:] = True
    canvas = expand_cell(cell, spec, canvas, fill)

    bbox = g.bbox.as_int()
    abs_rect = Rect(cell_rect.x + bbox.x, cell_rect.y + bbox.y, cell_rect.w, cell_rect.h)
    return CloneResult(image_id, g.category, t.template_id, canvas, abs_rect,
                       method, rmse if method == METHOD_REGISTERED else None,
                       registered_map=registered, failed_parts=tuple(failed))


def clone_irregular(image: np.ndarray, g: GarmentAnnotation, t: UvTemplate,
                    feature: FeatureMap | None = None, image_id: str = "") -> CloneResult:
    """Pure expansion at the cell's original scale over the whole canvas."""
    if t.kind != "irregular":
        raise CategoryMismatch(f"template {t.template_id} is not irregular")
    if t.category != g.category:
        raise CategoryMismatch(
            f"garment category {g.category} vs template category {t.category}")
    crop = mask_garment(image, g)
    sel, cell_rect = choose_cell(crop, feature)
    cell = _cut_cell(crop, cell_rect)
    canvas = expand_cell(cell, None, _base_canvas(t), t.fill_region)
    bbox = g.bbox.as_int()
    abs_rect = Rect(cell_rect.x + bbox.x, cell_rect.y + bbox.y, cell_rect.w, cell_rect.h)
    return CloneResult(image_id, g.category, t.template_id, canvas, abs_rect,
                       METHOD_EXPANSION)


def clone_garment(image: np.ndarray, g: GarmentAnnotation, t: UvTemplate,
                  feature: FeatureMap | None = None, image_id: str = "") -> CloneResult:
    if t.kind == "regular":
        return clone_regular(image, g, t, feature, image_id)
    return clone_irregular(image, g, t, feature, image_id)


def compose_outfit(records: list[CloneResult]) -> OutfitRecord:
    """Slot per-garment results into upper / lower / dress, preserving the
    real-world collocation.  A dress excludes any other garment."""
    if not records:
        raise NoGarments("no clone results to compose")
    ids = {r.image_id for r in records}
    if len(ids) != 1:
        raise ValueError(f"mixed image ids in outfit: {sorted(ids)}")
    image_id = records[0].image_id

    slots: dict[str, CloneResult] = {}
    for r in records:
        slot = garment_slot(r.category)
        if slot in slots:
            log.warning("duplicate %s garment for %s; keeping the first", slot, image_id)
            continue
        slots[slot] = r
    if "dress" in slots and ("upper" in slots or "lower" in slots):
        raise ConflictingGarments(f"{image_id}: dress combined with separates")
    return OutfitRecord(image_id, slots.get("upper"), slots.get("lower"), slots.get("dress"))
