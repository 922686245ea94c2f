"""Clothing-template registry and frontal-area probing.

Templates are JSON descriptors next to base PNG canvases.  Regular
templates carry labeled parts (UV keypoints, matching garment keypoint
indices, a target rectangle and a polygon mask); irregular templates have
no parts and are filled purely by cell expansion.

Frontal-area probing discovers which UV pixels render into the frontal
view of a model by diffing a render of an all-black canvas against renders
with a white probe square at each traversal placement.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .datamodel import Rect, load_image
from .errors import (
    CanvasSizeMismatch,
    DescriptorInvalid,
    NoTemplateForCategory,
    OracleFailure,
)

log = logging.getLogger(__name__)

PROBE_SQUARE = 50
PROBE_THRESHOLD = 1.0   # mean absolute difference, 0-255 scale


@dataclass(frozen=True)
class UvPart:
    name: str
    uv_keypoints: np.ndarray             # (n, 2) on the UV canvas
    image_keypoint_indices: tuple[int, ...]
    target_rect: Rect
    mask: np.ndarray                     # bool, canvas-sized
    view: str = "front"                  # front | back


@dataclass(frozen=True)
class UvTemplate:
    template_id: str
    category: int
    kind: str                            # regular | irregular
    canvas: tuple[int, int]              # (width, height)
    parts: tuple[UvPart, ...]
    base_image: np.ndarray | None = None

    @property
    def registered_region(self) -> np.ndarray:
        w, h = self.canvas
        region = np.zeros((h, w), dtype=bool)
        for p in self.parts:
            region |= p.mask
        return region

    @property
    def fill_region(self) -> np.ndarray:
        w, h = self.canvas
        if self.kind == "irregular":
            return np.ones((h, w), dtype=bool)
        return ~self.registered_region


def rasterize_polygon(polygon, canvas: tuple[int, int]) -> np.ndarray:
    """Hard-edged polygon rasterization onto a (height, width) bool grid."""
    w, h = canvas
    img = Image.new("1", (w, h), 0)
    ImageDraw.Draw(img).polygon([(float(x), float(y)) for x, y in polygon], fill=1)
    return np.asarray(img, dtype=bool)


def _parse_template(desc: dict, directory: Path) -> UvTemplate:
    tid = desc.get("template_id")
    if not isinstance(tid, str) or not tid:
        raise DescriptorInvalid(str(tid), "missing template_id")
    category = desc.get("category")
    if not isinstance(category, int) or not (1 <= category <= 8):
        raise DescriptorInvalid(tid, "category must be 1..8")
    kind = desc.get("kind")
    if kind not in ("regular", "irregular"):
        raise DescriptorInvalid(tid, "kind must be regular or irregular")
    canvas = desc.get("canvas")
    if (not isinstance(canvas, list)) or len(canvas) != 2:
        raise DescriptorInvalid(tid, "canvas must be [w, h]")
    cw, ch = int(canvas[0]), int(canvas[1])
    if cw < 1 or ch < 1:
        raise DescriptorInvalid(tid, "canvas must be at least 1x1")

    parts_desc = desc.get("parts", [])
    if kind == "irregular" and parts_desc:
        raise DescriptorInvalid(tid, "irregular templates must not declare parts")
    if kind == "regular" and not parts_desc:
        raise DescriptorInvalid(tid, "regular templates need at least one part")

    parts = []
    occupancy = np.zeros((ch, cw), dtype=bool)
    for p in parts_desc:
        name = p.get("name", "?")
        kps = np.asarray(p.get("uv_keypoints", []), dtype=float)
        idx = tuple(p.get("image_keypoint_indices", []))
        if kps.ndim != 2 or kps.shape[1] != 2 or len(kps) < 4:
            raise DescriptorInvalid(tid, f"part {name}: needs >= 4 uv keypoints")
        if len(idx) != len(kps):
            raise DescriptorInvalid(tid, f"part {name}: keypoint/index count mismatch")
        tr = p.get("target_rect")
        if not isinstance(tr, list) or len(tr) != 4:
            raise DescriptorInvalid(tid, f"part {name}: target_rect must be [x, y, w, h]")
        rect = Rect(*map(float, tr))
        polygon = p.get("mask_polygon")
        if not isinstance(polygon, list) or len(polygon) < 3:
            raise DescriptorInvalid(tid, f"part {name}: mask_polygon needs >= 3 points")
        mask = rasterize_polygon(polygon, (cw, ch))
        if np.any(mask & occupancy):
            raise DescriptorInvalid(tid, f"part {name}: mask overlaps another part")
        occupancy |= mask
        view = p.get("view", "front")
        if view not in ("front", "back"):
            raise DescriptorInvalid(tid, f"part {name}: view must be front or back")
        parts.append(UvPart(name, kps, idx, rect, mask, view))

    base = None
    png = directory / f"{tid}.png"
    if png.exists():
        base = load_image(png)
        if base.shape[:2] != (ch, cw):
            raise CanvasSizeMismatch(
                f"{tid}: canvas PNG is {base.shape[1]}x{base.shape[0]}, descriptor says {cw}x{ch}")
    return UvTemplate(tid, category, kind, (cw, ch), tuple(parts), base)


def load_templates(path: str | Path) -> dict[str, UvTemplate]:
    """Load every ``*.json`` template descriptor in a directory.

    Returns a registry keyed by template id; missing categories are warned
    about, not fatal.
    """
    directory = Path(path)
    registry: dict[str, UvTemplate] = {}
    for desc_path in sorted(directory.glob("*.json")):
        desc = json.loads(desc_path.read_text())
        tpl = _parse_template(desc, directory)
        registry[tpl.template_id] = tpl
    present = {t.category for t in registry.values()}
    for cat in range(1, 9):
        if cat not in present:
            log.warning("no template available for category %d", cat)
    return registry


def select_template(category: int, registry: dict[str, UvTemplate],
                    rng: np.random.Generator) -> UvTemplate:
    """Uniform seeded choice among the category's templates (sorted by id)."""
    candidates = sorted(t.template_id for t in registry.values() if t.category == category)
    if not candidates:
        raise NoTemplateForCategory(f"category {category}")
    return registry[candidates[int(rng.integers(len(candidates)))]]


# ---------------------------------------------------------------------------
# frontal-area probing
# ---------------------------------------------------------------------------

def _placements(extent: int, square: int, stride: int) -> list[int]:
    """Stride-grid placements along one axis, final one clamped to the edge."""
    last = max(extent - square, 0)
    xs = list(range(0, last + 1, stride))
    if xs[-1] != last:
        xs.append(last)
    return xs


def probe_frontal_area(oracle, canvas: tuple[int, int], square: int = PROBE_SQUARE,
                       stride: int | None = None,
                       threshold: float = PROBE_THRESHOLD) -> np.ndarray:
    """Locate UV pixels that render into the oracle's view.

    The oracle maps a UV canvas image to a view image deterministically.
    The reference render uses an all-black canvas; a placement whose white
    probe square changes the view by more than ``threshold`` (mean absolute
    pixel difference, 0-255) marks its square region.  The returned mask is
    the union of marked squares.
    """
    w, h = canvas
    if stride is None:
        stride = square
    if stride > square or stride < 1:
        raise ValueError("stride must be in [1, square]")

    black = np.zeros((h, w, 3), dtype=np.uint8)
    try:
        reference = np.asarray(oracle(black), dtype=np.int16)
    except Exception as e:  # noqa: BLE001 - oracle is external
        raise OracleFailure((-1, -1), e) from e

    mask = np.zeros((h, w), dtype=bool)
    probe = black.copy()
    for y in _placements(h, square, stride):
        for x in _placements(w, square, stride):
            sq_h = min(square, h - y)
            sq_w = min(square, w - x)
            probe[y:y + sq_h, x:x + sq_w] = 255
            try:
                response = np.asarray(oracle(probe), dtype=np.int16)
            except Exception as e:  # noqa: BLE001
                raise OracleFailure((x, y), e) from e
            finally:
                probe[y:y + sq_h, x:x + sq_w] = 0
            if response.shape != reference.shape:
                raise OracleFailure((x, y), ValueError("view size changed between renders"))
            mad = float(np.abs(response - reference).mean())
            if mad > threshold:
                mask[y:y + sq_h, x:x + sq_w] = True
    return mask
