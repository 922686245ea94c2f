"""Domain types and file formats.

Coordinate convention used throughout: pixel centers at integer coordinates,
origin at the top-left, x to the right, y down.

File formats:
  * person corpus  -- JSON lines, one record per line
  * feature map    -- "FMAP" + 3x uint32-LE (height, width, dim) + float32-LE payload
  * distance matrix-- "DMAT" + uint32-LE n + n*n float32-LE payload
  * images         -- 8-bit RGB PNG
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    AsymmetryTooLarge,
    BadMagic,
    DimMismatch,
    FileUnreadable,
    NegativeDistance,
    NonFiniteValue,
    SchemaViolation,
)

log = logging.getLogger(__name__)

N_POSE_KEYPOINTS = 17

# COCO keypoint indices used by the pose rules
KP_LEFT_SHOULDER = 5
KP_RIGHT_SHOULDER = 6
KP_LEFT_ELBOW = 7
KP_RIGHT_ELBOW = 8
KP_LEFT_HAND = 9
KP_RIGHT_HAND = 10
KP_LEFT_HIP = 11
KP_RIGHT_HIP = 12
KP_LEFT_KNEE = 13
KP_RIGHT_KNEE = 14

UPPER_CATEGORIES = {1, 2, 3}   # long-sleeves, short-sleeves, sleeveless
LOWER_CATEGORIES = {4, 5, 6}   # trousers, shorts, skirt
DRESS_CATEGORIES = {7, 8}      # short-dress, long-dress


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in pixel coordinates."""

    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def to_list(self):
        return [self.x, self.y, self.w, self.h]

    def as_int(self) -> "Rect":
        return Rect(int(self.x), int(self.y), int(self.w), int(self.h))


@dataclass(frozen=True)
class GarmentAnnotation:
    category: int                 # 1..8
    bbox: Rect
    keypoints: np.ndarray         # (K, 2) float, image pixels


@dataclass(frozen=True)
class PersonRecord:
    image_id: str
    image_path: str
    detection_score: float
    person_bbox: Rect
    pose: np.ndarray              # (17, 3): x, y, visibility
    garments: tuple[GarmentAnnotation, ...]


@dataclass(frozen=True)
class FeatureMap:
    values: np.ndarray            # (h, w, d) float32, finite

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray            # (n, n) float32, symmetric, zero diagonal

    @property
    def n(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# garment keypoint schema registry
# ---------------------------------------------------------------------------

_CATEGORY_NAMES = {
    1: "long-sleeves",
    2: "short-sleeves",
    3: "sleeveless",
    4: "trousers",
    5: "shorts",
    6: "skirt",
    7: "short-dress",
    8: "long-dress",
}


@dataclass(frozen=True)
class GarmentSchema:
    category: int
    name: str
    num_keypoints: int


def load_garment_schemas(path: str | Path | None = None) -> dict[int, GarmentSchema]:
    """Load the per-category keypoint schema registry.

    Defaults to the registry file shipped with the package.  Counts are
    repository conventions (minimum 4 per category, since a part homography
    needs at least 4 correspondences).
    """
    if path is None:
        raw = resources.files("uvclone").joinpath("data/garment_schemas.json").read_text()
    else:
        raw = Path(path).read_text()
    data = json.loads(raw)
    schemas = {}
    for key, entry in data.items():
        cat = int(key)
        count = int(entry["num_keypoints"])
        if count < 4:
            raise ValueError(f"category {cat}: keypoint count must be >= 4")
        schemas[cat] = GarmentSchema(cat, entry.get("name", _CATEGORY_NAMES.get(cat, "?")), count)
    return schemas


def category_name(category: int) -> str:
    return _CATEGORY_NAMES.get(category, f"category-{category}")


def garment_slot(category: int) -> str:
    """Map a garment category to its outfit slot: upper, lower or dress."""
    if category in UPPER_CATEGORIES:
        return "upper"
    if category in LOWER_CATEGORIES:
        return "lower"
    if category in DRESS_CATEGORIES:
        return "dress"
    raise ValueError(f"unknown garment category {category}")


# ---------------------------------------------------------------------------
# person record corpus (JSON lines)
# ---------------------------------------------------------------------------

def _parse_rect(value, line: int, fname: str) -> Rect:
    if (not isinstance(value, (list, tuple))) or len(value) != 4:
        raise SchemaViolation(line, fname, "expected [x, y, w, h]")
    vals = []
    for v in value:
        if not isinstance(v, (int, float)) or not np.isfinite(v):
            raise SchemaViolation(line, fname, "non-numeric rect entry")
        vals.append(float(v))
    if vals[2] <= 0 or vals[3] <= 0:
        raise SchemaViolation(line, fname, "rect must have positive size")
    return Rect(*vals)


def _parse_record(obj: dict, line: int, schemas: dict[int, GarmentSchema]) -> PersonRecord:
    for fname in ("image_id", "image_path", "detection_score", "person_bbox", "pose", "garments"):
        if fname not in obj:
            raise SchemaViolation(line, fname, "missing")
    image_id = obj["image_id"]
    if not isinstance(image_id, str) or not image_id:
        raise SchemaViolation(line, "image_id", "must be a non-empty string")
    image_path = obj["image_path"]
    if not isinstance(image_path, str):
        raise SchemaViolation(line, "image_path", "must be a string")
    score = obj["detection_score"]
    if not isinstance(score, (int, float)) or not (0.0 <= score <= 1.0):
        raise SchemaViolation(line, "detection_score", "must be in [0, 1]")
    bbox = _parse_rect(obj["person_bbox"], line, "person_bbox")

    pose_raw = obj["pose"]
    if not isinstance(pose_raw, list) or len(pose_raw) != N_POSE_KEYPOINTS:
        raise SchemaViolation(line, "pose", f"expected {N_POSE_KEYPOINTS} keypoints")
    pose = np.empty((N_POSE_KEYPOINTS, 3), dtype=float)
    for i, kp in enumerate(pose_raw):
        if not isinstance(kp, list) or len(kp) != 3:
            raise SchemaViolation(line, "pose", f"keypoint {i}: expected [x, y, v]")
        x, y, v = kp
        if not all(isinstance(c, (int, float)) and np.isfinite(c) for c in (x, y, v)):
            raise SchemaViolation(line, "pose", f"keypoint {i}: non-finite value")
        if not (0.0 <= v <= 1.0):
            raise SchemaViolation(line, "pose", f"keypoint {i}: visibility outside [0, 1]")
        pose[i] = (x, y, v)

    garments = []
    if not isinstance(obj["garments"], list):
        raise SchemaViolation(line, "garments", "expected a list")
    for gi, g in enumerate(obj["garments"]):
        if not isinstance(g, dict):
            raise SchemaViolation(line, "garments", f"garment {gi}: expected an object")
        cat = g.get("category")
        if not isinstance(cat, int) or cat not in _CATEGORY_NAMES:
            raise SchemaViolation(line, "garments", f"garment {gi}: bad category")
        gbox = _parse_rect(g.get("bbox"), line, "garments")
        kps_raw = g.get("keypoints")
        expected = schemas[cat].num_keypoints
        if not isinstance(kps_raw, list) or len(kps_raw) != expected:
            raise SchemaViolation(
                line, "garments",
                f"garment {gi}: expected {expected} keypoints for {category_name(cat)}")
        kps = np.empty((expected, 2), dtype=float)
        for ki, kp in enumerate(kps_raw):
            if not isinstance(kp, list) or len(kp) != 2:
                raise SchemaViolation(line, "garments", f"garment {gi}: keypoint {ki} malformed")
            if not all(isinstance(c, (int, float)) and np.isfinite(c) for c in kp):
                raise SchemaViolation(line, "garments", f"garment {gi}: keypoint {ki} non-finite")
            kps[ki] = kp
        garments.append(GarmentAnnotation(cat, gbox, kps))

    return PersonRecord(image_id, image_path, float(score), bbox, pose, tuple(garments))


def load_person_records(path: str | Path,
                        schemas: dict[int, GarmentSchema] | None = None,
                        diagnostics: list | None = None) -> list[PersonRecord]:
    """Load a JSON-lines person corpus.

    Invalid records are skipped: each failure is logged and, when a
    ``diagnostics`` list is supplied, the SchemaViolation is appended to it.
    Order of valid records follows file order.
    """
    if schemas is None:
        schemas = load_garment_schemas()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise FileUnreadable(str(e)) from e

    records = []
    seen_ids = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise SchemaViolation(line_no, "<json>", str(e)) from e
            if not isinstance(obj, dict):
                raise SchemaViolation(line_no, "<json>", "expected an object")
            rec = _parse_record(obj, line_no, schemas)
            if rec.image_id in seen_ids:
                raise SchemaViolation(line_no, "image_id", "duplicate id in corpus")
        except SchemaViolation as err:
            log.warning("skipping corpus record: %s", err)
            if diagnostics is not None:
                diagnostics.append(err)
            continue
        seen_ids.add(rec.image_id)
        records.append(rec)
    return records


def _num(v: float):
    """Emit ints without a trailing .0 so round-trips stay byte-identical."""
    f = float(v)
    return int(f) if f.is_integer() else f


def record_to_json(rec: PersonRecord) -> str:
    obj = {
        "image_id": rec.image_id,
        "image_path": rec.image_path,
        "detection_score": _num(rec.detection_score),
        "person_bbox": [_num(v) for v in rec.person_bbox.to_list()],
        "pose": [[_num(x), _num(y), _num(v)] for x, y, v in rec.pose],
        "garments": [
            {
                "category": g.category,
                "bbox": [_num(v) for v in g.bbox.to_list()],
                "keypoints": [[_num(x), _num(y)] for x, y in g.keypoints],
            }
            for g in rec.garments
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def save_person_records(records, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w") as f:
        for rec in records:
            f.write(record_to_json(rec) + "\n")


def validate_record(rec: PersonRecord, image_dims: tuple[int, int] | None = None) -> list[str]:
    """Standalone invariant check; returns a list of problem descriptions."""
    problems = []
    if rec.pose.shape != (N_POSE_KEYPOINTS, 3):
        problems.append("pose must have 17 keypoints")
    if not np.all(np.isfinite(rec.pose)):
        problems.append("pose has non-finite values")
    if not (0.0 <= rec.detection_score <= 1.0):
        problems.append("detection_score outside [0, 1]")
    if image_dims is not None:
        w, h = image_dims
        b = rec.person_bbox
        if b.x < 0 or b.y < 0 or b.x2 > w or b.y2 > h:
            problems.append("person_bbox outside image")
    return problems


def clamp_garment_keypoints(g: GarmentAnnotation, image_dims: tuple[int, int]) -> GarmentAnnotation:
    """Clamp garment keypoints into image bounds, warning when any moved."""
    w, h = image_dims
    clamped = np.column_stack([
        np.clip(g.keypoints[:, 0], 0, w - 1),
        np.clip(g.keypoints[:, 1], 0, h - 1),
    ])
    if not np.array_equal(clamped, g.keypoints):
        log.warning("clamped %s keypoints into image bounds", category_name(g.category))
        return GarmentAnnotation(g.category, g.bbox, clamped)
    return g


# ---------------------------------------------------------------------------
# feature map files
# ---------------------------------------------------------------------------

_FMAP_MAGIC = b"FMAP"
_DMAT_MAGIC = b"DMAT"


def load_feature_map(path: str | Path) -> FeatureMap:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FileUnreadable(str(e)) from e
    if raw[:4] != _FMAP_MAGIC:
        raise BadMagic(f"{path}: expected FMAP header")
    if len(raw) < 16:
        raise DimMismatch(f"{path}: truncated header")
    h, w, d = struct.unpack("<III", raw[4:16])
    payload = np.frombuffer(raw[16:], dtype="<f4")
    if payload.size != h * w * d:
        raise DimMismatch(f"{path}: payload has {payload.size} floats, header says {h * w * d}")
    bad = np.flatnonzero(~np.isfinite(payload))
    if bad.size:
        raise NonFiniteValue(int(bad[0]))
    values = payload.reshape(h, w, d).copy()
    return FeatureMap(values)


def save_feature_map(fmap: FeatureMap, path: str | Path) -> None:
    values = np.ascontiguousarray(fmap.values, dtype="<f4")
    h, w, d = values.shape
    with open(path, "wb") as f:
        f.write(_FMAP_MAGIC)
        f.write(struct.pack("<III", h, w, d))
        f.write(values.tobytes())


# ---------------------------------------------------------------------------
# distance matrix files
# ---------------------------------------------------------------------------

def load_distance_matrix(path: str | Path) -> DistanceMatrix:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise FileUnreadable(str(e)) from e
    if raw[:4] != _DMAT_MAGIC:
        raise BadMagic(f"{path}: expected DMAT header")
    (n,) = struct.unpack("<I", raw[4:8])
    payload = np.frombuffer(raw[8:], dtype="<f4")
    if payload.size != n * n:
        raise DimMismatch(f"{path}: payload has {payload.size} floats, header says {n * n}")
    m = payload.reshape(n, n).copy()
    if np.any(m < 0):
        raise NegativeDistance(f"{path}: negative entries present")
    asym = np.abs(m - m.T).max() if n else 0.0
    if asym > 1e-6:
        raise AsymmetryTooLarge(f"{path}: max asymmetry {asym:g} > 1e-6")
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 0.0)
    return DistanceMatrix(m.astype("<f4"))


def save_distance_matrix(dmat: DistanceMatrix, path: str | Path) -> None:
    m = np.ascontiguousarray(dmat.values, dtype="<f4")
    with open(path, "wb") as f:
        f.write(_DMAT_MAGIC)
        f.write(struct.pack("<I", m.shape[0]))
        f.write(m.tobytes())


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def load_image(path: str | Path) -> np.ndarray:
    """Load an 8-bit RGB PNG as an (H, W, 3) uint8 array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as e:
        raise FileUnreadable(str(e)) from e


def save_image(image: np.ndarray, path: str | Path) -> None:
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValueError("expected an (H, W, 3) uint8 image")
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


def image_dims(path: str | Path) -> tuple[int, int]:
    """(width, height) of an image without decoding the pixel data."""
    with Image.open(path) as im:
        return im.size
