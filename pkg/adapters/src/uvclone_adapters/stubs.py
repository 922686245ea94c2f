"""Deterministic stand-in models.

The annotator places a canonical frontal person inside each image, so the
emitted records satisfy the pipeline's qualification rules; the feature
model summarizes garment crops on the pipeline's 48x16 grid; the
similarity model measures distances between pooled feature vectors.
"""

from __future__ import annotations

import numpy as np

GRID_H = 48
GRID_W = 16
FEATURE_DIM = 8

# categories used by the stub annotator and the keypoint counts their
# corpus schema expects
CATEGORY_SHORT_SLEEVES = 2
CATEGORY_TROUSERS = 4
_KEYPOINT_COUNTS = {CATEGORY_SHORT_SLEEVES: 10, CATEGORY_TROUSERS: 10}

# canonical frontal pose as (x, y) fractions of the person box; the left
# shoulder (index 5) sits right of the right shoulder and the arms are
# spread clear of the torso
_POSE_FRACTIONS = [
    (0.50, 0.06), (0.54, 0.04), (0.46, 0.04), (0.58, 0.06), (0.42, 0.06),
    (0.75, 0.28), (0.25, 0.28),
    (0.97, 0.42), (0.03, 0.42),
    (0.99, 0.55), (0.01, 0.55),
    (0.67, 0.62), (0.33, 0.62),
    (0.64, 0.82), (0.36, 0.82),
    (0.62, 0.98), (0.38, 0.98),
]

# garment boxes and outline polygons as fractions of the person box
_TEE_BOX = (0.25, 0.26, 0.50, 0.38)
_TEE_OUTLINE = [
    (0.02, 0.03), (0.25, 0.01), (0.50, 0.00), (0.75, 0.01), (0.98, 0.03),
    (1.00, 0.50), (0.98, 0.97), (0.50, 1.00), (0.02, 0.97), (0.00, 0.50),
]
_PANTS_BOX = (0.30, 0.62, 0.40, 0.36)
_PANTS_OUTLINE = [
    (0.05, 0.03), (0.50, 0.00), (0.95, 0.03), (1.00, 0.50), (0.90, 0.98),
    (0.62, 0.98), (0.50, 0.55), (0.38, 0.98), (0.10, 0.98), (0.00, 0.50),
]


def _scale_polygon(outline, box, origin):
    bx, by, bw, bh = box
    ox, oy = origin
    return [[round(ox + bx + fx * bw, 2), round(oy + by + fy * bh, 2)]
            for fx, fy in outline]


def annotate_image(image: np.ndarray, image_id: str, image_path: str) -> dict:
    """Produce one corpus record for an image.

    The person box insets the image by 5% per side; the detection score is
    a deterministic function of the mean brightness.
    """
    h, w = image.shape[:2]
    px = round(0.05 * w, 2)
    py = round(0.05 * h, 2)
    pw = round(0.90 * w, 2)
    ph = round(0.90 * h, 2)

    brightness = float(image.mean()) / 255.0
    score = round(0.82 + 0.15 * brightness, 4)

    pose = [[round(px + fx * pw, 2), round(py + fy * ph, 2), 1]
            for fx, fy in _POSE_FRACTIONS]

    garments = []
    for category, box, outline in (
            (CATEGORY_SHORT_SLEEVES, _TEE_BOX, _TEE_OUTLINE),
            (CATEGORY_TROUSERS, _PANTS_BOX, _PANTS_OUTLINE)):
        bx, by, bw, bh = box
        gbox = [round(px + bx * pw, 2), round(py + by * ph, 2),
                round(bw * pw, 2), round(bh * ph, 2)]
        kps = _scale_polygon(outline, (bx * pw, by * ph, bw * pw, bh * ph), (px, py))
        assert len(kps) == _KEYPOINT_COUNTS[category]
        garments.append({"category": category, "bbox": gbox, "keypoints": kps})

    return {
        "image_id": image_id,
        "image_path": image_path,
        "detection_score": score,
        "person_bbox": [px, py, pw, ph],
        "pose": pose,
        "garments": garments,
    }


def _cell_edges(extent: int, cells: int) -> np.ndarray:
    return np.linspace(0, extent, cells + 1).round().astype(int)


def feature_grid(crop: np.ndarray) -> np.ndarray:
    """(48, 16, 8) float32 grid of color and gradient statistics."""
    img = crop.astype(np.float64)
    gray = img.mean(axis=2)
    gy, gx = np.gradient(gray)
    grad = np.hypot(gx, gy)

    h, w = gray.shape
    rows = _cell_edges(h, GRID_H)
    cols = _cell_edges(w, GRID_W)
    out = np.zeros((GRID_H, GRID_W, FEATURE_DIM), dtype=np.float64)
    for i in range(GRID_H):
        r0, r1 = rows[i], max(rows[i + 1], rows[i] + 1)
        for j in range(GRID_W):
            c0, c1 = cols[j], max(cols[j + 1], cols[j] + 1)
            cell = img[r0:r1, c0:c1]
            gcell = grad[r0:r1, c0:c1]
            out[i, j, 0:3] = cell.mean(axis=(0, 1))
            out[i, j, 3:6] = cell.std(axis=(0, 1))
            out[i, j, 6] = gcell.mean()
            out[i, j, 7] = gcell.std()
    return out.astype(np.float32)


def pooled_distance_matrix(vectors: list[np.ndarray]) -> np.ndarray:
    """Pairwise normalized Euclidean distances between pooled vectors."""
    n = len(vectors)
    v = np.stack([np.asarray(x, dtype=np.float64).ravel() for x in vectors])
    diff = v[:, None, :] - v[None, :, :]
    m = np.sqrt((diff ** 2).sum(axis=2) / v.shape[1])
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 0.0)
    return m.astype(np.float32)
