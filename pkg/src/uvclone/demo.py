"""Deterministic demo fixture generator.

Builds a tiny self-contained dataset (five synthetic person images with
garment annotations, three UV templates and a distance matrix) so the full
pipeline can run end to end without any external models.  Everything is a
pure function of the seed, which makes repeated builds byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datamodel import (
    DistanceMatrix,
    GarmentAnnotation,
    PersonRecord,
    Rect,
    save_distance_matrix,
    save_image,
    save_person_records,
)

IMAGE_W = 96
IMAGE_H = 160

# frontal pose shared by every demo person (x, y, visibility); the left
# shoulder sits to the right of the right shoulder, arms are spread wide
_BASE_POSE = [
    [48, 18, 1], [52, 15, 1], [44, 15, 1], [58, 17, 1], [38, 17, 1],
    [68, 50, 1],   # 5  left shoulder
    [28, 50, 1],   # 6  right shoulder
    [86, 70, 1],   # 7  left elbow
    [10, 70, 1],   # 8  right elbow
    [90, 90, 1],   # 9  left hand
    [6, 90, 1],    # 10 right hand
    [62, 100, 1],  # 11 left hip
    [34, 100, 1],  # 12 right hip
    [60, 130, 1],  # 13 left knee
    [36, 130, 1],  # 14 right knee
    [58, 155, 1],  # 15 left ankle
    [38, 155, 1],  # 16 right ankle
]

# short-sleeves polygon, clockwise around the torso (10 keypoints)
_TEE_KPS = [
    [30, 50], [38, 50], [48, 48], [58, 50], [66, 50],
    [68, 76], [66, 102], [48, 104], [30, 102], [28, 76],
]
_TEE_BBOX = [28, 48, 41, 57]

# trousers polygon with a notch between the legs (10 keypoints)
_PANTS_KPS = [
    [34, 102], [48, 101], [62, 102], [63, 128], [60, 154],
    [52, 154], [48, 130], [44, 154], [36, 154], [33, 128],
]
_PANTS_BBOX = [32, 100, 33, 56]

# skirt polygon (6 keypoints)
_SKIRT_KPS = [
    [32, 102], [48, 101], [64, 102], [64, 138], [48, 139], [32, 138],
]
_SKIRT_BBOX = [30, 100, 36, 40]

_TEMPLATES = [
    {
        "template_id": "tee_basic",
        "category": 2,
        "kind": "regular",
        "canvas": [64, 64],
        "parts": [
            {
                "name": "front_torso",
                "uv_keypoints": [[8, 8], [55, 8], [55, 55], [8, 55]],
                "image_keypoint_indices": [0, 4, 6, 8],
                "target_rect": [8, 8, 48, 48],
                "mask_polygon": [[8, 8], [55, 8], [55, 55], [8, 55]],
            }
        ],
    },
    {
        "template_id": "pants_basic",
        "category": 4,
        "kind": "regular",
        "canvas": [64, 64],
        "parts": [
            {
                "name": "left_leg",
                "uv_keypoints": [[2, 2], [29, 2], [29, 61], [2, 61]],
                "image_keypoint_indices": [0, 1, 7, 9],
                "target_rect": [2, 2, 28, 60],
                "mask_polygon": [[2, 2], [29, 2], [29, 61], [2, 61]],
            },
            {
                "name": "right_leg",
                "uv_keypoints": [[34, 2], [61, 2], [61, 61], [34, 61]],
                "image_keypoint_indices": [1, 2, 4, 5],
                "target_rect": [34, 2, 28, 60],
                "mask_polygon": [[34, 2], [61, 2], [61, 61], [34, 61]],
            },
        ],
    },
    {
        "template_id": "skirt_free",
        "category": 6,
        "kind": "irregular",
        "canvas": [48, 48],
        "parts": [],
    },
]


def _demo_image(index: int, seed: int) -> np.ndarray:
    """Synthetic person image: noisy background, smooth colored garments."""
    rng = np.random.default_rng(seed * 1000 + index)
    img = rng.integers(90, 140, size=(IMAGE_H, IMAGE_W, 3)).astype(np.uint8)

    upper = np.array([170 + 10 * index, 50 + 20 * index, 70], dtype=np.int32) % 256
    lower = np.array([40, 60 + 15 * index, 200 - 15 * index], dtype=np.int32) % 256
    noise_u = rng.integers(-6, 7, size=(57, 41, 3))
    noise_l = rng.integers(-6, 7, size=(56, 33, 3))
    img[48:105, 28:69] = np.clip(upper + noise_u, 0, 255).astype(np.uint8)
    img[100:156, 32:65] = np.clip(lower + noise_l, 0, 255).astype(np.uint8)
    return img


def _demo_record(index: int, image_rel: str) -> PersonRecord:
    if index == 2:
        lower_garment = GarmentAnnotation(
            6, Rect(*map(float, _SKIRT_BBOX)), np.asarray(_SKIRT_KPS, dtype=float))
    else:
        lower_garment = GarmentAnnotation(
            4, Rect(*map(float, _PANTS_BBOX)), np.asarray(_PANTS_KPS, dtype=float))
    upper_garment = GarmentAnnotation(
        2, Rect(*map(float, _TEE_BBOX)), np.asarray(_TEE_KPS, dtype=float))
    return PersonRecord(
        image_id=f"img_{index:03d}",
        image_path=image_rel,
        detection_score=0.95,
        person_bbox=Rect(8.0, 8.0, 80.0, 144.0),
        pose=np.asarray(_BASE_POSE, dtype=float),
        garments=(upper_garment, lower_garment),
    )


def _demo_distances() -> DistanceMatrix:
    """5x5 matrix: images 0/1 are near-duplicates, 0/2/3 are similar
    outfits and image 4 is an outlier."""
    m = np.full((5, 5), 2.0, dtype=np.float32)
    np.fill_diagonal(m, 0.0)
    pairs = {(0, 1): 0.1, (0, 2): 0.45, (0, 3): 0.45,
             (1, 2): 0.46, (1, 3): 0.46, (2, 3): 0.45}
    for (i, j), v in pairs.items():
        m[i, j] = m[j, i] = v
    return DistanceMatrix(m)


def build_demo(root: str | Path, seed: int = 0) -> dict[str, Path]:
    """Write the demo fixture tree under ``root`` and return its paths."""
    root = Path(root)
    images_dir = root / "images"
    templates_dir = root / "templates"
    images_dir.mkdir(parents=True, exist_ok=True)
    templates_dir.mkdir(parents=True, exist_ok=True)

    records = []
    for i in range(5):
        rel = f"images/img_{i:03d}.png"
        save_image(_demo_image(i, seed), root / rel)
        records.append(_demo_record(i, rel))
    corpus = root / "corpus.jsonl"
    save_person_records(records, corpus)

    for desc in _TEMPLATES:
        path = templates_dir / f"{desc['template_id']}.json"
        path.write_text(json.dumps(desc, indent=1) + "\n")

    distances = root / "distances.dmat"
    save_distance_matrix(_demo_distances(), distances)

    config = root / "pipeline.cfg"
    config.write_text(
        "# demo pipeline configuration\n"
        f"seed = {seed}\n"
        f"corpus = {corpus}\n"
        f"distances = {distances}\n"
        f"templates = {templates_dir}\n"
    )
    return {"root": root, "corpus": corpus, "distances": distances,
            "templates": templates_dir, "images": images_dir, "config": config}


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="generate the demo fixture tree")
    parser.add_argument("root")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    paths = build_demo(args.root, args.seed)
    print(paths["config"])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
