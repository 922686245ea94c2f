"""File emitters: corpus JSON lines, FMAP feature maps, DMAT distances.

The binary layouts mirror what the pipeline ingests:

  FMAP: b"FMAP" + uint32-LE height, width, dim + row-major float32-LE
  DMAT: b"DMAT" + uint32-LE n + n*n float32-LE

Every emitter writes a ``<output>.provenance.json`` sidecar describing the
inputs, tool version and seed that produced the file.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .stubs import annotate_image, feature_grid, pooled_distance_matrix


def _load_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def _write_provenance(target: Path, seed: int, **extra) -> Path:
    from . import __version__

    sidecar = target.parent / f"{target.name}.provenance.json"
    payload = {"tool": "uvclone-adapt", "version": __version__, "seed": seed}
    payload.update(extra)
    sidecar.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    return sidecar


def emit_corpus(images_dir: str | Path, out_path: str | Path, seed: int = 0) -> Path:
    """Annotate every PNG under ``images_dir`` into a corpus JSONL file."""
    images_dir = Path(images_dir)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    lines = []
    for png in sorted(images_dir.glob("*.png")):
        image = _load_rgb(png)
        try:
            rel = str(png.relative_to(out_path.parent))
        except ValueError:
            rel = str(png)
        record = annotate_image(image, png.stem, rel)
        lines.append(json.dumps(record, separators=(",", ":")))
    out_path.write_text("".join(line + "\n" for line in lines))
    _write_provenance(out_path, seed, images=len(lines), source=str(images_dir.name))
    return out_path


def emit_features(corpus_path: str | Path, out_dir: str | Path, seed: int = 0) -> list[Path]:
    """Write one ``<image_id>_g<i>.fmap`` per garment in the corpus."""
    corpus_path = Path(corpus_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    for line in corpus_path.read_text().splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        image_path = Path(record["image_path"])
        if not image_path.is_absolute():
            image_path = corpus_path.parent / image_path
        image = _load_rgb(image_path)
        for gi, garment in enumerate(record["garments"]):
            x, y, w, h = (int(v) for v in garment["bbox"])
            crop = image[y:y + h, x:x + w]
            grid = feature_grid(crop)
            target = out_dir / f"{record['image_id']}_g{gi}.fmap"
            gh, gw, gd = grid.shape
            with open(target, "wb") as f:
                f.write(b"FMAP")
                f.write(struct.pack("<III", gh, gw, gd))
                f.write(np.ascontiguousarray(grid, dtype="<f4").tobytes())
            written.append(target)
    _write_provenance(out_dir / "features", seed,
                      corpus=corpus_path.name, files=len(written))
    return written


def _read_fmap(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:4] != b"FMAP":
        raise ValueError(f"{path}: not a feature-map file")
    h, w, d = struct.unpack("<III", raw[4:16])
    return np.frombuffer(raw[16:], dtype="<f4").reshape(h, w, d)


def emit_distances(corpus_path: str | Path, features_dir: str | Path,
                   out_path: str | Path, seed: int = 0) -> Path:
    """Pool each image's feature maps and write the pairwise distances."""
    corpus_path = Path(corpus_path)
    features_dir = Path(features_dir)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    vectors = []
    count = 0
    for line in corpus_path.read_text().splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        pooled = []
        for gi in range(len(record["garments"])):
            grid = _read_fmap(features_dir / f"{record['image_id']}_g{gi}.fmap")
            # scale into [0, 1] so distances stay commensurate with the
            # clustering thresholds
            pooled.append(grid.mean(axis=(0, 1)) / 255.0)
        vectors.append(np.concatenate(pooled))
        count += 1

    m = pooled_distance_matrix(vectors)
    with open(out_path, "wb") as f:
        f.write(b"DMAT")
        f.write(struct.pack("<I", m.shape[0]))
        f.write(np.ascontiguousarray(m, dtype="<f4").tobytes())
    _write_provenance(out_path, seed, corpus=corpus_path.name, images=count)
    return out_path
