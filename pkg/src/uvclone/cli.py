"""Command-line pipeline orchestrator.

Subcommands compose via files so each stage is independently runnable and
resumable:

  qualify  -> qualification.jsonl + qualified.jsonl
  curate   -> plan.jsonl
  clone    -> uv/*.png + clones.jsonl + manifest.jsonl
  crop     -> cropped/*.png + croplog.jsonl (or the sweep grid of logs)
  preview  -> preview/*.png contact sheets + summary figure + summary.csv
  probe    -> probe/*.png frontal masks

All outputs are written atomically (temp file + rename) and are
deterministic for a fixed (config, seed, fixtures).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .cloner import clone_garment, compose_outfit
from .config import PipelineConfig, parse_config_file
from .cropaug import SWEEP_GRID, CropPolicy, disturb_crop, image_rng
from .curation import build_plan, deduplicate, load_plan, save_plan
from .datamodel import (
    DistanceMatrix,
    category_name,
    image_dims,
    load_distance_matrix,
    load_feature_map,
    load_image,
    load_person_records,
    record_to_json,
    save_image,
)
from .errors import UvCloneError
from .posefilter import LABEL_QUALIFIED, qualify_record
from .report import save_cluster_summary, save_contact_sheet
from .templates import load_templates, probe_frontal_area, select_template

log = logging.getLogger("uvclone")


# ---------------------------------------------------------------------------
# atomic IO helpers
# ---------------------------------------------------------------------------

def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_save_image(image: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.parent / f".tmp-{path.name}"
    save_image(image, tmp)
    os.replace(tmp, path)


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    _atomic_write_text(path, "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in rows))


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def _resolve(path_str: str, anchor: Path) -> Path:
    p = Path(path_str)
    return p if p.is_absolute() else anchor / p


def _round_floats(obj, digits=6):
    if isinstance(obj, float):
        return round(obj, digits)
    if isinstance(obj, dict):
        return {k: _round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, digits) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def cmd_qualify(cfg: PipelineConfig) -> int:
    out = Path(cfg.output)
    records = load_person_records(cfg.corpus)
    corpus_dir = Path(cfg.corpus).parent
    if not records:
        log.warning("empty corpus, nothing to qualify")
        _write_jsonl(out / "qualification.jsonl", [])
        _atomic_write_text(out / "qualified.jsonl", "")
        return 0

    report_rows = []
    qualified = []
    for rec in records:
        dims = image_dims(_resolve(rec.image_path, corpus_dir))
        verdict = qualify_record(rec, dims, cfg.detection_score_min, cfg.area_fraction_min)
        report_rows.append({
            "image_id": rec.image_id,
            "label": verdict.label,
            "metrics": _round_floats(verdict.metrics),
        })
        if verdict.label == LABEL_QUALIFIED:
            qualified.append(rec)
    _write_jsonl(out / "qualification.jsonl", report_rows)
    _atomic_write_text(out / "qualified.jsonl",
                       "".join(record_to_json(r) + "\n" for r in qualified))
    log.info("qualified %d of %d records", len(qualified), len(records))
    return 0


def cmd_curate(cfg: PipelineConfig) -> int:
    out = Path(cfg.output)
    all_ids = [r.image_id for r in load_person_records(cfg.corpus)]
    qualified_ids = [r.image_id for r in load_person_records(out / "qualified.jsonl")]
    dmat = load_distance_matrix(cfg.distances)
    if dmat.n != len(all_ids):
        raise UvCloneError(
            f"distance matrix is {dmat.n}x{dmat.n} but corpus has {len(all_ids)} records")

    # restrict the matrix to qualified records before both rounds
    index_of = {img: i for i, img in enumerate(all_ids)}
    rows = np.array([index_of[q] for q in qualified_ids], dtype=int)
    sub = DistanceMatrix(dmat.values[np.ix_(rows, rows)])

    if not qualified_ids:
        log.warning("no qualified records; writing an empty plan")
        _atomic_write_text(out / "plan.jsonl", "")
        return 0

    survivors = deduplicate(qualified_ids, sub, cfg.eps1, cfg.min_pts)
    plan = build_plan(survivors, qualified_ids, sub, cfg.eps2, cfg.min_pts,
                      cfg.per_cluster, cfg.train_k, cfg.test_k,
                      keep_noise_singletons=cfg.keep_noise_singletons)
    tmp = out / ".tmp-plan.jsonl"
    out.mkdir(parents=True, exist_ok=True)
    save_plan(plan, tmp)
    os.replace(tmp, out / "plan.jsonl")
    log.info("curated %d clusters, %d selected images",
             len(plan.clusters), len(plan.selected_ids))
    return 0


def cmd_clone(cfg: PipelineConfig) -> int:
    out = Path(cfg.output)
    plan = load_plan(out / "plan.jsonl")
    records = {r.image_id: r for r in load_person_records(cfg.corpus)}
    corpus_dir = Path(cfg.corpus).parent
    registry = load_templates(cfg.templates)
    features_dir = Path(cfg.features_dir) if cfg.features_dir else None

    split_of = {}
    cluster_of = {}
    for c in plan.clusters:
        for img in c.train:
            split_of[img] = "train"
            cluster_of[img] = c.cluster_id
        for img in c.test:
            split_of[img] = "test"
            cluster_of[img] = c.cluster_id

    clone_rows = []
    manifest_rows = []
    for img_id in plan.selected_ids:
        rec = records.get(img_id)
        if rec is None:
            log.warning("%s: selected but missing from corpus", img_id)
            manifest_rows.append({"image_id": img_id, "status": "failed",
                                  "reason": "missing record"})
            continue
        try:
            row, clones = _clone_one(cfg, rec, registry, features_dir, corpus_dir, out,
                                     cluster_of[img_id], split_of[img_id])
        except UvCloneError as err:
            log.warning("%s: clone failed: %s", img_id, err)
            manifest_rows.append({"image_id": img_id, "status": "failed",
                                  "reason": str(err)})
            continue
        manifest_rows.append(row)
        clone_rows.extend(clones)

    _write_jsonl(out / "clones.jsonl", clone_rows)
    _write_jsonl(out / "manifest.jsonl", manifest_rows)
    done = sum(1 for r in manifest_rows if r.get("status") == "ok")
    log.info("cloned %d characters (%d failures)", done, len(manifest_rows) - done)
    return 0


def _clone_one(cfg, rec, registry, features_dir, corpus_dir, out: Path,
               cluster_id: int, split: str):
    image = load_image(_resolve(rec.image_path, corpus_dir))
    rng = image_rng(cfg.seed, rec.image_id)
    results = []
    clone_rows = []
    for gi, g in enumerate(rec.garments):
        template = select_template(g.category, registry, rng)
        feature = None
        if features_dir is not None:
            fpath = features_dir / f"{rec.image_id}_g{gi}.fmap"
            if fpath.exists():
                feature = load_feature_map(fpath)
        result = clone_garment(image, g, template, feature, rec.image_id)
        results.append(result)

        gname = category_name(g.category)
        uv_rel = f"uv/{rec.image_id}_{gname}_{template.template_id}.png"
        _atomic_save_image(result.uv_map, out / uv_rel)
        reg_rel = None
        if result.registered_map is not None:
            reg_rel = f"uv/{rec.image_id}_{gname}_{template.template_id}_registered.png"
            _atomic_save_image(result.registered_map, out / reg_rel)
        clone_rows.append(_round_floats({
            "image_id": rec.image_id,
            "garment": gname,
            "category": g.category,
            "template_id": template.template_id,
            "method": result.method,
            "uv_path": uv_rel,
            "registered_path": reg_rel,
            "cell_rect": result.cell_rect.to_list(),
            "homography_rmse": result.homography_rmse,
            "suspect": result.suspect,
            "failed_parts": list(result.failed_parts),
            "garment_bbox": g.bbox.to_list(),
        }))

    outfit = compose_outfit(results)
    row = {
        "image_id": rec.image_id,
        "status": "ok",
        "cluster_id": cluster_id,
        "split": split,
        "garments": [
            {"slot": slot, "category": r.category, "template_id": r.template_id,
             "uv_path": f"uv/{rec.image_id}_{category_name(r.category)}_{r.template_id}.png"}
            for slot, r in (("upper", outfit.upper), ("lower", outfit.lower),
                            ("dress", outfit.dress)) if r is not None
        ],
    }
    return row, clone_rows


def cmd_crop(cfg: PipelineConfig, sweep: bool = False) -> int:
    out = Path(cfg.output)
    manifest_path = out / "manifest.jsonl"
    records = {r.image_id: r for r in load_person_records(cfg.corpus)}
    corpus_dir = Path(cfg.corpus).parent
    if manifest_path.exists():
        ids = [r["image_id"] for r in _read_jsonl(manifest_path) if r.get("status") == "ok"]
    else:
        ids = sorted(records)

    if sweep:
        for rho, tau in SWEEP_GRID:
            policy = CropPolicy(rho, tau)
            rows = []
            for img_id in ids:
                image = load_image(_resolve(records[img_id].image_path, corpus_dir))
                rng = image_rng(cfg.seed, img_id)
                _, clog = disturb_crop(image, policy, rng, img_id)
                rows.append(clog.to_dict())
            tag = f"rho{int(round(rho * 100)):02d}_tau{int(round(tau * 100)):02d}"
            _write_jsonl(out / "crop_sweep" / tag / "croplog.jsonl", rows)
        log.info("sweep: emitted %d crop-log sets", len(SWEEP_GRID))
        return 0

    policy = cfg.crop_policy()
    rows = []
    for img_id in ids:
        image = load_image(_resolve(records[img_id].image_path, corpus_dir))
        rng = image_rng(cfg.seed, img_id)
        try:
            cropped, clog = disturb_crop(image, policy, rng, img_id)
        except UvCloneError as err:
            log.warning("%s: crop skipped: %s", img_id, err)
            continue
        _atomic_save_image(cropped, out / "cropped" / f"{img_id}.png")
        rows.append(clog.to_dict())
    _write_jsonl(out / "croplog.jsonl", rows)
    return 0


def cmd_preview(cfg: PipelineConfig) -> int:
    out = Path(cfg.output)
    ledger_path = out / "clones.jsonl"
    if not ledger_path.exists() or not ledger_path.read_text().strip():
        log.warning("empty or missing clone ledger, no previews to render")
        return 0
    rows = _read_jsonl(ledger_path)
    records = {r.image_id: r for r in load_person_records(cfg.corpus)}
    corpus_dir = Path(cfg.corpus).parent

    preview_dir = out / "preview"
    preview_dir.mkdir(parents=True, exist_ok=True)
    for row in rows:
        rec = records.get(row["image_id"])
        source = None
        if rec is not None:
            image = load_image(_resolve(rec.image_path, corpus_dir))
            bx = row.get("garment_bbox")
            if bx:
                x, y, w, h = (int(v) for v in bx)
                source = image[y:y + h, x:x + w]
            else:
                source = image
        registered = load_image(out / row["registered_path"]) if row.get("registered_path") else None
        final = load_image(out / row["uv_path"])
        name = f"{row['image_id']}_{row['garment']}.png"
        tmp = preview_dir / f".tmp-{name}"
        save_contact_sheet([source, registered, final], tmp,
                           title=f"{row['image_id']} / {row['garment']} ({row['method']})")
        os.replace(tmp, preview_dir / name)

    # summary figure + delimited summary
    cluster_sizes = []
    plan_path = out / "plan.jsonl"
    if plan_path.exists():
        cluster_sizes = [len(c["members"]) for c in _read_jsonl(plan_path)]
    label_counts: dict[str, int] = {}
    report_path = out / "qualification.jsonl"
    if report_path.exists():
        for r in _read_jsonl(report_path):
            label_counts[r["label"]] = label_counts.get(r["label"], 0) + 1
    tmp = preview_dir / ".tmp-summary.png"
    save_cluster_summary(cluster_sizes, label_counts, tmp)
    os.replace(tmp, preview_dir / "summary.png")

    lines = [["image_id", "garment", "template_id", "method", "suspect"]]
    for row in rows:
        lines.append([row["image_id"], row["garment"], row["template_id"],
                      row["method"], str(row.get("suspect", False))])
    text = "\n".join(",".join(line) for line in lines) + "\n"
    _atomic_write_text(preview_dir / "summary.csv", text)
    log.info("rendered %d contact sheets", len(rows))
    return 0


def cmd_probe(cfg: PipelineConfig, rect: tuple[int, int, int, int]) -> int:
    """Probe every template with a synthetic crop oracle over ``rect``."""
    out = Path(cfg.output)
    registry = load_templates(cfg.templates)
    x, y, w, h = rect
    for tid in sorted(registry):
        tpl = registry[tid]

        def oracle(canvas: np.ndarray) -> np.ndarray:
            return canvas[y:y + h, x:x + w]

        mask = probe_frontal_area(oracle, tpl.canvas, cfg.probe_square,
                                  cfg.probe_stride, cfg.probe_threshold)
        img = np.repeat((mask * 255).astype(np.uint8)[:, :, None], 3, axis=2)
        _atomic_save_image(img, out / "probe" / f"{tid}_frontal.png")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uvclone",
        description="Clone clothing textures onto UV maps and curate characters")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--corpus")
        p.add_argument("--distances")
        p.add_argument("--templates")
        p.add_argument("--features-dir", dest="features_dir")
        p.add_argument("--output")

    for name in ("qualify", "curate", "clone", "crop", "preview", "probe"):
        p = sub.add_parser(name)
        common(p)
        if name == "curate":
            p.add_argument("--keep-noise-singletons", action="store_true", default=None)
            p.add_argument("--eps1", type=float)
            p.add_argument("--eps2", type=float)
            p.add_argument("--min-pts", dest="min_pts", type=int)
        if name == "crop":
            p.add_argument("--sweep", action="store_true",
                           help="emit crop logs for the full rho/tau ablation grid")
            p.add_argument("--rho", dest="crop_probability", type=float)
            p.add_argument("--tau", dest="crop_side_rate", type=float)
        if name == "probe":
            p.add_argument("--rect", required=True,
                           help="x,y,w,h of the synthetic oracle's frontal crop")
    return parser


def _config_from_args(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        cfg = parse_config_file(args.config, cfg)
    overrides = {}
    for name in ("seed", "jobs", "corpus", "distances", "templates", "features_dir",
                 "output", "eps1", "eps2", "min_pts", "keep_noise_singletons",
                 "crop_probability", "crop_side_rate"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    try:
        if args.command == "qualify":
            return cmd_qualify(cfg)
        if args.command == "curate":
            return cmd_curate(cfg)
        if args.command == "clone":
            return cmd_clone(cfg)
        if args.command == "crop":
            return cmd_crop(cfg, sweep=args.sweep)
        if args.command == "preview":
            return cmd_preview(cfg)
        if args.command == "probe":
            rect = tuple(int(v) for v in args.rect.split(","))
            if len(rect) != 4:
                raise ValueError("--rect expects x,y,w,h")
            return cmd_probe(cfg, rect)
    except UvCloneError as err:
        log.error("%s", err)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
