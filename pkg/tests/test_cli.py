import json

import numpy as np
import pytest

from uvclone import cli, demo
from uvclone.datamodel import load_image


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Demo fixture tree with every stage already run once."""
    root = tmp_path_factory.mktemp("pipeline")
    paths = demo.build_demo(root, seed=0)
    out = root / "out"
    args = ["--config", str(paths["config"]), "--output", str(out)]
    for cmd in ("qualify", "curate", "clone", "crop", "preview"):
        assert cli.main([cmd] + args) == 0
    return paths, out, args


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def test_qualify_outputs(pipeline):
    paths, out, _ = pipeline
    report = read_jsonl(out / "qualification.jsonl")
    assert len(report) == 5
    assert all(r["label"] == "Qualified" for r in report)
    qualified = (out / "qualified.jsonl").read_text().splitlines()
    assert len(qualified) == 5


def test_curate_plan(pipeline):
    _, out, _ = pipeline
    plan = read_jsonl(out / "plan.jsonl")
    # images 0/1 deduplicate, image 4 is round-2 noise: one 3-image cluster
    assert len(plan) == 1
    assert plan[0]["members"] == ["img_000", "img_002", "img_003"]
    assert plan[0]["train"] == ["img_000", "img_002", "img_003"]
    assert plan[0]["test"] == []


def test_clone_outputs(pipeline):
    _, out, _ = pipeline
    manifest = read_jsonl(out / "manifest.jsonl")
    assert [m["image_id"] for m in manifest] == ["img_000", "img_002", "img_003"]
    assert all(m["status"] == "ok" for m in manifest)
    clones = read_jsonl(out / "clones.jsonl")
    assert len(clones) == 6  # two garments per character
    for row in clones:
        img = load_image(out / row["uv_path"])
        assert img.ndim == 3
        if row["method"] == "registered+expansion":
            assert row["registered_path"] is not None
            assert (out / row["registered_path"]).exists()
        else:
            assert row["registered_path"] is None


def test_crop_outputs(pipeline):
    _, out, _ = pipeline
    logs = read_jsonl(out / "croplog.jsonl")
    assert [r["image_id"] for r in logs] == ["img_000", "img_002", "img_003"]
    for r in logs:
        assert (out / "cropped" / f"{r['image_id']}.png").exists()


def test_preview_outputs(pipeline):
    _, out, _ = pipeline
    preview = out / "preview"
    assert (preview / "summary.png").exists()
    csv_lines = (preview / "summary.csv").read_text().splitlines()
    assert csv_lines[0] == "image_id,garment,template_id,method,suspect"
    assert len(csv_lines) == 7
    sheets = sorted(p.name for p in preview.glob("img_*.png"))
    assert len(sheets) == 6


def test_crop_sweep(pipeline):
    paths, out, args = pipeline
    assert cli.main(["crop", "--sweep"] + args) == 0
    sets = sorted((out / "crop_sweep").iterdir())
    assert len(sets) == 10
    for d in sets:
        assert (d / "croplog.jsonl").exists()


def test_probe_command(pipeline):
    paths, out, args = pipeline
    assert cli.main(["probe", "--rect", "4,4,40,40"] + args) == 0
    masks = sorted((out / "probe").glob("*_frontal.png"))
    assert len(masks) == 3
    mask = load_image(masks[0])
    assert set(np.unique(mask)) <= {0, 255}


def test_cli_reports_hard_errors(tmp_path):
    rc = cli.main(["qualify", "--corpus", str(tmp_path / "missing.jsonl"),
                   "--output", str(tmp_path / "out")])
    assert rc == 1


def test_flag_overrides_config(tmp_path):
    paths = demo.build_demo(tmp_path, seed=3)
    out = tmp_path / "out"
    assert cli.main(["qualify", "--config", str(paths["config"]),
                     "--seed", "9", "--output", str(out)]) == 0
    assert (out / "qualification.jsonl").exists()
