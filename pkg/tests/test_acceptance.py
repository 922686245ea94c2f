"""End-to-end acceptance suite.

Each test checks one release criterion against an independent reference
(closed-form values, brute-force oracles, or replicated runs) and reports a
single PASS/FAIL line in the terminal summary.
"""

import json
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from uvclone import demo
from uvclone.cell import expand_cell, find_homogeneous_cell, mirror_tiled, scale_cell
from uvclone.cropaug import SWEEP_GRID, CropPolicy, disturb_crop, image_rng
from uvclone.curation import build_plan, dbscan, deduplicate
from uvclone.datamodel import DistanceMatrix, FeatureMap, Rect
from uvclone.homography import (
    Correspondences,
    Homography,
    apply_homography_points,
    estimate_homography,
    refine_homography,
    warp_region,
)
from uvclone.posefilter import (
    LABEL_BACK,
    LABEL_DETECTION,
    LABEL_OCCLUDED,
    LABEL_QUALIFIED,
    LABEL_SIDE,
    qualify_record,
)
from uvclone.templates import probe_frontal_area

from helpers import random_homography, record_criterion, scatter_points
from test_cell import naive_best_block
from test_curation import planted_matrix, reference_dbscan
from test_datamodel import make_record
from test_posefilter import frontal_pose


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        record_criterion(name, False)
        raise
    record_criterion(name, True)


def test_homography_recovery():
    with criterion("homography recovery: 100 noise-free fits, error < 1e-6, < 1s"):
        rng = np.random.default_rng(101)
        cases = []
        for _ in range(100):
            m_true = random_homography(rng)
            src = scatter_points(rng, 8)
            cases.append((m_true, src, apply_homography_points(m_true, src)))
        start = time.perf_counter()
        fitted = [estimate_homography(Correspondences(src, dst)) for _, src, dst in cases]
        elapsed = time.perf_counter() - start
        for (m_true, src, dst), h in zip(cases, fitted):
            assert np.max(np.abs(h.m - m_true)) < 1e-6
            reproj = np.linalg.norm(apply_homography_points(h.m, src) - dst, axis=1)
            assert reproj.max() < 1e-6
        assert elapsed < 1.0, f"100 fits took {elapsed:.3f}s"


def test_refinement_monotonicity():
    with criterion("refinement: 100 noisy fits, refined SSE <= linear-fit SSE"):
        rng = np.random.default_rng(202)
        for _ in range(100):
            m_true = random_homography(rng)
            src = scatter_points(rng, 10)
            dst = apply_homography_points(m_true, src) + rng.normal(0, 0.5, size=(10, 2))
            c = Correspondences(src, dst)
            initial = estimate_homography(c)
            refined = refine_homography(initial, c)
            assert refined.rmse <= initial.rmse + 1e-12


def test_identity_warp_bit_exact():
    with criterion("warping: identity warp bit-exact on 20 random images"):
        rng = np.random.default_rng(303)
        for _ in range(20):
            h = int(rng.integers(8, 64))
            w = int(rng.integers(8, 64))
            image = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
            out = warp_region(image, Homography.identity(),
                              np.ones((h, w), dtype=bool), np.zeros_like(image))
            assert np.array_equal(out, image)


def test_cell_search_oracle_equivalence():
    with criterion("cell search: 100 feature maps match brute-force oracle, < 10s"):
        rng = np.random.default_rng(404)
        maps = [rng.normal(size=(8, 8, 4)).astype(np.float32) for _ in range(85)]
        maps += [rng.normal(size=(48, 16, 8)).astype(np.float32) for _ in range(15)]
        start = time.perf_counter()
        selections = [find_homogeneous_cell(FeatureMap(v)) for v in maps]
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"100 searches took {elapsed:.3f}s"
        for values, sel in zip(maps, selections):
            assert (sel.row, sel.col, sel.side) == naive_best_block(values)


def test_cell_scaling_arithmetic():
    with criterion("cell scaling: reference value 30/120*200 = 50 and identity ratio"):
        spec = scale_cell((30, 30), (120, 120), (200, 200))
        assert (spec.scaled_width, spec.scaled_height) == (50, 50)
        for dims in ((7, 13), (1, 1), (64, 48)):
            same = scale_cell(dims, (80, 90), (80, 90))
            assert (same.scaled_width, same.scaled_height) == dims


def test_expansion_properties():
    with criterion("expansion: 50 random cases cover the mask, keep seams, "
                   "touch nothing else"):
        rng = np.random.default_rng(505)
        for _ in range(50):
            ch = int(rng.integers(2, 9))
            cw = int(rng.integers(2, 9))
            cell = rng.integers(0, 256, size=(ch, cw, 3)).astype(np.uint8)
            h = int(rng.integers(10, 40))
            w = int(rng.integers(10, 40))
            canvas = rng.integers(0, 256, size=(h, w, 3)).astype(np.uint8)
            fill = rng.random(size=(h, w)) < 0.6
            out = expand_cell(cell, None, canvas, fill)
            tiled = mirror_tiled(cell, h, w)
            assert np.array_equal(out[fill], tiled[fill])       # full coverage
            assert np.array_equal(out[~fill], canvas[~fill])    # nothing else
            # mirror seams are continuous in the tiling itself
            for b in range(cw, w, cw):
                assert np.array_equal(tiled[:, b - 1], tiled[:, b])
            for b in range(ch, h, ch):
                assert np.array_equal(tiled[b - 1, :], tiled[b, :])


def _pose_cases():
    """Twelve labeled poses, including both sides of the W/H = 0.3 boundary."""
    swap = frontal_pose()
    swap[[5, 6]] = swap[[6, 5]]

    hand_in = frontal_pose()
    hand_in[9, :2] = (50.0, 75.0)

    elbow_low = frontal_pose()
    elbow_low[8, :2] = (50.0, 115.0)

    padded = frontal_pose()
    padded[9, :2] = (72.0, 50.0)  # inside only via the 0.1*w horizontal pad

    degenerate = frontal_pose()
    degenerate[11, :2] = (degenerate[5, :2] + degenerate[6, :2]) / 2
    degenerate[12, :2] = degenerate[11, :2]

    return [
        ("frontal", frontal_pose(), 0.95, (40, 60), LABEL_QUALIFIED),
        ("back view", swap, 0.95, (40, 60), LABEL_BACK),
        ("ratio 0.29", frontal_pose(29.0, 100.0), 0.95, (40, 60), LABEL_SIDE),
        ("ratio 0.30", frontal_pose(30.0, 100.0), 0.95, (40, 60), LABEL_QUALIFIED),
        ("narrow side", frontal_pose(8.0, 100.0), 0.95, (40, 60), LABEL_SIDE),
        ("degenerate torso", degenerate, 0.95, (40, 60), LABEL_SIDE),
        ("hand on torso", hand_in, 0.95, (40, 60), LABEL_OCCLUDED),
        ("elbow on legs", elbow_low, 0.95, (40, 60), LABEL_OCCLUDED),
        ("hand in padding", padded, 0.95, (40, 60), LABEL_OCCLUDED),
        ("low score", frontal_pose(), 0.79, (40, 60), LABEL_DETECTION),
        ("small person", frontal_pose(), 0.95, (101, 120), LABEL_DETECTION),
        ("boundary gate", frontal_pose(), 0.8, (100, 120), LABEL_QUALIFIED),
    ]


def test_pose_rule_fixture():
    with criterion("pose rules: 12-pose fixture classified 12/12"):
        for name, pose, score, dims, expected in _pose_cases():
            r = make_record(score=score)
            object.__setattr__(r, "pose", pose)
            verdict = qualify_record(r, dims)
            assert verdict.label == expected, f"{name}: {verdict.label} != {expected}"


def test_dbscan_oracle_equivalence():
    with criterion("clustering: 100 planted matrices match reference, "
                   "dedup is idempotent"):
        rng = np.random.default_rng(606)
        for _ in range(100):
            n = int(rng.integers(4, 65))
            pts = rng.uniform(0, 10, size=(n, 2))
            m = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
            eps = float(rng.uniform(0.3, 4.0))
            min_pts = int(rng.integers(1, 6))
            got = dbscan(m, eps, min_pts).labels
            assert np.array_equal(got, reference_dbscan(m, eps, min_pts))

        ids = [f"img_{i:02d}" for i in range(30)]
        pts = rng.uniform(0, 3, size=(30, 2))
        m = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        survivors = deduplicate(ids, DistanceMatrix(m.astype(np.float32)))
        idx = {s: i for i, s in enumerate(ids)}
        rows = np.array([idx[s] for s in survivors])
        again = deduplicate(survivors,
                            DistanceMatrix(m[np.ix_(rows, rows)].astype(np.float32)))
        assert again == survivors


def test_curation_plan_totals():
    with criterion("curation: planted clusters {10,7,6,2} select (22, 17, 5)"):
        sizes = [10, 7, 6, 2]
        ids = [f"img_{i:02d}" for i in range(sum(sizes))]
        m = planted_matrix(sizes, intra=0.3)
        plan = build_plan(ids, ids, DistanceMatrix(m.astype(np.float32)))
        assert len(plan.selected_ids) == 22
        assert len(plan.train_ids) == 17
        assert len(plan.test_ids) == 5


def test_crop_statistics():
    with criterion("cropping: 10000 draws hit rho=0.3 within 0.015, bounds hold, "
                   "sweep grid has 10 settings"):
        policy = CropPolicy(probability=0.3, side_rate=0.3)
        image = np.zeros((60, 40, 3), dtype=np.uint8)
        h, w = image.shape[:2]
        hits = 0
        for i in range(10000):
            out, log = disturb_crop(image, policy, image_rng(99, f"c{i}"), f"c{i}")
            if log.cropped:
                hits += 1
                assert log.top <= policy.top_max * h
                assert log.bottom <= policy.bottom_max * h
                assert log.left <= policy.side_rate * w
                assert log.right <= policy.side_rate * w
            assert out.shape[0] >= 1 and out.shape[1] >= 1
        assert abs(hits / 10000 - 0.3) <= 0.015, f"crop fraction {hits / 10000}"
        assert len(SWEEP_GRID) == 10 and len(set(SWEEP_GRID)) == 10


def test_frontal_probe_iou():
    with criterion("frontal probing: IoU >= 0.9 against 10 random view regions"):
        rng = np.random.default_rng(777)
        canvas = 1280
        step = 6  # view subsampling keeps each render cheap
        for _ in range(10):
            a = int(rng.integers(1000, 1101))
            b = int(rng.integers(1000, 1101))
            x0 = int(rng.integers(0, canvas - a + 1))
            y0 = int(rng.integers(0, canvas - b + 1))

            def oracle(c, x0=x0, y0=y0, a=a, b=b):
                return c[y0:y0 + b:step, x0:x0 + a:step]

            # mark a square once about half of it overlaps the view
            threshold = 255.0 * 1250.0 / (a * b)
            mask = probe_frontal_area(oracle, (canvas, canvas), square=50,
                                      stride=25, threshold=threshold)
            true = np.zeros((canvas, canvas), dtype=bool)
            true[y0:y0 + b, x0:x0 + a] = True
            iou = np.logical_and(mask, true).sum() / np.logical_or(mask, true).sum()
            assert iou >= 0.9, f"IoU {iou:.4f} for region {a}x{b} at ({x0},{y0})"


def _run_pipeline(root):
    paths = demo.build_demo(root, seed=0)
    out = root / "out"
    base = [sys.executable, "-m", "uvclone.cli"]
    args = ["--config", str(paths["config"]), "--output", str(out)]
    for cmd in ("qualify", "curate", "clone", "crop", "preview"):
        proc = subprocess.run(base + [cmd] + args, capture_output=True, text=True)
        assert proc.returncode == 0, f"{cmd} failed:\n{proc.stderr}"
    return out


def _tree_digest(root):
    import hashlib
    digest = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            digest[str(p.relative_to(root))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return digest


def test_end_to_end_determinism(tmp_path):
    with criterion("pipeline: two full runs on the 5-image fixture are "
                   "byte-identical, < 60s"):
        start = time.perf_counter()
        out_a = _run_pipeline(tmp_path / "run_a")
        out_b = _run_pipeline(tmp_path / "run_b")
        elapsed = time.perf_counter() - start
        da, db = _tree_digest(out_a), _tree_digest(out_b)
        assert set(da) == set(db)
        diffs = [k for k in da if da[k] != db[k]]
        assert diffs == [], f"outputs differ: {diffs}"
        manifest = (out_a / "manifest.jsonl").read_text().splitlines()
        assert len(manifest) == 3
        assert elapsed < 60.0, f"two runs took {elapsed:.1f}s"
