import numpy as np
import pytest

from uvclone.cropaug import SWEEP_GRID, CropPolicy, CropLog, disturb_crop, image_rng
from uvclone.errors import ImageTooSmall


def test_policy_validation():
    with pytest.raises(ValueError):
        CropPolicy(probability=1.5)
    with pytest.raises(ValueError):
        CropPolicy(side_rate=-0.1)


def test_image_rng_streams_are_stable_and_distinct():
    a = image_rng(7, "img_a").random(4)
    b = image_rng(7, "img_a").random(4)
    c = image_rng(7, "img_b").random(4)
    d = image_rng(8, "img_a").random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_untouched_image_is_copied(rng):
    img = rng.integers(0, 256, size=(40, 30, 3)).astype(np.uint8)
    out, log = disturb_crop(img, CropPolicy(probability=0.0), rng, "x")
    assert log == CropLog("x", cropped=False)
    assert np.array_equal(out, img)
    assert out is not img


def test_crop_is_pure_subrectangle(rng):
    img = rng.integers(0, 256, size=(60, 40, 3)).astype(np.uint8)
    out, log = disturb_crop(img, CropPolicy(probability=1.0), rng, "x")
    assert log.cropped
    h, w = img.shape[:2]
    expected = img[log.top:h - log.bottom, log.left:w - log.right]
    assert np.array_equal(out, expected)


def test_crop_bounds_hold(rng):
    img = rng.integers(0, 256, size=(50, 33, 3)).astype(np.uint8)
    policy = CropPolicy(probability=1.0, side_rate=0.3)
    h, w = img.shape[:2]
    for i in range(200):
        out, log = disturb_crop(img, policy, image_rng(3, f"i{i}"), f"i{i}")
        assert 0 <= log.top <= policy.top_max * h
        assert 0 <= log.bottom <= policy.bottom_max * h
        assert 0 <= log.left <= policy.side_rate * w
        assert 0 <= log.right <= policy.side_rate * w
        assert log.strategy in ("left", "right", "both")
        if log.strategy == "left":
            assert log.right == 0
        if log.strategy == "right":
            assert log.left == 0
        assert out.shape[0] >= 1 and out.shape[1] >= 1


def test_crop_probability_respected():
    img = np.zeros((40, 30, 3), dtype=np.uint8)
    policy = CropPolicy(probability=0.3)
    hits = sum(
        disturb_crop(img, policy, image_rng(11, f"p{i}"), f"p{i}")[1].cropped
        for i in range(2000)
    )
    assert abs(hits / 2000 - 0.3) < 0.03


def test_tiny_image_rejected(rng):
    with pytest.raises(ImageTooSmall):
        disturb_crop(np.zeros((3, 10, 3), dtype=np.uint8), CropPolicy(), rng)


def test_sweep_grid_contents():
    assert len(SWEEP_GRID) == 10
    assert SWEEP_GRID[0] == (0.0, 0.0)
    assert (0.3, 0.0) in SWEEP_GRID and (0.3, 0.4) in SWEEP_GRID
    assert (0.5, 0.0) in SWEEP_GRID


def test_croplog_round_trip_dict():
    log = CropLog("img", True, 3, 10, "both", 2, 4)
    d = log.to_dict()
    assert d["strategy"] == "both" and d["top"] == 3 and d["right"] == 4
