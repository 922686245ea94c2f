import numpy as np
import pytest

from uvclone.errors import DegenerateConfiguration, InsufficientPoints, PointAtInfinity
from uvclone.homography import (
    Correspondences,
    Homography,
    apply_homography,
    apply_homography_points,
    estimate_homography,
    fit_homography,
    refine_homography,
    warp_parts,
    warp_region,
)

from helpers import random_homography, scatter_points


def test_correspondences_require_four_points():
    pts = np.zeros((3, 2))
    with pytest.raises(InsufficientPoints):
        Correspondences(pts, pts)


def test_correspondences_shape_mismatch():
    with pytest.raises(ValueError):
        Correspondences(np.zeros((5, 2)), np.zeros((4, 2)))


def test_identity_maps_points():
    h = Homography.identity()
    assert apply_homography(h, (3.5, -2.0)) == (3.5, -2.0)


def test_dlt_recovers_known_map(rng):
    m_true = random_homography(rng)
    src = scatter_points(rng, 8)
    dst = apply_homography_points(m_true, src)
    h = estimate_homography(Correspondences(src, dst))
    assert np.allclose(h.m, m_true, atol=1e-8)
    assert h.rmse < 1e-8


def test_dlt_rejects_collinear_points():
    src = np.column_stack([np.arange(6.0), 2.0 * np.arange(6.0)])
    dst = src + 1.0
    with pytest.raises(DegenerateConfiguration):
        estimate_homography(Correspondences(src, dst))


def test_dlt_rejects_coincident_points():
    src = np.ones((5, 2))
    dst = np.ones((5, 2))
    with pytest.raises(DegenerateConfiguration):
        estimate_homography(Correspondences(src, dst))


def test_point_at_infinity_detected():
    m = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    with pytest.raises(PointAtInfinity):
        apply_homography_points(m, np.array([[1.0, 0.0]]))


def test_refinement_never_worsens_sse(rng):
    m_true = random_homography(rng)
    src = scatter_points(rng, 12)
    dst = apply_homography_points(m_true, src) + rng.normal(0, 0.5, size=(12, 2))
    c = Correspondences(src, dst)
    initial = estimate_homography(c)
    refined = refine_homography(initial, c)
    assert refined.rmse <= initial.rmse + 1e-12
    assert refined.refined_converged in (True, False)


def test_refinement_flags_convergence_on_clean_data(rng):
    m_true = random_homography(rng)
    src = scatter_points(rng, 8)
    dst = apply_homography_points(m_true, src)
    h = fit_homography(Correspondences(src, dst))
    assert h.refined_converged is True
    assert h.rmse < 1e-8


def test_identity_warp_is_bit_exact(rng):
    image = rng.integers(0, 256, size=(24, 31, 3)).astype(np.uint8)
    mask = np.ones((24, 31), dtype=bool)
    target = np.zeros_like(image)
    out = warp_region(image, Homography.identity(), mask, target)
    assert np.array_equal(out, image)


def test_warp_preserves_unmasked_pixels(rng):
    image = rng.integers(0, 256, size=(16, 16, 3)).astype(np.uint8)
    target = np.full((16, 16, 3), 7, dtype=np.uint8)
    mask = np.zeros((16, 16), dtype=bool)
    mask[2:6, 3:9] = True
    out = warp_region(image, Homography.identity(), mask, target)
    assert np.array_equal(out[~mask], target[~mask])
    assert np.array_equal(out[mask], image[mask])


def test_warp_out_of_bounds_is_black():
    image = np.full((8, 8, 3), 200, dtype=np.uint8)
    # translation moving every sample far outside the source
    m = np.eye(3)
    m[0, 2] = 100.0
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    h = Homography(m, corners, corners, 0.0)
    mask = np.ones((8, 8), dtype=bool)
    out = warp_region(image, h, mask, np.full((8, 8, 3), 50, dtype=np.uint8))
    assert np.all(out == 0)


def test_warp_parts_degrades_failed_part(rng):
    image = rng.integers(0, 256, size=(20, 20, 3)).astype(np.uint8)
    target = np.full((10, 20, 3), 9, dtype=np.uint8)
    good_mask = np.zeros((10, 20), dtype=bool)
    good_mask[:, :10] = True
    bad_mask = np.zeros((10, 20), dtype=bool)
    bad_mask[:, 10:] = True

    square = np.array([[0.0, 0.0], [9.0, 0.0], [9.0, 9.0], [0.0, 9.0]])
    good = Correspondences(square, square + 5.0)
    collinear = np.column_stack([np.arange(4.0), np.arange(4.0)])
    bad = Correspondences(collinear, collinear)

    canvas, results = warp_parts(image, [("a", good, good_mask), ("b", bad, bad_mask)], target)
    assert isinstance(results["a"], Homography)
    assert isinstance(results["b"], Exception)
    assert np.all(canvas[bad_mask] == 0)
