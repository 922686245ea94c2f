"""Detection gating and rule-based person-view classification.

A record passes the detection gate when its score is at least 0.8 and its
box covers at least 20% of the image.  Pose classification then evaluates
three rules in order and the first that fires wins:

  1. back view  -- the right shoulder lies to the right of the left shoulder
  2. side view  -- upper-body aspect ratio W/H below 0.3
  3. occluded   -- a hand or elbow inside the (horizontally padded) upper or
                   lower body quad

Anything else is a qualified frontal view.  All rules use ratios and
relative positions only, so the verdict is invariant to uniform scaling and
translation of the keypoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import (
    KP_LEFT_ELBOW,
    KP_LEFT_HAND,
    KP_LEFT_HIP,
    KP_LEFT_KNEE,
    KP_LEFT_SHOULDER,
    KP_RIGHT_ELBOW,
    KP_RIGHT_HAND,
    KP_RIGHT_HIP,
    KP_RIGHT_KNEE,
    KP_RIGHT_SHOULDER,
    PersonRecord,
)

DETECTION_SCORE_MIN = 0.8
AREA_FRACTION_MIN = 0.20
ASPECT_RATIO_MIN = 0.3
QUAD_PAD_FACTOR = 0.1

LABEL_QUALIFIED = "Qualified"
LABEL_BACK = "BackView"
LABEL_SIDE = "SideView"
LABEL_OCCLUDED = "Occluded"
LABEL_DETECTION = "DetectionRejected"

_HAND_ELBOW = (KP_LEFT_ELBOW, KP_RIGHT_ELBOW, KP_LEFT_HAND, KP_RIGHT_HAND)


@dataclass(frozen=True)
class ViewVerdict:
    label: str
    metrics: dict = field(default_factory=dict)


def gate_detection(r: PersonRecord, image_dims: tuple[int, int],
                   score_min: float = DETECTION_SCORE_MIN,
                   area_min: float = AREA_FRACTION_MIN) -> ViewVerdict | None:
    """Returns a DetectionRejected verdict, or None when the record passes.

    Thresholds are inclusive on the pass side.
    """
    w, h = image_dims
    area_fraction = r.person_bbox.area / float(w * h)
    metrics = {"detection_score": r.detection_score, "area_fraction": area_fraction}
    if r.detection_score < score_min or area_fraction < area_min:
        return ViewVerdict(LABEL_DETECTION, metrics)
    return None


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise convex hull (monotone chain) of a small point set."""
    pts = sorted(map(tuple, points))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=float)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=float)


def _expand_horizontally(hull: np.ndarray, pad: float) -> np.ndarray:
    """Push hull vertices outward from the centroid x by ``pad`` per side."""
    cx = hull[:, 0].mean()
    out = hull.copy()
    out[:, 0] += np.sign(out[:, 0] - cx) * pad
    return out


def _point_in_polygon(point: np.ndarray, poly: np.ndarray, tol: float = 1e-9) -> bool:
    """Boundary-inclusive test against a counter-clockwise convex polygon."""
    if len(poly) < 3:
        return False
    x, y = point
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if cross < -tol:
            return False
    return True


def classify_view(pose: np.ndarray) -> ViewVerdict:
    """Classify a 17-keypoint pose as back / side / occluded / qualified."""
    pts = np.asarray(pose, dtype=float)[:, :2]
    p5 = pts[KP_LEFT_SHOULDER]
    p6 = pts[KP_RIGHT_SHOULDER]
    p11 = pts[KP_LEFT_HIP]
    p12 = pts[KP_RIGHT_HIP]

    metrics: dict = {}

    # Rule 1: back view when the right shoulder appears right of the left
    metrics["shoulder_dx"] = float(p6[0] - p5[0])
    if p6[0] > p5[0]:
        return ViewVerdict(LABEL_BACK, metrics)

    # Rule 2: side view from the upper-body aspect ratio
    width = float(np.linalg.norm(p5 - p6))
    shoulder_mid = (p5 + p6) / 2.0
    hip_mid = (p11 + p12) / 2.0
    height = float(np.linalg.norm(shoulder_mid - hip_mid))
    if height < 1e-6:
        metrics["aspect_ratio"] = float("inf")
        metrics["degenerate_torso"] = True
        return ViewVerdict(LABEL_SIDE, metrics)
    ratio = width / height
    metrics["aspect_ratio"] = ratio
    if ratio < ASPECT_RATIO_MIN:
        return ViewVerdict(LABEL_SIDE, metrics)

    # Rule 3: hands or elbows inside the padded body quads
    upper_quad = np.array([p6, p5, p11, p12])
    lower_quad = np.array([p12, p11, pts[KP_LEFT_KNEE], pts[KP_RIGHT_KNEE]])
    w1 = float(np.linalg.norm(p5 - p6))          # top corner distance, upper quad
    w2 = float(np.linalg.norm(p11 - p12))        # top corner distance, lower quad
    upper_poly = _expand_horizontally(_convex_hull(upper_quad), QUAD_PAD_FACTOR * w1)
    lower_poly = _expand_horizontally(_convex_hull(lower_quad), QUAD_PAD_FACTOR * w2)
    for idx in _HAND_ELBOW:
        if _point_in_polygon(pts[idx], upper_poly) or _point_in_polygon(pts[idx], lower_poly):
            metrics["offending_point"] = int(idx)
            return ViewVerdict(LABEL_OCCLUDED, metrics)

    metrics["offending_point"] = None
    return ViewVerdict(LABEL_QUALIFIED, metrics)


def qualify_record(r: PersonRecord, image_dims: tuple[int, int],
                   score_min: float = DETECTION_SCORE_MIN,
                   area_min: float = AREA_FRACTION_MIN) -> ViewVerdict:
    """Detection gate followed by the pose rules."""
    rejected = gate_detection(r, image_dims, score_min, area_min)
    if rejected is not None:
        return rejected
    verdict = classify_view(r.pose)
    merged = {"detection_score": r.detection_score, **verdict.metrics}
    return ViewVerdict(verdict.label, merged)
