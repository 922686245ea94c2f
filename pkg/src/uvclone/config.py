"""Pipeline configuration: defaults, key=value config files, overrides."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .cropaug import CropPolicy
from .curation import DEDUP_EPS, DEFAULT_MIN_PTS, PER_CLUSTER, SIMILARITY_EPS, TEST_K, TRAIN_K
from .posefilter import AREA_FRACTION_MIN, DETECTION_SCORE_MIN


@dataclass
class PipelineConfig:
    seed: int = 0
    corpus: str = ""
    images_dir: str = ""
    features_dir: str = ""
    distances: str = ""
    templates: str = ""
    output: str = "out"

    eps1: float = DEDUP_EPS
    eps2: float = SIMILARITY_EPS
    min_pts: int = DEFAULT_MIN_PTS
    per_cluster: int = PER_CLUSTER
    train_k: int = TRAIN_K
    test_k: int = TEST_K
    keep_noise_singletons: bool = False

    detection_score_min: float = DETECTION_SCORE_MIN
    area_fraction_min: float = AREA_FRACTION_MIN

    crop_probability: float = 0.3
    crop_side_rate: float = 0.3

    probe_square: int = 50
    probe_stride: int = 25
    probe_threshold: float = 1.0

    jobs: int = 1

    def crop_policy(self) -> CropPolicy:
        return CropPolicy(self.crop_probability, self.crop_side_rate)

    def validate(self) -> None:
        for name in ("eps1", "eps2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("crop_probability", "crop_side_rate",
                     "detection_score_min", "area_fraction_min"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        for name in ("min_pts", "per_cluster", "train_k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.test_k < 0:
            raise ValueError("test_k must be >= 0")


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def parse_config_file(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse a plain ``key = value`` config file ('#' starts a comment)."""
    cfg = base if base is not None else PipelineConfig()
    types = {f.name: f.type for f in fields(PipelineConfig)}
    updates = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"{path}:{line_no}: unknown key '{key}'")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            low = value.lower()
            if low in _BOOL_TRUE:
                updates[key] = True
            elif low in _BOOL_FALSE:
                updates[key] = False
            else:
                raise ValueError(f"{path}:{line_no}: bad boolean '{value}'")
        elif isinstance(current, int):
            updates[key] = int(value)
        elif isinstance(current, float):
            updates[key] = float(value)
        else:
            updates[key] = value
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg
