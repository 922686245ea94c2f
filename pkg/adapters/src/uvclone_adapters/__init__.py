"""Stand-in model adapters for the uvclone pipeline.

These adapters produce the three ingestion files the pipeline reads, in
its documented formats, without any real neural models behind them: person
annotations are derived geometrically from the image, features are simple
color and gradient statistics on a 48x16 grid, and distances come from
pooled feature vectors.  Outputs are a pure function of (images, seed).
"""

__version__ = "0.1.0"

from .stubs import (  # noqa: F401
    FEATURE_DIM,
    GRID_H,
    GRID_W,
    annotate_image,
    feature_grid,
    pooled_distance_matrix,
)
from .emit import emit_corpus, emit_distances, emit_features  # noqa: F401
