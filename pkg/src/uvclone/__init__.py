"""uvclone: clone clothing textures from annotated person images onto UV
texture maps, curate characters by similarity, and augment with
disturbance cropping."""

__version__ = "0.1.0"

from .datamodel import (  # noqa: F401
    DistanceMatrix,
    FeatureMap,
    GarmentAnnotation,
    PersonRecord,
    Rect,
    load_distance_matrix,
    load_feature_map,
    load_image,
    load_person_records,
    save_distance_matrix,
    save_feature_map,
    save_image,
    save_person_records,
)
from .homography import (  # noqa: F401
    Correspondences,
    Homography,
    estimate_homography,
    fit_homography,
    refine_homography,
    warp_region,
)
from .cell import (  # noqa: F401
    BlockSelection,
    ScaledCellSpec,
    expand_cell,
    find_homogeneous_cell,
    mirror_tiled,
    scale_cell,
)
from .posefilter import classify_view, qualify_record  # noqa: F401
from .curation import build_plan, dbscan, deduplicate  # noqa: F401
from .cropaug import CropPolicy, disturb_crop, image_rng  # noqa: F401
from .cloner import clone_garment, compose_outfit  # noqa: F401
from .templates import load_templates, probe_frontal_area  # noqa: F401
