"""Dataset layout, image files and checkpoints.

"""

from .images import (
    DEPTH_SCALE,
    to_bytes,
    read_image,
    write_image,
    read_mask,
    write_mask,
    read_depth,
    write_depth,
)
from .layout import (
    SplitSpecification,
    ViewRecord,
    DatasetManifest,
    load_dataset,
    read_points,
    write_points,
)
from .checkpoint import MAGIC, VERSION, dumps, loads, save_checkpoint, load_checkpoint


__all__ = [
    "DEPTH_SCALE",
    "to_bytes",
    "read_image",
    "write_image",
    "read_mask",
    "write_mask",
    "read_depth",
    "write_depth",
    "SplitSpecification",
    "ViewRecord",
    "DatasetManifest",
    "load_dataset",
    "read_points",
    "write_points",
    "MAGIC",
    "VERSION",
    "dumps",
    "loads",
    "save_checkpoint",
    "load_checkpoint",
]
