from .metaimage import Volume, read_metaimage, write_metaimage
from .phantom import PhantomSpec, make_phantom, phantom_batch
from .preprocess import (
    BLANK_HU_THRESHOLD,
    HU_MAX,
    HU_MIN,
    preprocess,
    resize_trilinear,
    window_normalize,
    zero_blank_slices,
)
from .split import split_dataset

__all__ = [
    "BLANK_HU_THRESHOLD",
    "HU_MAX",
    "HU_MIN",
    "PhantomSpec",
    "Volume",
    "make_phantom",
    "phantom_batch",
    "preprocess",
    "read_metaimage",
    "resize_trilinear",
    "split_dataset",
    "window_normalize",
    "write_metaimage",
    "zero_blank_slices",
]
