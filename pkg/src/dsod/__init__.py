"""Small-scale single-shot object detection trained from scratch on numpy."""

import os as _os

# DSOD_THREADS caps BLAS parallelism (0 or unset: leave the libraries on
# auto).  Must run before numpy's first import, hence here at package top.
_t = _os.environ.get("DSOD_THREADS", "0")
if _t not in ("", "0"):
    for _k in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
               "OMP_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_k, _t)

from .arch import (
    ArchSpec,
    DetectionModel,
    build_model,
    count_params,
    make_spec,
    parse_arch_string,
    scale_grids,
    shape_trace,
    tiny_config,
    trace_csv,
)
from .boxes import (
    decode,
    encode,
    generate_default_boxes,
    iou,
    match,
    multibox_loss,
)
from .data import (
    CLASS_NAMES,
    generate_dataset,
    load_annotations,
    load_manifest,
    load_sample,
    read_ppm,
    write_ppm,
)
from .errors import ConfigError, DataError, NumericError
from .inference import Detection, evaluate, infer, nms, voc_ap
from .tensor import SGD, Tensor, no_grad
from .training import (
    TrainConfig,
    init_params,
    load_checkpoint,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ArchSpec",
    "CLASS_NAMES",
    "ConfigError",
    "DataError",
    "Detection",
    "DetectionModel",
    "NumericError",
    "SGD",
    "Tensor",
    "TrainConfig",
    "build_model",
    "count_params",
    "decode",
    "encode",
    "evaluate",
    "generate_dataset",
    "generate_default_boxes",
    "infer",
    "init_params",
    "iou",
    "load_annotations",
    "load_checkpoint",
    "load_manifest",
    "load_sample",
    "make_spec",
    "match",
    "multibox_loss",
    "nms",
    "no_grad",
    "parse_arch_string",
    "read_ppm",
    "save_checkpoint",
    "scale_grids",
    "shape_trace",
    "tiny_config",
    "trace_csv",
    "train",
    "voc_ap",
    "write_ppm",
]
