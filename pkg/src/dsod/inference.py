"""Detection-time pieces: decoding, NMS, and 11-point average precision.

Everything here is deterministic under ties: candidate ordering always
falls back to the lower index, matching the stable sorts used during
mining and making evaluation output byte-reproducible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import boxes as B
from . import data as D
from . import tensor as T
from .arch import DetectionModel, scale_grids


@dataclass
class Detection:
    label: int          # class id, 1-based (0 is background)
    score: float
    box: np.ndarray     # (4,) normalized corners


def nms(corners: np.ndarray, scores: np.ndarray, iou_threshold: float = 0.45) -> np.ndarray:
    """Greedy non-maximum suppression; returns kept indices, best first.

    Candidates are visited in score order (ties to the lower index); each
    keeper suppresses boxes overlapping it by strictly more than
    `iou_threshold`, so the kept set is pairwise IoU <= threshold.
    """
    corners = np.asarray(corners, np.float32).reshape(-1, 4)
    scores = np.asarray(scores, np.float32).reshape(-1)
    order = np.argsort(-scores, kind="stable")
    keep = []
    while order.size:
        i = order[0]
        keep.append(int(i))
        if order.size == 1:
            break
        rest = order[1:]
        ov = B.iou(corners[i], corners[rest])[0]
        order = rest[ov <= iou_threshold]
    return np.asarray(keep, np.int64)


def infer(model: DetectionModel, image: np.ndarray, conf_threshold: float = 0.01,
          nms_iou: float = 0.45, top_k: int = 200) -> list:
    """Detect objects in one uint8 HWC image."""
    spec = model.spec
    defaults = B.generate_default_boxes(scale_grids(spec), spec.anchors_per_scale)
    x = T.Tensor(D.to_input(image)[None])
    with T.no_grad():
        loc, conf = model.forward(x, training=False)
    scores = T.softmax_rows(conf.data[0])          # (N, K)
    decoded = B.decode(loc.data[0], defaults.cxcywh)
    corners = np.clip(B.corner_form(decoded), 0.0, 1.0)

    out = []
    for cls in range(1, spec.num_classes):
        cls_scores = scores[:, cls]
        sel = np.flatnonzero(cls_scores >= conf_threshold)
        if not sel.size:
            continue
        keep = nms(corners[sel], cls_scores[sel], nms_iou)
        for i in sel[keep]:
            out.append(Detection(cls, float(cls_scores[i]), corners[i].copy()))
    # best first; ties break on class then anchor order
    out.sort(key=lambda d: (-d.score, d.label))
    return out[:top_k]


def voc_ap(recalls: np.ndarray, precisions: np.ndarray) -> float:
    """11-point interpolated average precision.

    Thresholds are built as k/10 rather than with linspace: a recall that
    lands exactly on a tenth must count as reaching it, and linspace's
    accumulated rounding can sit one ulp above the literal.
    """
    recalls = np.asarray(recalls, np.float64)
    precisions = np.asarray(precisions, np.float64)
    ap = 0.0
    for t in np.arange(11) / 10.0:
        mask = recalls >= t
        ap += precisions[mask].max() if mask.any() else 0.0
    return float(ap / 11.0)


def average_precision(dets: list, gt_boxes_by_image: list, iou_threshold: float = 0.5) -> float:
    """AP for one class from pooled detections.

    `dets` holds (score, image_index, corner box) triples in any order;
    ranking sorts by descending score with the image index breaking ties,
    so the result does not depend on input order.  Each ground truth is
    creditable once; further hits on it are false positives.

    Raises ValueError when there are no ground truths (AP is undefined).
    """
    n_gt = sum(len(g) for g in gt_boxes_by_image)
    if n_gt == 0:
        raise ValueError("average_precision needs at least one ground truth")
    if not dets:
        return 0.0
    scores = np.array([d[0] for d in dets], np.float64)
    imgs = np.array([d[1] for d in dets], np.int64)
    order = np.lexsort((imgs, -scores))
    used = [np.zeros(len(g), bool) for g in gt_boxes_by_image]
    tp = np.zeros(len(dets))
    fp = np.zeros(len(dets))
    for rank, di in enumerate(order):
        _, img, box = dets[di]
        cand = gt_boxes_by_image[img]
        if len(cand) == 0:
            fp[rank] = 1
            continue
        ov = B.iou(box, cand)[0]
        best = int(ov.argmax())
        if ov[best] >= iou_threshold and not used[img][best]:
            used[img][best] = True
            tp[rank] = 1
        else:
            fp[rank] = 1
    ctp, cfp = np.cumsum(tp), np.cumsum(fp)
    return voc_ap(ctp / n_gt, ctp / np.maximum(ctp + cfp, 1e-12))


@dataclass
class EvalResult:
    per_class: dict      # class name -> AP; classes absent from the gts are omitted
    mean_ap: float
    n_images: int


def evaluate(model: DetectionModel, manifest: D.DatasetManifest,
             iou_threshold: float = 0.5, conf_threshold: float = 0.01,
             nms_iou: float = 0.45, top_k: int = 200,
             max_images: int | None = None) -> EvalResult:
    """Per-class AP and mAP over a dataset directory.

    A class with no ground truth anywhere has undefined AP; it is dropped
    from the mean with a warning instead of polluting it with a zero.
    """
    annotations = D.load_annotations(manifest)
    n_images = manifest.count if max_images is None else min(max_images, manifest.count)

    all_dets = {c: [] for c in range(1, model.spec.num_classes)}
    gts = []
    for i in range(n_images):
        sample = D.load_sample(manifest, i, annotations)
        gts.append((sample.boxes, sample.labels))
        for det in infer(model, sample.image, conf_threshold, nms_iou, top_k):
            all_dets[det.label].append((det.score, i, det.box))

    per_class = {}
    for cls in range(1, model.spec.num_classes):
        name = manifest.class_names[cls - 1]
        cls_boxes = [boxes[labels == cls] for boxes, labels in gts]
        if sum(len(g) for g in cls_boxes) == 0:
            warnings.warn(f"class {name!r} has no ground truth; AP undefined, skipped")
            continue
        per_class[name] = average_precision(all_dets[cls], cls_boxes, iou_threshold)

    mean_ap = float(np.mean(list(per_class.values()))) if per_class else 0.0
    return EvalResult(per_class, mean_ap, n_images)


def eval_csv(result: EvalResult) -> str:
    lines = ["class,ap"]
    for name, ap in result.per_class.items():
        lines.append(f"{name},{ap:.6f}")
    lines.append(f"mAP,{result.mean_ap:.6f}")
    return "\n".join(lines) + "\n"
