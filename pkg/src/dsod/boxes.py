"""Default boxes, target assignment, and the multibox training loss.

Boxes use two layouts: center form (cx, cy, w, h) for generation and
offset encoding, corner form (xmin, ymin, xmax, ymax) for overlap math.
All coordinates are normalized to the unit square.

The global box ordering is scale-major, then grid row, grid column, and
anchor index.  Head maps flatten the same way, so flat index k in a
prediction tensor and row k of the default box set always describe the
same box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError

VARIANCES = (0.1, 0.1, 0.2, 0.2)


@dataclass
class DefaultBoxSet:
    """Generated anchors plus bookkeeping for tests and decoding."""

    cxcywh: np.ndarray       # (N, 4) float32 center form
    corners: np.ndarray      # (N, 4) float32 corner form, clipped to [0, 1]
    scale_index: np.ndarray  # (N,) which prediction scale each box belongs to
    anchor_index: np.ndarray  # (N,) anchor slot within the grid cell

    def __len__(self):
        return len(self.cxcywh)


def corner_form(cxcywh: np.ndarray) -> np.ndarray:
    c = np.asarray(cxcywh, dtype=np.float32)
    half = c[..., 2:] / 2
    return np.concatenate([c[..., :2] - half, c[..., :2] + half], axis=-1)


def center_form(corners: np.ndarray) -> np.ndarray:
    c = np.asarray(corners, dtype=np.float32)
    wh = c[..., 2:] - c[..., :2]
    return np.concatenate([c[..., :2] + wh / 2, wh], axis=-1)


def _anchor_shapes(scale: float, extra_scale: float, count: int) -> list:
    """(w, h) pairs in priority order: unit, extra, 2:1, 1:2, 3:1, 1:3."""
    ratios = [2.0, 0.5, 3.0, 1.0 / 3.0]
    shapes = [(scale, scale), (extra_scale, extra_scale)]
    for r in ratios:
        sq = np.sqrt(r)
        shapes.append((scale * sq, scale / sq))
    if count > len(shapes):
        raise ConfigError(f"anchors per scale capped at {len(shapes)}, got {count}")
    return shapes[:count]


def generate_default_boxes(
    grids, anchors, s_min: float = 0.2, s_max: float = 0.9
) -> DefaultBoxSet:
    """Tile every scale's grid with its anchor shapes.

    Scale k of m gets box scale ``s_min + (s_max - s_min)*(k-1)/(m-1)``;
    its extra square anchor uses the geometric mean with the next scale
    (1.0 past the last).  Widths and heights clip to the unit square.
    """
    grids = list(grids)
    anchors = list(anchors)
    if len(grids) != len(anchors):
        raise ConfigError(f"{len(grids)} grids but {len(anchors)} anchor counts")
    m = len(grids)
    if m == 1:
        scales = [s_min]
    else:
        scales = [s_min + (s_max - s_min) * k / (m - 1) for k in range(m)]
    scales.append(1.0)

    boxes, scale_idx, anchor_idx = [], [], []
    for si, (g, count) in enumerate(zip(grids, anchors)):
        extra = float(np.sqrt(scales[si] * scales[si + 1]))
        shapes = _anchor_shapes(scales[si], extra, count)
        for row in range(g):
            cy = (row + 0.5) / g
            for col in range(g):
                cx = (col + 0.5) / g
                for ai, (w, h) in enumerate(shapes):
                    boxes.append((cx, cy, min(w, 1.0), min(h, 1.0)))
                    scale_idx.append(si)
                    anchor_idx.append(ai)
    cxcywh = np.asarray(boxes, dtype=np.float32)
    corners = np.clip(corner_form(cxcywh), 0.0, 1.0)
    return DefaultBoxSet(cxcywh, corners,
                         np.asarray(scale_idx, np.int64), np.asarray(anchor_idx, np.int64))


def iou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise intersection over union of corner-form boxes: (N, M)."""
    a = np.asarray(a, dtype=np.float32).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float32).reshape(-1, 4)
    lt = np.maximum(a[:, None, :2], b[None, :, :2])
    rb = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = np.clip(a[:, 2] - a[:, 0], 0, None) * np.clip(a[:, 3] - a[:, 1], 0, None)
    area_b = np.clip(b[:, 2] - b[:, 0], 0, None) * np.clip(b[:, 3] - b[:, 1], 0, None)
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def encode(gt_cxcywh: np.ndarray, default_cxcywh: np.ndarray,
           variances=VARIANCES) -> np.ndarray:
    g = np.asarray(gt_cxcywh, np.float32).reshape(-1, 4)
    d = np.asarray(default_cxcywh, np.float32).reshape(-1, 4)
    out = np.empty_like(g)
    out[:, 0] = (g[:, 0] - d[:, 0]) / (variances[0] * d[:, 2])
    out[:, 1] = (g[:, 1] - d[:, 1]) / (variances[1] * d[:, 3])
    out[:, 2] = np.log(g[:, 2] / d[:, 2]) / variances[2]
    out[:, 3] = np.log(g[:, 3] / d[:, 3]) / variances[3]
    return out


def decode(offsets: np.ndarray, default_cxcywh: np.ndarray,
           variances=VARIANCES) -> np.ndarray:
    t = np.asarray(offsets, np.float32).reshape(-1, 4)
    d = np.asarray(default_cxcywh, np.float32).reshape(-1, 4)
    out = np.empty_like(t)
    out[:, 0] = d[:, 0] + t[:, 0] * variances[0] * d[:, 2]
    out[:, 1] = d[:, 1] + t[:, 1] * variances[1] * d[:, 3]
    out[:, 2] = d[:, 2] * np.exp(t[:, 2] * variances[2])
    out[:, 3] = d[:, 3] * np.exp(t[:, 3] * variances[3])
    return out


@dataclass
class MatchAssignment:
    """Per-default-box training targets for one image."""

    labels: np.ndarray       # (N,) int64; 0 is background
    gt_index: np.ndarray     # (N,) int64; -1 where background
    loc_targets: np.ndarray  # (N, 4) float32; zeros where background


def match(defaults: DefaultBoxSet, gt_corners: np.ndarray, gt_labels: np.ndarray,
          iou_threshold: float = 0.5, variances=VARIANCES) -> MatchAssignment:
    """Assign ground truths to default boxes.

    Two passes: first every ground truth, in index order, claims its
    highest-overlap unclaimed default (ties to the lowest default index),
    so each gets at least one positive regardless of overlap.  Then every
    remaining default whose best ground truth overlaps at least
    `iou_threshold` joins that ground truth.  Each default ends up with
    at most one assignment; labels must be nonzero (0 means background).
    """
    n = len(defaults)
    gt_corners = np.asarray(gt_corners, np.float32).reshape(-1, 4)
    gt_labels = np.asarray(gt_labels, np.int64).reshape(-1)
    labels = np.zeros(n, np.int64)
    gt_index = np.full(n, -1, np.int64)
    loc_targets = np.zeros((n, 4), np.float32)
    if len(gt_corners) == 0:
        return MatchAssignment(labels, gt_index, loc_targets)
    if np.any(gt_labels <= 0):
        raise ConfigError("ground truth labels must be positive (0 is background)")

    overlaps = iou(defaults.corners, gt_corners)  # (N, M)
    for gi in range(len(gt_corners)):
        col = overlaps[:, gi].copy()
        col[gt_index >= 0] = -1.0  # claimed defaults are off the table
        di = int(col.argmax())  # argmax takes the lowest index on ties
        gt_index[di] = gi

    best_gt = overlaps.argmax(axis=1)
    best_iou = overlaps[np.arange(n), best_gt]
    free = gt_index < 0
    take = free & (best_iou >= iou_threshold)
    gt_index[take] = best_gt[take]

    assigned = gt_index >= 0
    labels[assigned] = gt_labels[gt_index[assigned]]
    gt_centers = center_form(gt_corners)
    loc_targets[assigned] = encode(
        gt_centers[gt_index[assigned]], defaults.cxcywh[assigned], variances
    )
    return MatchAssignment(labels, gt_index, loc_targets)


@dataclass
class MultiboxLoss:
    total: T.Tensor
    loc_value: float
    conf_value: float
    num_positives: int


def multibox_loss(loc: T.Tensor, conf: T.Tensor, assignments: list,
                  neg_ratio: int = 3, normalizer: int | None = None) -> MultiboxLoss:
    """Localization plus mined classification loss, normalized by positives.

    Negatives are mined per image: background rows ranked by their current
    cross-entropy (stable order on ties), keeping `neg_ratio` times that
    image's positives.  Both terms divide by the positive count across
    the whole batch, or by `normalizer` when the caller is accumulating
    gradients over micro-batches and wants the combined denominator.
    """
    b, n, k = conf.shape
    if len(assignments) != b:
        raise ConfigError(f"{len(assignments)} assignments for batch of {b}")
    labels = np.stack([a.labels for a in assignments])  # (B, N)
    flat_labels = labels.reshape(-1)
    pos_mask = flat_labels > 0
    total_pos = int(pos_mask.sum())
    denom = float(normalizer if normalizer is not None else max(total_pos, 1))

    conf2 = T.reshape(conf, (b * n, k))
    loc2 = T.reshape(loc, (b * n, 4))

    ce_all = T.cross_entropy_rows(conf2.data, flat_labels)
    picked = []
    for bi in range(b):
        row0 = bi * n
        img_labels = labels[bi]
        pos_rows = np.flatnonzero(img_labels > 0)
        neg_rows = np.flatnonzero(img_labels == 0)
        n_neg = min(neg_ratio * len(pos_rows), len(neg_rows))
        if len(pos_rows):
            picked.append(row0 + pos_rows)
        if n_neg:
            order = np.argsort(-ce_all[row0 + neg_rows], kind="stable")
            picked.append(row0 + neg_rows[order[:n_neg]])

    if total_pos == 0:
        zero = T.Tensor(np.zeros((), np.float32))
        return MultiboxLoss(zero, 0.0, 0.0, 0)

    sel = np.concatenate(picked)
    conf_sum = T.softmax_cross_entropy_sum(T.take_rows(conf2, sel), flat_labels[sel])
    pos_idx = np.flatnonzero(pos_mask)
    targets = np.concatenate([a.loc_targets for a in assignments])[pos_idx]
    loc_sum = T.smooth_l1_sum(T.take_rows(loc2, pos_idx), targets)

    loss_loc = T.scale(loc_sum, 1.0 / denom)
    loss_conf = T.scale(conf_sum, 1.0 / denom)
    total = T.add(loss_loc, loss_conf)
    return MultiboxLoss(total, loss_loc.item(), loss_conf.item(), total_pos)
