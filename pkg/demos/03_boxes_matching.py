"""Default boxes, matching, and the multibox loss on hand-made inputs."""

import numpy as np

from dsod import generate_default_boxes, iou, match, encode, decode
from dsod import tiny_config, scale_grids
from dsod.boxes import center_form, corner_form, multibox_loss
from dsod import tensor as T

spec = tiny_config()
grids = scale_grids(spec)
defaults = generate_default_boxes(grids, spec.anchors_per_scale)
print("grids per scale:", grids)
print("default boxes total:", defaults.cxcywh.shape[0])

# anchors tile each grid cell with several shapes; the first cell shows them
n0 = spec.anchors_per_scale[0]
print("\nshapes at the first cell of scale 1 (cx cy w h):")
print(np.round(defaults.cxcywh[:n0], 3))

# encode maps a ground-truth box into the offset space the network regresses;
# decode inverts it exactly (up to float32)
gt = np.array([[0.2, 0.3, 0.55, 0.7]], np.float32)
off = encode(center_form(gt), defaults.cxcywh[:1])
back = corner_form(decode(off, defaults.cxcywh[:1]))
print("\nencode/decode roundtrip error:", float(np.abs(back - gt).max()))

# matching: every gt claims its best anchor, then anything overlapping >= 0.5
labels = np.array([2])
assign = match(defaults, gt, labels)
pos = np.flatnonzero(assign.labels > 0)
print(f"\npositives for one gt: {len(pos)} anchors")
best = defaults.corners[pos]
print("their IoUs with the gt:", np.round(iou(gt, best)[0], 3))

# the loss drives a batch of head outputs toward those assignments; random
# logits give a large conf term, mined 3 negatives per positive
rng = np.random.default_rng(1)
n = defaults.cxcywh.shape[0]
loc = T.Tensor(rng.standard_normal((1, n, 4)).astype(np.float32), requires_grad=True)
conf = T.Tensor(rng.standard_normal((1, n, spec.num_classes)).astype(np.float32),
                requires_grad=True)
out = multibox_loss(loc, conf, [assign], neg_ratio=3)
print(f"\nloss on random outputs: loc {out.loc_value:.3f} conf {out.conf_value:.3f}")
out.total.backward()
rows_touched = np.unique(np.nonzero(conf.grad.reshape(n, -1))[0])
print(f"conf grad touches {len(rows_touched)} anchors "
      f"(positives plus mined negatives, rest stay zero)")
