"""Post-processing mechanics: greedy NMS and 11-point average precision."""

import numpy as np

from dsod import nms, voc_ap
from dsod.inference import average_precision

# a cluster of near-duplicates around one object plus one separate box;
# greedy suppression keeps the best of the cluster and the loner
boxes = np.array([
    [0.20, 0.20, 0.50, 0.50],
    [0.22, 0.21, 0.52, 0.50],   # heavy overlap with the first
    [0.19, 0.22, 0.49, 0.52],   # likewise
    [0.70, 0.70, 0.90, 0.90],   # elsewhere
], np.float32)
scores = np.array([0.85, 0.92, 0.80, 0.60], np.float32)
kept = nms(boxes, scores, iou_threshold=0.45)
print("kept indices (best first):", kept.tolist())

# ties break toward the lower index, keeping results reproducible
tied = nms(np.array([[0.1, 0.1, 0.4, 0.4]] * 3, np.float32),
           np.array([0.7, 0.7, 0.7], np.float32))
print("three identical boxes, tied scores -> keep", tied.tolist())

# voc_ap walks the precision-recall staircase at 11 recall thresholds.
# two gts, three detections, the middle one a miss:
#   rank 1 hit   -> recall 0.5, precision 1
#   rank 2 miss  -> recall 0.5, precision 1/2
#   rank 3 hit   -> recall 1.0, precision 2/3
recalls = np.array([0.5, 0.5, 1.0])
precisions = np.array([1.0, 0.5, 2 / 3])
ap = voc_ap(recalls, precisions)
print(f"\nstaircase AP: {ap:.4f} (six thresholds see precision 1, five see 2/3)")

# the same number computed from raw detections; each (score, image, box)
# triple competes for the gts of its own image, best score first
gts = [np.array([[0.1, 0.1, 0.3, 0.3], [0.6, 0.6, 0.8, 0.8]], np.float32)]
dets = [(0.9, 0, gts[0][0]),
        (0.8, 0, np.array([0.4, 0.4, 0.5, 0.5], np.float32)),  # hits nothing
        (0.7, 0, gts[0][1])]
print("from detections:", round(average_precision(dets, gts), 4))

# input order does not matter, the ranking is internal
print("shuffled:", round(average_precision(dets[::-1], gts), 4))
