"""Train the tiny detector for a few hundred iterations, then look at it.

This is a scaled-down run for demonstration; a real training session uses
more images and iterations (see the readme) and pushes mAP much higher.
"""

import numpy as np

from pathlib import Path

from dsod import data as D
from dsod import training as TR
from dsod import inference as I
from dsod import tiny_config

root = Path("demo_out/run")
train_set = D.generate_dataset(root / "train", count=80, seed=1, size=128)
held_out = D.generate_dataset(root / "held", count=20, seed=2, size=128)

cfg = TR.TrainConfig(spec=tiny_config(), dataset=root / "train",
                     out_dir=root / "out", total_iters=250, batch_size=8,
                     accum_steps=2, base_lr=0.02, lr_drop_every=200, seed=0)
print("training", cfg.total_iters, "iterations on", train_set.count, "images...")
res = TR.train(cfg, progress=50)

first = np.mean([r[4] for r in res.losses[:25]])
last = np.mean([r[4] for r in res.losses[-25:]])
print(f"\nloss first-25 avg {first:.2f} -> last-25 avg {last:.2f}")

# the checkpoint restores the exact same network
model, iteration, _ = TR.load_checkpoint(res.checkpoint_path)
same = all(np.array_equal(p.data, q.data)
           for (_, p), (_, q) in zip(res.model.named_params(), model.named_params()))
print("checkpoint roundtrip bit-identical:", same, "at iteration", iteration)

# detections on one held-out image
ann = D.load_annotations(held_out)
sample = D.load_sample(held_out, 3, ann)
def pretty(box):
    return [round(float(v), 2) for v in box]

print("\nground truth:", [(held_out.class_names[l - 1], pretty(b))
                          for l, b in zip(sample.labels, sample.boxes)])
for d in I.infer(model, sample.image, conf_threshold=0.4)[:5]:
    print(f"  found {held_out.class_names[d.label - 1]:9s} score {d.score:.2f} "
          f"box {pretty(d.box)}")

# and the headline number over the whole held-out set
result = I.evaluate(model, held_out)
print("\nper-class AP:", {k: round(float(v), 3) for k, v in result.per_class.items()})
print(f"mAP@0.5 after {cfg.total_iters} iterations: {result.mean_ap:.3f}")
