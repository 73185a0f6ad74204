"""The synthetic shape dataset: generation, file layout, augmentation."""

import numpy as np

from pathlib import Path

from dsod import data as D

out = Path("demo_out/shapes")
manifest = D.generate_dataset(out, count=12, seed=5, size=128)
print("wrote", manifest.count, "images to", out)
print("classes:", manifest.class_names)

# everything on disk is plain text or binary ppm, readable without the library
print("\nmanifest.txt:")
print((out / "manifest.txt").read_text(), end="")
print("first annotation lines (image label xmin ymin xmax ymax):")
for line in (out / "annotations.txt").read_text().splitlines()[:4]:
    print(" ", line)

# loading gives numpy arrays; boxes are normalized corner form
annotations = D.load_annotations(manifest)
sample = D.load_sample(manifest, 0, annotations)
print("\nimage dtype/shape:", sample.image.dtype, sample.image.shape)
print("boxes:\n", sample.boxes)
print("labels:", sample.labels, "->", [manifest.class_names[l - 1] for l in sample.labels])

# generation is pure function of (seed, index): same call, same bytes
again = D.generate_sample(5, 0, 128)
print("\nregenerated sample identical:", np.array_equal(again.image, sample.image))

# augmentation flips and crops; boxes follow the pixels
rng = np.random.default_rng(3)
aug = D.augment(sample, rng)
print("\nafter augment, boxes:\n", aug.boxes)

flipped = D.flip_horizontal(sample)
twice = D.flip_horizontal(flipped)
print("flip twice restores the image:", np.array_equal(twice.image, sample.image))

# the network eats CHW float32 in [-1, 1]
x = D.to_input(sample.image)
print("\nnetwork input:", x.shape, x.dtype, f"range [{x.min():.2f}, {x.max():.2f}]")
