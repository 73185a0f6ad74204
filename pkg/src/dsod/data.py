"""Synthetic shape detection dataset: generation, disk format, augmentation.

Images contain 1-3 solid shapes (rectangle, disc, triangle, class ids
1-3) over a noisy gray background.  Rasterization is integer-only - a
rectangle slice, a squared-distance test, and half-plane sign tests - so
a (seed, index) pair produces the same pixels on every platform, and the
annotated box is the exact bounding box of the drawn mask.  Each class
keeps its own color family; that separation is what lets the desk-scale
training budget reach useful accuracy in minutes.

On disk a dataset is::

    root/
      manifest.txt        classes, image size, sample count
      images/000000.ppm   binary P6, one per sample
      annotations.txt     "<id> <label> <xmin> <ymin> <xmax> <ymax>"

Boxes are normalized to [0, 1]; a pixel run [p0, p1] inclusive maps to
[p0/S, (p1+1)/S).  Every loader failure raises `DataError` naming the
file (and line where it applies).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

CLASS_NAMES = ("rectangle", "disc", "triangle")

# per-class base colors, jittered per object
_PALETTE = {1: (200, 70, 70), 2: (70, 180, 90), 3: (80, 110, 210)}


@dataclass
class Sample:
    image: np.ndarray   # (S, S, 3) uint8
    boxes: np.ndarray   # (M, 4) float32 normalized corners
    labels: np.ndarray  # (M,) int64, values in 1..len(CLASS_NAMES)


@dataclass
class DatasetManifest:
    root: Path
    class_names: tuple
    size: int
    count: int

    def image_path(self, index: int) -> Path:
        return self.root / "images" / f"{index:06d}.ppm"


# ---------------------------------------------------------------------------
# PPM


def write_ppm(path, image: np.ndarray):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise DataError(f"write_ppm: need (H, W, 3) uint8, got {image.shape} {image.dtype}")
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(image.tobytes())


def read_ppm(path) -> np.ndarray:
    """Binary P6 reader; tolerates comments and arbitrary whitespace."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"{path}: {e}") from e

    pos = 0

    def token():
        nonlocal pos
        while pos < len(raw):
            if raw[pos : pos + 1].isspace():
                pos += 1
            elif raw[pos : pos + 1] == b"#":
                while pos < len(raw) and raw[pos] != 0x0A:
                    pos += 1
            else:
                break
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError(f"{path}: truncated header")
        return raw[start:pos]

    if token() != b"P6":
        raise DataError(f"{path}: not a binary P6 file")
    try:
        w, h, maxval = int(token()), int(token()), int(token())
    except ValueError as e:
        raise DataError(f"{path}: bad header field: {e}") from e
    if w < 1 or h < 1:
        raise DataError(f"{path}: bad dimensions {w}x{h}")
    if maxval != 255:
        raise DataError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    body = raw[pos : pos + w * h * 3]
    if len(body) != w * h * 3:
        raise DataError(f"{path}: expected {w * h * 3} pixel bytes, found {len(body)}")
    return np.frombuffer(body, np.uint8).reshape(h, w, 3).copy()


# ---------------------------------------------------------------------------
# rasterization (integer arithmetic throughout)


def _disc_mask(size, cx, cy, r):
    yy, xx = np.ogrid[:size, :size]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def _triangle_mask(size, verts):
    yy, xx = np.mgrid[:size, :size]
    (x1, y1), (x2, y2), (x3, y3) = [(int(x), int(y)) for x, y in verts]
    area2 = (x2 - x1) * (y3 - y1) - (y2 - y1) * (x3 - x1)
    if area2 == 0:
        return np.zeros((size, size), bool)
    s = 1 if area2 > 0 else -1
    m = np.ones((size, size), bool)
    for (ax, ay), (bx, by) in (((x1, y1), (x2, y2)), ((x2, y2), (x3, y3)), ((x3, y3), (x1, y1))):
        m &= s * ((bx - ax) * (yy - ay) - (by - ay) * (xx - ax)) >= 0
    return m


def _mask_bbox(mask):
    ys = np.flatnonzero(mask.any(axis=1))
    xs = np.flatnonzero(mask.any(axis=0))
    return int(xs[0]), int(ys[0]), int(xs[-1]), int(ys[-1])  # inclusive pixel box


def _draw_shape(rng, label, size):
    """Returns (mask, inclusive pixel bbox) for one random shape."""
    lo, hi = max(4, int(size * 0.18)), int(size * 0.55)
    if label == 1:
        w = int(rng.integers(lo, hi + 1))
        h = int(rng.integers(lo, hi + 1))
        x0 = int(rng.integers(1, size - w))
        y0 = int(rng.integers(1, size - h))
        mask = np.zeros((size, size), bool)
        mask[y0 : y0 + h, x0 : x0 + w] = True
    elif label == 2:
        r = int(rng.integers(lo // 2, hi // 2 + 1))
        cx = int(rng.integers(r + 1, size - r - 1))
        cy = int(rng.integers(r + 1, size - r - 1))
        mask = _disc_mask(size, cx, cy, r)
    else:
        w = int(rng.integers(lo, hi + 1))
        h = int(rng.integers(lo, hi + 1))
        x0 = int(rng.integers(1, size - w))
        y0 = int(rng.integers(1, size - h))
        # isoceles triangle, apex on a random side of its box
        pick = int(rng.integers(0, 4))
        corners = {
            0: ((x0 + w // 2, y0), (x0, y0 + h), (x0 + w, y0 + h)),          # up
            1: ((x0 + w // 2, y0 + h), (x0, y0), (x0 + w, y0)),              # down
            2: ((x0, y0 + h // 2), (x0 + w, y0), (x0 + w, y0 + h)),          # left
            3: ((x0 + w, y0 + h // 2), (x0, y0), (x0, y0 + h)),              # right
        }[pick]
        mask = _triangle_mask(size, corners)
    return mask, _mask_bbox(mask)


def _boxes_overlap_too_much(b, others, limit=0.3):
    bx0, by0, bx1, by1 = b
    area_b = (bx1 - bx0 + 1) * (by1 - by0 + 1)
    for ox0, oy0, ox1, oy1 in others:
        iw = min(bx1, ox1) - max(bx0, ox0) + 1
        ih = min(by1, oy1) - max(by0, oy0) + 1
        if iw <= 0 or ih <= 0:
            continue
        inter = iw * ih
        union = area_b + (ox1 - ox0 + 1) * (oy1 - oy0 + 1) - inter
        if inter / union > limit:
            return True
    return False


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """The per-sample stream: stable hash of (seed, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def generate_sample(seed: int, index: int, size: int = 128) -> Sample:
    """Deterministically rasterize sample `index` of stream `seed`."""
    rng = sample_rng(seed, index)
    bg = int(rng.integers(40, 91))
    image = np.clip(
        bg + rng.integers(-8, 9, (size, size, 3)), 0, 255
    ).astype(np.uint8)

    n_objects = int(rng.integers(1, 4))
    boxes_px, labels = [], []
    for k in range(n_objects):
        label = int(rng.integers(1, len(CLASS_NAMES) + 1))
        placed = None
        for _ in range(20):
            mask, bbox = _draw_shape(rng, label, size)
            if not boxes_px or not _boxes_overlap_too_much(bbox, boxes_px):
                placed = (mask, bbox)
                break
        if placed is None:
            continue  # crowded image; keep what fits
        mask, bbox = placed
        base = np.array(_PALETTE[label], np.int64)
        color = np.clip(base + rng.integers(-40, 41, 3), 30, 235)
        shade = color[None, :] + rng.integers(-8, 9, (int(mask.sum()), 3))
        image[mask] = np.clip(shade, 0, 255).astype(np.uint8)
        boxes_px.append(bbox)
        labels.append(label)

    boxes = np.array(
        [(x0 / size, y0 / size, (x1 + 1) / size, (y1 + 1) / size) for x0, y0, x1, y1 in boxes_px],
        np.float32,
    ).reshape(-1, 4)
    return Sample(image, boxes, np.asarray(labels, np.int64))


# ---------------------------------------------------------------------------
# disk layout


def generate_dataset(root, count: int, seed: int, size: int = 128) -> DatasetManifest:
    """Write `count` samples; identical arguments give identical bytes."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    ann_lines = []
    for i in range(count):
        s = generate_sample(seed, i, size)
        write_ppm(root / "images" / f"{i:06d}.ppm", s.image)
        for box, label in zip(s.boxes, s.labels):
            ann_lines.append(
                f"{i:06d} {label} {box[0]:.6f} {box[1]:.6f} {box[2]:.6f} {box[3]:.6f}"
            )
    (root / "annotations.txt").write_text("\n".join(ann_lines) + "\n")
    (root / "manifest.txt").write_text(
        f"classes {' '.join(CLASS_NAMES)}\nsize {size}\ncount {count}\n"
    )
    return DatasetManifest(root, CLASS_NAMES, size, count)


def load_manifest(root) -> DatasetManifest:
    root = Path(root)
    path = root / "manifest.txt"
    if not path.is_file():
        raise DataError(f"{path}: missing manifest")
    fields = {}
    for ln, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        if key not in ("classes", "size", "count") or not rest:
            raise DataError(f"{path}:{ln}: unrecognized manifest line {line!r}")
        fields[key] = rest
    for key in ("classes", "size", "count"):
        if key not in fields:
            raise DataError(f"{path}: manifest missing {key!r}")
    try:
        size, count = int(fields["size"]), int(fields["count"])
    except ValueError as e:
        raise DataError(f"{path}: {e}") from e
    m = DatasetManifest(root, tuple(fields["classes"].split()), size, count)
    if size < 8 or count < 1 or not m.class_names:
        raise DataError(f"{path}: implausible manifest values")
    for i in range(count):
        if not m.image_path(i).is_file():
            raise DataError(f"{m.image_path(i)}: referenced by manifest but missing")
    if not (root / "annotations.txt").is_file():
        raise DataError(f"{root / 'annotations.txt'}: missing")
    return m


def load_annotations(manifest: DatasetManifest) -> list:
    """Per-sample (boxes, labels) in manifest order."""
    path = manifest.root / "annotations.txt"
    per = [([], []) for _ in range(manifest.count)]
    n_classes = len(manifest.class_names)
    for ln, line in enumerate(path.read_text().splitlines(), 1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 6:
            raise DataError(f"{path}:{ln}: expected 6 fields, got {len(parts)}")
        try:
            idx = int(parts[0])
            label = int(parts[1])
            coords = [float(v) for v in parts[2:]]
        except ValueError as e:
            raise DataError(f"{path}:{ln}: {e}") from e
        if not 0 <= idx < manifest.count:
            raise DataError(f"{path}:{ln}: sample id {idx} outside manifest count")
        if not 1 <= label <= n_classes:
            raise DataError(f"{path}:{ln}: label {label} outside 1..{n_classes}")
        x0, y0, x1, y1 = coords
        if not (0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1):
            raise DataError(f"{path}:{ln}: degenerate box {coords}")
        per[idx][0].append(coords)
        per[idx][1].append(label)
    return [
        (np.asarray(bx, np.float32).reshape(-1, 4), np.asarray(lb, np.int64))
        for bx, lb in per
    ]


def load_sample(manifest: DatasetManifest, index: int, annotations=None) -> Sample:
    if not 0 <= index < manifest.count:
        raise DataError(f"sample index {index} outside 0..{manifest.count - 1}")
    image = read_ppm(manifest.image_path(index))
    if image.shape[:2] != (manifest.size, manifest.size):
        raise DataError(
            f"{manifest.image_path(index)}: size {image.shape[:2]} does not match manifest"
        )
    if annotations is None:
        annotations = load_annotations(manifest)
    boxes, labels = annotations[index]
    return Sample(image, boxes, labels)


# ---------------------------------------------------------------------------
# augmentation


def flip_horizontal(sample: Sample) -> Sample:
    image = sample.image[:, ::-1].copy()
    boxes = sample.boxes.copy()
    if len(boxes):
        boxes[:, [0, 2]] = 1.0 - sample.boxes[:, [2, 0]]
    return Sample(image, boxes, sample.labels.copy())


def random_crop(sample: Sample, rng, min_area: float = 0.5, min_visible: float = 0.5,
                tries: int = 10) -> Sample:
    """Square crop covering at least `min_area` of the image, resized back.

    A box survives when at least `min_visible` of its area stays inside
    the crop; its coordinates are clipped and renormalized.  If no box
    would survive, a smaller bite is retried; after `tries` failures the
    sample comes back unchanged.
    """
    size = sample.image.shape[0]
    for _ in range(tries):
        frac = min_area + (1.0 - min_area) * rng.random()
        side = min(size, max(2, int(round(size * np.sqrt(frac)))))
        x0 = int(rng.integers(0, size - side + 1))
        y0 = int(rng.integers(0, size - side + 1))
        if len(sample.boxes) == 0:
            kept = np.zeros(0, bool)
        else:
            px = sample.boxes * size
            cx0 = np.clip(px[:, 0], x0, x0 + side)
            cy0 = np.clip(px[:, 1], y0, y0 + side)
            cx1 = np.clip(px[:, 2], x0, x0 + side)
            cy1 = np.clip(px[:, 3], y0, y0 + side)
            vis = np.clip(cx1 - cx0, 0, None) * np.clip(cy1 - cy0, 0, None)
            orig = (px[:, 2] - px[:, 0]) * (px[:, 3] - px[:, 1])
            kept = vis >= min_visible * orig
        if len(sample.boxes) and not kept.any():
            continue
        src = np.arange(size) * side // size  # nearest-neighbor upscale
        image = sample.image[y0 + src[:, None], x0 + src[None, :]]
        if len(sample.boxes) == 0:
            return Sample(image.copy(), sample.boxes.copy(), sample.labels.copy())
        boxes = np.stack(
            [(cx0[kept] - x0) / side, (cy0[kept] - y0) / side,
             (cx1[kept] - x0) / side, (cy1[kept] - y0) / side], axis=1
        ).astype(np.float32)
        return Sample(image.copy(), boxes, sample.labels[kept].copy())
    return Sample(sample.image.copy(), sample.boxes.copy(), sample.labels.copy())


def augment(sample: Sample, rng) -> Sample:
    if rng.random() < 0.5:
        sample = flip_horizontal(sample)
    return random_crop(sample, rng)


def to_input(image: np.ndarray) -> np.ndarray:
    """uint8 HWC image -> float32 CHW in [-1, 1]."""
    x = image.astype(np.float32) / 127.5 - 1.0
    return np.ascontiguousarray(x.transpose(2, 0, 1))
