"""Initialization, checkpoints, and the from-scratch training loop.

No pretraining anywhere: weights start xavier-uniform and the detector
trains end to end on the target dataset.  The effective batch is drawn
up front each iteration and split into ``accum_steps`` micro-batches
whose gradients accumulate before one optimizer step; losses normalize
by the positive count of the whole draw, so the result matches what a
single big forward pass would produce (exactly, once batch norm runs
off frozen statistics).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import boxes as B
from . import config as C
from . import data as D
from . import tensor as T
from .arch import ArchSpec, DetectionModel, build_model, scale_grids
from .errors import ConfigError, DataError, NumericError

CHECKPOINT_MAGIC = b"DSOD1"
CHECKPOINT_VERSION = 1


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *key])))


def init_params(model: DetectionModel, seed: int):
    """Xavier-uniform conv weights; unit norms at 20; fresh running stats."""
    rng = _stream(seed, 0)
    for name, p in model.named_params():
        if name.endswith(".weight"):
            co, ci, kh, kw = p.data.shape
            bound = np.sqrt(6.0 / (ci * kh * kw + co * kh * kw))
            p.data[...] = rng.uniform(-bound, bound, p.data.shape).astype(np.float32)
        elif name.endswith(".bias") or name.endswith(".beta"):
            p.data[...] = 0.0
        elif name.endswith(".gamma"):
            p.data[...] = 1.0
        elif name.endswith(".norm_scale"):
            p.data[...] = 20.0
        else:
            raise ConfigError(f"no initialization rule for parameter {name!r}")
    for name, buf in model.named_buffers():
        buf[...] = 1.0 if name.endswith("running_var") else 0.0


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model: DetectionModel, iteration: int, extra: dict | None = None):
    """Binary snapshot: magic, version, config echo, named float32 tensors."""
    cfg = C.spec_to_dict(model.spec)
    if extra:
        cfg.update({k: str(v) for k, v in extra.items()})
    cfg_bytes = C.format_kv(cfg).encode("utf-8")
    entries = list(model.named_params()) + [
        (n, T.Tensor(b)) for n, b in model.named_buffers()
    ]
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<B", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(cfg_bytes)))
        f.write(cfg_bytes)
        f.write(struct.pack("<Q", iteration))
        f.write(struct.pack("<I", len(entries)))
        for name, t in entries:
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            arr = np.ascontiguousarray(t.data, dtype="<f4")
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def _read(f, n, what, path):
    b = f.read(n)
    if len(b) != n:
        raise DataError(f"{path}: truncated while reading {what}")
    return b


def load_checkpoint(path) -> tuple:
    """Returns (model, iteration, config dict).  Restores params and stats."""
    path = Path(path)
    with open(path, "rb") as f:
        if _read(f, 5, "magic", path) != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a checkpoint (bad magic)")
        (version,) = struct.unpack("<B", _read(f, 1, "version", path))
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", _read(f, 4, "config length", path))
        cfg = C.parse_kv_text(_read(f, cfg_len, "config", path).decode("utf-8"), str(path))
        (iteration,) = struct.unpack("<Q", _read(f, 8, "iteration", path))
        (count,) = struct.unpack("<I", _read(f, 4, "tensor count", path))
        tensors = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<I", _read(f, 4, "name length", path))
            name = _read(f, nlen, "name", path).decode("utf-8")
            (rank,) = struct.unpack("<I", _read(f, 4, "rank", path))
            shape = struct.unpack(f"<{rank}I", _read(f, 4 * rank, "extents", path))
            n_items = int(np.prod(shape, dtype=np.int64)) if rank else 1
            payload = _read(f, 4 * n_items, f"tensor {name}", path)
            tensors[name] = np.frombuffer(payload, "<f4").reshape(shape).astype(np.float32)
        if f.read(1):
            raise DataError(f"{path}: trailing bytes after last tensor")

    spec = C.spec_from_dict(cfg)
    model = build_model(spec)
    expected = dict(model.named_params())
    buffers = dict(model.named_buffers())
    for name, arr in tensors.items():
        if name in expected:
            dst = expected.pop(name).data
        elif name in buffers:
            dst = buffers.pop(name)
        else:
            raise DataError(f"{path}: unexpected tensor {name!r}")
        if dst.shape != arr.shape:
            raise DataError(f"{path}: tensor {name!r} has shape {arr.shape}, model wants {dst.shape}")
        np.copyto(dst, arr)
    leftover = list(expected) + list(buffers)
    if leftover:
        raise DataError(f"{path}: checkpoint missing tensors: {', '.join(sorted(leftover)[:5])}")
    return model, iteration, cfg


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    spec: ArchSpec
    dataset: Path
    out_dir: Path
    total_iters: int = 3000
    batch_size: int = 8
    accum_steps: int = 2
    base_lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 0.0005
    lr_drop_every: int = 1200
    lr_drop_factor: float = 10.0
    neg_ratio: int = 3
    seed: int = 0
    augment: bool = True
    bn_mode: str = "train"  # "freeze" pins normalization to running stats
    checkpoint_every: int = 0  # 0: only the final checkpoint

    def validate(self):
        if self.total_iters < 0:
            # zero is allowed: the loop runs never and the checkpoint
            # captures the initialization untouched
            raise ConfigError(f"total_iters {self.total_iters} must be non-negative")
        if self.batch_size < 1 or self.accum_steps < 1:
            raise ConfigError("batch_size and accum_steps must be positive")
        if self.batch_size % self.accum_steps:
            raise ConfigError(
                f"accum_steps {self.accum_steps} must divide batch_size {self.batch_size}"
            )
        if self.bn_mode not in ("train", "freeze"):
            raise ConfigError(f"bn_mode {self.bn_mode!r} must be train or freeze")
        if self.base_lr <= 0 or self.lr_drop_every < 1 or self.lr_drop_factor <= 0:
            raise ConfigError("learning rate schedule values must be positive")


TRAIN_KEYS = (
    "dataset", "out_dir", "total_iters", "batch_size", "accum_steps", "base_lr",
    "momentum", "weight_decay", "lr_drop_every", "lr_drop_factor", "neg_ratio",
    "seed", "augment", "bn_mode", "checkpoint_every",
)


def train_config_from_dict(d: dict, base_dir: Path | None = None) -> TrainConfig:
    unknown = set(d) - set(TRAIN_KEYS) - set(C.ARCH_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    spec = C.spec_from_dict(d)
    for key in ("dataset", "out_dir"):
        if key not in d:
            raise ConfigError(f"config is missing the {key!r} key")
    root = Path(base_dir) if base_dir else Path(".")
    cfg = TrainConfig(
        spec=spec,
        dataset=(root / d["dataset"]).resolve() if not Path(d["dataset"]).is_absolute() else Path(d["dataset"]),
        out_dir=(root / d["out_dir"]).resolve() if not Path(d["out_dir"]).is_absolute() else Path(d["out_dir"]),
        total_iters=C.get_int(d, "total_iters", 3000),
        batch_size=C.get_int(d, "batch_size", 8),
        accum_steps=C.get_int(d, "accum_steps", 2),
        base_lr=C.get_float(d, "base_lr", 0.05),
        momentum=C.get_float(d, "momentum", 0.9),
        weight_decay=C.get_float(d, "weight_decay", 0.0005),
        lr_drop_every=C.get_int(d, "lr_drop_every", 1200),
        lr_drop_factor=C.get_float(d, "lr_drop_factor", 10.0),
        neg_ratio=C.get_int(d, "neg_ratio", 3),
        seed=C.get_int(d, "seed", 0),
        augment=C.get_bool(d, "augment", True),
        bn_mode=d.get("bn_mode", "train"),
        checkpoint_every=C.get_int(d, "checkpoint_every", 0),
    )
    cfg.validate()
    return cfg


def train_config_to_dict(cfg: TrainConfig) -> dict:
    """Hyperparameters for the checkpoint echo.

    Paths stay out: they are run environment, not model description, and
    checkpoints from identical runs in different directories must match
    byte for byte.
    """
    d = C.spec_to_dict(cfg.spec)
    d.update(
        total_iters=str(cfg.total_iters), batch_size=str(cfg.batch_size),
        accum_steps=str(cfg.accum_steps), base_lr=repr(cfg.base_lr),
        momentum=repr(cfg.momentum), weight_decay=repr(cfg.weight_decay),
        lr_drop_every=str(cfg.lr_drop_every), lr_drop_factor=repr(cfg.lr_drop_factor),
        neg_ratio=str(cfg.neg_ratio), seed=str(cfg.seed),
        augment="true" if cfg.augment else "false", bn_mode=cfg.bn_mode,
        checkpoint_every=str(cfg.checkpoint_every),
    )
    return d


@dataclass
class TrainResult:
    model: DetectionModel
    checkpoint_path: Path
    log_path: Path
    losses: list = field(default_factory=list)  # (iter, lr, loc, conf, total)


def train(cfg: TrainConfig, progress=None) -> TrainResult:
    """Run the full loop; writes loss_log.csv and checkpoint.bin to out_dir."""
    cfg.validate()
    manifest = D.load_manifest(cfg.dataset)
    if len(manifest.class_names) + 1 != cfg.spec.num_classes:
        raise ConfigError(
            f"dataset has {len(manifest.class_names)} classes; arch expects "
            f"{cfg.spec.num_classes} including background"
        )
    if manifest.size != cfg.spec.input_size:
        raise ConfigError(
            f"dataset images are {manifest.size}px but arch input_size is {cfg.spec.input_size}"
        )
    annotations = D.load_annotations(manifest)
    samples = [D.load_sample(manifest, i, annotations) for i in range(manifest.count)]

    model = build_model(cfg.spec)
    init_params(model, cfg.seed)
    params = [p for _, p in model.named_params()]
    opt = T.SGD(params, cfg.base_lr, cfg.momentum, cfg.weight_decay)
    defaults = B.generate_default_boxes(scale_grids(cfg.spec), cfg.spec.anchors_per_scale)
    bn_training = cfg.bn_mode == "train"
    micro = cfg.batch_size // cfg.accum_steps

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "loss_log.csv"
    ckpt_path = out_dir / "checkpoint.bin"
    losses = []

    with open(log_path, "w") as log:
        log.write("iter,lr,loss_loc,loss_conf,loss_total\n")
        for it in range(cfg.total_iters):
            lr = cfg.base_lr / (cfg.lr_drop_factor ** (it // cfg.lr_drop_every))
            opt.lr = lr
            rng = _stream(cfg.seed, 1, it)
            idxs = rng.integers(0, manifest.count, cfg.batch_size)
            drawn = [samples[i] for i in idxs]
            if cfg.augment:
                drawn = [D.augment(s, rng) for s in drawn]
            assigns = [B.match(defaults, s.boxes, s.labels) for s in drawn]
            n_pos = sum(int((a.labels > 0).sum()) for a in assigns)
            denom = max(n_pos, 1)

            opt.zero_grad()
            loc_v = conf_v = 0.0
            for m0 in range(0, cfg.batch_size, micro):
                chunk = drawn[m0 : m0 + micro]
                x = T.Tensor(np.stack([D.to_input(s.image) for s in chunk]))
                loc, conf = model.forward(x, training=bn_training)
                out = B.multibox_loss(loc, conf, assigns[m0 : m0 + micro],
                                      cfg.neg_ratio, normalizer=denom)
                if out.num_positives:
                    out.total.backward()
                loc_v += out.loc_value
                conf_v += out.conf_value
            total_v = loc_v + conf_v
            if not np.isfinite(total_v):
                raise NumericError(
                    f"non-finite loss {total_v} at iteration {it} (lr {lr:g}); "
                    "lower base_lr or check the dataset"
                )
            opt.step()

            log.write(f"{it},{lr:.8g},{loc_v:.6f},{conf_v:.6f},{total_v:.6f}\n")
            losses.append((it, lr, loc_v, conf_v, total_v))
            if progress and (it + 1) % progress == 0:
                done = sum(v for *_, v in losses[-progress:]) / progress
                print(f"iter {it + 1}/{cfg.total_iters} lr {lr:g} loss {done:.4f}", flush=True)
            if cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(out_dir / f"checkpoint_{it + 1}.bin", model, it + 1,
                                train_config_to_dict(cfg))

    save_checkpoint(ckpt_path, model, cfg.total_iters, train_config_to_dict(cfg))
    return TrainResult(model, ckpt_path, log_path, losses)
