"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration, 2 data, 3 numeric
failure.  argparse normally exits 2 on bad flags; that collides with the
data code, so the parser is rebound to exit 1.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as C
from . import data as D
from . import gradcheck as G
from . import inference as I
from . import training as TR
from .arch import make_spec, trace_csv
from .errors import ConfigError, DataError, NumericError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="dsod", description="From-scratch single-shot detector on synthetic shapes.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("describe", help="print the layer shape trace and parameter count")
    d.add_argument("--arch", required=True, help="architecture string, e.g. DS/64-192-48-1")
    d.add_argument("--blocks", default=None, help="dense layers per block, e.g. 6,8,8,8")
    d.add_argument("--input", type=int, default=None, help="input resolution in pixels")
    d.add_argument("--pred", choices=("plain", "dense"), default=None, help="prediction front-end style")
    d.add_argument("--classes", type=int, default=None, help="class count including background")
    d.add_argument("--scale-channels", type=int, default=None, help="channels per prediction scale")
    d.add_argument("--scales", type=int, default=None, help="number of prediction scales")
    d.add_argument("--no-stem", action="store_true", help="use the classic 7x7 entry instead of the stem")

    g = sub.add_parser("gradcheck", help="finite-difference check of backward passes")
    g.add_argument("--op", default="all", help="op name, or 'all'")
    g.add_argument("--seed", type=int, default=0)

    gd = sub.add_parser("gen-data", help="generate a synthetic shape dataset")
    gd.add_argument("--n", type=int, required=True, help="number of images")
    gd.add_argument("--classes", type=int, default=3, help="class count (the shape set has 3)")
    gd.add_argument("--size", type=int, default=128, help="image side in pixels")
    gd.add_argument("--seed", type=int, default=0)
    gd.add_argument("--out", required=True, help="output directory")

    t = sub.add_parser("train", help="train a detector")
    t.add_argument("--config", default=None, help="key = value config file; flags override it")
    for key, conv in (
        ("dataset", str), ("out-dir", str), ("arch", str), ("total-iters", int),
        ("batch-size", int), ("accum-steps", int), ("base-lr", float),
        ("momentum", float), ("weight-decay", float), ("lr-drop-every", int),
        ("lr-drop-factor", float), ("neg-ratio", int), ("seed", int),
        ("augment", str), ("bn-mode", str), ("checkpoint-every", int),
    ):
        t.add_argument(f"--{key}", type=conv, default=None)
    t.add_argument("--progress", type=int, default=0, help="print a status line every N iterations")

    e = sub.add_parser("eval", help="mAP over a dataset")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--iou", type=float, default=0.5)
    e.add_argument("--conf", type=float, default=0.01)
    e.add_argument("--max-images", type=int, default=None)
    e.add_argument("--out", default=None, help="also write the CSV here")

    dt = sub.add_parser("detect", help="detect objects in one image")
    dt.add_argument("--image", required=True, help="P6 ppm file")
    dt.add_argument("--ckpt", required=True)
    dt.add_argument("--conf", type=float, default=0.5)
    dt.add_argument("--nms-iou", type=float, default=0.45)
    dt.add_argument("--top-k", type=int, default=200)
    return p


def _cmd_describe(args) -> int:
    kw = {}
    if args.blocks is not None:
        try:
            kw["block_layers"] = tuple(int(v) for v in args.blocks.split(","))
        except ValueError:
            raise ConfigError(f"--blocks: expected comma-separated integers, got {args.blocks!r}")
    if args.input is not None:
        kw["input_size"] = args.input
    if args.pred is not None:
        kw["prediction_style"] = args.pred
    if args.classes is not None:
        kw["num_classes"] = args.classes
    if args.scale_channels is not None:
        kw["scale_channels"] = args.scale_channels
    if args.scales is not None:
        kw["num_scales"] = args.scales
    if args.no_stem:
        kw["use_stem"] = False
    spec = make_spec(args.arch, **kw)
    sys.stdout.write(trace_csv(spec))
    return 0


def _cmd_gradcheck(args) -> int:
    if args.op == "all":
        results = G.run_all(args.seed)
    else:
        results = [G.check_op(args.op, args.seed)]
    worst = 0.0
    for r in results:
        status = "ok" if r.max_rel_err < G.THRESHOLD else "FAIL"
        print(f"{r.name:24s} max_rel_err {r.max_rel_err:.3e}  {status}")
        worst = max(worst, r.max_rel_err)
    if worst >= G.THRESHOLD:
        raise NumericError(f"gradcheck failed: worst relative error {worst:.3e}")
    return 0


def _cmd_gen_data(args) -> int:
    if args.classes != len(D.CLASS_NAMES):
        raise ConfigError(
            f"--classes {args.classes}: the shape set defines exactly {len(D.CLASS_NAMES)} classes"
        )
    manifest = D.generate_dataset(Path(args.out), args.n, seed=args.seed, size=args.size)
    print(f"wrote {manifest.count} images of {manifest.size}px to {args.out}")
    return 0


def _cmd_train(args) -> int:
    d = {}
    base_dir = Path(".")
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise DataError(f"config file not found: {path}")
        d = C.parse_kv_text(path.read_text(), str(path))
        base_dir = path.parent
    for key in TR.TRAIN_KEYS + ("arch",):
        v = getattr(args, key)
        if v is not None:
            d[key] = str(v)
    cfg = TR.train_config_from_dict(d, base_dir)
    res = TR.train(cfg, progress=args.progress or None)
    print(f"checkpoint: {res.checkpoint_path}")
    print(f"loss log:   {res.log_path}")
    return 0


def _cmd_eval(args) -> int:
    model, _, _ = TR.load_checkpoint(args.ckpt)
    manifest = D.load_manifest(Path(args.data))
    result = I.evaluate(model, manifest, iou_threshold=args.iou,
                        conf_threshold=args.conf, max_images=args.max_images)
    csv = I.eval_csv(result)
    sys.stdout.write(csv)
    if args.out:
        Path(args.out).write_text(csv)
    return 0


def _cmd_detect(args) -> int:
    model, _, _ = TR.load_checkpoint(args.ckpt)
    image = D.read_ppm(Path(args.image))
    if image.shape[0] != model.spec.input_size or image.shape[1] != model.spec.input_size:
        raise ConfigError(
            f"image is {image.shape[1]}x{image.shape[0]} but the model wants "
            f"{model.spec.input_size}x{model.spec.input_size}"
        )
    for det in I.infer(model, image, conf_threshold=args.conf,
                       nms_iou=args.nms_iou, top_k=args.top_k):
        x0, y0, x1, y1 = det.box
        print(f"{det.label} {det.score:.4f} {x0:.4f} {y0:.4f} {x1:.4f} {y1:.4f}")
    return 0


_COMMANDS = {
    "describe": _cmd_describe,
    "gradcheck": _cmd_gradcheck,
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "detect": _cmd_detect,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
