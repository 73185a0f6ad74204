"""Architecture family: densely connected backbone plus multiscale heads.

A configuration is named ``DS/A-B-k-t``: the first convolution emits A
channels, dense-layer bottlenecks emit B channels, each dense layer grows
the running feature map by k channels, and transitions compress channel
counts by the factor t.  On top of that grammar sit a handful of
structural switches:

* entry: either a three-conv stem (3x3 stride 2, 3x3, 3x3 doubling to 2A,
  then 2x2 max pool) or the classic 7x7 stride-2 conv with a 3x3 pool;
* four dense blocks joined by transitions, where the first two
  transitions pool and the last two keep resolution so that later blocks
  can deepen the network without shrinking the final map (switching the
  resolution-preserving pair off drops to three blocks, ending in the
  same 1x1 compression);
* a multiscale prediction front end, either "plain" (each extra scale is
  a 1x1 reduction followed by a stride-2 3x3) or "dense" (each extra
  scale concatenates a learned stride-2 half with a pooled-and-projected
  copy of the previous scale, so every scale carries features from every
  depth);
* per-scale heads: channelwise L2 normalization to a learned scale,
  then parallel 3x3 convs for box offsets and class logits.

Dense layers and transitions are pre-activation (bn, relu, conv) and the
entry convs are post-activation (conv, bn, relu).  Backbone convs carry
no bias; only the two head convs do.

Everything geometric lives in `_geometry`, which both the layer builders
and the pure-arithmetic `shape_trace` / `count_params` consume, so the
described network and the built network cannot drift apart.  A second,
independently written accumulation (`count_params_closed_form`) guards
the parameter count itself.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .errors import ConfigError

# ---------------------------------------------------------------------------
# configuration


def default_anchors(num_scales: int) -> tuple:
    """Anchor counts per scale: 4 at the ends, 6 in the middle."""
    if num_scales < 2:
        raise ConfigError("need at least 2 prediction scales")
    if num_scales == 2:
        return (4, 4)
    if num_scales == 3:
        return (4, 6, 4)
    return tuple([4, 6] + [6] * (num_scales - 4) + [4, 4])


@dataclass(frozen=True)
class ArchSpec:
    """Complete description of one detector configuration."""

    first_channels: int
    bottleneck_channels: int
    growth_rate: int
    compression: float
    block_layers: tuple = (6, 8, 8, 8)
    use_stem: bool = True
    use_transition_wo_pooling: bool = True
    prediction_style: str = "dense"
    num_scales: int = 6
    scale_channels: int = 256
    num_classes: int = 21  # includes background at index 0
    anchors_per_scale: tuple = ()
    input_size: int = 300

    def __post_init__(self):
        if not self.anchors_per_scale:
            object.__setattr__(self, "anchors_per_scale", default_anchors(self.num_scales))
        object.__setattr__(self, "block_layers", tuple(self.block_layers))
        object.__setattr__(self, "anchors_per_scale", tuple(self.anchors_per_scale))

    @property
    def arch_string(self) -> str:
        t = self.compression
        ts = str(int(t)) if float(t).is_integer() else repr(float(t))
        return f"DS/{self.first_channels}-{self.bottleneck_channels}-{self.growth_rate}-{ts}"


_ARCH_RE = re.compile(r"^DS/(\d+)-(\d+)-(\d+)-(\d+(?:\.\d+)?)$")


def parse_arch_string(s: str) -> tuple:
    """Parse ``DS/A-B-k-t`` into (A, B, k, t); reject anything else."""
    m = _ARCH_RE.match(s.strip())
    if not m:
        raise ConfigError(
            f"bad architecture string {s!r}: expected DS/<first>-<bottleneck>-<growth>-<compression>"
        )
    a, b, k = int(m.group(1)), int(m.group(2)), int(m.group(3))
    theta = float(m.group(4))
    if a < 1 or b < 1 or k < 1:
        raise ConfigError(f"bad architecture string {s!r}: channel fields must be positive")
    if not 0.0 < theta <= 1.0:
        raise ConfigError(f"bad architecture string {s!r}: compression {theta} outside (0, 1]")
    return a, b, k, theta


def make_spec(arch: str, **overrides) -> ArchSpec:
    a, b, k, t = parse_arch_string(arch)
    return ArchSpec(a, b, k, t, **overrides)


def tiny_config() -> ArchSpec:
    """Desk-scale default: trains on a CPU in minutes."""
    return make_spec(
        "DS/8-16-4-1",
        block_layers=(2, 2, 2, 2),
        num_scales=4,
        scale_channels=16,
        num_classes=4,  # background + 3 shape classes
        input_size=128,
    )


def validate(spec: ArchSpec):
    if spec.compression <= 0 or spec.compression > 1:
        raise ConfigError(f"compression {spec.compression} outside (0, 1]")
    want_blocks = 4 if spec.use_transition_wo_pooling else 3
    if len(spec.block_layers) != want_blocks:
        raise ConfigError(
            f"block_layers {spec.block_layers} must have {want_blocks} entries "
            f"(use_transition_wo_pooling={spec.use_transition_wo_pooling})"
        )
    if any(n < 1 for n in spec.block_layers):
        raise ConfigError(f"block_layers {spec.block_layers} must be positive")
    if spec.prediction_style not in ("plain", "dense"):
        raise ConfigError(f"prediction_style {spec.prediction_style!r} must be plain or dense")
    if spec.num_scales < 2:
        raise ConfigError(f"num_scales {spec.num_scales} must be at least 2")
    if spec.scale_channels < 2 or spec.scale_channels % 2:
        raise ConfigError(f"scale_channels {spec.scale_channels} must be even and >= 2")
    if len(spec.anchors_per_scale) != spec.num_scales:
        raise ConfigError(
            f"anchors_per_scale {spec.anchors_per_scale} must have {spec.num_scales} entries"
        )
    if any(a < 1 for a in spec.anchors_per_scale):
        raise ConfigError("anchors_per_scale entries must be positive")
    if spec.num_classes < 2:
        raise ConfigError(f"num_classes {spec.num_classes} must include background plus one class")
    if spec.input_size < 16:
        raise ConfigError(f"input_size {spec.input_size} too small")


# ---------------------------------------------------------------------------
# geometry: the one place extent and channel arithmetic happens


def conv_extent(extent: int, kernel: int, stride: int, padding: int) -> int:
    return (extent + 2 * padding - kernel) // stride + 1


def _compress(channels: int, theta: float) -> int:
    return int(math.floor(channels * theta + 1e-9))


@dataclass
class _ScaleGeom:
    extent: int
    channels: int
    # conv/pool shape choices for scales >= 3; None for taps
    conv_stride: int = 0
    conv_padding: int = 0
    pool_kernel: int = 0
    pool_stride: int = 0


@dataclass
class _Geometry:
    entry_channels: int
    entry_conv_extent: int
    entry_pool_extent: int
    block_in: list = field(default_factory=list)
    block_out: list = field(default_factory=list)
    block_extent: list = field(default_factory=list)
    trans_out: list = field(default_factory=list)
    scale1_channels: int = 0
    final_channels: int = 0
    scales: list = field(default_factory=list)


def _geometry(spec: ArchSpec) -> _Geometry:
    validate(spec)
    a = spec.first_channels
    if spec.use_stem:
        entry_c = 2 * a
        conv_e = conv_extent(spec.input_size, 3, 2, 1)
        pool_e = T.pool_out_extent(conv_e, 2, 2)
    else:
        entry_c = a
        conv_e = conv_extent(spec.input_size, 7, 2, 3)
        pool_e = T.pool_out_extent(conv_e, 3, 2)
    g = _Geometry(entry_c, conv_e, pool_e)

    c, e = entry_c, pool_e
    n_blocks = len(spec.block_layers)
    for i, layers in enumerate(spec.block_layers):
        g.block_in.append(c)
        c = c + layers * spec.growth_rate
        g.block_out.append(c)
        g.block_extent.append(e)
        c = _compress(c, spec.compression)
        g.trans_out.append(c)
        if i == 1:
            g.scale1_channels = c
        if i < 2:  # first two transitions pool
            e = T.pool_out_extent(e, 2, 2)
    g.final_channels = c

    s1_extent = g.block_extent[1]  # tap sits before the second pooling
    final_extent = e
    if s1_extent < 2 or final_extent < 1:
        raise ConfigError(f"input_size {spec.input_size} leaves no spatial extent for prediction")

    g.scales.append(_ScaleGeom(s1_extent, g.scale1_channels))
    g.scales.append(_ScaleGeom(final_extent, spec.scale_channels if spec.prediction_style == "dense" else g.final_channels))
    prev = final_extent
    for s in range(3, spec.num_scales + 1):
        if prev < 2:
            raise ConfigError(
                f"num_scales {spec.num_scales} exhausts spatial extent at scale {s} (prev extent {prev})"
            )
        if s == spec.num_scales and prev == 3:
            # final shrink to 1x1: unpadded 3x3, and the parallel pool matches
            sg = _ScaleGeom(1, spec.scale_channels, conv_stride=1, conv_padding=0, pool_kernel=3, pool_stride=1)
        else:
            sg = _ScaleGeom(conv_extent(prev, 3, 2, 1), spec.scale_channels,
                            conv_stride=2, conv_padding=1, pool_kernel=2, pool_stride=2)
        g.scales.append(sg)
        prev = sg.extent
    return g


def scale_grids(spec: ArchSpec) -> tuple:
    """Spatial extent of each prediction scale (square grids)."""
    return tuple(sg.extent for sg in _geometry(spec).scales)


def num_default_boxes(spec: ArchSpec) -> int:
    return sum(g * g * a for g, a in zip(scale_grids(spec), spec.anchors_per_scale))


# ---------------------------------------------------------------------------
# layers


class Module:
    """Base with name-walking over parameters and buffers.

    State discipline: module attributes are child modules, parameter
    Tensors, buffer ndarrays, or plain configuration scalars.  Walk order
    is attribute insertion order, so checkpoint layouts are stable.
    """

    def _walk(self, prefix=""):
        for key, val in vars(self).items():
            name = f"{prefix}.{key}" if prefix else key
            yield from _walk_value(name, val)

    def named_params(self, prefix=""):
        for kind, name, obj in self._walk(prefix):
            if kind == "param":
                yield name, obj

    def named_buffers(self, prefix=""):
        for kind, name, obj in self._walk(prefix):
            if kind == "buffer":
                yield name, obj


def _walk_value(name, val):
    if isinstance(val, T.Tensor):
        yield "param", name, val
    elif isinstance(val, np.ndarray):
        yield "buffer", name, val
    elif isinstance(val, Module):
        yield from val._walk(name)
    elif isinstance(val, (list, tuple)):
        for i, v in enumerate(val):
            yield from _walk_value(f"{name}.{i}", v)


class Conv(Module):
    def __init__(self, cin, cout, kernel, stride=1, padding=0, bias=False):
        self.weight = T.Tensor(np.zeros((cout, cin, kernel, kernel), np.float32), requires_grad=True)
        self.bias = T.Tensor(np.zeros(cout, np.float32), requires_grad=True) if bias else None
        self.stride = stride
        self.padding = padding

    def __call__(self, x):
        return T.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm(Module):
    def __init__(self, channels):
        self.gamma = T.Tensor(np.ones(channels, np.float32), requires_grad=True)
        self.beta = T.Tensor(np.zeros(channels, np.float32), requires_grad=True)
        self.running_mean = np.zeros(channels, np.float32)
        self.running_var = np.ones(channels, np.float32)

    def __call__(self, x, training):
        return T.batchnorm(x, self.gamma, self.beta, self.running_mean, self.running_var, training)


class ConvBNRelu(Module):
    """Entry-style post-activation unit."""

    def __init__(self, cin, cout, kernel, stride=1, padding=0):
        self.conv = Conv(cin, cout, kernel, stride, padding)
        self.bn = BatchNorm(cout)

    def __call__(self, x, training):
        return T.relu(self.bn(self.conv(x), training))


class BNReluConv(Module):
    """Pre-activation unit used by dense layers, transitions, front end."""

    def __init__(self, cin, cout, kernel, stride=1, padding=0):
        self.bn = BatchNorm(cin)
        self.conv = Conv(cin, cout, kernel, stride, padding)

    def __call__(self, x, training):
        return self.conv(T.relu(self.bn(x, training)))


class DenseLayer(Module):
    def __init__(self, cin, bottleneck, growth):
        self.reduce = BNReluConv(cin, bottleneck, 1)
        self.grow = BNReluConv(bottleneck, growth, 3, padding=1)

    def __call__(self, x, training):
        return self.grow(self.reduce(x, training), training)


class DenseBlock(Module):
    def __init__(self, cin, num_layers, bottleneck, growth):
        chans = cin
        layers = []
        for _ in range(num_layers):
            layers.append(DenseLayer(chans, bottleneck, growth))
            chans += growth
        self.layers = layers
        self.out_channels = chans

    def __call__(self, x, training):
        feats = [x]
        for layer in self.layers:
            inp = feats[0] if len(feats) == 1 else T.concat(feats, axis=1)
            feats.append(layer(inp, training))
        return T.concat(feats, axis=1)


class Stem(Module):
    def __init__(self, a):
        self.conv1 = ConvBNRelu(3, a, 3, stride=2, padding=1)
        self.conv2 = ConvBNRelu(a, a, 3, padding=1)
        self.conv3 = ConvBNRelu(a, 2 * a, 3, padding=1)

    def __call__(self, x, training):
        out = self.conv3(self.conv2(self.conv1(x, training), training), training)
        return T.maxpool2d(out, 2, 2)


class ClassicEntry(Module):
    def __init__(self, a):
        self.conv = ConvBNRelu(3, a, 7, stride=2, padding=3)

    def __call__(self, x, training):
        return T.maxpool2d(self.conv(x, training), 3, 2)


class DownsampleHalf(Module):
    """Pool the previous scale, then project to half the scale width."""

    def __init__(self, cin, half, pool_kernel, pool_stride):
        self.proj = BNReluConv(cin, half, 1)
        self.pool_kernel = pool_kernel
        self.pool_stride = pool_stride

    def __call__(self, x, training):
        return self.proj(T.maxpool2d(x, self.pool_kernel, self.pool_stride), training)


class LearnedHalf(Module):
    """1x1 reduction then a resolution-dropping 3x3."""

    def __init__(self, cin, half, stride, padding):
        self.reduce = BNReluConv(cin, half, 1)
        self.conv = BNReluConv(half, half, 3, stride, padding)

    def __call__(self, x, training):
        return self.conv(self.reduce(x, training), training)


class DenseStage(Module):
    def __init__(self, cin, half, conv_stride, conv_padding, pool_kernel, pool_stride):
        self.learned = LearnedHalf(cin, half, conv_stride, conv_padding)
        self.down = DownsampleHalf(cin, half, pool_kernel, pool_stride)

    def __call__(self, x, training):
        return T.concat([self.learned(x, training), self.down(x, training)], axis=1)


class PlainStage(Module):
    def __init__(self, cin, half, cout, stride, padding):
        self.reduce = BNReluConv(cin, half, 1)
        self.conv = BNReluConv(half, cout, 3, stride, padding)

    def __call__(self, x, training):
        return self.conv(self.reduce(x, training), training)


class Head(Module):
    def __init__(self, cin, anchors, num_classes):
        self.norm_scale = T.Tensor(np.full(cin, 20.0, np.float32), requires_grad=True)
        self.loc = Conv(cin, 4 * anchors, 3, padding=1, bias=True)
        self.conf = Conv(cin, num_classes * anchors, 3, padding=1, bias=True)

    def __call__(self, x):
        feat = T.l2_normalize_scale(x, self.norm_scale)
        return self.loc(feat), self.conf(feat)


def flatten_head_map(m: T.Tensor, width: int) -> T.Tensor:
    """(B, a*width, H, W) -> (B, H*W*a, width), row-major then anchor."""
    b, c, h, w = m.shape
    return T.reshape(T.transpose(m, (0, 2, 3, 1)), (b, h * w * (c // width), width))


class DetectionModel(Module):
    """The full detector; forward returns flattened per-box predictions."""

    def __init__(self, spec: ArchSpec):
        geom = _geometry(spec)
        self.spec = spec
        self.geom = geom
        if spec.use_stem:
            self.entry = Stem(spec.first_channels)
        else:
            self.entry = ClassicEntry(spec.first_channels)

        blocks, transitions = [], []
        for cin, cout, ctrans in zip(geom.block_in, geom.block_out, geom.trans_out):
            blocks.append(DenseBlock(cin, (cout - cin) // spec.growth_rate, spec.bottleneck_channels, spec.growth_rate))
            transitions.append(BNReluConv(cout, ctrans, 1))
        self.blocks = blocks
        self.transitions = transitions

        half = spec.scale_channels // 2
        if spec.prediction_style == "dense":
            self.scale2_learned = BNReluConv(geom.final_channels, half, 1)
            self.scale2_down = DownsampleHalf(geom.scale1_channels, half, 2, 2)
        stages = []
        for sg in geom.scales[2:]:
            if spec.prediction_style == "dense":
                stages.append(DenseStage(spec.scale_channels, half, sg.conv_stride, sg.conv_padding,
                                         sg.pool_kernel, sg.pool_stride))
            else:
                cin = geom.final_channels if not stages else spec.scale_channels
                stages.append(PlainStage(cin, half, spec.scale_channels, sg.conv_stride, sg.conv_padding))
        self.stages = stages

        self.heads = [
            Head(sg.channels, a, spec.num_classes)
            for sg, a in zip(geom.scales, spec.anchors_per_scale)
        ]

    def scale_features(self, x: T.Tensor, training: bool = False) -> list:
        feat = self.entry(x, training)
        tap1 = None
        for i, (block, trans) in enumerate(zip(self.blocks, self.transitions)):
            feat = trans(block(feat, training), training)
            if i == 1:
                tap1 = feat  # before the pooling that follows this transition
            if i < 2:
                feat = T.maxpool2d(feat, 2, 2)
        final = feat

        scales = [tap1]
        if self.spec.prediction_style == "dense":
            s2 = T.concat(
                [self.scale2_learned(final, training), self.scale2_down(tap1, training)], axis=1
            )
        else:
            s2 = final
        scales.append(s2)
        prev = s2
        for stage in self.stages:
            prev = stage(prev, training)
            scales.append(prev)
        return scales

    def forward(self, x: T.Tensor, training: bool = False) -> tuple:
        """Returns (loc (B, N, 4), conf (B, N, num_classes))."""
        scales = self.scale_features(x, training)
        locs, confs = [], []
        for feat, head in zip(scales, self.heads):
            lm, cm = head(feat)
            locs.append(flatten_head_map(lm, 4))
            confs.append(flatten_head_map(cm, self.spec.num_classes))
        return T.concat(locs, axis=1), T.concat(confs, axis=1)


def build_model(spec: ArchSpec) -> DetectionModel:
    return DetectionModel(spec)


# ---------------------------------------------------------------------------
# arithmetic descriptions


@dataclass(frozen=True)
class TraceRow:
    name: str
    channels: int
    h: int
    w: int
    params: int


def _brc_params(cin, cout, kernel):
    return 2 * cin + cin * cout * kernel * kernel


def _cbr_params(cin, cout, kernel):
    return cin * cout * kernel * kernel + 2 * cout


def shape_trace(spec: ArchSpec) -> list:
    """Layer-by-layer output shapes and parameter counts, no model built."""
    g = _geometry(spec)
    a = spec.first_channels
    rows = []
    if spec.use_stem:
        e = g.entry_conv_extent
        rows.append(TraceRow("stem.conv1", a, e, e, _cbr_params(3, a, 3)))
        rows.append(TraceRow("stem.conv2", a, e, e, _cbr_params(a, a, 3)))
        rows.append(TraceRow("stem.conv3", 2 * a, e, e, _cbr_params(a, 2 * a, 3)))
        rows.append(TraceRow("stem.pool", 2 * a, g.entry_pool_extent, g.entry_pool_extent, 0))
    else:
        e = g.entry_conv_extent
        rows.append(TraceRow("entry.conv", a, e, e, _cbr_params(3, a, 7)))
        rows.append(TraceRow("entry.pool", a, g.entry_pool_extent, g.entry_pool_extent, 0))

    for i in range(len(spec.block_layers)):
        e = g.block_extent[i]
        p = 0
        c = g.block_in[i]
        for _ in range(spec.block_layers[i]):
            p += _brc_params(c, spec.bottleneck_channels, 1)
            p += _brc_params(spec.bottleneck_channels, spec.growth_rate, 3)
            c += spec.growth_rate
        rows.append(TraceRow(f"block{i + 1}", g.block_out[i], e, e, p))
        rows.append(TraceRow(f"trans{i + 1}.conv", g.trans_out[i], e, e,
                             _brc_params(g.block_out[i], g.trans_out[i], 1)))
        if i < 2:
            pe = T.pool_out_extent(e, 2, 2)
            rows.append(TraceRow(f"trans{i + 1}.pool", g.trans_out[i], pe, pe, 0))

    half = spec.scale_channels // 2
    s1 = g.scales[0]
    rows.append(TraceRow("pred.scale1", s1.channels, s1.extent, s1.extent, 0))
    s2 = g.scales[1]
    if spec.prediction_style == "dense":
        p2 = _brc_params(g.final_channels, half, 1) + _brc_params(g.scale1_channels, half, 1)
    else:
        p2 = 0
    rows.append(TraceRow("pred.scale2", s2.channels, s2.extent, s2.extent, p2))
    for idx, sg in enumerate(g.scales[2:], start=3):
        if spec.prediction_style == "dense":
            p = (_brc_params(spec.scale_channels, half, 1) + _brc_params(half, half, 3)
                 + _brc_params(spec.scale_channels, half, 1))
        else:
            cin = g.final_channels if idx == 3 else spec.scale_channels
            p = _brc_params(cin, half, 1) + _brc_params(half, spec.scale_channels, 3)
        rows.append(TraceRow(f"pred.scale{idx}", sg.channels, sg.extent, sg.extent, p))

    for idx, (sg, na) in enumerate(zip(g.scales, spec.anchors_per_scale), start=1):
        c = sg.channels
        rows.append(TraceRow(f"head{idx}.norm", c, sg.extent, sg.extent, c))
        rows.append(TraceRow(f"head{idx}.loc", 4 * na, sg.extent, sg.extent,
                             c * 4 * na * 9 + 4 * na))
        rows.append(TraceRow(f"head{idx}.conf", spec.num_classes * na, sg.extent, sg.extent,
                             c * spec.num_classes * na * 9 + spec.num_classes * na))
    return rows


def count_params(spec: ArchSpec) -> int:
    return sum(r.params for r in shape_trace(spec))


def count_params_closed_form(spec: ArchSpec) -> int:
    """Independent accumulation, organized by formula rather than by layer."""
    a, b, k, th = (spec.first_channels, spec.bottleneck_channels,
                   spec.growth_rate, spec.compression)
    total = 0
    # entry
    if spec.use_stem:
        total += 3 * a * 9 + 2 * a + a * a * 9 + 2 * a + a * 2 * a * 9 + 4 * a
        c = 2 * a
    else:
        total += 3 * a * 49 + 2 * a
        c = a
    # dense blocks and transitions
    widths = []
    for layers in spec.block_layers:
        for _ in range(layers):
            total += 2 * c + c * b + 2 * b + b * k * 9
            c += k
        cc = _compress(c, th)
        total += 2 * c + c * cc
        widths.append(cc)
        c = cc
    s1c, fc = widths[1], widths[-1]
    # prediction front end
    sc, half = spec.scale_channels, spec.scale_channels // 2
    n_extra = spec.num_scales - 2
    if spec.prediction_style == "dense":
        total += 2 * fc + fc * half + 2 * s1c + s1c * half
        total += n_extra * (2 * (2 * sc + sc * half) + 2 * half + half * half * 9)
        chans = [s1c] + [sc] * (spec.num_scales - 1)
    else:
        if n_extra:
            total += 2 * fc + fc * half + 2 * half + half * sc * 9
            total += (n_extra - 1) * (2 * sc + sc * half + 2 * half + half * sc * 9)
        chans = [s1c, fc] + [sc] * n_extra
    # heads
    for cin, na in zip(chans, spec.anchors_per_scale):
        total += cin  # learned norm scales
        total += (cin * 9 + 1) * (4 * na) + (cin * 9 + 1) * (spec.num_classes * na)
    return total


def count_model_params(model: DetectionModel) -> int:
    return sum(p.data.size for _, p in model.named_params())


def trace_csv(spec: ArchSpec) -> str:
    lines = ["name,channels,h,w,params"]
    for r in shape_trace(spec):
        lines.append(f"{r.name},{r.channels},{r.h},{r.w},{r.params}")
    lines.append(f"total_params,{count_params(spec)}")
    return "\n".join(lines) + "\n"
