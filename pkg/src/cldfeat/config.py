"""Model presets, the canonical tensor layout, parameter accounting, and a
multiply-accumulate cost estimator.

The nine presets scale channel widths, residual depth, sample count and
descriptor size.  `tensor_layout` is the single source of truth for which
tensors a model owns; parameter counts, weight initialization, file
validation and the forward passes all derive from it.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationError, ShapeError

PRESET_ORDER = ("A48", "N64", "T64", "S64", "M64", "L64", "G128", "E128", "U128")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters of one model variant.

    c1/c2/c3 are the channel widths of the 1/2, 1/8 and 1/32 pyramid levels,
    r2/r3 the residual-block counts of the two deeper stages, c_det the
    detection-head width, m the deformable samples per level and c_desc the
    descriptor dimension.
    """

    name: str
    c1: int
    c2: int
    c3: int
    r2: int
    r3: int
    c_det: int
    m: int
    c_desc: int

    @property
    def c_sum(self) -> int:
        return self.c1 + self.c2 + self.c3


PRESETS: dict[str, ModelConfig] = {
    "A48": ModelConfig("A48", 4, 4, 4, 1, 1, 4, 4, 48),
    "N64": ModelConfig("N64", 8, 8, 8, 1, 1, 8, 8, 64),
    "T64": ModelConfig("T64", 8, 16, 24, 1, 1, 8, 8, 64),
    "S64": ModelConfig("S64", 8, 24, 32, 1, 1, 8, 16, 64),
    "M64": ModelConfig("M64", 16, 32, 48, 1, 1, 8, 16, 64),
    "L64": ModelConfig("L64", 16, 48, 96, 1, 1, 8, 16, 64),
    "G128": ModelConfig("G128", 16, 64, 256, 1, 1, 8, 32, 128),
    "E128": ModelConfig("E128", 16, 64, 256, 2, 2, 8, 32, 128),
    "U128": ModelConfig("U128", 32, 128, 256, 2, 2, 8, 32, 128),
}

# Frozen per-component parameter budgets in millions, at display precision.
# Regression guard: any change to the architecture definition that shifts a
# count past its displayed rounding is a bug, caught by selfcheck and tests.
PARAM_BUDGETS_MP: dict[str, tuple[str, str, str, str]] = {
    "A48": ("0.00123", "0.00036", "0.003", "0.004"),
    "N64": ("0.00448", "0.00109", "0.014", "0.019"),
    "T64": ("0.015", "0.00128", "0.027", "0.043"),
    "S64": ("0.026", "0.00141", "0.072", "0.100"),
    "M64": ("0.058", "0.00167", "0.108", "0.168"),
    "L64": ("0.166", "0.00218", "0.179", "0.347"),
    "G128": ("0.809", "0.00359", "1.441", "2.254"),
    "E128": ("2.063", "0.00359", "1.441", "3.508"),
    "U128": ("2.612", "0.00423", "1.784", "4.400"),
}


def get_config(name: str) -> ModelConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown config {name!r}; valid: {', '.join(PRESET_ORDER)}"
        ) from None


def config_id(name: str) -> int:
    """Stable integer id of a preset, used in binary file headers."""
    try:
        return PRESET_ORDER.index(name)
    except ValueError:
        raise ConfigurationError(f"unknown config {name!r}") from None


def config_from_id(cid: int) -> ModelConfig:
    if not 0 <= cid < len(PRESET_ORDER):
        raise ConfigurationError(f"unknown config id {cid}")
    return PRESETS[PRESET_ORDER[cid]]


def tensor_layout(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) pairs of every tensor the model owns.

    Names follow the frozen `stage.block.layer.{weight|bias}` scheme.
    Convolution weights are (out, in, kh, kw); affine weights are (out, in);
    every layer carries a bias and there are no normalization layers.
    """
    c = config
    layout: list[tuple[str, tuple[int, ...]]] = []

    def conv(name: str, cout: int, cin: int, k: int) -> None:
        layout.append((f"{name}.weight", (cout, cin, k, k)))
        layout.append((f"{name}.bias", (cout,)))

    def affine(name: str, out_dim: int, in_dim: int) -> None:
        layout.append((f"{name}.weight", (out_dim, in_dim)))
        layout.append((f"{name}.bias", (out_dim,)))

    def block(prefix: str, cin: int, cout: int) -> None:
        conv(f"{prefix}.conv1", cout, cin, 3)
        conv(f"{prefix}.conv2", cout, cout, 3)
        if cin != cout:
            conv(f"{prefix}.proj", cout, cin, 1)

    conv("backbone.stem0", c.c1, 3, 4)
    conv("backbone.stem1", c.c1, c.c1, 3)
    block("backbone.stage1.block0", c.c1, c.c1)
    for stage, (cin, cout, reps) in (
        (2, (c.c1, c.c2, c.r2)),
        (3, (c.c2, c.c3, c.r3)),
    ):
        for b in range(reps):
            block(f"backbone.stage{stage}.block{b}", cin if b == 0 else cout, cout)

    conv("detect.compress1", c.c_det, c.c1, 1)
    conv("detect.compress2", c.c_det, c.c2, 1)
    conv("detect.compress3", c.c_det, c.c3, 1)
    conv("detect.refine", c.c_det, c.c_det, 3)
    conv("detect.logits", 4, c.c_det, 3)

    affine("desc.offsets", 6 * c.m, c.c_sum)
    affine("desc.aggregate", c.c_desc, c.m * c.c_sum)
    return layout


@dataclass(frozen=True)
class ParamCount:
    backbone: int
    detect: int
    desc: int

    @property
    def total(self) -> int:
        return self.backbone + self.detect + self.desc


def param_count(config: ModelConfig) -> ParamCount:
    """Per-component scalar counts derived from the tensor layout."""
    sums = {"backbone": 0, "detect": 0, "desc": 0}
    for name, shape in tensor_layout(config):
        n = 1
        for d in shape:
            n *= d
        sums[name.split(".", 1)[0]] += n
    return ParamCount(sums["backbone"], sums["detect"], sums["desc"])


def format_mp(count: int, like: str) -> str:
    """Render a scalar count in millions at the precision of `like`."""
    decimals = len(like.split(".")[1]) if "." in like else 0
    return f"{count / 1e6:.{decimals}f}"


def budgets_match(config: ModelConfig) -> bool:
    """True when all three component counts round-match the frozen budgets."""
    counts = param_count(config)
    budget = PARAM_BUDGETS_MP[config.name]
    actual = (counts.backbone, counts.detect, counts.desc, counts.total)
    return all(format_mp(a, b) == b for a, b in zip(actual, budget))


def conv_macs(out_h: int, out_w: int, cout: int, cin: int, kh: int, kw: int) -> int:
    """Multiply-accumulates of one convolution: output cells x per-cell MACs."""
    return out_h * out_w * cout * cin * kh * kw


def flops_estimate(config: ModelConfig, h: int, w: int, n_keypoints: int) -> int:
    """Estimated multiply-accumulate count of one full extraction.

    Convention: 1 MAC = 1 FLOP.  Counts every convolution, the per-keypoint
    description affine maps, and bilinear samples at 4 MACs per channel.
    Activations, pooling and softmax are not counted.
    """
    if h % 32 or w % 32:
        raise ShapeError(f"flops_estimate: {h}x{w} not divisible by 32")
    c = config
    h1, w1 = h // 2, w // 2
    h2, w2 = h // 8, w // 8
    h3, w3 = h // 32, w // 32

    macs = 0
    macs += conv_macs(h1, w1, c.c1, 3, 4, 4)          # stem, stride 2
    macs += conv_macs(h1, w1, c.c1, c.c1, 3, 3)       # stem refine
    macs += 2 * conv_macs(h1, w1, c.c1, c.c1, 3, 3)   # stage-1 block
    for (hh, ww), cin, cout, reps in (
        ((h2, w2), c.c1, c.c2, c.r2),
        ((h3, w3), c.c2, c.c3, c.r3),
    ):
        for b in range(reps):
            ci = cin if b == 0 else cout
            macs += conv_macs(hh, ww, cout, ci, 3, 3)
            macs += conv_macs(hh, ww, cout, cout, 3, 3)
            if b == 0 and ci != cout:
                macs += conv_macs(hh, ww, cout, ci, 1, 1)

    macs += conv_macs(h1, w1, c.c_det, c.c1, 1, 1)
    macs += conv_macs(h2, w2, c.c_det, c.c2, 1, 1)
    macs += conv_macs(h3, w3, c.c_det, c.c3, 1, 1)
    macs += conv_macs(h1, w1, c.c_det, c.c_det, 3, 3)
    macs += conv_macs(h1, w1, 4, c.c_det, 3, 3)

    # description stage; an empty image cannot carry keypoints
    n = min(n_keypoints, h * w)
    per_kp = (
        4 * c.c_sum                  # cross-layer embedding: 1 sample per level
        + c.c_sum * 6 * c.m          # offset prediction
        + 4 * c.m * c.c_sum          # M deformable samples per level
        + c.m * c.c_sum * c.c_desc   # aggregation
    )
    return macs + n * per_kp
