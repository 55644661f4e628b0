"""Named weight stores: seeded initialization and the binary CLDW format.

On-disk layout (all integers little-endian, no alignment padding):

    magic   4 bytes  "CLDW"
    version u32      1
    config  u8       preset id (index into config.PRESET_ORDER)
    count   u32      number of tensors
    per tensor:
        name_len u16, name UTF-8, rank u8, dims u32 x rank, data f32 x prod(dims)

Tensors appear in `config.tensor_layout` order and a load validates names and
shapes against that layout, so a store is always usable by the forward passes.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, config_from_id, config_id, tensor_layout
from .errors import (
    BadMagicError,
    LayoutMismatchError,
    TruncatedFileError,
    VersionMismatchError,
)
from .tensorops import AffineMap, Kernel2D

MAGIC = b"CLDW"
VERSION = 1


@dataclass
class WeightStore:
    """Immutable-by-convention collection of named float32 tensors."""

    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        expected = tensor_layout(self.config)
        names = list(self.tensors.keys())
        if names != [n for n, _ in expected]:
            raise LayoutMismatchError(
                f"store for {self.config.name} has wrong tensor set/order"
            )
        for name, shape in expected:
            got = self.tensors[name].shape
            if got != shape:
                raise LayoutMismatchError(f"{name}: shape {got}, expected {shape}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def kernel(self, layer: str) -> Kernel2D:
        return Kernel2D(self.tensors[f"{layer}.weight"], self.tensors[f"{layer}.bias"])

    def affine(self, layer: str) -> AffineMap:
        return AffineMap(self.tensors[f"{layer}.weight"], self.tensors[f"{layer}.bias"])

    @property
    def scalar_count(self) -> int:
        return sum(int(t.size) for t in self.tensors.values())

    def component_scalars(self, prefix: str) -> int:
        return sum(int(t.size) for n, t in self.tensors.items() if n.startswith(prefix))


def init_weights(config: ModelConfig, seed: int) -> WeightStore:
    """Deterministic fan-in-scaled uniform initialization.

    Weights draw from U(-sqrt(6/fan_in), sqrt(6/fan_in)) — ReLU-gain scaling
    that keeps activation variance alive through the depth — and each output
    unit is then centered to zero sum, so the constant (DC) component of its
    input cancels.  Without the centering, untrained forward passes collapse:
    the input's mean level dominates every activation, the heatmap dies into
    plateaus and all descriptors crowd into one narrow cone.  Biases start at
    zero, and the offset predictor (weights and bias) starts at zero so an
    untrained model samples exactly at the keypoint locations.
    """
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape in tensor_layout(config):
        if name.startswith("desc.offsets.") or name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
            continue
        fan_in = 1
        for d in shape[1:]:
            fan_in *= d
        bound = math.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=shape)
        unit_means = w.reshape(shape[0], -1).mean(axis=1)
        w -= unit_means.reshape((shape[0],) + (1,) * (len(shape) - 1))
        tensors[name] = w.astype(np.float32)
    return WeightStore(config, tensors)


def save_weights(store: WeightStore, path: str) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<B", config_id(store.config.name)))
        f.write(struct.pack("<I", len(store.tensors)))
        for name, tensor in store.tensors.items():
            encoded = name.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", tensor.ndim))
            f.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"unexpected end of file while reading {what}")
    return data


def load_weights(path: str) -> WeightStore:
    """Read a CLDW file.  Raises distinct errors for bad magic, unsupported
    version, truncation, and tensor layouts not matching the config."""
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise VersionMismatchError(f"unsupported version {version}")
        (cid,) = struct.unpack("<B", _read_exact(f, 1, "config id"))
        config = config_from_id(cid)
        (count,) = struct.unpack("<I", _read_exact(f, 4, "tensor count"))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(f, 2, "name length"))
            name = _read_exact(f, name_len, "tensor name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, "rank"))
            dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank, "dims"))
            n = 1
            for d in dims:
                n *= d
            raw = _read_exact(f, 4 * n, f"data of {name}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
        trailing = f.read(1)
    if trailing:
        raise LayoutMismatchError("trailing bytes after declared tensors")
    return WeightStore(config, tensors)
