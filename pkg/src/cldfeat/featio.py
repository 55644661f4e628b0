"""Binary feature files (CLDF) and the plain-text match list format.

CLDF layout (little-endian, no padding):

    magic   4 bytes  "CLDF"
    version u32      1
    width   u32      original image width
    height  u32      original image height
    config  u8       preset id
    count   u32      number of keypoints N
    c_desc  u32      descriptor dimension
    records N x (x f32, y f32, score f32, descriptor c_desc x f32)

Match lists are text: one `idx_a idx_b confidence` line per pair, ordered by
idx_a, after a single `# cldfeat-matches v1` header line.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig, config_from_id, config_id
from .errors import (
    BadMagicError,
    InputError,
    LayoutMismatchError,
    TruncatedFileError,
    VersionMismatchError,
)
from .matching import MatchSet

MAGIC = b"CLDF"
VERSION = 1
MATCH_HEADER = "# cldfeat-matches v1"


@dataclass(frozen=True)
class Features:
    """Sparse extraction result in original (unpadded) pixel coordinates."""

    config_name: str
    width: int
    height: int
    xy: np.ndarray          # (n, 2) float32
    scores: np.ndarray      # (n,) float32
    descriptors: np.ndarray  # (n, c_desc) float32

    def __len__(self) -> int:
        return int(self.xy.shape[0])


def save_features(feats: Features, path: str) -> None:
    n = len(feats)
    c_desc = int(feats.descriptors.shape[1])
    record = np.empty((n, 3 + c_desc), dtype="<f4")
    record[:, 0:2] = feats.xy
    record[:, 2] = feats.scores
    record[:, 3:] = feats.descriptors
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIIBII", VERSION, feats.width, feats.height,
                            config_id(feats.config_name), n, c_desc))
        f.write(record.tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"unexpected end of file while reading {what}")
    return data


def load_features(path: str) -> Features:
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise InputError(f"cannot read feature file {path}: {exc}") from exc
    with f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, width, height, cid, n, c_desc = struct.unpack(
            "<IIIBII", _read_exact(f, 21, "header")
        )
        if version != VERSION:
            raise VersionMismatchError(f"unsupported feature file version {version}")
        config = config_from_id(cid)
        if c_desc != config.c_desc:
            raise LayoutMismatchError(
                f"descriptor dim {c_desc} does not match config {config.name}"
            )
        raw = _read_exact(f, 4 * n * (3 + c_desc), "records")
    record = np.frombuffer(raw, dtype="<f4").reshape(n, 3 + c_desc)
    return Features(
        config_name=config.name,
        width=width,
        height=height,
        xy=record[:, 0:2].copy(),
        scores=record[:, 2].copy(),
        descriptors=record[:, 3:].copy(),
    )


def save_matches(matches: MatchSet, path: str) -> None:
    order = np.argsort(matches.pairs[:, 0], kind="stable") if len(matches) else []
    lines = [MATCH_HEADER]
    for i in order:
        a, b = matches.pairs[i]
        lines.append(f"{a} {b} {matches.confidences[i]:.8f}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def load_matches(path: str) -> MatchSet:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = [ln.strip() for ln in f if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read match file {path}: {exc}") from exc
    if not lines or not lines[0].startswith("#"):
        raise InputError(f"{path}: missing match-file header")
    pairs, confs = [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise InputError(f"{path}: malformed match line {ln!r}")
        pairs.append((int(parts[0]), int(parts[1])))
        confs.append(float(parts[2]))
    return MatchSet(
        pairs=np.asarray(pairs, dtype=np.int32).reshape(-1, 2),
        confidences=np.asarray(confs, dtype=np.float32),
        method="file",
    )
