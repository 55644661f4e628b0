"""Dense tensor primitives used by every stage of the engine.

A feature map is a float32 array of shape (height, width, channels), row-major
with the channel values of one pixel contiguous.  All spatial operations fix
this iteration order: y outer, x inner, channel innermost.

Sampling convention: sample points live at cell centers and grid cell (i, j)
sits at coordinate (x=j, y=i) in the map's own pixel frame.  Out-of-range
coordinates are clamped to the border (border replication), so sampling is a
total function.  All arithmetic is 32-bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import ConfigurationError, ShapeError


@dataclass(frozen=True)
class Kernel2D:
    """Convolution weights of shape (out, in, kh, kw) plus a per-out bias."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kh(self) -> int:
        return self.weights.shape[2]

    @property
    def kw(self) -> int:
        return self.weights.shape[3]


@dataclass(frozen=True)
class AffineMap:
    """Fully connected map: y = W x + b with W of shape (out, in)."""

    weights: np.ndarray
    bias: np.ndarray

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to a batch of rows (n, in) -> (n, out)."""
        return x @ self.weights.T + self.bias


def conv2d(x: np.ndarray, kernel: Kernel2D, stride: int = 1, padding: int = 0) -> np.ndarray:
    """2-D cross-correlation with zero padding and bias.

    Output spatial dims are floor((H + 2*padding - kh) / stride) + 1 and the
    same for W.  Raises ConfigurationError on a channel mismatch and
    ShapeError when the output would be empty.
    """
    h, w, cin = x.shape
    if cin != kernel.in_channels:
        raise ConfigurationError(
            f"conv2d: input has {cin} channels, kernel expects {kernel.in_channels}"
        )
    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d: invalid stride={stride} padding={padding}")
    kh, kw = kernel.kh, kernel.kw
    out_h = (h + 2 * padding - kh) // stride + 1
    out_w = (w + 2 * padding - kw) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"conv2d: output {out_h}x{out_w} is empty")

    if padding > 0:
        xp = np.zeros((h + 2 * padding, w + 2 * padding, cin), dtype=np.float32)
        xp[padding:padding + h, padding:padding + w] = x
    else:
        xp = np.ascontiguousarray(x, dtype=np.float32)

    cout = kernel.out_channels
    if kh == 1 and kw == 1 and stride == 1:
        cols = xp.reshape(out_h * out_w, cin)
    else:
        sy, sx, sc = xp.strides
        patches = as_strided(
            xp,
            shape=(out_h, out_w, kh, kw, cin),
            strides=(sy * stride, sx * stride, sy, sx, sc),
            writeable=False,
        )
        cols = patches.reshape(out_h * out_w, kh * kw * cin)
    # patch axes are (kh, kw, cin); align the weight matrix to match
    wmat = kernel.weights.transpose(2, 3, 1, 0).reshape(kh * kw * cin, cout)
    out = cols @ np.ascontiguousarray(wmat) + kernel.bias
    return out.reshape(out_h, out_w, cout)


def avg_pool(x: np.ndarray, factor: int) -> np.ndarray:
    """Block mean over non-overlapping factor x factor windows."""
    h, w, c = x.shape
    if factor < 1 or h % factor or w % factor:
        raise ShapeError(f"avg_pool: dims {h}x{w} not divisible by factor {factor}")
    blocks = x.reshape(h // factor, factor, w // factor, factor, c)
    return blocks.mean(axis=(1, 3), dtype=np.float32)


def pixel_shuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Rearrange r*r channel groups into an r-times-larger spatial grid.

    Input channel c*r*r + dy*r + dx of cell (y, x) moves to output cell
    (r*y + dy, r*x + dx, c).  This ordering is fixed.
    """
    h, w, c = x.shape
    if r < 1 or c % (r * r):
        raise ShapeError(f"pixel_shuffle: {c} channels not divisible by r^2={r * r}")
    cout = c // (r * r)
    y = x.reshape(h, w, cout, r, r).transpose(0, 3, 1, 4, 2)
    return np.ascontiguousarray(y.reshape(h * r, w * r, cout))


def bilinear_sample_many(
    fmap: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    tracker=None,
) -> np.ndarray:
    """Bilinear blend of the four surrounding cells for each (x, y) point.

    Coordinates outside the map clamp to the border.  Returns (n, C) float32.
    `tracker` (optional ScratchTracker) records this call's transient scratch.
    """
    h, w, c = fmap.shape
    n = xs.shape[0]
    if tracker is not None:
        # 4 corner gathers of n*c scalars each, plus index/weight rows
        tracker.alloc(4 * n * c + 8 * n)
    x = np.clip(xs, 0.0, w - 1.0)
    y = np.clip(ys, 0.0, h - 1.0)
    # clipped coordinates are non-negative, so truncation is exact floor
    x0 = x.astype(np.intp)
    y0 = y.astype(np.intp)
    fx = (x - x0).astype(np.float32)[:, None]
    fy = (y - y0).astype(np.float32)[:, None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)

    g00 = fmap[y0, x0]
    g01 = fmap[y0, x1]
    g10 = fmap[y1, x0]
    g11 = fmap[y1, x1]
    # blend in place on the gathered copies; advanced indexing always
    # returns fresh arrays, so nothing aliases
    np.subtract(g01, g00, out=g01)
    np.multiply(g01, fx, out=g01)
    np.add(g01, g00, out=g01)          # top row lerp
    np.subtract(g11, g10, out=g11)
    np.multiply(g11, fx, out=g11)
    np.add(g11, g10, out=g11)          # bottom row lerp
    np.subtract(g11, g01, out=g11)
    np.multiply(g11, fy, out=g11)
    np.add(g11, g01, out=g11)          # vertical lerp
    if tracker is not None:
        tracker.release(4 * n * c + 8 * n)
    return g11


def bilinear_sample(fmap: np.ndarray, x: float, y: float) -> np.ndarray:
    """Sample a single point, returning the C-vector at (x, y)."""
    return bilinear_sample_many(
        fmap, np.asarray([x], dtype=np.float64), np.asarray([y], dtype=np.float64)
    )[0]


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def l2_normalize_rows(x: np.ndarray, return_zero_mask: bool = False):
    """Scale each row to unit Euclidean norm.  Zero rows are left as zeros.

    With return_zero_mask=True also returns the boolean mask of zero rows.
    """
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    zero = norms[:, 0] == 0.0
    out = x / np.where(norms == 0.0, np.float32(1.0), norms)
    if return_zero_mask:
        return out, zero
    return out


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Softmax along the last axis; rows sum to 1."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cols(x: np.ndarray) -> np.ndarray:
    """Softmax along axis 0 of a 2-D matrix; columns sum to 1."""
    shifted = x - x.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)
