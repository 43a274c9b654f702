"""Image grids: block averaging, normalization and coordinate channels."""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .validation import as_target


def block_downsample(target, d):
    """Average each D x D block of a (N, N) grid down to one source pixel.

    Pixels are gathered per block in row-major order and reduced along the
    block axis; the solver's objective uses the identical gather and
    reduction, so a prediction equal to the block means leaves residuals
    that are exactly zero.
    """
    t = as_target(target)
    n = t.shape[0]
    d = int(d)
    if d < 1:
        raise ValueError("factor must be a positive integer")
    if n % d != 0:
        raise ValueError(f"side {n} is not divisible by factor {d}; no padding is applied")
    m = n // d
    return t.reshape(-1)[block_index_grid(n, d)].mean(axis=1).reshape(m, m)


@lru_cache(maxsize=64)
def _block_grid(n, d):
    m = n // d
    pix = np.arange(n * n).reshape(n, n)
    grid = np.ascontiguousarray(
        pix.reshape(m, d, m, d).transpose(0, 2, 1, 3).reshape(m * m, d * d)
    )
    grid.setflags(write=False)
    return grid


def block_index_grid(n, d):
    """Flat pixel indices of each block: row (bi*M + bj) lists the D*D pixels
    of block (bi, bj) in row-major order.  The returned array is cached and
    read-only."""
    n = int(n)
    d = int(d)
    if n < 1 or d < 1 or n % d != 0:
        raise ValueError(f"side {n} is not divisible by factor {d}")
    return _block_grid(n, d)


@dataclass
class NormStats:
    """Per-channel mean and standard deviation, std always positive."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.std = np.atleast_1d(np.asarray(self.std, dtype=np.float64))
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std must have matching channel counts")
        if np.any(self.std <= 0):
            raise ValueError("std must be positive")


def _channel_view(image):
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr[:, :, np.newaxis], True
    if arr.ndim == 3:
        return arr, False
    raise ValueError(f"expected a 2-D or 3-D grid, got shape {arr.shape}")


def compute_norm_stats(image):
    """Per-channel mean and population std (divisor N^2).

    A constant channel has zero spread; its std is replaced by 1 (with a
    warning) so normalization stays defined on flat guides.
    """
    arr, _ = _channel_view(image)
    mean = arr.mean(axis=(0, 1))
    std = arr.std(axis=(0, 1))
    if np.any(std == 0):
        warnings.warn("constant channel: using std=1 for normalization", stacklevel=2)
        std = np.where(std == 0, 1.0, std)
    return NormStats(mean, std)


def normalize(image, stats):
    """Center and scale to the stats; shape of the input is preserved."""
    arr, squeeze = _channel_view(image)
    if arr.shape[2] != stats.mean.shape[0]:
        raise ValueError(
            f"image has {arr.shape[2]} channels but stats describe {stats.mean.shape[0]}"
        )
    out = (arr - stats.mean) / stats.std
    return out[:, :, 0] if squeeze else out


def denormalize(image, stats):
    """Inverse of normalize."""
    arr, squeeze = _channel_view(image)
    if arr.shape[2] != stats.mean.shape[0]:
        raise ValueError(
            f"image has {arr.shape[2]} channels but stats describe {stats.mean.shape[0]}"
        )
    out = arr * stats.std + stats.mean
    return out[:, :, 0] if squeeze else out


def coordinate_channels(n):
    """(N, N, 2) grid of pixel coordinates rescaled to [-0.5, 0.5].

    Channel 0 is the x (column) coordinate, channel 1 the y (row)
    coordinate; index 0 maps to -0.5 and index N-1 to +0.5, and for N=1 both
    are 0.  The construction is exactly antisymmetric about the center.
    """
    n = int(n)
    if n < 1:
        raise ValueError("size must be >= 1")
    axis = (np.arange(n) - (n - 1) / 2.0) / max(n - 1, 1)
    out = np.empty((n, n, 2))
    out[:, :, 0] = axis[np.newaxis, :]
    out[:, :, 1] = axis[:, np.newaxis]
    return out
