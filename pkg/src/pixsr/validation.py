"""Input validation helpers for image grids.

Images are plain float64 numpy arrays: a guide is (N, N, C), a source is
(M, M), a target is (N, N).  All sizes are square and the guide/target side
must be an exact integer multiple of the source side.
"""

import numpy as np


def as_float_grid(arr, name):
    """Coerce to a finite float64 array, raising ValueError otherwise."""
    out = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite values")
    return out


def as_source(arr):
    """Validate a low-resolution source: square 2-D grid, finite values."""
    out = as_float_grid(arr, "source")
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"source must be a square 2-D grid, got shape {out.shape}")
    if out.shape[0] < 1:
        raise ValueError("source must have at least one pixel")
    return out


def as_target(arr):
    """Validate a high-resolution target: square 2-D grid, finite values."""
    out = as_float_grid(arr, "target")
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"target must be a square 2-D grid, got shape {out.shape}")
    return out


def as_guide(arr):
    """Validate a guide and promote 2-D input to a single-channel (N, N, 1) grid."""
    out = as_float_grid(arr, "guide")
    if out.ndim == 2:
        out = out[:, :, np.newaxis]
    if out.ndim != 3 or out.shape[0] != out.shape[1]:
        raise ValueError(f"guide must be a square (N, N, C) grid, got shape {out.shape}")
    if out.shape[2] < 1:
        raise ValueError("guide needs at least one channel")
    return out


def infer_factor(n, m, factor=None):
    """Return the integer upsampling factor N/M, checking any explicit value.

    The block partition requires N = D * M exactly; no padding or fractional
    factors are supported.
    """
    if m < 1 or n < 1:
        raise ValueError("image sides must be positive")
    if n % m != 0:
        raise ValueError(f"guide/target side {n} is not an integer multiple of source side {m}")
    d = n // m
    if factor is not None and int(factor) != d:
        raise ValueError(f"requested factor {factor} does not match image sizes ({n}/{m}={d})")
    return d
