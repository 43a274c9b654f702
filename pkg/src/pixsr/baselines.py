"""Guide-free and guide-driven baseline upsamplers.

Bicubic interpolation uses the Keys cubic-convolution kernel with a = -0.5
and clamp-to-edge handling, sampled so that centers align: target pixel i
sits at source coordinate (i + 0.5) / D - 0.5.  With that alignment the
block average of an upsampled smooth image reproduces the source.

The guided filter follows the classic local-affine formulation: per window
a = cov(I, p) / (var(I) + eps), b = mean(p) - a * mean(I), output
q = boxmean(a) * I + boxmean(b).  Window means near the border average over
the window's intersection with the image.
"""

import numpy as np

from .imaging import compute_norm_stats, normalize
from .validation import as_guide, as_source


def cubic_kernel(t):
    """Keys cubic-convolution weight for distances t >= 0 (a = -0.5)."""
    t = np.asarray(t, dtype=np.float64)
    near = ((1.5 * t - 2.5) * t) * t + 1.0
    far = ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _upsample_matrix(m, d):
    """(m*d, m) row-stochastic interpolation matrix for one axis."""
    n = m * d
    w = np.zeros((n, m))
    for i in range(n):
        u = (i + 0.5) / d - 0.5
        i0 = int(np.floor(u))
        f = u - i0
        weights = cubic_kernel(np.array([1.0 + f, f, 1.0 - f, 2.0 - f]))
        weights = weights / weights.sum()
        for k in range(4):
            src = min(max(i0 - 1 + k, 0), m - 1)  # clamp-to-edge
            w[i, src] += weights[k]
    return w


def bicubic_upsample(source, d):
    """Upsample an (M, M) source to (M*D, M*D) by separable Keys interpolation."""
    s = as_source(source)
    d = int(d)
    if d < 1:
        raise ValueError("factor must be a positive integer")
    if s.shape[0] < 2:
        raise ValueError("bicubic upsampling needs a source of at least 2x2")
    w = _upsample_matrix(s.shape[0], d)
    return w @ s @ w.T


def box_mean(image, radius):
    """Mean over the (2r+1)^2 window around each pixel, truncated at edges."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("box_mean expects a 2-D grid")
    r = int(radius)
    if r < 0:
        raise ValueError("radius must be non-negative")
    h, w = img.shape
    integral = np.zeros((h + 1, w + 1))
    integral[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)

    i = np.arange(h)
    j = np.arange(w)
    lo_i = np.maximum(i - r, 0)
    hi_i = np.minimum(i + r + 1, h)
    lo_j = np.maximum(j - r, 0)
    hi_j = np.minimum(j + r + 1, w)
    sums = (
        integral[np.ix_(hi_i, hi_j)]
        - integral[np.ix_(lo_i, hi_j)]
        - integral[np.ix_(hi_i, lo_j)]
        + integral[np.ix_(lo_i, lo_j)]
    )
    counts = (hi_i - lo_i)[:, np.newaxis] * (hi_j - lo_j)[np.newaxis, :]
    return sums / counts


def guided_filter(guide_gray, image, radius, eps):
    """Edge-preserving filter of `image` steered by a single-channel guide."""
    guide_gray = np.asarray(guide_gray, dtype=np.float64)
    image = np.asarray(image, dtype=np.float64)
    if guide_gray.shape != image.shape or guide_gray.ndim != 2:
        raise ValueError("guide and input must be 2-D grids of the same size")
    if int(radius) < 1:
        raise ValueError("radius must be >= 1")
    if eps < 0:
        raise ValueError("eps must be non-negative")

    mean_i = box_mean(guide_gray, radius)
    mean_p = box_mean(image, radius)
    corr_ip = box_mean(guide_gray * image, radius)
    corr_ii = box_mean(guide_gray * guide_gray, radius)
    cov_ip = corr_ip - mean_i * mean_p
    var_i = corr_ii - mean_i * mean_i

    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return box_mean(a, radius) * guide_gray + box_mean(b, radius)


def guide_to_gray(guide):
    """Channel mean of a guide, as a single-channel grid."""
    g = as_guide(guide)
    return g.mean(axis=2)


def guided_filter_upsample(source, guide, d=None, radius=None, eps=1e-4):
    """Bicubic upsampling followed by guided filtering with the guide image.

    Default window radius is the upsampling factor (the scale of the block
    structure); the filter runs on the normalized gray guide so eps is
    expressed in unit-variance intensities.
    """
    s = as_source(source)
    g = as_guide(guide)
    d = g.shape[0] // s.shape[0] if d is None else int(d)
    if d < 1 or g.shape[0] != d * s.shape[0]:
        raise ValueError("guide side must equal factor * source side")
    up = bicubic_upsample(s, d)
    gray = guide_to_gray(g)
    gray = normalize(gray, compute_norm_stats(gray))
    return guided_filter(gray, up, d if radius is None else int(radius), eps)
