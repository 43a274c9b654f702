"""Deterministic synthetic scenes with known (guide, target) structure.

These are the in-repo ground truth for end-to-end checks.  Boundaries are
placed off the block grid on purpose: a block-aligned edge could be
recovered from the source alone, which would defeat the point of testing
guidance.
"""

from dataclasses import dataclass

import numpy as np

from .imaging import block_downsample

KINDS = ("two_tone", "stripes", "gradient_ramp", "textured_confuser")

# Per-channel affine coefficients (offset, slope) used to derive guide
# channels from scene structure; cycled when more channels are requested.
_CHANNEL_COEFFS = ((0.0, 1.0), (0.8, -0.4), (0.3, 0.2), (0.9, -0.7))


@dataclass
class SceneSpec:
    kind: str
    size: int = 128
    channels: int = 3
    seed: int = 0
    boundary: int | None = None
    stripe_width: int = 3
    tones: tuple = (1.0, 3.0)

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}; choose from {KINDS}")
        if self.size < 1 or self.channels < 1:
            raise ValueError("size and channels must be >= 1")
        if self.stripe_width < 1:
            raise ValueError("stripe width must be >= 1")
        if self.kind in ("two_tone", "stripes") and self.tones[0] == self.tones[1]:
            raise ValueError("tone values must be distinct")
        if self.boundary is not None and not (0 < self.boundary < self.size):
            raise ValueError("boundary column must lie strictly inside the image")


def default_boundary(size):
    """A column around 0.4*N, forced odd so it never sits on an even block edge."""
    b = (2 * size) // 5
    if b % 2 == 0:
        b += 1
    return min(max(b, 1), size - 1)


def _colorize(field01, channels):
    """Map a [0, 1] scalar field to C affinely-derived guide channels."""
    guide = np.empty(field01.shape + (channels,))
    for c in range(channels):
        off, slope = _CHANNEL_COEFFS[c % len(_CHANNEL_COEFFS)]
        guide[:, :, c] = off + slope * field01
    return guide


def generate(spec):
    """Build the (guide, target) pair described by the spec.

    two_tone: a vertical two-level edge whose guide colors exactly predict
    the target level.  stripes: alternating bands narrower than a typical
    block.  gradient_ramp: target affine in the first guide channel.
    textured_confuser: high-frequency guide texture statistically unrelated
    to a smooth target, the adversarial case for color-driven mapping.
    """
    spec.validate()
    n = spec.size
    lo, hi = spec.tones

    if spec.kind == "two_tone":
        b = spec.boundary if spec.boundary is not None else default_boundary(n)
        level = (np.arange(n) >= b).astype(np.float64)
        field = np.broadcast_to(level, (n, n)).copy()
        target = lo + (hi - lo) * field
        guide = _colorize(0.2 + 0.6 * field, spec.channels)
        return guide, target

    if spec.kind == "stripes":
        band = ((np.arange(n) // spec.stripe_width) % 2).astype(np.float64)
        field = np.broadcast_to(band, (n, n)).copy()
        target = lo + (hi - lo) * field
        guide = _colorize(0.2 + 0.6 * field, spec.channels)
        return guide, target

    if spec.kind == "gradient_ramp":
        i = np.arange(n)
        ramp = (i[:, np.newaxis] + i[np.newaxis, :]) / max(2 * n - 2, 1)
        guide = _colorize(ramp, spec.channels)
        target = lo + (hi - lo) * guide[:, :, 0]
        return guide, target

    # textured_confuser
    rng = np.random.default_rng(spec.seed)
    guide = rng.uniform(0.0, 1.0, size=(n, n, spec.channels))
    i = np.arange(n)
    u = (i - (n - 1) / 2.0) / max(n - 1, 1)
    bump = np.exp(-((u[:, np.newaxis] ** 2 + u[np.newaxis, :] ** 2) / 0.08))
    target = lo + (hi - lo) * bump
    return guide, target


def make_source(target, d):
    """Low-resolution source obtained by block-averaging the ground truth."""
    return block_downsample(target, d)
