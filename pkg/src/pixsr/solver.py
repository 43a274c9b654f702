"""Per-image fitting of the pixel-to-pixel network.

One fit = normalize the source and guide (each with its own per-channel
stats), attach coordinate channels, then run a fixed budget of ADAM steps on
mini-batches of low-resolution blocks.  The batch loss is the *sum* of block
terms  |s_m - mean over the block of f(g_n, x_n)|  plus the per-branch L2
weight penalty; batch residuals are summed, not averaged, with the learning
rate absorbing the scale.

Determinism contract: with a fixed seed, configuration and inputs, a fit is
bit-reproducible on a given machine.  Blocks are reduced in batch order,
block pixels in row-major order, and parameters in the canonical order
defined by MlpParams; the final prediction goes through the batching-stable
kernel (see layers module).  Predictions are denormalized with the SOURCE
image's stats, the only stats living in the target's physical units.
"""

from dataclasses import dataclass

import numpy as np

from .imaging import (
    block_index_grid,
    compute_norm_stats,
    coordinate_channels,
    denormalize,
    normalize,
)
from .network import (
    ModelConfig,
    backward_pass,
    forward_batch,
    init_model,
    predict_image,
    weight_penalty,
)
from .validation import as_guide, as_source, infer_factor


class TrainingDivergedError(RuntimeError):
    """Raised when the objective turns non-finite; never silently clamped."""

    def __init__(self, iteration, loss):
        super().__init__(f"non-finite loss {loss!r} at iteration {iteration}")
        self.iteration = iteration
        self.loss = loss


@dataclass
class TrainConfig:
    """Optimizer hyperparameters and iteration budget."""

    learning_rate: float = 0.001
    batch_blocks: int = 32
    iterations: int = 32000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    log_every: int = 1000

    def validate(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_blocks < 1 or self.iterations < 1:
            raise ValueError("batch_blocks and iterations must be >= 1")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise ValueError("adam_eps must be positive")


@dataclass
class AdamState:
    """First/second-moment accumulators in canonical parameter order."""

    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        m = [np.zeros_like(arr) for _, arr in params.flat_arrays()]
        v = [np.zeros_like(arr) for _, arr in params.flat_arrays()]
        return cls(m, v)


@dataclass
class FitResult:
    """Fitted parameters, the loss trace and the denormalized prediction."""

    params: object
    loss_trace: list
    prediction: np.ndarray
    source_stats: object = None
    guide_stats: object = None
    factor: int = 0


def sample_batch(rng, m_squared, k):
    """Draw k block indices uniformly with replacement from [0, m_squared)."""
    if k < 1:
        raise ValueError("batch size must be >= 1")
    if m_squared < 1:
        raise ValueError("the source must contain at least one block")
    return rng.integers(0, m_squared, size=k)


def _features(source, guide, coords):
    source = np.asarray(source, dtype=np.float64)
    guide = np.asarray(guide, dtype=np.float64)
    if guide.ndim == 2:
        guide = guide[:, :, np.newaxis]
    n = guide.shape[0]
    m = source.shape[0]
    d = infer_factor(n, m)
    if coords is None:
        coords = coordinate_channels(n)
    gfeat = guide.reshape(n * n, guide.shape[2])
    xfeat = np.asarray(coords, dtype=np.float64).reshape(n * n, 2)
    return source.reshape(m * m), gfeat, xfeat, block_index_grid(n, d), d


def _batch_blocks(blocks, m_squared):
    blocks = np.asarray(blocks, dtype=np.intp).reshape(-1)
    if blocks.size == 0:
        raise ValueError("empty batch")
    if blocks.min() < 0 or blocks.max() >= m_squared:
        raise ValueError("block index out of range")
    return blocks


def objective_parts(params, source, guide, coords, blocks):
    """(data_loss, penalty, grads) of the block-consistency objective.

    data_loss sums |s_m - block mean of the prediction| over the batch, and
    grads distributes the L1 sign through each block mean as -sign(r)/D^2
    per pixel before backpropagation.  The decay term of every branch is
    included in grads.
    """
    src_flat, gfeat, xfeat, grid, d = _features(source, guide, coords)
    blocks = _batch_blocks(blocks, src_flat.size)
    pixels = grid[blocks].reshape(-1)
    out, cache = forward_batch(params, gfeat[pixels], xfeat[pixels])
    d2 = d * d
    block_means = out.reshape(blocks.size, d2).mean(axis=1)
    residuals = src_flat[blocks] - block_means
    data_loss = float(np.abs(residuals).sum())
    d_out = np.repeat(-np.sign(residuals) / d2, d2)
    grads = backward_pass(params, cache, d_out)
    return data_loss, weight_penalty(params), grads


def objective(params, source, guide, coords, blocks):
    """(loss, grads) with loss = data term + weight penalty, exactly."""
    data_loss, penalty, grads = objective_parts(params, source, guide, coords, blocks)
    return data_loss + penalty, grads


def block_residuals(params, source, guide, coords, blocks):
    """Residuals s_m - <prediction over block m> for the given blocks."""
    src_flat, gfeat, xfeat, grid, d = _features(source, guide, coords)
    blocks = _batch_blocks(blocks, src_flat.size)
    pixels = grid[blocks].reshape(-1)
    out, _ = forward_batch(params, gfeat[pixels], xfeat[pixels], keep_cache=False)
    return src_flat[blocks] - out.reshape(blocks.size, d * d).mean(axis=1)


def kink_signature(params, source, guide, coords, blocks):
    """Fingerprint of the smooth piece the objective is evaluated on.

    Concatenates the sign of every block residual (0 marks an exact L1
    kink) with the on/off pattern of every rectifier.  Two evaluations with
    equal signatures lie on the same differentiable piece, which is what
    the finite-difference gradient check needs to certify.
    """
    src_flat, gfeat, xfeat, grid, d = _features(source, guide, coords)
    blocks = _batch_blocks(blocks, src_flat.size)
    pixels = grid[blocks].reshape(-1)
    out, cache = forward_batch(params, gfeat[pixels], xfeat[pixels])
    residuals = src_flat[blocks] - out.reshape(blocks.size, d * d).mean(axis=1)
    parts = [np.sign(residuals).astype(np.int8)]
    for cached in (cache.color, cache.spatial, cache.head[:-1]):
        for _, activation in cached:
            parts.append((activation.ravel() > 0.0).astype(np.int8))
    return np.concatenate(parts)


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected ADAM update, in place; returns (params, state)."""
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    arrays = list(params.flat_arrays())
    garrs = list(grads.flat_arrays())
    if len(arrays) != len(state.m):
        raise ValueError("optimizer state does not match the parameter set")
    for ((_, p), (_, g), m, v) in zip(arrays, garrs, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError("gradient shape does not match parameters")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def fit(source, guide, model_cfg=None, train_cfg=None):
    """Fit the mapping to one (source, guide) pair and predict the target.

    Returns a FitResult whose prediction lives in the source's physical
    units.  Raises TrainingDivergedError if the loss turns non-finite.
    """
    model_cfg = model_cfg if model_cfg is not None else ModelConfig()
    train_cfg = train_cfg if train_cfg is not None else TrainConfig()
    model_cfg.validate()
    train_cfg.validate()

    source = as_source(source)
    guide = as_guide(guide)
    d = infer_factor(guide.shape[0], source.shape[0])
    m_squared = source.shape[0] ** 2

    source_stats = compute_norm_stats(source)
    guide_stats = compute_norm_stats(guide)
    source_norm = normalize(source, source_stats)
    guide_norm = normalize(guide, guide_stats)
    coords = coordinate_channels(guide.shape[0])

    params = init_model(model_cfg, channels=guide.shape[2])
    state = AdamState.zeros_like(params)
    rng = np.random.default_rng(train_cfg.seed)

    trace = []
    log_every = train_cfg.log_every
    for it in range(train_cfg.iterations):
        blocks = sample_batch(rng, m_squared, train_cfg.batch_blocks)
        data_loss, penalty, grads = objective_parts(
            params, source_norm, guide_norm, coords, blocks
        )
        loss = data_loss + penalty
        if not np.isfinite(loss):
            raise TrainingDivergedError(it, loss)
        if (log_every > 0 and it % log_every == 0) or it == train_cfg.iterations - 1:
            trace.append((it, data_loss, penalty))
        adam_step(
            params,
            grads,
            state,
            train_cfg.learning_rate,
            train_cfg.adam_beta1,
            train_cfg.adam_beta2,
            train_cfg.adam_eps,
        )

    prediction_norm = predict_image(params, guide_norm, coords)
    prediction = denormalize(prediction_norm, source_stats)
    return FitResult(params, trace, prediction, source_stats, guide_stats, d)


def upsample(source, guide, model_cfg=None, train_cfg=None):
    """Convenience wrapper: fit, then return the denormalized prediction."""
    return fit(source, guide, model_cfg, train_cfg).prediction
