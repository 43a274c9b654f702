"""Two-branch pixel-to-pixel network.

One branch maps the guide intensities of a single pixel, the other maps the
pixel's normalized (x, y) coordinates; both end in an activation, their
outputs are summed elementwise, and a small head turns the merged vector
into one target value.  Every layer is 1x1 in image terms: no pixel ever
sees its neighbours.

Canonical parameter order (used by ``flat_arrays``, the optimizer, the
gradient checker and the binary file format): color-branch layers in depth
order, then spatial-branch layers, then head layers, each layer contributing
its weights and then its biases.  This order is part of the determinism
contract and must not change.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .imaging import coordinate_channels
from .layers import DenseLayer, dense_forward, dense_forward_fast

PARAMS_MAGIC = b"PXSR"
PARAMS_VERSION = 1

_PREDICT_CHUNK = 16384


@dataclass
class ModelConfig:
    """Architecture and regularization settings.

    The regularization strengths default to the per-branch compromise used
    throughout the experiments; width and depth defaults keep the mapping
    low-capacity and are freely configurable.
    """

    hidden_width: int = 32
    color_depth: int = 2
    spatial_depth: int = 2
    head_depth: int = 2
    init_seed: int = 0
    lambda_g: float = 1e-3
    lambda_x: float = 1e-4
    lambda_head: float = 1e-4

    def validate(self):
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be >= 1")
        if min(self.color_depth, self.spatial_depth, self.head_depth) < 1:
            raise ValueError("branch and head depths must be >= 1")
        if min(self.lambda_g, self.lambda_x, self.lambda_head) < 0:
            raise ValueError("regularization strengths must be non-negative")


@dataclass
class MlpParams:
    """All weights and biases of the network plus per-branch decay strengths."""

    color_branch: list
    spatial_branch: list
    head: list
    lambda_g: float = 1e-3
    lambda_x: float = 1e-4
    lambda_head: float = 1e-4

    def __post_init__(self):
        if not self.color_branch or not self.spatial_branch or not self.head:
            raise ValueError("every branch needs at least one layer")
        if self.spatial_branch[0].in_dim != 2:
            raise ValueError("spatial branch must take 2-D coordinates")
        if self.color_branch[-1].out_dim != self.spatial_branch[-1].out_dim:
            raise ValueError("branch output widths must match for the additive merge")
        if self.head[-1].out_dim != 1:
            raise ValueError("head must produce a single target value")
        if min(self.lambda_g, self.lambda_x, self.lambda_head) < 0:
            raise ValueError("regularization strengths must be non-negative")

    @property
    def channels(self):
        return self.color_branch[0].in_dim

    def branches(self):
        """Yield (branch_name, layer_list) in canonical order."""
        yield "color", self.color_branch
        yield "spatial", self.spatial_branch
        yield "head", self.head

    def flat_arrays(self):
        """Yield (name, array) over every parameter array in canonical order."""
        for branch, layers in self.branches():
            for i, layer in enumerate(layers):
                yield f"{branch}.{i}.weights", layer.weights
                yield f"{branch}.{i}.biases", layer.biases

    def copy(self):
        return MlpParams(
            [l.copy() for l in self.color_branch],
            [l.copy() for l in self.spatial_branch],
            [l.copy() for l in self.head],
            self.lambda_g,
            self.lambda_x,
            self.lambda_head,
        )


@dataclass
class GradBuffer:
    """Per-layer gradient arrays, mirroring MlpParams shapes and order.

    Each branch holds a list of (d_weights, d_biases) pairs.
    """

    color_branch: list
    spatial_branch: list
    head: list

    def flat_arrays(self):
        for branch, pairs in (
            ("color", self.color_branch),
            ("spatial", self.spatial_branch),
            ("head", self.head),
        ):
            for i, (dw, db) in enumerate(pairs):
                yield f"{branch}.{i}.weights", dw
                yield f"{branch}.{i}.biases", db

    @classmethod
    def zeros_like(cls, params):
        return cls(
            [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in params.color_branch],
            [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in params.spatial_branch],
            [(np.zeros_like(l.weights), np.zeros_like(l.biases)) for l in params.head],
        )


def init_model(config, channels=3):
    """Build freshly initialized parameters for a guide with C channels.

    Weights are i.i.d. uniform on [-a, a] with a = sqrt(1/in_dim), biases
    start at zero.  Sampling order follows the canonical parameter order, so
    a given seed always produces bit-identical parameters.
    """
    config.validate()
    if channels < 1:
        raise ValueError("guide channel count must be >= 1")
    rng = np.random.default_rng(config.init_seed)
    w = config.hidden_width

    def make(dims):
        layers = []
        for in_dim, out_dim in zip(dims[:-1], dims[1:]):
            a = np.sqrt(1.0 / in_dim)
            layers.append(
                DenseLayer(rng.uniform(-a, a, size=(out_dim, in_dim)), np.zeros(out_dim))
            )
        return layers

    color = make([channels] + [w] * config.color_depth)
    spatial = make([2] + [w] * config.spatial_depth)
    head = make([w] * config.head_depth + [1])
    return MlpParams(color, spatial, head, config.lambda_g, config.lambda_x, config.lambda_head)


@dataclass
class ForwardCache:
    """(input, output) pairs per layer from a forward pass.

    For rectified layers the output is the post-activation vector, whose
    strict-positive pattern equals the pre-activation's; the head's final
    (linear) layer stores its raw output.
    """

    color: list = field(default_factory=list)
    spatial: list = field(default_factory=list)
    head: list = field(default_factory=list)
    n: int = 0


def _branch_forward(layers, x, cache_list, affine):
    a = x
    for layer in layers:
        z = affine(layer, a)
        out = np.maximum(z, 0.0, out=z)
        if cache_list is not None:
            cache_list.append((a, out))
        a = out
    return a


def forward_batch(params, g, x, keep_cache=True, stable=False):
    """Evaluate the network on a batch of pixels.

    g: (n, C) guide intensities, x: (n, 2) normalized coordinates.  Returns
    (outputs (n,), ForwardCache); pass keep_cache=False to skip recording.
    stable=True selects the fixed-order kernel whose per-pixel results do
    not depend on the batch (used by the predict paths); the default BLAS
    kernel is faster and serves the training loop.
    """
    g = np.asarray(g, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if g.ndim != 2 or x.ndim != 2 or g.shape[0] != x.shape[0]:
        raise ValueError("g and x must be 2-D with matching batch size")
    affine = dense_forward if stable else dense_forward_fast
    if g.shape[1] != params.color_branch[0].in_dim or x.shape[1] != 2:
        raise ValueError("input widths do not match the network")
    cache = ForwardCache(n=g.shape[0]) if keep_cache else None

    c_out = _branch_forward(params.color_branch, g, cache.color if cache else None, affine)
    s_out = _branch_forward(params.spatial_branch, x, cache.spatial if cache else None, affine)
    a = c_out + s_out

    last = len(params.head) - 1
    for i, layer in enumerate(params.head):
        z = affine(layer, a)
        out = z if i == last else np.maximum(z, 0.0, out=z)
        if cache is not None:
            cache.head.append((a, out))
        a = out
    return a[:, 0], cache


def _branch_backward(layers, cache_list, d_out, lam, pairs):
    g = d_out
    for k in range(len(layers) - 1, -1, -1):
        a_in, out = cache_list[k]
        if k == len(layers) - 1:
            gz = g * (out > 0.0)  # d_out is shared with the other branch
        else:
            gz = np.multiply(g, out > 0.0, out=g)
        dw = gz.T @ a_in
        dw += (2.0 * lam) * layers[k].weights
        pairs[k] = (dw, gz.sum(axis=0))
        if k > 0:
            g = gz @ layers[k].weights


def backward_pass(params, cache, d_out):
    """Gradients of loss w.r.t. every parameter, given d(loss)/d(output).

    Includes the weight-decay contribution 2*lambda*W for the branch each
    weight belongs to; biases carry no decay.  Requires the cache of a
    matching forward pass.
    """
    d_out = np.asarray(d_out, dtype=np.float64)
    if cache is None or d_out.ndim != 1 or d_out.shape[0] != cache.n:
        raise ValueError("output gradient does not match the cached forward pass")
    if (
        len(cache.color) != len(params.color_branch)
        or len(cache.spatial) != len(params.spatial_branch)
        or len(cache.head) != len(params.head)
    ):
        raise ValueError("cache does not match the parameter set")

    head_pairs = [None] * len(params.head)
    g = d_out[:, np.newaxis]
    for k in range(len(params.head) - 1, -1, -1):
        a_in, out = cache.head[k]
        if k == len(params.head) - 1:
            gz = g  # linear final layer; g still aliases the caller's d_out
        else:
            gz = np.multiply(g, out > 0.0, out=g)
        dw = gz.T @ a_in
        dw += (2.0 * params.lambda_head) * params.head[k].weights
        head_pairs[k] = (dw, gz.sum(axis=0))
        g = gz @ params.head[k].weights

    # g is now the gradient at the merge point; the additive merge copies it
    # unchanged into both branches.
    color_pairs = [None] * len(params.color_branch)
    spatial_pairs = [None] * len(params.spatial_branch)
    _branch_backward(params.color_branch, cache.color, g, params.lambda_g, color_pairs)
    _branch_backward(params.spatial_branch, cache.spatial, g, params.lambda_x, spatial_pairs)
    return GradBuffer(color_pairs, spatial_pairs, head_pairs)


def predict_pixel(params, g, x):
    """Target value for one pixel, from its guide vector and coordinates."""
    g = np.asarray(g, dtype=np.float64).reshape(1, -1)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != 2:
        raise ValueError("coordinates must have exactly two components")
    out, _ = forward_batch(params, g, x, keep_cache=False, stable=True)
    return float(out[0])


def predict_image(params, guide, coords=None):
    """Apply the fitted mapping to every pixel of a normalized guide.

    guide: (N, N, C) (or (N, N) for C=1), coords: (N, N, 2) coordinate
    channels, built on the fly when omitted.  Evaluation is chunked for
    memory, which is invisible in the output: the forward kernel makes every
    pixel's value independent of its batch, so the result is bitwise equal
    to looping predict_pixel.
    """
    guide = np.asarray(guide, dtype=np.float64)
    if guide.ndim == 2:
        guide = guide[:, :, np.newaxis]
    n = guide.shape[0]
    if guide.shape[1] != n:
        raise ValueError("guide must be square")
    if coords is None:
        coords = coordinate_channels(n)
    gfeat = guide.reshape(n * n, guide.shape[2])
    xfeat = np.asarray(coords, dtype=np.float64).reshape(n * n, 2)

    out = np.empty(n * n)
    for start in range(0, n * n, _PREDICT_CHUNK):
        stop = min(start + _PREDICT_CHUNK, n * n)
        out[start:stop], _ = forward_batch(
            params, gfeat[start:stop], xfeat[start:stop], keep_cache=False, stable=True
        )
    return out.reshape(n, n)


def weight_penalty(params):
    """Per-branch L2 penalty on the weights; biases are excluded."""
    total = 0.0
    for lam, layers in (
        (params.lambda_g, params.color_branch),
        (params.lambda_x, params.spatial_branch),
        (params.lambda_head, params.head),
    ):
        for layer in layers:
            total += lam * float(np.sum(layer.weights * layer.weights))
    return total


def save_params(path, params):
    """Write parameters to a little-endian binary file (magic PXSR)."""
    with open(path, "wb") as f:
        f.write(PARAMS_MAGIC)
        f.write(
            struct.pack(
                "<IIII",
                PARAMS_VERSION,
                len(params.color_branch),
                len(params.spatial_branch),
                len(params.head),
            )
        )
        f.write(struct.pack("<3d", params.lambda_g, params.lambda_x, params.lambda_head))
        for _, layers in params.branches():
            for layer in layers:
                f.write(struct.pack("<II", layer.out_dim, layer.in_dim))
                f.write(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
                f.write(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())


def load_params(path):
    """Read parameters written by save_params."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != PARAMS_MAGIC:
        raise ValueError("not a PXSR parameter file")
    version, n_color, n_spatial, n_head = struct.unpack_from("<IIII", data, 4)
    if version != PARAMS_VERSION:
        raise ValueError(f"unsupported parameter file version {version}")
    lam_g, lam_x, lam_head = struct.unpack_from("<3d", data, 20)
    offset = 44

    def read_layers(count):
        nonlocal offset
        layers = []
        for _ in range(count):
            out_dim, in_dim = struct.unpack_from("<II", data, offset)
            offset += 8
            w = np.frombuffer(data, dtype="<f8", count=out_dim * in_dim, offset=offset)
            offset += 8 * out_dim * in_dim
            b = np.frombuffer(data, dtype="<f8", count=out_dim, offset=offset)
            offset += 8 * out_dim
            layers.append(DenseLayer(w.reshape(out_dim, in_dim).copy(), b.copy()))
        return layers

    color = read_layers(n_color)
    spatial = read_layers(n_spatial)
    head = read_layers(n_head)
    if offset != len(data):
        raise ValueError("trailing bytes in parameter file")
    return MlpParams(color, spatial, head, lam_g, lam_x, lam_head)
