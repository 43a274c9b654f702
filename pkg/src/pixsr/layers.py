"""Dense-layer arithmetic for the small per-image network.

The forward kernel deliberately avoids BLAS matrix products: ``np.einsum``
with ``optimize=False`` reduces the input dimension in a fixed order for
every output element independently, so the result for one pixel is bitwise
identical whether it is evaluated alone or inside an arbitrarily chunked
batch.  Whole-image prediction and single-pixel prediction therefore agree
exactly, which is a contract the rest of the package relies on.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class DenseLayer:
    """Affine layer y = W x + b with W of shape (out_dim, in_dim)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ValueError("weights must be 2-D and biases 1-D")
        if self.weights.shape[0] != self.biases.shape[0]:
            raise ValueError(
                f"bias length {self.biases.shape[0]} does not match "
                f"out_dim {self.weights.shape[0]}"
            )
        if self.out_dim < 1 or self.in_dim < 1:
            raise ValueError("layer dimensions must be at least 1")

    @property
    def out_dim(self):
        return self.weights.shape[0]

    @property
    def in_dim(self):
        return self.weights.shape[1]

    def copy(self):
        return DenseLayer(self.weights.copy(), self.biases.copy())


def dense_forward(layer, x):
    """Apply the affine map: output[i] = sum_j W[i, j] * x[j] + b[i].

    Accepts a single input vector (in_dim,) or a batch (n, in_dim).  The
    reduction over j runs in fixed index order per output element (see the
    module docstring), so batched rows match individual evaluations bitwise.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    batch = arr[np.newaxis, :] if single else arr
    if batch.ndim != 2 or batch.shape[1] != layer.in_dim:
        raise ValueError(
            f"input of shape {arr.shape} does not match layer in_dim {layer.in_dim}"
        )
    out = np.einsum("ni,oi->no", batch, layer.weights, optimize=False)
    out += layer.biases
    return out[0] if single else out


def dense_forward_fast(layer, x):
    """BLAS variant of dense_forward for hot loops.

    Same affine map, but the reduction order inside the matrix product is
    blocked by the BLAS implementation, so individual rows are not bitwise
    reproducible across batch sizes.  Training uses this; prediction uses
    dense_forward to honour the batching-invariance contract.
    """
    out = x @ layer.weights.T
    out += layer.biases
    return out


def relu(x):
    """Rectified linear unit, max(0, x)."""
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def relu_grad(x):
    """Subgradient indicator of relu: 1 where x > 0, else 0 (0 at x == 0)."""
    return (np.asarray(x, dtype=np.float64) > 0.0).astype(np.float64)
