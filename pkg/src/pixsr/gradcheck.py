"""Central finite-difference verification of analytic gradients.

Works on any parameter object exposing ``flat_arrays()`` (yielding
(name, array) pairs in a fixed order) whose loss function returns
``(loss, grad_buffer)`` with a matching ``flat_arrays()``.  Comparisons run
in whatever precision the arrays carry; use float64, finite differences are
not trustworthy in single precision.
"""

from dataclasses import dataclass, field

import numpy as np

# Entries whose analytic and numeric gradients are both below this floor are
# compared on an absolute scale; pure relative error is meaningless next to
# finite-difference roundoff (~1e-10 for O(1) losses at step 1e-5).
REL_FLOOR = 1e-4


@dataclass
class GradCheckReport:
    """Outcome of a finite-difference sweep over every parameter entry."""

    max_rel_err: float
    tol: float
    n_checked: int
    n_skipped: int
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return self.max_rel_err <= self.tol

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}: max relative error {self.max_rel_err:.3e} "
            f"(tol {self.tol:.1e}, {self.n_checked} entries checked, "
            f"{self.n_skipped} skipped at kinks)"
        )


def _crosses_kink(sig_plus, sig_minus):
    if sig_plus is None:
        return False
    return not np.array_equal(np.asarray(sig_plus), np.asarray(sig_minus))


def check_gradients(params, loss_fn, step=1e-5, tol=1e-4, kink_fn=None):
    """Compare analytic gradients of loss_fn against central differences.

    loss_fn(params) -> (loss, grads).  Each parameter entry is perturbed by
    +-step in place (and restored) to form (f(t+h) - f(t-h)) / 2h.

    Central differences are only valid where the loss is differentiable on
    the whole [-step, +step] interval.  When kink_fn is given it must return
    a discrete signature of the piecewise-smooth region the evaluation falls
    in (for this package: the sign of every block residual, with an exact
    zero marking the L1 kink itself, plus the on/off pattern of every
    rectifier).  Entries whose two perturbed signatures differ straddle a
    kink and are excluded from the comparison.  Failures are reported,
    never raised.
    """
    if step <= 0 or tol <= 0:
        raise ValueError("step and tol must be positive")
    _, grads = loss_fn(params)
    param_arrays = list(params.flat_arrays())
    grad_arrays = list(grads.flat_arrays())
    if [n for n, _ in param_arrays] != [n for n, _ in grad_arrays]:
        raise ValueError("gradient buffer does not mirror the parameter set")

    max_rel = 0.0
    n_checked = 0
    n_skipped = 0
    failures = []
    for (name, arr), (_, garr) in zip(param_arrays, grad_arrays):
        if arr.shape != garr.shape:
            raise ValueError(f"shape mismatch for {name}")
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + step
            loss_plus = loss_fn(params)[0]
            sig_plus = kink_fn(params) if kink_fn is not None else None
            arr[idx] = orig - step
            loss_minus = loss_fn(params)[0]
            sig_minus = kink_fn(params) if kink_fn is not None else None
            arr[idx] = orig

            if _crosses_kink(sig_plus, sig_minus):
                n_skipped += 1
                continue
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            analytic = garr[idx]
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)
            n_checked += 1
            if rel > max_rel:
                max_rel = rel
            if rel > tol:
                failures.append((name, idx, float(analytic), float(numeric), float(rel)))
    return GradCheckReport(max_rel, tol, n_checked, n_skipped, failures)
