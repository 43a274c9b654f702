"""scikit-learn style estimators wrapping the solver and the baselines.

The fit signature follows the estimator convention with images in place of
feature matrices: X is the high-resolution guide, y the low-resolution
source.  All constructor arguments are stored verbatim so ``get_params``,
``set_params`` and ``clone`` behave as usual.
"""

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .baselines import bicubic_upsample, guided_filter_upsample
from .imaging import coordinate_channels, denormalize, normalize
from .network import ModelConfig, predict_image
from .solver import TrainConfig, fit as solver_fit
from .validation import as_guide, as_source, infer_factor


class GuidedUpsampler(BaseEstimator):
    """Upsample a low-resolution map by fitting a per-image pixel mapping.

    Parameters mirror ModelConfig and TrainConfig; see those classes for
    semantics.  ``factor`` is optional and only used to cross-check the
    ratio implied by the image sizes.

    Attributes
    ----------
    params_ : MlpParams
        Fitted network parameters.
    prediction_ : ndarray of shape (N, N)
        Denormalized prediction for the training guide.
    loss_trace_ : list of (iteration, data_loss, penalty)
    """

    def __init__(
        self,
        factor=None,
        hidden_width=32,
        color_depth=2,
        spatial_depth=2,
        head_depth=2,
        lambda_g=1e-3,
        lambda_x=1e-4,
        lambda_head=1e-4,
        learning_rate=0.001,
        batch_blocks=32,
        iterations=32000,
        adam_beta1=0.9,
        adam_beta2=0.999,
        adam_eps=1e-8,
        seed=0,
        log_every=1000,
    ):
        self.factor = factor
        self.hidden_width = hidden_width
        self.color_depth = color_depth
        self.spatial_depth = spatial_depth
        self.head_depth = head_depth
        self.lambda_g = lambda_g
        self.lambda_x = lambda_x
        self.lambda_head = lambda_head
        self.learning_rate = learning_rate
        self.batch_blocks = batch_blocks
        self.iterations = iterations
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_eps = adam_eps
        self.seed = seed
        self.log_every = log_every

    def _configs(self):
        model_cfg = ModelConfig(
            hidden_width=self.hidden_width,
            color_depth=self.color_depth,
            spatial_depth=self.spatial_depth,
            head_depth=self.head_depth,
            init_seed=self.seed,
            lambda_g=self.lambda_g,
            lambda_x=self.lambda_x,
            lambda_head=self.lambda_head,
        )
        train_cfg = TrainConfig(
            learning_rate=self.learning_rate,
            batch_blocks=self.batch_blocks,
            iterations=self.iterations,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            seed=self.seed,
            log_every=self.log_every,
        )
        return model_cfg, train_cfg

    def fit(self, X, y):
        """Fit the mapping from guide X (N, N, C) to source y (M, M)."""
        guide = as_guide(X)
        source = as_source(y)
        infer_factor(guide.shape[0], source.shape[0], self.factor)
        model_cfg, train_cfg = self._configs()
        result = solver_fit(source, guide, model_cfg, train_cfg)
        self.params_ = result.params
        self.prediction_ = result.prediction
        self.loss_trace_ = result.loss_trace
        self.source_stats_ = result.source_stats
        self.guide_stats_ = result.guide_stats
        self.factor_ = result.factor
        return self

    def predict(self, X=None):
        """Predict the target for a guide (the training guide when omitted)."""
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before predict")
        if X is None:
            return self.prediction_
        guide = as_guide(X)
        if guide.shape[2] != self.guide_stats_.mean.shape[0]:
            raise ValueError("guide channel count differs from the fitted guide")
        guide_norm = normalize(guide, self.guide_stats_)
        pred = predict_image(self.params_, guide_norm, coordinate_channels(guide.shape[0]))
        return denormalize(pred, self.source_stats_)


class BicubicUpsampler(BaseEstimator):
    """Guide-free bicubic interpolation with the estimator interface."""

    def __init__(self, factor=None):
        self.factor = factor

    def fit(self, X, y):
        """Record the source y; X (a guide) only helps infer the factor."""
        source = as_source(y)
        if X is not None:
            guide = as_guide(X)
            self.factor_ = infer_factor(guide.shape[0], source.shape[0], self.factor)
        elif self.factor is not None:
            self.factor_ = int(self.factor)
        else:
            raise ValueError("factor is required when no guide is given")
        self.source_ = source
        return self

    def predict(self, X=None):
        if not hasattr(self, "source_"):
            raise NotFittedError("call fit before predict")
        return bicubic_upsample(self.source_, self.factor_)


class GuidedFilterUpsampler(BaseEstimator):
    """Bicubic upsampling refined by a guided filter, estimator-shaped."""

    def __init__(self, factor=None, radius=None, eps=1e-4):
        self.factor = factor
        self.radius = radius
        self.eps = eps

    def fit(self, X, y):
        guide = as_guide(X)
        source = as_source(y)
        self.factor_ = infer_factor(guide.shape[0], source.shape[0], self.factor)
        self.guide_ = guide
        self.source_ = source
        return self

    def predict(self, X=None):
        if not hasattr(self, "source_"):
            raise NotFittedError("call fit before predict")
        guide = self.guide_ if X is None else as_guide(X)
        return guided_filter_upsample(
            self.source_, guide, self.factor_, radius=self.radius, eps=self.eps
        )
