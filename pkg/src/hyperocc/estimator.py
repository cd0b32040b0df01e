"""scikit-learn style wrapper around the projector pipeline.

``HypersphereDetector`` follows the outlier-estimator conventions: fit on
plain (n_samples, n_features) arrays of normal data, then ``predict``
returns +1 for inliers and -1 for outliers, ``score_samples`` is higher
for more normal points, and ``decision_function`` is positive inside the
sphere. The package's own CLI and file formats do not depend on this
class; it exists so the detector composes with sklearn tooling.
"""

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .center import CenterKind, feature_mean_center, make_center, set_norm
from .focc import FeatureSet
from .projector import init_projector
from .scoring import score_sample
from .training import TrainConfig, fit_offline, fit_online


class HypersphereDetector(BaseEstimator, OutlierMixin):
    """One-class detector: affine projection trained toward a fixed center.

    Parameters mirror the training defaults; ``center_kind`` accepts
    "normal", "uniform", "ones", or "feature_mean".
    """

    def __init__(self, center_kind="normal", center_norm=1.0, center_seed=1024,
                 radius=1e-5, lr=1e-4, weight_decay=5e-4, epochs=20,
                 batch_size=64, seed=1024, online=False, contamination=0.05):
        self.center_kind = center_kind
        self.center_norm = center_norm
        self.center_seed = center_seed
        self.radius = radius
        self.lr = lr
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.online = online
        self.contamination = contamination

    def _to_feature_set(self, X) -> FeatureSet:
        X = check_array(X, dtype=np.float32, ensure_2d=True)
        return FeatureSet(
            data=X[:, :, None, None],
            labels=np.zeros(X.shape[0], dtype=np.uint8),
        )

    def fit(self, X, y=None):
        """Train on all-normal rows of X; y is ignored."""
        fs = self._to_feature_set(X)
        self.n_features_in_ = fs.channels
        kind = CenterKind(self.center_kind)
        if kind is CenterKind.FEATURE_MEAN:
            center = feature_mean_center(fs, seed=self.center_seed)
        else:
            center = make_center(fs.channels, kind, seed=self.center_seed)
        if self.center_norm != 1.0:
            center = set_norm(center, self.center_norm)
        model = init_projector(fs.channels, center.dim, seed=self.seed)
        if self.online:
            cfg = TrainConfig(radius=self.radius, lr=self.lr,
                              weight_decay=self.weight_decay, epochs=1,
                              batch_size=1, seed=self.seed, mode="online")
            _, trace = fit_online(model, fs, center, cfg)
        else:
            cfg = TrainConfig(radius=self.radius, lr=self.lr,
                              weight_decay=self.weight_decay, epochs=self.epochs,
                              batch_size=self.batch_size, seed=self.seed)
            _, trace = fit_offline(model, fs, center, cfg)
        self.model_ = model
        self.center_ = center
        self.trace_ = trace
        # decision threshold from the training scores: the loss radius is
        # intentionally tiny, so hard predictions need a learned cutoff
        train_d = np.array(
            [score_sample(model, x, center, self.radius)
             for x in fs.data[:, :, 0, 0]]
        )
        self.offset_ = float(np.quantile(train_d, 1.0 - self.contamination))
        return self

    def _distances(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float32, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return np.array(
            [score_sample(self.model_, x, self.center_, self.radius) for x in X]
        )

    def score_samples(self, X) -> np.ndarray:
        """Negated center distance; higher means more normal."""
        return -self._distances(X)

    def decision_function(self, X) -> np.ndarray:
        """offset_ - distance: positive for inliers."""
        d = self._distances(X)
        return self.offset_ - d

    def predict(self, X) -> np.ndarray:
        """+1 inlier, -1 outlier, split at the fitted train-score quantile."""
        return np.where(self.decision_function(X) < 0, -1, 1)
