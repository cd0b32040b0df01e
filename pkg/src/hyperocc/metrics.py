"""Rank-based ROC-AUC and whole-test-set evaluation.

AUC uses the Mann-Whitney statistic computed from average ranks, so ties
count half a pair each; accumulation is float64 throughout. Pixel-level
AUC pools every pixel of every upsampled map against the pooled mask bits
rather than averaging per-image AUCs.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .center import Center
from .errors import DataError, NumericError, UndefinedAUCError
from .focc import LABEL_ANOMALY, LABEL_NORMAL, FeatureSet
from .projector import ProjectorModel
from .scoring import DEFAULT_SIGMA, score_map, score_sample, upsample_smooth


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum statistic, O(n log n).

    Ties contribute 0.5 per crossing pair. Labels must be 0 (normal) or
    1 (anomaly); both classes must be present.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise DataError("scores and labels must be 1-D and the same length")
    if not np.isfinite(scores).all():
        raise NumericError("scores contain NaN or Inf")
    if not np.isin(labels, (LABEL_NORMAL, LABEL_ANOMALY)).all():
        raise DataError("labels must be 0 or 1 for AUC")
    pos = labels == LABEL_ANOMALY
    n_pos = int(pos.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError(
            f"AUC undefined with {n_pos} positives and {n_neg} negatives"
        )
    ranks = rankdata(scores, method="average")
    rank_sum = float(ranks[pos].sum(dtype=np.float64))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class EvalReport:
    image_auc: float
    pixel_auc: float | None
    n_pos: int
    n_neg: int
    sample_ids: list
    scores: np.ndarray
    labels: np.ndarray

    def to_csv(self) -> str:
        lines = ["sample_id,score,label"]
        for sid, sc, lb in zip(self.sample_ids, self.scores, self.labels):
            lines.append(f"{sid},{sc:.17g},{int(lb)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "image_auc": self.image_auc,
                "pixel_auc": self.pixel_auc,
                "n_pos": self.n_pos,
                "n_neg": self.n_neg,
            },
            sort_keys=True,
        ) + "\n"


def evaluate(model: ProjectorModel, test: FeatureSet, center: Center,
             radius: float, pixel_sigma: float = DEFAULT_SIGMA) -> EvalReport:
    """Image-level AUC over per-sample scores, plus pixel-level AUC when
    ground-truth masks are present (None when they are absent).

    Unknown-label samples (255) are scored and reported but excluded from
    the AUC.
    """
    if test.n_samples == 0:
        raise DataError("EmptySet: cannot evaluate an empty feature set")
    scores = np.array(
        [score_sample(model, f, center, radius) for f in test.data],
        dtype=np.float64,
    )
    known = np.isin(test.labels, (LABEL_NORMAL, LABEL_ANOMALY))
    image_auc = roc_auc(scores[known], test.labels[known])

    pixel_auc = None
    if test.masks is not None:
        mh, mw = test.masks.shape[1], test.masks.shape[2]
        pooled = np.empty((test.n_samples, mh, mw), dtype=np.float64)
        for i, f in enumerate(test.data):
            smap = score_map(model, f, center, radius)
            pooled[i] = upsample_smooth(smap, mh, mw, sigma=pixel_sigma).values
        pixel_auc = roc_auc(pooled.ravel(), test.masks.ravel())

    n_pos = int((test.labels[known] == LABEL_ANOMALY).sum())
    return EvalReport(
        image_auc=image_auc,
        pixel_auc=pixel_auc,
        n_pos=n_pos,
        n_neg=int(known.sum()) - n_pos,
        sample_ids=list(range(test.n_samples)),
        scores=scores,
        labels=test.labels.copy(),
    )
