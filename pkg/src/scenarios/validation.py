import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from sklearn.metrics import adjusted_mutual_info_score, mutual_info_score, normalized_mutual_info_score

from src.scenarios.clustering import DayNormalizer, DayVector, NoiseProfile, pam
from src.scenarios.dtw import cross_dtw, pairwise_dtw

logger = logging.getLogger("scenarios.validation")


@dataclass
class AgreementReport:
    """Mutual information between two labelings, in nats."""
    mi: float
    nmi: float
    ami: float
    error: Optional[str] = None

    def as_dict(self) -> dict:
        out = {"MI": self.mi, "NMI": self.nmi, "AMI": self.ami}
        if self.error:
            out["error"] = self.error
        return out


def label_agreement(labels_a: Sequence[int], labels_b: Sequence[int]) -> AgreementReport:
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    mi = float(mutual_info_score(labels_a, labels_b))
    if len(np.unique(labels_a)) < 2 or len(np.unique(labels_b)) < 2:
        return AgreementReport(mi, math.nan, math.nan, "a labeling has a single cluster; NMI and AMI are undefined")
    nmi = float(normalized_mutual_info_score(labels_a, labels_b, average_method="arithmetic"))
    ami = float(adjusted_mutual_info_score(labels_a, labels_b, average_method="arithmetic"))
    return AgreementReport(mi, nmi, ami)


def classify_days(medoids: Sequence[Union[NoiseProfile, DayVector]], days: Sequence[DayVector],
                  normalizer: DayNormalizer, window: Optional[int] = None) -> np.ndarray:
    """Label each day with its DTW-nearest medoid; ties go to the lower medoid index."""
    medoid_days = [m.day if isinstance(m, NoiseProfile) else m for m in medoids]
    dist = cross_dtw([normalizer.transform(d) for d in days],
                     [normalizer.transform(m) for m in medoid_days], window)
    return np.argmin(dist, axis=1)


def validate_out_of_sample(medoids: Sequence[Union[NoiseProfile, DayVector]], validation_days: Sequence[DayVector],
                           seed: int = 0, window: Optional[int] = None,
                           normalizer: Optional[DayNormalizer] = None) -> AgreementReport:
    """Compare nearest-medoid labels of held-out days with an independent clustering of them."""
    k = len(medoids)
    if k < 2:
        return AgreementReport(math.nan, math.nan, math.nan, "at least two medoids are needed")
    if len(validation_days) < k:
        return AgreementReport(math.nan, math.nan, math.nan, f"need at least {k} validation days")
    normalizer = normalizer or DayNormalizer().fit(validation_days)
    supervised = classify_days(medoids, validation_days, normalizer, window)
    dist = pairwise_dtw([normalizer.transform(d) for d in validation_days], window)
    unsupervised = pam(dist, k, seed).labels
    report = label_agreement(supervised, unsupervised)
    if report.error:
        logger.warning(f"⚠️ Out-of-sample validation: {report.error}")
    else:
        logger.info(f"MI={report.mi:.4f} NMI={report.nmi:.4f} AMI={report.ami:.4f}")
    return report
