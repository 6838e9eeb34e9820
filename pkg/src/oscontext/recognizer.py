"""Scikit-learn style estimators wrapping the place-recognition pipeline.

``OscDescriptorExtractor`` is a stateless transformer turning labeled point
clouds into descriptor lists; ``OscPlaceRecognizer`` fits a descriptor
database over a sequence of keyframes and scores or matches query frames
against it. Both follow the usual estimator conventions (``get_params`` /
``set_params`` / clone-ability, fitted attributes with trailing underscores),
so they compose with pipelines, grid search and the standard metrics.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import OscConfig, validate
from .dataset import PointCloud, SemanticLabels
from .descriptor import ObjectScanContext, build_osc
from .filtering import PlaceMatch, match_frames
from .matching import DescriptorIndex
from .objects import extract_main_objects

Frame = tuple[PointCloud, SemanticLabels]


def describe_frame(
    cloud: PointCloud,
    labels: SemanticLabels,
    config: OscConfig,
) -> list[ObjectScanContext]:
    """Extract main objects from one frame and build their descriptors."""
    objects = extract_main_objects(cloud, labels, config)
    return [build_osc(cloud, obj, config) for obj in objects]


class OscDescriptorExtractor(BaseEstimator, TransformerMixin):
    """Transformer mapping ``(PointCloud, SemanticLabels)`` pairs to descriptors.

    Parameters
    ----------
    config : OscConfig or None
        Pipeline parameters; None selects the defaults.
    """

    def __init__(self, config: OscConfig | None = None):
        self.config = config

    def fit(self, X: Iterable[Frame], y=None):
        self.config_ = validate(self.config or OscConfig())
        return self

    def transform(self, X: Iterable[Frame]) -> list[list[ObjectScanContext]]:
        config = getattr(self, "config_", None) or validate(self.config or OscConfig())
        return [describe_frame(cloud, labels, config) for cloud, labels in X]


class OscPlaceRecognizer(BaseEstimator):
    """Loop-closure detector over a database of object-centric descriptors.

    ``fit`` ingests keyframes, building per-frame descriptors plus an exact
    nearest-neighbor index over their ring keys. For query frames,
    ``decision_function`` yields the best similarity against retrieved
    candidates, ``predict`` the accept/reject decision, and ``match`` the full
    per-frame result with the fused relative pose.

    Parameters
    ----------
    config : OscConfig or None
        Pipeline parameters; None selects the defaults.
    """

    def __init__(self, config: OscConfig | None = None):
        self.config = config

    def fit(self, X: Iterable[Frame], y=None):
        """Build the descriptor database from ``(cloud, labels)`` keyframes."""
        config = validate(self.config or OscConfig())
        self.config_ = config
        self.descriptors_: dict[int, list[ObjectScanContext]] = {}
        self.index_ = DescriptorIndex(config.num_rings)
        for cloud, labels in X:
            descriptors = describe_frame(cloud, labels, config)
            self.descriptors_[cloud.frame_id] = descriptors
            self.index_.insert_frame(descriptors)
        return self

    def candidate_frames(
        self,
        descriptors: Sequence[ObjectScanContext],
        query_frame_id: int | None = None,
        min_frame_gap: int | None = None,
    ) -> set[int]:
        """Database frames whose ring keys are near the query's.

        Frames temporally closer than ``min_frame_gap`` (default from config)
        to ``query_frame_id`` are excluded.
        """
        check_is_fitted(self)
        gap = self.config_.min_frame_gap if min_frame_gap is None else min_frame_gap
        exclude = None
        if query_frame_id is not None:
            exclude = lambda fid: abs(fid - query_frame_id) < gap
        return self.index_.candidate_frames(
            descriptors, self.config_.knn_candidates, exclude
        )

    def match(
        self,
        X: Iterable[Frame],
        min_frame_gap: int | None = None,
    ) -> list[PlaceMatch | None]:
        """Best place match per query frame, None when retrieval finds nothing."""
        check_is_fitted(self)
        results: list[PlaceMatch | None] = []
        for cloud, labels in X:
            descriptors = describe_frame(cloud, labels, self.config_)
            candidates = self.candidate_frames(
                descriptors, cloud.frame_id, min_frame_gap
            )
            best: PlaceMatch | None = None
            for frame_c in sorted(candidates):
                pm = match_frames(
                    descriptors, self.descriptors_[frame_c], self.config_,
                    frame_q=cloud.frame_id, frame_c=frame_c,
                )
                if best is None or (pm.accepted, pm.similarity) > (best.accepted, best.similarity):
                    best = pm
            results.append(best)
        return results

    def decision_function(self, X: Iterable[Frame]) -> np.ndarray:
        """Best-candidate similarity per query frame (0 without candidates)."""
        return np.array([
            0.0 if pm is None else pm.similarity for pm in self.match(X)
        ])

    def predict(self, X: Iterable[Frame]) -> np.ndarray:
        """True where a query frame closes a loop against the database."""
        return np.array([
            pm is not None and pm.accepted for pm in self.match(X)
        ])
