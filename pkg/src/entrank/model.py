"""Feature matrix, log-max normalization, least-squares weights and scoring."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .ingest import EntityCatalog
from .kbfeatures import TripleFeatureRow
from .linkgraph import WikiFeatures

log = logging.getLogger(__name__)

FEATURES = (
    "pagerank",
    "outlink_count",
    "inlink_count",
    "in_out_ratio",
    "category_count",
    "subject_count",
    "subject_type_count",
    "object_count",
    "object_type_count",
    "social_score",
)
N_FEATURES = len(FEATURES)
RIDGE = 1e-8


class ModelError(ValueError):
    pass


@dataclass
class FeatureMatrix:
    """One row per ``(kb_id, language)`` page, columns in :data:`FEATURES` order.

    ``raw`` uses NaN for an absent value. ``normalized`` and ``denominators``
    are filled in by :func:`normalize`.
    """

    keys: list[tuple[str, str]]
    raw: np.ndarray
    normalized: np.ndarray | None = None
    denominators: np.ndarray | None = None
    flagged: list[str] = field(default_factory=list)
    feature_names: tuple[str, ...] = FEATURES

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=float).reshape(len(self.keys), len(self.feature_names))
        self._row_of = {k: i for i, k in enumerate(self.keys)}
        if len(self._row_of) != len(self.keys):
            raise ModelError("duplicate (kb_id, language) rows in feature matrix")

    def row_index(self, kb_id: str, language: str) -> int:
        return self._row_of[(kb_id, language)]

    def rows_by_kb_id(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, (kb_id, _) in enumerate(self.keys):
            out.setdefault(kb_id, []).append(i)
        return out

    def present(self) -> np.ndarray:
        return ~np.isnan(self.raw)


def assemble(catalog: EntityCatalog, wiki: Mapping[str, WikiFeatures],
             kb_rows: Mapping[str, TripleFeatureRow]) -> FeatureMatrix:
    """Raw matrix with one row per catalog page.

    Wikipedia features come from the page's own language. PageRank is
    stored multiplied by that language's node count, so a page at the
    uniform share has raw value 1.
    """
    keys = []
    raw = np.full((len(catalog), N_FEATURES), np.nan)
    lookup = {}
    for lang, wf in wiki.items():
        for i, pid in enumerate(wf.page_ids):
            lookup[(lang, int(pid))] = (wf, i)
    for r, rec in enumerate(catalog):
        keys.append((rec.kb_id, rec.language))
        hit = lookup.get((rec.language, rec.page_id))
        if hit is not None:
            wf, i = hit
            raw[r, :5] = (
                wf.pagerank[i] * wf.node_count,
                wf.outlinks[i],
                wf.inlinks[i],
                wf.in_out_ratio[i],
                wf.category_count[i],
            )
        kb = kb_rows.get(rec.kb_id)
        if kb is not None:
            raw[r, 5:] = [np.nan if v is None else v for v in (
                kb.subject_count, kb.subject_type_count, kb.object_count, kb.object_type_count, kb.social_score)]
    return FeatureMatrix(keys, raw)


def log_max_denominators(raw: np.ndarray) -> np.ndarray:
    """Per-column ``max log(max(raw, 1))`` over present values; 0 if none."""
    logs = np.log(np.maximum(raw, 1.0))
    if logs.shape[0] == 0:
        return np.zeros(logs.shape[1])
    return np.maximum(np.where(np.isnan(logs), -np.inf, logs).max(axis=0), 0.0)


def apply_normalization(raw: np.ndarray, denominators: np.ndarray) -> np.ndarray:
    """Map raw values into [0, 1] with fixed denominators.

    Values at or below 1 and absent values become 0; a zero denominator
    zeroes the whole column. Rows scored later may exceed the stored max,
    so the result is clipped at 1.
    """
    raw = np.asarray(raw, dtype=float)
    logs = np.log(np.maximum(np.nan_to_num(raw, nan=1.0), 1.0))
    out = np.zeros_like(logs)
    ok = denominators > 0
    out[..., ok] = logs[..., ok] / denominators[ok]
    return np.clip(out, 0.0, 1.0)


def normalize(matrix: FeatureMatrix) -> FeatureMatrix:
    den = log_max_denominators(matrix.raw)
    flagged = [name for name, d in zip(matrix.feature_names, den) if d == 0.0]
    for name in flagged:
        log.warning("feature %s has no value above 1; it contributes 0 everywhere", name)
    return replace(matrix, normalized=apply_normalization(matrix.raw, den), denominators=den, flagged=flagged)


@dataclass(frozen=True)
class TrainTestSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    seed: int


def split_labels(labels: Mapping[str, int], seed: int, train_fraction: float = 0.8) -> TrainTestSplit:
    """Shuffle the labeled kb_ids with ``seed`` and cut at ``train_fraction``."""
    if not 0.0 < train_fraction < 1.0:
        raise ModelError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    ids = sorted(labels)
    if len(ids) < 5:
        raise ModelError(f"need at least 5 labels to split, got {len(ids)}")
    n_train = math.floor(len(ids) * train_fraction + 0.5)
    n_train = min(max(n_train, 1), len(ids) - 1)
    perm = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in perm]
    return TrainTestSplit(tuple(sorted(shuffled[:n_train])), tuple(sorted(shuffled[n_train:])), seed)


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    intercept: float
    feature_names: tuple[str, ...] = FEATURES

    def __post_init__(self):
        if len(self.weights) != len(self.feature_names):
            raise ModelError(f"expected {len(self.feature_names)} weights, got {len(self.weights)}")


def fit_least_squares(X: np.ndarray, y: np.ndarray, ridge: float = RIDGE) -> tuple[np.ndarray, float]:
    """OLS with intercept via the normal equations.

    ``ridge`` is added to the diagonal of the feature block only; the
    intercept is not shrunk.

    Returns:
        (coefficients, intercept)
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ModelError(f"bad design matrix shape {X.shape} for {y.shape[0]} targets")
    A = np.column_stack([np.ones(len(X)), X])
    gram = A.T @ A
    gram[1:, 1:] += ridge * np.eye(X.shape[1])
    try:
        beta = np.linalg.solve(gram, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"normal equations are singular (n={len(X)}, p={X.shape[1]}): {exc}") from exc
    if not np.all(np.isfinite(beta)):
        raise ModelError("normal equations produced non-finite weights")
    return beta[1:], float(beta[0])


def training_rows(matrix: FeatureMatrix, kb_ids: Sequence[str], prefer_language: str = "en") -> list[int]:
    """Pick one matrix row per kb_id: the preferred language if present,
    else the row with the most present non-zero features (ties: language)."""
    by_kb = matrix.rows_by_kb_id()
    covered = (matrix.present() & (np.nan_to_num(matrix.raw) != 0)).sum(axis=1)
    out = []
    for kb_id in kb_ids:
        rows = by_kb.get(kb_id)
        if not rows:
            raise ModelError(f"no feature row for labeled entity {kb_id!r}")
        pref = [i for i in rows if matrix.keys[i][1] == prefer_language]
        if pref:
            out.append(pref[0])
        else:
            out.append(min(rows, key=lambda i: (-covered[i], matrix.keys[i][1])))
    return out


def train(matrix: FeatureMatrix, labels: Mapping[str, int], split: TrainTestSplit,
          columns: Sequence[int] | None = None, ridge: float = RIDGE) -> WeightVector:
    """Fit weights on the training kb_ids.

    ``columns`` restricts the fit to a subset of features; the other weights
    are exactly 0.
    """
    if matrix.normalized is None:
        raise ModelError("train needs a normalized matrix")
    rows = training_rows(matrix, split.train)
    cols = list(range(N_FEATURES)) if columns is None else list(columns)
    X = matrix.normalized[np.ix_(rows, cols)]
    y = np.array([labels[k] for k in split.train], dtype=float)
    coef, intercept = fit_least_squares(X, y, ridge)
    w = np.zeros(len(matrix.feature_names))
    w[cols] = coef
    return WeightVector(w, intercept, matrix.feature_names)


def score(weights: WeightVector, normalized_row) -> float:
    row = np.asarray(normalized_row, dtype=float)
    if row.shape != (len(weights.weights),):
        raise ModelError(f"row has shape {row.shape}, expected ({len(weights.weights)},)")
    return float(weights.intercept + row @ weights.weights)


def score_matrix(weights: WeightVector, normalized: np.ndarray) -> np.ndarray:
    return weights.intercept + np.asarray(normalized, dtype=float) @ weights.weights
