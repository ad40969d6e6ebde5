"""Ranked lists, Table-style evaluation rows and entity-type distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import EntityCatalog, EntityType, format_real
from .model import FeatureMatrix, TrainTestSplit, WeightVector, score_matrix, train, training_rows

ALL_FEATURES = "all_features"


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class RankedRow:
    rank: int
    kb_id: str
    title: str
    score: float


@dataclass(frozen=True)
class RankedList:
    language: str
    rows: tuple[RankedRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def head(self, n: int | None) -> "RankedList":
        if n is None or n <= 0:
            return self
        return RankedList(self.language, self.rows[:n])


def rank(scored_rows: Iterable[tuple[str, str, float]], language: str) -> RankedList:
    """Order ``(kb_id, title, score)`` by score descending, ties by kb_id."""
    ordered = sorted(scored_rows, key=lambda r: (-r[2], r[0]))
    return RankedList(language, tuple(RankedRow(i, k, t, float(s)) for i, (k, t, s) in enumerate(ordered, 1)))


def round_half_up(x) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=float) + 0.5)


@dataclass(frozen=True)
class EvalRow:
    variant: str
    precision: float
    recall: float
    f1: float
    coverage: float
    rmse: float


def evaluate(predicted_scores: Sequence[float], labels: Sequence[int], positive_threshold: int = 4,
             variant: str = ALL_FEATURES, coverage: float = math.nan) -> EvalRow:
    """Compare rounded predictions against integer labels.

    Predictions are rounded half-up and clamped to [1, 5]. An item is
    positive when its (rounded) value is at least ``positive_threshold``.
    Precision with no predicted positives, and recall with no true
    positives, are 0.
    """
    pred = np.clip(round_half_up(predicted_scores), 1, 5)
    truth = np.asarray(labels, dtype=float)
    if len(pred) == 0:
        raise EvalError("empty test set")
    if pred.shape != truth.shape:
        raise EvalError(f"{len(pred)} predictions for {len(truth)} labels")
    pp = pred >= positive_threshold
    tp_mask = truth >= positive_threshold
    tp = int(np.sum(pp & tp_mask))
    n_pred, n_true = int(pp.sum()), int(tp_mask.sum())
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_true if n_true else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    rmse = math.sqrt(float(np.sum((pred - truth) ** 2)) / len(pred))
    return EvalRow(variant, precision, recall, f1, coverage, rmse)


def _covered(matrix: FeatureMatrix) -> np.ndarray:
    return matrix.present() & (np.nan_to_num(matrix.raw) != 0)


def feature_coverage(raw_matrix: FeatureMatrix) -> dict[str, float]:
    """Fraction of rows with each feature present and non-zero."""
    n = len(raw_matrix.keys)
    if n == 0:
        raise EvalError("coverage of an empty catalog")
    frac = _covered(raw_matrix).sum(axis=0) / n
    return dict(zip(raw_matrix.feature_names, frac.tolist()))


def combined_coverage(raw_matrix: FeatureMatrix) -> float:
    """Fraction of rows with at least one feature present and non-zero."""
    n = len(raw_matrix.keys)
    if n == 0:
        raise EvalError("coverage of an empty catalog")
    return float(_covered(raw_matrix).any(axis=1).sum() / n)


def predict_test(matrix: FeatureMatrix, weights: WeightVector, split: TrainTestSplit) -> np.ndarray:
    rows = training_rows(matrix, split.test)
    return score_matrix(weights, matrix.normalized[rows])


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]

    def row(self, variant: str) -> EvalRow:
        for r in self.rows:
            if r.variant == variant:
                return r
        raise KeyError(variant)


def single_feature_eval(matrix: FeatureMatrix, labels: Mapping[str, int], split: TrainTestSplit,
                        positive_threshold: int = 4,
                        coverage_matrix: FeatureMatrix | None = None) -> tuple[EvalReport, WeightVector]:
    """One-feature regressions for each feature, then the all-features model.

    Coverage is taken from ``coverage_matrix`` (default: ``matrix``).
    Returns the report and the all-features weights.
    """
    cov_src = coverage_matrix if coverage_matrix is not None else matrix
    cov = feature_coverage(cov_src)
    truth = [labels[k] for k in split.test]
    rows = []
    for k, name in enumerate(matrix.feature_names):
        w = train(matrix, labels, split, columns=[k])
        rows.append(evaluate(predict_test(matrix, w, split), truth, positive_threshold, name, cov[name]))
    full = train(matrix, labels, split)
    rows.append(evaluate(predict_test(matrix, full, split), truth, positive_threshold,
                         ALL_FEATURES, combined_coverage(cov_src)))
    return EvalReport(tuple(rows)), full


@dataclass(frozen=True)
class TypeDistribution:
    language: str
    top_n: int
    global_fractions: dict[EntityType, float]
    top_fractions: dict[EntityType, float]


def _fractions(types: list[EntityType]) -> dict[EntityType, float]:
    n = len(types)
    return {t: (sum(1 for x in types if x is t) / n if n else 0.0) for t in EntityType}


def type_distribution(catalog: EntityCatalog, ranked_list: RankedList, top_n: int) -> TypeDistribution:
    """Entity-type shares over the language's whole catalog vs. the top ``top_n``."""
    if top_n <= 0:
        raise EvalError("top_n must be positive")
    if top_n > len(ranked_list):
        raise EvalError(f"top_n={top_n} exceeds ranked list length {len(ranked_list)}")
    lang = ranked_list.language
    everyone = [r.entity_type for r in catalog.records_for(lang)]
    top = [catalog.get(r.kb_id, lang).entity_type for r in ranked_list.rows[:top_n]]
    return TypeDistribution(lang, top_n, _fractions(everyone), _fractions(top))


# -- file formats --------------------------------------------------------------

def ranked_lines(ranked: RankedList):
    for r in ranked.rows:
        yield f"{r.rank}\t{r.kb_id}\t{r.title}\t{ranked.language}\t{r.score:.6f}"


EVAL_COLUMNS = ("variant", "precision", "recall", "f1", "coverage", "rmse")


def eval_lines(report: EvalReport):
    for r in report.rows:
        yield "\t".join([r.variant] + [format_real(v) for v in (r.precision, r.recall, r.f1, r.coverage, r.rmse)])


def type_lines(dist: TypeDistribution):
    for pop, fr in ((f"{dist.language}:global", dist.global_fractions),
                    (f"{dist.language}:top_{dist.top_n}", dist.top_fractions)):
        for t in EntityType:
            yield f"{pop}\t{t.value}\t{fr[t]:.6f}"

