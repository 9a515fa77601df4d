"""Supervised bag-of-words baseline.

Unigram count features over preprocessed lemmas, four classical classifiers
under an exhaustive grid (Random Forest, Logistic Regression, SVM, Naive
Bayes) selected by mean F1 over 3-fold cross-validation on the training
region only. Grid points are enumerated in declaration order and ties keep
the earliest point, so selection is reproducible.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import joblib
import numpy as np
from scipy.sparse import csr_matrix
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score
from sklearn.model_selection import StratifiedKFold
from sklearn.naive_bayes import MultinomialNB
from sklearn.svm import SVC

from .errors import DegenerateTraining, VocabularyMismatch
from .text import PreprocessedDoc


class Algorithm(str, Enum):
    RANDOM_FOREST = "random_forest"
    LOGISTIC_REGRESSION = "logistic_regression"
    SVM = "svm"
    NAIVE_BAYES = "naive_bayes"


DISPLAY_NAMES = {
    Algorithm.RANDOM_FOREST: "Random Forest",
    Algorithm.LOGISTIC_REGRESSION: "Logistic Regression",
    Algorithm.SVM: "Support Vector Machine",
    Algorithm.NAIVE_BAYES: "Naive Bayes",
}

# Hyperparameter grids, value order preserved (earlier wins ties).
DEFAULT_GRIDS: dict[Algorithm, dict[str, list]] = {
    Algorithm.RANDOM_FOREST: {"n_estimators": [50, 100, 150], "max_depth": [10, 50, 100]},
    Algorithm.LOGISTIC_REGRESSION: {"solver": ["liblinear", "saga"], "penalty": ["l1", "l2"]},
    Algorithm.SVM: {"C": [0.1, 0.5, 1], "kernel": ["linear", "poly", "rbf"]},
    Algorithm.NAIVE_BAYES: {"alpha": [0.0, 1.0], "fit_prior": [True, False]},
}


@dataclass(frozen=True)
class GridSpec:
    algorithm: Algorithm
    grid: dict[str, list]

    @staticmethod
    def default(algorithm: Algorithm) -> "GridSpec":
        return GridSpec(algorithm, DEFAULT_GRIDS[algorithm])

    def points(self) -> list[dict]:
        names = list(self.grid)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.grid.values())]


def load_grid_overrides(path: str | Path) -> dict[Algorithm, GridSpec]:
    """grid.json override: {"random_forest": {"n_estimators": [...], ...}, ...}"""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for alg in Algorithm:
        out[alg] = GridSpec(alg, raw.get(alg.value, DEFAULT_GRIDS[alg]))
    return out


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]

    @staticmethod
    def build(docs: Sequence[PreprocessedDoc]) -> "Vocabulary":
        lemmas = sorted({tok for doc in docs for tok in doc.tokens})
        return Vocabulary({lemma: i for i, lemma in enumerate(lemmas)})

    def digest(self) -> str:
        payload = json.dumps(sorted(self.index), separators=(",", ":")).encode()
        return hashlib.sha256(payload).hexdigest()

    def __len__(self) -> int:
        return len(self.index)


def vectorize(docs: Sequence[PreprocessedDoc], vocab: Vocabulary) -> csr_matrix:
    """Unigram count matrix; out-of-vocabulary lemmas are dropped."""
    rows, cols, data = [], [], []
    for i, doc in enumerate(docs):
        counts: dict[int, int] = {}
        for tok in doc.tokens:
            j = vocab.index.get(tok)
            if j is not None:
                counts[j] = counts.get(j, 0) + 1
        for j, c in sorted(counts.items()):
            rows.append(i)
            cols.append(j)
            data.append(c)
    return csr_matrix((data, (rows, cols)), shape=(len(docs), max(1, len(vocab))), dtype=np.int64)


def _make_estimator(algorithm: Algorithm, params: dict, seed: int):
    if algorithm is Algorithm.RANDOM_FOREST:
        return RandomForestClassifier(random_state=seed, **params)
    if algorithm is Algorithm.LOGISTIC_REGRESSION:
        return LogisticRegression(random_state=seed, max_iter=2000, **params)
    if algorithm is Algorithm.SVM:
        return SVC(random_state=seed, **params)
    if algorithm is Algorithm.NAIVE_BAYES:
        return MultinomialNB(force_alpha=True, **params)
    raise ValueError(algorithm)


@dataclass
class FittedModel:
    algorithm: Algorithm
    estimator: object
    params: dict
    vocabulary: Vocabulary
    seed: int
    cv_f1: float
    n_points_evaluated: int


def fit_grid(
    docs: Sequence[PreprocessedDoc],
    labels: Sequence[bool],
    spec: GridSpec,
    seed: int,
) -> FittedModel:
    """Evaluate every grid point by 3-fold CV on the training docs, pick the
    highest mean F1 (first point wins ties), refit on all of TRAIN."""
    y = np.asarray(labels, dtype=int)
    if len(docs) != len(y):
        raise ValueError("docs and labels must align")
    if y.sum() < 3 or (len(y) - y.sum()) < 3:
        raise DegenerateTraining(
            f"need >= 3 positive and >= 3 negative examples, got {int(y.sum())}/{len(y) - int(y.sum())}"
        )

    vocab = Vocabulary.build(docs)
    X = vectorize(docs, vocab)
    folds = list(StratifiedKFold(n_splits=3, shuffle=True, random_state=seed).split(X, y))

    best_params, best_f1 = None, -1.0
    points = spec.points()
    for params in points:
        scores = []
        for train_idx, val_idx in folds:
            est = _make_estimator(spec.algorithm, params, seed)
            with warnings.catch_warnings():
                # alpha=0 NB legitimately takes log(0) for unseen features.
                warnings.simplefilter("ignore", RuntimeWarning)
                est.fit(X[train_idx], y[train_idx])
                pred = est.predict(X[val_idx])
            scores.append(f1_score(y[val_idx], pred, zero_division=0))
        mean_f1 = float(np.mean(scores))
        if mean_f1 > best_f1:
            best_f1, best_params = mean_f1, params

    final = _make_estimator(spec.algorithm, best_params, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        final.fit(X, y)
    return FittedModel(
        algorithm=spec.algorithm,
        estimator=final,
        params=best_params,
        vocabulary=vocab,
        seed=seed,
        cv_f1=best_f1,
        n_points_evaluated=len(points),
    )


def predict(model: FittedModel, docs: Sequence[PreprocessedDoc]) -> tuple[np.ndarray, np.ndarray]:
    """(boolean predictions, scores in [0,1]) for docs vectorized against the
    TRAIN vocabulary. SVMs are hard-decision: predictions come from the
    fitted decision rule and scores are batch min-max-normalized margins."""
    X = vectorize(docs, model.vocabulary)
    expected = getattr(model.estimator, "n_features_in_", X.shape[1])
    if X.shape[1] != expected:
        raise VocabularyMismatch(f"vector length {X.shape[1]} != model expectation {expected}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if model.algorithm is Algorithm.SVM:
            preds = model.estimator.predict(X).astype(bool)
            margins = model.estimator.decision_function(X)
            lo, hi = float(margins.min()), float(margins.max())
            scores = np.full(len(docs), 0.5) if hi == lo else (margins - lo) / (hi - lo)
        else:
            scores = model.estimator.predict_proba(X)[:, 1]
            preds = scores > 0.5
    return preds, np.clip(scores, 0.0, 1.0)


def save_model(model: FittedModel, out_dir: str | Path) -> None:
    """Model artifact: params.json (chosen point, seed, vocabulary hash) plus
    a joblib payload with the estimator and vocabulary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {
        "algorithm": model.algorithm.value,
        "params": model.params,
        "seed": model.seed,
        "cv_f1": model.cv_f1,
        "n_points_evaluated": model.n_points_evaluated,
        "vocabulary_sha256": model.vocabulary.digest(),
    }
    (out / "params.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n")
    joblib.dump({"estimator": model.estimator, "vocabulary": model.vocabulary}, out / "payload.joblib")


def load_model(model_dir: str | Path) -> FittedModel:
    model_dir = Path(model_dir)
    params = json.loads((model_dir / "params.json").read_text())
    payload = joblib.load(model_dir / "payload.joblib")
    return FittedModel(
        algorithm=Algorithm(params["algorithm"]),
        estimator=payload["estimator"],
        params=params["params"],
        vocabulary=payload["vocabulary"],
        seed=params["seed"],
        cv_f1=params["cv_f1"],
        n_points_evaluated=params["n_points_evaluated"],
    )
