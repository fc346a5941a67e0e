"""Evaluation: pairwise similarity metrics, Spearman harness, entailment
threshold sweeps, and per-component nearest neighbors.

Model scores for a word pair (w, v):

  maxcos    max cosine over all component-mean pairs (symmetric)
  avgcos    mean cosine over all component-mean pairs (symmetric)
  klapprox  -kl_approx(f_w, f_v), the approximate-KL energy (asymmetric)
  klcomp    max over component pairs of -KL(f_w,i || f_v,j) (asymmetric)

Dataset files: canonical "word1<TAB>word2<TAB>score" similarity TSV, the
SCWS layout (contexts parsed and discarded), and
"premise<TAB>hypothesis<TAB>label" entailment TSV. '#' lines are comments.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import stats

from .corpus import Vocabulary
from .errors import EvaluationError, InputError, UsageError
from .mixture import MixtureEmbedding, _kl_grid, kl_approx
from .params import ParameterBank

SIMILARITY_METRICS = ("maxcos", "avgcos", "klapprox", "klcomp")


class SimilarityRecord(NamedTuple):
    word1: str
    word2: str
    human_score: float


class EntailmentRecord(NamedTuple):
    premise: str
    hypothesis: str
    label: bool


# ---------------------------------------------------------------------------
# pairwise metrics

def _unit_means(m: MixtureEmbedding) -> np.ndarray:
    norms = np.linalg.norm(m.means, axis=1)
    if (norms == 0.0).any():
        raise EvaluationError("zero-norm component mean; cosine undefined")
    return m.means / norms[:, None]


def _cos_grid(f: MixtureEmbedding, g: MixtureEmbedding) -> np.ndarray:
    if f.dim != g.dim:
        raise UsageError(f"dimension mismatch: {f.dim} vs {g.dim}")
    return _unit_means(f) @ _unit_means(g).T


def max_cos(f: MixtureEmbedding, g: MixtureEmbedding) -> float:
    """Maximum cosine similarity over all component-mean pairs."""
    return float(_cos_grid(f, g).max())


def avg_cos(f: MixtureEmbedding, g: MixtureEmbedding, pair_mean: bool = True) -> float:
    """Average component-wise cosine similarity.

    pair_mean=True normalizes by the number of pairs (a true mean);
    pair_mean=False divides the double sum by f's component count only,
    reproducing the 1/C convention some write-ups print. Both are monotone
    rescalings of each other when every word shares C, so rank correlations
    are unaffected.
    """
    grid = _cos_grid(f, g)
    return float(grid.sum() / (grid.size if pair_mean else f.n_components))


def kl_comp(f: MixtureEmbedding, g: MixtureEmbedding) -> float:
    """Maximum component-wise negative KL; 0 iff some component pair matches."""
    if f.dim != g.dim:
        raise UsageError(f"dimension mismatch: {f.dim} vs {g.dim}")
    grid = _kl_grid(f.means, np.exp(f.log_vars), f.log_vars,
                    g.means, np.exp(g.log_vars), g.log_vars)
    return float(-grid.min())


def spearman(model_scores, human_scores) -> float:
    """Spearman rank correlation (average ranks on ties), in [-1, 1]."""
    x = np.asarray(model_scores, dtype=np.float64)
    y = np.asarray(human_scores, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise EvaluationError(f"score lists must match in length, got {x.shape} vs {y.shape}")
    if x.size < 3:
        raise EvaluationError("need at least 3 score pairs")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise EvaluationError("correlation undefined for a constant score list")
    rho = stats.spearmanr(x, y)[0]
    return float(rho)


# ---------------------------------------------------------------------------
# harnesses

def _score_pair(bank: ParameterBank, metric: str, w1: int, w2: int,
                avgcos_pair_mean: bool = True) -> float:
    f, g = bank.mixture(w1), bank.mixture(w2)
    if metric == "maxcos":
        return max_cos(f, g)
    if metric == "avgcos":
        return avg_cos(f, g, pair_mean=avgcos_pair_mean)
    if metric == "klapprox":
        return -kl_approx(f, g)
    if metric == "klcomp":
        return kl_comp(f, g)
    raise UsageError(f"unknown metric {metric!r}; valid: {', '.join(SIMILARITY_METRICS)}")


def eval_similarity(bank: ParameterBank, vocab: Vocabulary, records, metric: str,
                    avgcos_pair_mean: bool = True) -> tuple[float, int, int]:
    """Spearman rho * 100 of model vs human scores; OOV pairs are skipped.

    Returns (rho100, n_used, n_oov).
    """
    if metric not in SIMILARITY_METRICS:
        raise UsageError(f"unknown metric {metric!r}; valid: {', '.join(SIMILARITY_METRICS)}")
    model_scores, human_scores = [], []
    n_oov = 0
    for rec in records:
        w1 = vocab.get(rec.word1)
        w2 = vocab.get(rec.word2)
        if w1 is None or w2 is None:
            n_oov += 1
            continue
        model_scores.append(_score_pair(bank, metric, w1, w2, avgcos_pair_mean))
        human_scores.append(rec.human_score)
    if len(model_scores) < 3:
        raise EvaluationError(
            f"only {len(model_scores)} usable pairs ({n_oov} out-of-vocabulary); need >= 3")
    return 100.0 * spearman(model_scores, human_scores), len(model_scores), n_oov


def eval_entailment(bank: ParameterBank, vocab: Vocabulary, records,
                    threshold_steps: int = 10000) -> tuple[float, float, tuple[float, float]]:
    """Best precision and best F1 over a max_cos decision-threshold sweep.

    Predict "entailed" iff max_cos(premise, hypothesis) >= threshold;
    candidate thresholds are the observed scores plus -inf (all-positive),
    capped at threshold_steps by even subsampling. Precision is only
    considered at thresholds with at least one positive prediction. Ties
    prefer the lower threshold. Returns (best_precision, best_f1,
    (threshold_at_best_precision, threshold_at_best_f1)).
    """
    scores, labels = [], []
    for rec in records:
        if rec.premise in vocab and rec.hypothesis in vocab:
            scores.append(max_cos(bank.mixture(vocab.index[rec.premise]),
                                  bank.mixture(vocab.index[rec.hypothesis])))
            labels.append(rec.label)
    labels_arr = np.asarray(labels, dtype=bool)
    scores_arr = np.asarray(scores, dtype=np.float64)
    if len(scores) == 0 or labels_arr.all() or not labels_arr.any():
        raise EvaluationError("need at least one usable positive and one negative record")

    thresholds = np.unique(scores_arr)
    if thresholds.size > threshold_steps:
        idx = np.linspace(0, thresholds.size - 1, threshold_steps).round().astype(int)
        thresholds = thresholds[np.unique(idx)]
    thresholds = np.concatenate(([-np.inf], thresholds))

    best_p, best_p_thr = -1.0, -np.inf
    best_f, best_f_thr = -1.0, -np.inf
    n_pos = int(labels_arr.sum())
    for thr in thresholds:
        pred = scores_arr >= thr
        n_pred = int(pred.sum())
        tp = int((pred & labels_arr).sum())
        if n_pred > 0:
            precision = tp / n_pred
            if precision > best_p:
                best_p, best_p_thr = precision, float(thr)
        f1 = 2.0 * tp / (n_pred + n_pos) if (n_pred + n_pos) > 0 else 0.0
        if f1 > best_f:
            best_f, best_f_thr = f1, float(thr)
    return best_p, best_f, (best_p_thr, best_f_thr)


def neighbors(bank: ParameterBank, vocab: Vocabulary, query: str, component: int,
              k: int) -> list[tuple[str, int, float]]:
    """k nearest (token, component) mean vectors by cosine to the query sense.

    The query sense itself ranks first with cosine 1. Ties break by
    (word id, component id).
    """
    wid = vocab.get(query)
    if wid is None:
        raise EvaluationError(f"out-of-vocabulary query {query!r}")
    if not 0 <= component < bank.components:
        raise UsageError(f"component {component} out of range [0, {bank.components})")
    q = bank.means[wid, component]
    qnorm = np.linalg.norm(q)
    if qnorm == 0.0:
        raise EvaluationError(f"zero-norm component mean for {query!r}")
    flat = bank.means.reshape(-1, bank.dim)
    norms = np.linalg.norm(flat, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    cos = (flat @ q) / (safe * qnorm)
    word_ids = np.arange(flat.shape[0]) // bank.components
    comp_ids = np.arange(flat.shape[0]) % bank.components
    order = np.lexsort((comp_ids, word_ids, -cos))[:k]
    return [(vocab.tokens[word_ids[i]], int(comp_ids[i]), float(cos[i])) for i in order]


# ---------------------------------------------------------------------------
# dataset readers

def _data_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                yield lineno, line
    except OSError as exc:
        raise InputError(f"cannot read dataset {path}: {exc}") from exc


def read_similarity_tsv(path) -> list[SimilarityRecord]:
    """Canonical "word1<TAB>word2<TAB>score" records."""
    records = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
        try:
            score = float(parts[2])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: bad score {parts[2]!r}") from exc
        if not math.isfinite(score):
            raise InputError(f"{path}:{lineno}: score must be finite")
        records.append(SimilarityRecord(parts[0], parts[1], score))
    return records


def read_scws(path) -> list[SimilarityRecord]:
    """SCWS layout: id, word1, pos1, word2, pos2, context1, context2,
    10 ratings, average. Contexts are discarded; the trailing average is
    the human score."""
    records = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) < 8:
            raise InputError(f"{path}:{lineno}: expected >= 8 tab-separated fields, got {len(parts)}")
        try:
            score = float(parts[-1])
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: bad average rating {parts[-1]!r}") from exc
        records.append(SimilarityRecord(parts[1], parts[3], score))
    return records


_LABELS = {"0": False, "1": True, "false": False, "true": True}


def read_entailment_tsv(path) -> list[EntailmentRecord]:
    """Canonical "premise<TAB>hypothesis<TAB>label" with label in {0,1,true,false}."""
    records = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise InputError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
        label = _LABELS.get(parts[2].strip().lower())
        if label is None:
            raise InputError(f"{path}:{lineno}: bad label {parts[2]!r} (want 0/1/true/false)")
        records.append(EntailmentRecord(parts[0], parts[1], label))
    return records
