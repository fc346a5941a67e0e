"""Similarity metrics, Spearman harness, entailment sweep, neighbors, readers."""

import numpy as np
import pytest

from conftest import random_bank, random_mixture
from gmkl.corpus import Vocabulary
from gmkl.errors import EvaluationError, InputError, UsageError
from gmkl.evaluate import (EntailmentRecord, SimilarityRecord, avg_cos,
                           eval_entailment, eval_similarity, kl_comp, max_cos,
                           neighbors, read_entailment_tsv, read_scws,
                           read_similarity_tsv, spearman)
from gmkl.gauss import DiagGaussian, kl_diag
from gmkl.mixture import MixtureEmbedding
from gmkl.params import ParameterBank


def mixture_from_means(means, var=1.0):
    means = np.asarray(means, dtype=float)
    c = means.shape[0]
    return MixtureEmbedding(np.full(c, 1.0 / c), means,
                            np.log(np.full(means.shape, var)))


def bank_with_means(mean_rows, var=1.0):
    """One word per row set; rows are [C, D] mean arrays."""
    arr = np.asarray(mean_rows, dtype=float)
    v, c, d = arr.shape
    bank = ParameterBank(v, c, d)
    bank.means[:] = arr
    bank.log_vars[:] = np.log(var)
    tokens = [f"w{chr(97 + i)}" for i in range(v)]
    vocab = Vocabulary(tokens, np.full(v, 10, dtype=np.int64), 10 * v)
    return bank, vocab


# -- cosine metrics -----------------------------------------------------------

def test_max_cos_self_is_one(rng):
    f = random_mixture(rng, 3, 4)
    assert max_cos(f, f) == pytest.approx(1.0, abs=1e-12)


def test_max_cos_orthogonal_and_enumerated():
    f = mixture_from_means([[1.0, 0.0]])
    g = mixture_from_means([[0.0, 1.0]])
    assert max_cos(f, g) == pytest.approx(0.0, abs=1e-12)
    h = mixture_from_means([[-1.0, 0.0], [0.6, 0.8]])
    assert max_cos(f, h) == pytest.approx(0.6, abs=1e-12)


def test_max_cos_symmetric(rng):
    f = random_mixture(rng, 2, 5)
    g = random_mixture(rng, 3, 5)
    assert max_cos(f, g) == pytest.approx(max_cos(g, f), abs=1e-12)
    assert avg_cos(f, g) == pytest.approx(avg_cos(g, f), abs=1e-12)


def test_avg_cos_single_component_equals_max(rng):
    f = random_mixture(rng, 1, 4)
    g = random_mixture(rng, 1, 4)
    assert avg_cos(f, g) == pytest.approx(max_cos(f, g), abs=1e-12)


def test_avg_cos_cancellation():
    f = mixture_from_means([[1.0, 0.0], [1.0, 0.0]])
    g = mixture_from_means([[-1.0, 0.0], [1.0, 0.0]])
    assert avg_cos(f, g) == pytest.approx(0.0, abs=1e-12)
    # printed 1/C convention doubles the normalizer
    assert avg_cos(f, g, pair_mean=False) == pytest.approx(0.0, abs=1e-12)
    h = mixture_from_means([[1.0, 0.0], [1.0, 0.0]])
    assert avg_cos(f, h, pair_mean=False) == pytest.approx(2 * avg_cos(f, h), abs=1e-12)


def test_avg_le_max(rng):
    for _ in range(20):
        f = random_mixture(rng, int(rng.integers(1, 4)), 3)
        g = random_mixture(rng, int(rng.integers(1, 4)), 3)
        assert avg_cos(f, g) <= max_cos(f, g) + 1e-12


def test_cos_range_and_scale_invariance(rng):
    f = random_mixture(rng, 2, 4)
    g = random_mixture(rng, 3, 4)
    assert -1 - 1e-9 <= avg_cos(f, g) <= 1 + 1e-9
    assert -1 - 1e-9 <= max_cos(f, g) <= 1 + 1e-9
    f2 = MixtureEmbedding(f.weights, 7.5 * f.means, f.log_vars)
    g2 = MixtureEmbedding(g.weights, 7.5 * g.means, g.log_vars)
    assert max_cos(f2, g2) == pytest.approx(max_cos(f, g), abs=1e-12)
    assert avg_cos(f2, g2) == pytest.approx(avg_cos(f, g), abs=1e-12)


def test_zero_norm_mean_rejected():
    f = mixture_from_means([[0.0, 0.0]])
    g = mixture_from_means([[1.0, 0.0]])
    with pytest.raises(EvaluationError):
        max_cos(f, g)


# -- component KL metric --------------------------------------------------------

def test_kl_comp_identity_and_worked_value(rng):
    f = random_mixture(rng, 2, 3)
    assert kl_comp(f, f) == pytest.approx(0.0, abs=1e-12)
    a = mixture_from_means([[0.0]])
    b = mixture_from_means([[1.0]])
    assert kl_comp(a, b) == pytest.approx(-0.5, abs=1e-12)
    assert kl_comp(a, b) <= 0.0


def test_kl_comp_asymmetric():
    a = MixtureEmbedding(np.array([1.0]), np.zeros((1, 1)), np.log(np.array([[1.0]])))
    b = MixtureEmbedding(np.array([1.0]), np.zeros((1, 1)), np.log(np.array([[9.0]])))
    assert abs(kl_comp(a, b) - kl_comp(b, a)) > 0.1


def test_kl_comp_matches_component_enumeration(rng):
    f = random_mixture(rng, 2, 3)
    g = random_mixture(rng, 3, 3)
    brute = max(-kl_diag(f.component(i), g.component(j))
                for i in range(2) for j in range(3))
    assert kl_comp(f, g) == pytest.approx(brute, abs=1e-12)


# -- spearman ---------------------------------------------------------------------

def test_spearman_worked_values():
    assert spearman([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0, abs=1e-12)
    assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_spearman_monotone_invariance(rng):
    x = rng.normal(size=30)
    y = rng.normal(size=30)
    base = spearman(x, y)
    assert spearman(np.exp(x), y) == pytest.approx(base, abs=1e-12)
    assert spearman(x, 3 * y + 7) == pytest.approx(base, abs=1e-12)
    assert spearman(x ** 3, np.tanh(y)) == pytest.approx(base, abs=1e-12)


def test_spearman_errors():
    with pytest.raises(EvaluationError):
        spearman([1, 2], [1, 2])
    with pytest.raises(EvaluationError):
        spearman([1, 2, 3], [1, 2])
    with pytest.raises(EvaluationError):
        spearman([2, 2, 2], [1, 2, 3])


# -- similarity harness --------------------------------------------------------------

def test_eval_similarity_perfect_ordering():
    # word means along one axis: cosine to the first word orders exactly
    bank, vocab = bank_with_means([[[1.0, 0.0]], [[1.0, 0.1]], [[1.0, 0.4]], [[0.0, 1.0]]])
    records = [SimilarityRecord("wa", "wb", 3.0),
               SimilarityRecord("wa", "wc", 2.0),
               SimilarityRecord("wa", "wd", 1.0)]
    for metric in ("maxcos", "avgcos", "klapprox", "klcomp"):
        rho100, used, oov = eval_similarity(bank, vocab, records, metric)
        assert used == 3 and oov == 0
        assert rho100 == pytest.approx(100.0, abs=1e-9)


def test_eval_similarity_counts_oov():
    bank, vocab = bank_with_means([[[1.0, 0.0]], [[0.9, 0.1]], [[0.0, 1.0]], [[0.4, 0.6]]])
    records = [SimilarityRecord("wa", "wb", 3.0),
               SimilarityRecord("wa", "unknown", 9.0),
               SimilarityRecord("wa", "wc", 1.0),
               SimilarityRecord("wa", "wd", 2.0)]
    rho100, used, oov = eval_similarity(bank, vocab, records, "maxcos")
    assert (used, oov) == (3, 1)


def test_eval_similarity_all_oov_fails():
    bank, vocab = bank_with_means([[[1.0, 0.0]], [[0.0, 1.0]], [[1.0, 1.0]]])
    records = [SimilarityRecord("nope", "nada", 1.0)] * 5
    with pytest.raises(EvaluationError):
        eval_similarity(bank, vocab, records, "maxcos")


def test_eval_similarity_unknown_metric():
    bank, vocab = bank_with_means([[[1.0, 0.0]], [[0.0, 1.0]], [[1.0, 1.0]]])
    with pytest.raises(UsageError, match="maxcos"):
        eval_similarity(bank, vocab, [], "cosine")


# -- entailment sweep ------------------------------------------------------------------

def entail_records(words, labels):
    return [EntailmentRecord("wa", w, bool(l)) for w, l in zip(words, labels)]


def test_entailment_separable_is_perfect():
    # wa close to wb..we (positives), far from wf..wi (negatives)
    means = [[[1.0, 0.0]]]
    for k in range(4):
        means.append([[1.0, 0.05 * (k + 1)]])
    for k in range(4):
        means.append([[-1.0, 0.1 * (k + 1)]])
    bank, vocab = bank_with_means(means)
    hyps = [f"w{chr(98 + i)}" for i in range(8)]
    records = entail_records(hyps, [1, 1, 1, 1, 0, 0, 0, 0])
    best_p, best_f1, (thr_p, thr_f1) = eval_entailment(bank, vocab, records)
    assert best_p == 1.0
    assert best_f1 == 1.0
    assert thr_f1 <= thr_p


def test_entailment_identical_scores_degenerate():
    # duplicate mean vectors give every pair the same score
    bank, vocab = bank_with_means([[[1.0, 0.0]]] * 5)
    records = entail_records(["wb", "wc", "wd", "we"], [1, 0, 0, 1])
    best_p, best_f1, _ = eval_entailment(bank, vocab, records)
    p = 0.5
    assert best_p == pytest.approx(p)
    assert best_f1 == pytest.approx(2 * p / (p + 1))


def test_entailment_beats_all_positive_baseline(rng):
    bank = random_bank(rng, 10, 2, 4)
    tokens = [f"t{chr(97 + i)}" for i in range(10)]
    vocab = Vocabulary(tokens, np.full(10, 5, dtype=np.int64), 50)
    records = [EntailmentRecord(tokens[i], tokens[j], bool(rng.integers(2)))
               for i in range(10) for j in range(10) if i != j]
    best_p, best_f1, _ = eval_entailment(bank, vocab, records)
    labels = np.array([r.label for r in records])
    p = labels.mean()
    assert best_f1 >= 2 * p / (p + 1) - 1e-12
    assert best_p >= p - 1e-12


def test_entailment_needs_both_classes():
    bank, vocab = bank_with_means([[[1.0, 0.0]], [[0.0, 1.0]], [[1.0, 1.0]]])
    with pytest.raises(EvaluationError):
        eval_entailment(bank, vocab, entail_records(["wb", "wc"], [1, 1]))
    with pytest.raises(EvaluationError):
        eval_entailment(bank, vocab, [])


# -- neighbors ------------------------------------------------------------------------

def test_neighbors_self_first(rng):
    bank = random_bank(rng, 6, 2, 4)
    tokens = [f"n{chr(97 + i)}" for i in range(6)]
    vocab = Vocabulary(tokens, np.full(6, 5, dtype=np.int64), 30)
    (tok, comp, cos), = neighbors(bank, vocab, "nc", 1, k=1)
    assert (tok, comp) == ("nc", 1)
    assert cos == pytest.approx(1.0, abs=1e-12)


def test_neighbors_duplicate_mean_ranks_second(rng):
    bank = random_bank(rng, 5, 2, 3)
    bank.means[3, 0] = bank.means[1, 1]  # duplicate of the query vector
    tokens = [f"n{chr(97 + i)}" for i in range(5)]
    vocab = Vocabulary(tokens, np.full(5, 5, dtype=np.int64), 25)
    rows = neighbors(bank, vocab, "nb", 1, k=2)
    assert rows[0][:2] == ("nb", 1)
    assert rows[1][:2] == ("nd", 0)
    assert rows[1][2] == pytest.approx(1.0, abs=1e-12)


def test_neighbors_tie_break_order():
    # all means identical: ties resolve by (word id, component id)
    bank, vocab = bank_with_means([[[1.0, 0.0], [1.0, 0.0]]] * 3)
    rows = neighbors(bank, vocab, "wa", 0, k=6)
    assert [(t, c) for t, c, _ in rows] == \
        [("wa", 0), ("wa", 1), ("wb", 0), ("wb", 1), ("wc", 0), ("wc", 1)]


def test_neighbors_errors(rng):
    bank = random_bank(rng, 3, 2, 3)
    vocab = Vocabulary(["na", "nb", "nc"], np.full(3, 5, dtype=np.int64), 15)
    with pytest.raises(EvaluationError, match="missing"):
        neighbors(bank, vocab, "missing", 0, k=1)
    with pytest.raises(UsageError):
        neighbors(bank, vocab, "na", 5, k=1)


# -- readers ----------------------------------------------------------------------------

def test_read_similarity_tsv(tmp_path):
    path = tmp_path / "sim.tsv"
    path.write_text("# comment\nape\tmonkey\t8.5\n\ncar\tbanana\t0.5\n")
    records = read_similarity_tsv(path)
    assert records == [SimilarityRecord("ape", "monkey", 8.5),
                       SimilarityRecord("car", "banana", 0.5)]


def test_read_similarity_tsv_errors(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\tb\n")
    with pytest.raises(InputError, match="bad.tsv:1"):
        read_similarity_tsv(path)
    path.write_text("a\tb\tnotanumber\n")
    with pytest.raises(InputError):
        read_similarity_tsv(path)
    with pytest.raises(InputError):
        read_similarity_tsv(tmp_path / "missing.tsv")


def test_read_scws_layout(tmp_path):
    ratings = "\t".join(str(r) for r in range(10))
    line = f"1\tbank\tn\tmoney\tn\tthe bank near\tcash money flow\t{ratings}\t6.25\n"
    path = tmp_path / "scws.txt"
    path.write_text(line)
    records = read_scws(path)
    assert records == [SimilarityRecord("bank", "money", 6.25)]
    path.write_text("1\tbank\tn\n")
    with pytest.raises(InputError):
        read_scws(path)


def test_read_entailment_tsv(tmp_path):
    path = tmp_path / "ent.tsv"
    path.write_text("# c\ndog\tanimal\t1\ncar\tfood\tfalse\nfish\tanimal\tTrue\n")
    records = read_entailment_tsv(path)
    assert records == [EntailmentRecord("dog", "animal", True),
                       EntailmentRecord("car", "food", False),
                       EntailmentRecord("fish", "animal", True)]
    path.write_text("a\tb\tmaybe\n")
    with pytest.raises(InputError, match="label"):
        read_entailment_tsv(path)
