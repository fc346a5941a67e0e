"""Shared helpers: random model builders and synthetic corpora."""

import numpy as np
import pytest

from gmkl.mixture import MixtureEmbedding
from gmkl.params import ParameterBank


def random_mixture(rng, n_components, dim, mean_range=3.0,
                   var_range=(0.1, 4.0)) -> MixtureEmbedding:
    w = rng.uniform(0.2, 1.0, n_components)
    w /= w.sum()
    means = rng.uniform(-mean_range, mean_range, (n_components, dim))
    log_vars = np.log(rng.uniform(var_range[0], var_range[1], (n_components, dim)))
    return MixtureEmbedding(w, means, log_vars)


def random_bank(rng, size, n_components, dim) -> ParameterBank:
    bank = ParameterBank(size, n_components, dim)
    bank.means[:] = rng.uniform(-2.0, 2.0, bank.means.shape)
    bank.log_vars[:] = rng.uniform(-1.0, 1.0, bank.log_vars.shape)
    bank.scores[:] = rng.normal(0.0, 1.0, bank.scores.shape)
    return bank


def letters(i: int) -> str:
    """Two lowercase letters for i in [0, 676); text8 allows only [a-z ]."""
    return chr(97 + i // 26) + chr(97 + i % 26)


def two_topic_corpus(path, n_tokens=200_000, block=1000, topic_size=50,
                     n_poly=10, poly_rate=0.1, seed=41):
    """Blocks alternate between two disjoint topic vocabularies; a small
    shared pool of polysemous tokens appears in both. Returns
    (topic_a, topic_b, poly) token lists."""
    rng = np.random.default_rng(seed)
    topics = [[f"qa{letters(i)}" for i in range(topic_size)],
              [f"zb{letters(i)}" for i in range(topic_size)]]
    poly = [f"poly{letters(i)}" for i in range(n_poly)]
    out = []
    for start in range(0, n_tokens, block):
        words = topics[(start // block) % 2]
        for _ in range(min(block, n_tokens - start)):
            if n_poly and rng.random() < poly_rate:
                out.append(poly[rng.integers(n_poly)])
            else:
                out.append(words[rng.integers(topic_size)])
    path.write_text(" ".join(out), encoding="utf-8")
    return topics[0], topics[1], poly


def hypernym_corpus(path, n_parents=10, n_children=5, ctx_per_parent=16,
                    ctx_per_child=4, sweeps=60, parent_blocks=3, fillers=1,
                    seed=42):
    """Each parent owns a context vocabulary split into two halves (its two
    senses); each child's contexts are a contiguous subset inside ONE half,
    so every child context is also a parent context but never the reverse.
    Occurrences are 5-grams "ctx ctx TARGET ctx ctx" drawn from one half at
    a time, separated by filler tokens so narrow windows never pair context
    words across grams. Returns (parents, {parent: [children]})."""
    rng = np.random.default_rng(seed)
    parents = [f"par{letters(i)}" for i in range(n_parents)]
    contexts = {i: [f"ctx{letters(i)}{letters(j)}" for j in range(ctx_per_parent)]
                for i in range(n_parents)}
    filler_pool = [f"fil{letters(j)}" for j in range(25)]
    child_tok = {}
    child_ctx = {}
    half = ctx_per_parent // 2
    for i in range(n_parents):
        for c in range(n_children):
            tok = f"ch{letters(i)}{chr(97 + c)}"
            child_tok[(i, c)] = tok
            start = (c % 2) * half + ((c // 2) * 2) % max(1, half - ctx_per_child + 1)
            child_ctx[(i, c)] = contexts[i][start:start + ctx_per_child]

    def gram(target, pool):
        picks = rng.integers(0, len(pool), 4)
        out = [pool[picks[0]], pool[picks[1]], target, pool[picks[2]], pool[picks[3]]]
        out += [filler_pool[k] for k in rng.integers(0, len(filler_pool), fillers)]
        return out

    grams = []
    for _ in range(sweeps):
        for i in range(n_parents):
            # one half per gram so the halves stay distinct clusters the
            # parent's two senses can cover
            for b in range(parent_blocks):
                h = b % 2
                grams.append(gram(parents[i], contexts[i][h * half:(h + 1) * half]))
            for c in range(n_children):
                grams.append(gram(child_tok[(i, c)], child_ctx[(i, c)]))
    order = rng.permutation(len(grams))
    tokens = [tok for k in order for tok in grams[k]]
    path.write_text(" ".join(tokens), encoding="utf-8")
    children = {parents[i]: [child_tok[(i, c)] for c in range(n_children)]
                for i in range(n_parents)}
    return parents, children


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
