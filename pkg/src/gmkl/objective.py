"""Max-margin triple loss and its exact gradients.

For a triple (w, c, c') of word, positive context and negative context the
loss is

    L = max(0, m - log E(w, c) + log E(w, c'))
      = max(0, m + kl_approx(f_w, f_c) - kl_approx(f_w, f_c'))

Gradients are hand-derived over the fixed expression graph of the KL
bounds (see mixture._kl_approx_grads_raw) and chained through the softmax
that maps unconstrained per-word scores to mixture weights. The normative
correctness check is agreement with central finite differences.

The subgradient at the hinge kink is 0: no parameter moves when the margin
is met exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError
from .mixture import _kl_approx_raw, _kl_gap_grads, log_softmax


class TrainingTriple(NamedTuple):
    word_id: int
    pos_id: int
    neg_id: int


@dataclass(frozen=True)
class LossConfig:
    margin: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.margin) and self.margin > 0):
            raise UsageError(f"margin must be a finite positive real, got {self.margin}")


@dataclass
class WordGrad:
    """Gradient block for one word: scores [C], means [C,D], log_vars [C,D].

    Mutable so batch accumulation can add in place.
    """

    scores: np.ndarray
    means: np.ndarray
    log_vars: np.ndarray


# word id -> WordGrad, entries only for words actually touched
SparseGradient = dict[int, WordGrad]


def _check_triple(bank, context_bank, t: TrainingTriple) -> None:
    for wid in t:
        if not 0 <= wid < bank.size:
            raise UsageError(f"word id {wid} out of range [0, {bank.size})")
    if context_bank.size != bank.size:
        raise UsageError("center and context banks must cover the same vocabulary")
    if t.neg_id == t.pos_id:
        raise UsageError("negative context must differ from the positive context")


def _word_params(bank, wid: int):
    logp = log_softmax(bank.scores[wid])
    return logp, np.exp(logp), bank.means[wid], bank.log_vars[wid]


def triple_loss(bank, t: TrainingTriple, cfg: LossConfig, context_bank=None) -> float:
    """Hinge loss of one triple against a (read-only) parameter bank."""
    ctx = bank if context_bank is None else context_bank
    _check_triple(bank, ctx, t)
    w_logp, _, w_mu, w_lv = _word_params(bank, t.word_id)
    p_logp, _, p_mu, p_lv = _word_params(ctx, t.pos_id)
    n_logp, _, n_mu, n_lv = _word_params(ctx, t.neg_id)
    kl_pos = _kl_approx_raw(w_logp, w_mu, w_lv, p_logp, p_mu, p_lv)
    kl_neg = _kl_approx_raw(w_logp, w_mu, w_lv, n_logp, n_mu, n_lv)
    # the two KL terms cancel exactly when pos and neg parameters coincide
    return max(0.0, cfg.margin + (kl_pos - kl_neg))


def _softmax_chain(p: np.ndarray, d_logp: np.ndarray) -> np.ndarray:
    # p = softmax(s); d_logp is the gradient w.r.t. log-weights
    return d_logp - p * d_logp.sum()


def _accumulate(grads: SparseGradient, wid: int, scores, means, log_vars) -> None:
    g = grads.get(wid)
    if g is None:
        grads[wid] = WordGrad(scores.copy(), means.copy(), log_vars.copy())
    else:
        g.scores += scores
        g.means += means
        g.log_vars += log_vars


def _triple_grad_roles(bank, context_bank, t: TrainingTriple, cfg: LossConfig):
    """(loss, center grads, context grads) with the two roles kept apart.

    The trainer applies the two dicts to the center and context banks; in
    tied mode both land on the same bank.
    """
    _check_triple(bank, context_bank, t)
    w_logp, w_p, w_mu, w_lv = _word_params(bank, t.word_id)
    p_logp, p_p, p_mu, p_lv = _word_params(context_bank, t.pos_id)
    n_logp, n_p, n_mu, n_lv = _word_params(context_bank, t.neg_id)

    # the center word's self terms cancel between the two divergences, so
    # the fused gap gradient skips them entirely
    kl_pos, kl_neg, dlp_w, dmu_w, dlv_w, g_pos, g_neg = _kl_gap_grads(
        w_logp, w_mu, w_lv, p_logp, p_mu, p_lv, n_logp, n_mu, n_lv)

    delta = cfg.margin + (kl_pos - kl_neg)
    if delta <= 0.0:
        return 0.0, {}, {}

    center: SparseGradient = {}
    context: SparseGradient = {}
    _accumulate(center, t.word_id, _softmax_chain(w_p, dlp_w), dmu_w, dlv_w)
    _accumulate(context, t.pos_id, _softmax_chain(p_p, g_pos[0]), g_pos[1], g_pos[2])
    _accumulate(context, t.neg_id, _softmax_chain(n_p, -g_neg[0]), -g_neg[1], -g_neg[2])
    return delta, center, context


def triple_grad(bank, t: TrainingTriple, cfg: LossConfig) -> SparseGradient:
    """Gradient of triple_loss w.r.t. the (tied) bank's parameters.

    Entries exist only for the three words involved; everything is zero
    (the dict is empty) when the hinge is inactive.
    """
    _, center, context = _triple_grad_roles(bank, bank, t, cfg)
    for wid, g in context.items():
        _accumulate(center, wid, g.scores, g.means, g.log_vars)
    return center
