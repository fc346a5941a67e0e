"""Trainable parameters, their initialization, and the Adagrad update.

The bank stores, per word, C mean vectors, C log-variance vectors and C
unconstrained mixture scores (softmaxed into weights on use), plus one
Adagrad accumulator per parameter. Storage is float64 so finite-difference
checks and long optimizations stay accurate; the model file format rounds
to float32 on save.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import TrainingError, UsageError
from .mixture import MixtureEmbedding, log_softmax
from .objective import LossConfig, SparseGradient


@dataclass
class TrainConfig:
    """Hyperparameters; defaults follow the reference training recipe."""

    dim: int = 50
    components: int = 2
    window: int = 10
    batch_size: int = 128
    lr: float = 0.05
    margin: float = 1.0
    subsample_t: float = 1e-5
    min_count: int = 5
    epochs: int = 5
    seed: int = 1
    var_min: float = 1e-4
    var_max: float = 1e2
    neg_exponent: float = 0.75
    neg_samples: int = 1
    dynamic_window: bool = True
    subsample_formula: str = "sqrt"   # or "sqrt_plus_ratio"
    batch_reduce: str = "sum"         # or "mean"
    tied: bool = True
    adagrad_eps: float = 1e-8

    def validate(self) -> None:
        positive = ["dim", "components", "window", "batch_size", "lr", "margin",
                    "subsample_t", "min_count", "neg_samples", "var_min", "var_max",
                    "adagrad_eps"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")
        if self.epochs < 0:
            raise UsageError("epochs must be >= 0")
        if self.var_min >= self.var_max:
            raise UsageError("var_min must be below var_max")
        if self.neg_exponent < 0:
            raise UsageError("neg_exponent must be >= 0")
        if self.subsample_formula not in ("sqrt", "sqrt_plus_ratio"):
            raise UsageError(f"unknown subsample formula {self.subsample_formula!r}")
        if self.batch_reduce not in ("sum", "mean"):
            raise UsageError(f"batch_reduce must be 'sum' or 'mean', got {self.batch_reduce!r}")

    def loss_config(self) -> LossConfig:
        return LossConfig(margin=self.margin)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ParameterBank:
    """All trainable tensors for one vocabulary, plus Adagrad accumulators."""

    size: int
    components: int
    dim: int
    var_min: float = 1e-4
    var_max: float = 1e2
    means: np.ndarray = field(init=False)       # [V, C, D]
    log_vars: np.ndarray = field(init=False)    # [V, C, D]
    scores: np.ndarray = field(init=False)      # [V, C]
    accum_means: np.ndarray = field(init=False)
    accum_log_vars: np.ndarray = field(init=False)
    accum_scores: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.size < 1 or self.components < 1 or self.dim < 1:
            raise UsageError("bank shape must be positive in every axis")
        v, c, d = self.size, self.components, self.dim
        self.means = np.zeros((v, c, d))
        self.log_vars = np.zeros((v, c, d))
        self.scores = np.zeros((v, c))
        self.accum_means = np.zeros((v, c, d))
        self.accum_log_vars = np.zeros((v, c, d))
        self.accum_scores = np.zeros((v, c))
        self.log_var_min = math.log(self.var_min)
        self.log_var_max = math.log(self.var_max)

    def weights(self, wid: int) -> np.ndarray:
        return np.exp(log_softmax(self.scores[wid]))

    def mixture(self, wid: int) -> MixtureEmbedding:
        return MixtureEmbedding(self.weights(wid), self.means[wid], self.log_vars[wid])


def init_bank(vocab, cfg: TrainConfig, seed) -> ParameterBank:
    """Fresh bank: means ~ U(-sqrt(3/D), sqrt(3/D)), scores and log-vars 0.

    The uniform bound makes each mean entry have variance 1/D, so a full
    vector has unit expected squared norm. Scores start at 0 (uniform
    mixture weights) and log-variances at 0 (unit variances). Initial means
    are rounded through float32 so a freshly initialized bank survives the
    float32 model format bit-for-bit.
    """
    cfg.validate()
    bank = ParameterBank(len(vocab), cfg.components, cfg.dim, cfg.var_min, cfg.var_max)
    bound = math.sqrt(3.0 / cfg.dim)
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-bound, bound, size=bank.means.shape)
    bank.means[:] = raw.astype(np.float32)
    return bank


_PARAM_KINDS = ("scores", "means", "log_vars")


def adagrad_step(bank: ParameterBank, grads: SparseGradient, lr: float,
                 eps: float = 1e-8) -> None:
    """One sparse Adagrad update: accum += g^2, then theta -= lr*g/(sqrt(accum)+eps).

    Log-variances of touched words are clamped back into
    [log var_min, log var_max] afterwards.
    """
    for wid, g in grads.items():
        for kind, garr, arr, acc in (
            ("scores", g.scores, bank.scores, bank.accum_scores),
            ("means", g.means, bank.means, bank.accum_means),
            ("log_vars", g.log_vars, bank.log_vars, bank.accum_log_vars),
        ):
            if not np.isfinite(garr).all():
                raise TrainingError(f"non-finite gradient for word {wid} ({kind})")
            a = acc[wid]
            a += garr * garr
            arr[wid] -= lr * garr / (np.sqrt(a) + eps)
        np.clip(bank.log_vars[wid], bank.log_var_min, bank.log_var_max,
                out=bank.log_vars[wid])
