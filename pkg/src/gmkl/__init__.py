"""Multi-sense word embeddings as Gaussian mixtures with an approximate-KL
energy: training, serialization, and similarity/entailment evaluation."""

from .corpus import (SamplerTables, TrainingPair, Vocabulary, build_tables,
                     build_vocab, draw_negative, gen_pairs, read_text8)
from .errors import (EvaluationError, FormatError, GmklError, InputError,
                     TrainingError, UsageError)
from .evaluate import (EntailmentRecord, SimilarityRecord, avg_cos,
                       eval_entailment, eval_similarity, kl_comp, max_cos,
                       neighbors, read_entailment_tsv, read_scws,
                       read_similarity_tsv, spearman)
from .gauss import DiagGaussian, entropy, kl_diag, log_el_kernel
from .mixture import (MixtureEmbedding, kl_approx, kl_bounds, kl_lower,
                      kl_upper, log_energy, mc_kl_oracle)
from .model_io import load_model, save_model
from .objective import (LossConfig, SparseGradient, TrainingTriple, WordGrad,
                        triple_grad, triple_loss)
from .params import ParameterBank, TrainConfig, adagrad_step, init_bank
from .trainer import TrainResult, train

__version__ = "0.1.0"

__all__ = [
    "DiagGaussian", "MixtureEmbedding", "ParameterBank", "TrainConfig",
    "TrainResult", "Vocabulary", "SamplerTables", "TrainingPair",
    "TrainingTriple", "LossConfig", "SparseGradient", "WordGrad",
    "SimilarityRecord", "EntailmentRecord",
    "log_el_kernel", "kl_diag", "entropy",
    "kl_upper", "kl_lower", "kl_approx", "kl_bounds", "log_energy",
    "mc_kl_oracle",
    "triple_loss", "triple_grad",
    "read_text8", "build_vocab", "build_tables", "gen_pairs", "draw_negative",
    "init_bank", "adagrad_step", "train", "save_model", "load_model",
    "max_cos", "avg_cos", "kl_comp", "spearman", "eval_similarity",
    "eval_entailment", "neighbors", "read_similarity_tsv", "read_scws",
    "read_entailment_tsv",
    "GmklError", "UsageError", "InputError", "FormatError", "TrainingError",
    "EvaluationError",
]
