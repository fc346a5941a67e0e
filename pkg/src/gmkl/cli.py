"""Command-line front end: train, eval-sim, eval-entail, neighbors, kl, export.

Output is stable key=value lines for scripting; --pretty switches the read
subcommands to aligned human tables. Exit codes: 0 success, 1 usage or
evaluation problem, 2 I/O or format problem, 3 numerical failure.

Config precedence for train: flags > --config JSON file > built-in defaults.
GMKL_THREADS is the fallback for --threads.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import evaluate
from .corpus import Vocabulary
from .errors import EvaluationError, FormatError, InputError, TrainingError, UsageError
from .mixture import kl_bounds
from .model_io import load_model
from .params import TrainConfig
from .trainer import train

_DEFAULTS = TrainConfig()


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("hyperparameters (defaults follow the reference recipe)")
    g.add_argument("--dim", type=int, help=f"embedding dimension D (default {_DEFAULTS.dim})")
    g.add_argument("--components", type=int,
                   help=f"mixture components C per word (default {_DEFAULTS.components})")
    g.add_argument("--window", type=int,
                   help=f"context window length (default {_DEFAULTS.window})")
    g.add_argument("--batch-size", type=int,
                   help=f"triples per Adagrad step (default {_DEFAULTS.batch_size})")
    g.add_argument("--lr", type=float,
                   help=f"initial Adagrad learning rate (default {_DEFAULTS.lr})")
    g.add_argument("--margin", type=float,
                   help=f"hinge margin (default {_DEFAULTS.margin})")
    g.add_argument("--subsample-t", type=float, dest="subsample_t",
                   help=f"frequency subsampling threshold (default {_DEFAULTS.subsample_t})")
    g.add_argument("--min-count", type=int, dest="min_count",
                   help=f"drop tokens seen fewer times (default {_DEFAULTS.min_count})")
    g.add_argument("--epochs", type=int, help=f"corpus passes (default {_DEFAULTS.epochs})")
    g.add_argument("--seed", type=int,
                   help=f"seed; single-threaded runs are bit-reproducible (default {_DEFAULTS.seed})")
    g.add_argument("--var-min", type=float, dest="var_min",
                   help=f"variance clamp floor (default {_DEFAULTS.var_min})")
    g.add_argument("--var-max", type=float, dest="var_max",
                   help=f"variance clamp ceiling (default {_DEFAULTS.var_max})")
    g.add_argument("--neg-exponent", type=float, dest="neg_exponent",
                   help=f"negative-sampling unigram power (default {_DEFAULTS.neg_exponent})")
    g.add_argument("--fixed-window", action="store_true",
                   help="use the full window always instead of a uniform 1..window draw")
    g.add_argument("--subsample-formula", dest="subsample_formula",
                   choices=["sqrt", "sqrt_plus_ratio"],
                   help=f"keep-probability form (default {_DEFAULTS.subsample_formula})")
    g.add_argument("--batch-reduce", dest="batch_reduce", choices=["sum", "mean"],
                   help=f"combine gradients within a batch (default {_DEFAULTS.batch_reduce})")
    g.add_argument("--untied", action="store_true",
                   help="separate context-role parameter bank (evaluation reads the center bank)")


def _config_from_args(args) -> TrainConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        except ValueError as exc:
            raise InputError(f"bad JSON in config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError(f"config {args.config} must hold a JSON object")
        values.update(loaded)
    for name in ("dim", "components", "window", "batch_size", "lr", "margin",
                 "subsample_t", "min_count", "epochs", "seed", "var_min", "var_max",
                 "neg_exponent", "subsample_formula", "batch_reduce"):
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    if args.fixed_window:
        values["dynamic_window"] = False
    if args.untied:
        values["tied"] = False
    cfg = TrainConfig.from_dict(values)
    cfg.validate()
    return cfg


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("GMKL_THREADS", "1"))
    if threads > 1:
        print(f"threads={threads} determinism=waived")

    def progress(epoch, batch, loss):
        print(f"epoch {epoch} batch {batch} loss {loss:.6f}", flush=True)

    result = train(args.corpus, cfg, out_path=args.out, threads=threads,
                   progress=progress, log_every=args.log_every)
    if args.save_vocab:
        result.vocab.save(args.save_vocab)
    print(f"saved={args.out} vocab={len(result.vocab)} batches={len(result.batch_losses)}")
    return 0


def _load(args) -> tuple:
    return load_model(args.model)


def cmd_eval_sim(args) -> int:
    bank, vocab, _ = _load(args)
    reader = evaluate.read_scws if args.format == "scws" else evaluate.read_similarity_tsv
    records = reader(args.dataset)
    rho100, used, oov = evaluate.eval_similarity(
        bank, vocab, records, args.metric, avgcos_pair_mean=not args.avgcos_c_norm)
    name = os.path.basename(args.dataset)
    if args.pretty:
        print(f"{name}: Spearman rho*100 = {rho100:.2f} ({args.metric}, "
              f"{used} pairs used, {oov} skipped as OOV)")
    else:
        print(f"dataset={name} metric={args.metric} rho100={rho100:.4f} used={used} oov={oov}")
    return 0


def cmd_eval_entail(args) -> int:
    bank, vocab, _ = _load(args)
    records = evaluate.read_entailment_tsv(args.dataset)
    best_p, best_f1, (thr_p, thr_f1) = evaluate.eval_entailment(
        bank, vocab, records, args.threshold_steps)
    name = os.path.basename(args.dataset)
    if args.pretty:
        print(f"{name}: best precision {best_p:.4f} (threshold {thr_p:.6f}), "
              f"best F1 {best_f1:.4f} (threshold {thr_f1:.6f})")
    else:
        print(f"dataset={name} best_precision={best_p:.4f} best_f1={best_f1:.4f}")
    return 0


def cmd_neighbors(args) -> int:
    bank, vocab, _ = _load(args)
    rows = evaluate.neighbors(bank, vocab, args.word, args.component, args.k)
    if args.pretty:
        print(f"nearest senses to {args.word}:{args.component}")
        for rank, (tok, comp, cos) in enumerate(rows, 1):
            print(f"  {rank:>3}  {tok}:{comp:<3} {cos:+.4f}")
    else:
        for rank, (tok, comp, cos) in enumerate(rows, 1):
            print(f"{rank} {tok}:{comp} {cos:.6f}")
    return 0


def cmd_kl(args) -> int:
    bank, vocab, _ = _load(args)
    for tok in (args.w1, args.w2):
        if tok not in vocab:
            raise EvaluationError(f"out-of-vocabulary word {tok!r}")
    f = bank.mixture(vocab.index[args.w1])
    g = bank.mixture(vocab.index[args.w2])
    for name1, name2, a, b in ((args.w1, args.w2, f, g), (args.w2, args.w1, g, f)):
        lower, upper = kl_bounds(a, b)
        approx = 0.5 * (lower + upper)
        if args.pretty:
            print(f"KL({name1} || {name2}): lower {lower:.6f}  upper {upper:.6f}  mean {approx:.6f}")
        else:
            print(f"pair={name1}||{name2} kl_lower={lower:.6f} kl_upper={upper:.6f} "
                  f"kl_approx={approx:.6f}")
    return 0


def cmd_export(args) -> int:
    bank, vocab, _ = _load(args)
    rows = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for wid, tok in enumerate(vocab.tokens):
            for comp in range(bank.components):
                vec = " ".join(f"{x:.8g}" for x in bank.means[wid, comp])
                fh.write(f"{tok} {comp} {vec}\n")
                rows += 1
    print(f"exported={args.out} rows={rows}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="gmkl",
                     description="Multi-sense Gaussian-mixture word embeddings "
                                 "with an approximate-KL energy.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="train a model on a text8 corpus")
    p.add_argument("--corpus", required=True, help="text8 corpus path")
    p.add_argument("--out", required=True, help="output model path")
    p.add_argument("--config", help="JSON file with TrainConfig fields (flags override it)")
    p.add_argument("--threads", type=int,
                   help="worker threads; >1 waives determinism (default $GMKL_THREADS or 1)")
    p.add_argument("--log-every", type=int, default=100, dest="log_every",
                   help="batches between loss lines (default 100)")
    p.add_argument("--save-vocab", dest="save_vocab",
                   help="also write the vocabulary as token<TAB>count lines")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-sim", help="Spearman correlation on a word-similarity dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--metric", default="maxcos", choices=list(evaluate.SIMILARITY_METRICS),
                   help="pair scoring metric (default maxcos)")
    p.add_argument("--format", default="tsv", choices=["tsv", "scws"],
                   help="dataset layout (default tsv)")
    p.add_argument("--avgcos-c-norm", action="store_true", dest="avgcos_c_norm",
                   help="divide the avgcos double sum by C instead of C*C")
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.set_defaults(func=cmd_eval_sim)

    p = sub.add_parser("eval-entail", help="entailment threshold sweep (best precision / best F1)")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--threshold-steps", type=int, default=10000, dest="threshold_steps",
                   help="cap on swept thresholds (default 10000)")
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.set_defaults(func=cmd_eval_entail)

    p = sub.add_parser("neighbors", help="nearest senses to one component of a word")
    p.add_argument("--model", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--component", type=int, default=0, help="sense index (default 0)")
    p.add_argument("--k", type=int, default=10, help="results to print (default 10)")
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("kl", help="approximate KL bounds between two words, both directions")
    p.add_argument("--model", required=True)
    p.add_argument("--w1", required=True)
    p.add_argument("--w2", required=True)
    p.add_argument("--pretty", action="store_true", help="human-readable output")
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("export", help="write component means as text: token comp v1..vD")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
