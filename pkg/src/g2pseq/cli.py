"""Command-line interface: train a model from a lexicon file, convert words,
and evaluate on a reproducible dataset split.

Exit codes: 0 success, 2 usage or input error, 3 corrupt model file.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .decoding import beam_decode, greedy_decode
from .lexicon import load_lexicon, split_dataset
from .metrics import evaluate
from .modelio import ModelFormatError, load_model, save_model
from .reports import (
    format_eval_report,
    render_attention_figure,
    render_eval_figure,
    render_history_figure,
    write_attention_csv,
    write_eval_csv,
    write_history_csv,
)
from .training import TrainConfig, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="g2pseq",
        description="Grapheme-to-phoneme conversion with an attentional "
                    "encoder-decoder trained from scratch.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a lexicon file")
    p_train.add_argument("--lexicon", required=True, help="pronunciation dictionary")
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.add_argument("--seed", type=int, default=0,
                         help="seed for the split, init, and batch order")
    p_train.add_argument("--epochs", type=int, default=50)
    p_train.add_argument("--lr", type=float, default=0.001)
    p_train.add_argument("--batch", type=int, default=64)
    p_train.add_argument("--hidden", type=int, default=128)
    p_train.add_argument("--embed", type=int, default=64)
    p_train.set_defaults(func=cmd_train)

    p_g2p = sub.add_parser("g2p", help="convert a word to phonemes")
    p_g2p.add_argument("--model", required=True)
    p_g2p.add_argument("--word", required=True)
    p_g2p.add_argument("--beam", type=int, default=None,
                       help="beam width (default: greedy)")
    p_g2p.add_argument("--dump-attention", metavar="PATH", default=None,
                       help="write the attention matrix as CSV (plus a PNG)")
    p_g2p.set_defaults(func=cmd_g2p)

    p_eval = sub.add_parser("eval", help="score a model on a lexicon split")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--lexicon", required=True)
    p_eval.add_argument("--split", choices=("train", "validation", "test"),
                        default="test")
    p_eval.add_argument("--seed", type=int, required=True,
                        help="split seed; must match the training run")
    p_eval.add_argument("--beam", type=int, default=None)
    p_eval.add_argument("--report", metavar="PATH", default=None,
                        help="write the report as CSV (plus a PNG)")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def _figure_path(csv_path: str) -> Path:
    return Path(csv_path).with_suffix(".png")


def cmd_train(args) -> int:
    lexicon = load_lexicon(args.lexicon)
    split = split_dataset(lexicon, args.seed)
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs,
                         batch_size=args.batch, seed=args.seed)
    model, history = train(split, config, embed_dim=args.embed,
                           hidden_dim=args.hidden)
    save_model(model, args.out, extra={
        "batch_size": str(config.batch_size),
        "epochs": str(config.epochs),
        "learning_rate": repr(config.learning_rate),
        "seed": str(config.seed),
        "train_entries": str(len(split.train)),
    })
    history_csv = f"{args.out}.history.csv"
    write_history_csv(history_csv, history)
    if history:
        render_history_figure(_figure_path(history_csv), history)
    print(f"trained on {len(split.train)} entries for {len(history)} epochs")
    print(f"wrote {args.out} and {history_csv}")
    return 0


def cmd_g2p(args) -> int:
    model = load_model(args.model)
    word = args.word.strip()
    if not word:
        raise ValueError("word is empty")
    if args.beam is None:
        result = greedy_decode(word, model)
    else:
        result = beam_decode(word, model, width=args.beam)[0]
    print(" ".join(result.phonemes))
    if args.dump_attention:
        write_attention_csv(args.dump_attention, word.upper(), result)
        render_attention_figure(_figure_path(args.dump_attention),
                                word.upper(), result)
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    lexicon = load_lexicon(args.lexicon)
    split = split_dataset(lexicon, args.seed)
    entries = getattr(split, args.split)
    unknown = sum(
        1 for e in entries if any(ch not in model.graphemes for ch in e.word)
    )
    if unknown:
        print(f"note: {unknown} words contain graphemes unknown to the model "
              f"(mapped to <unk>)", file=sys.stderr)
    train_words = {e.word for e in split.train}
    report = evaluate(model, entries, train_words, beam_width=args.beam)
    print(format_eval_report(report))
    if args.report:
        write_eval_csv(args.report, report)
        render_eval_figure(_figure_path(args.report), report)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
