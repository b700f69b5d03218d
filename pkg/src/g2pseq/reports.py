"""Delimited reports and their companion figures.

Every CSV the CLI writes gets a rendered PNG next to it: training curves for
the history file, a weight heatmap for attention dumps, and metric bars for
evaluation reports. Matplotlib is imported lazily with the Agg backend so
library users never pay for it.
"""
from __future__ import annotations

import csv
import math

from .decoding import DecodeResult
from .metrics import EvalReport, ScoreCounts
from .training import TrainHistory


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def write_history_csv(path, history: TrainHistory) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "train_loss", "val_loss", "val_word_acc", "lr"])
        for rec in history:
            writer.writerow([rec.epoch, repr(rec.train_loss), repr(rec.val_loss),
                             repr(rec.val_word_acc), repr(rec.learning_rate)])


def render_history_figure(path, history: TrainHistory) -> None:
    plt = _pyplot()
    epochs = [r.epoch for r in history]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(epochs, [r.train_loss for r in history], label="train loss")
    if any(not math.isnan(r.val_loss) for r in history):
        ax.plot(epochs, [r.val_loss for r in history], label="validation loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("cross-entropy")
    ax.grid(True, alpha=0.3)
    if any(not math.isnan(r.val_word_acc) for r in history):
        acc_ax = ax.twinx()
        acc_ax.plot(epochs, [r.val_word_acc for r in history],
                    color="tab:green", linestyle="--", label="validation word acc")
        acc_ax.set_ylabel("word accuracy")
        acc_ax.set_ylim(0.0, 1.0)
        handles, labels = ax.get_legend_handles_labels()
        h2, l2 = acc_ax.get_legend_handles_labels()
        ax.legend(handles + h2, labels + l2, loc="center right")
    else:
        ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def attention_labels(word: str, result: DecodeResult) -> tuple[list[str], list[str]]:
    """Column labels (graphemes plus the end marker) and row labels (emitted
    phonemes plus the end marker when the decode terminated)."""
    columns = list(word) + ["</s>"]
    rows = list(result.phonemes)
    if result.terminated:
        rows.append("</s>")
    return columns, rows


def write_attention_csv(path, word: str, result: DecodeResult) -> None:
    """Rows are decoder steps, columns are the input graphemes; 6 decimals."""
    columns, _ = attention_labels(word, result)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["step"] + columns)
        for step, row in enumerate(result.attention, start=1):
            writer.writerow([step] + [f"{w:.6f}" for w in row])


def render_attention_figure(path, word: str, result: DecodeResult) -> None:
    plt = _pyplot()
    columns, rows = attention_labels(word, result)
    fig, ax = plt.subplots(figsize=(1.0 + 0.5 * len(columns), 1.0 + 0.5 * len(rows)))
    image = ax.imshow(result.attention, cmap="viridis", vmin=0.0, vmax=1.0,
                      aspect="auto")
    ax.set_xticks(range(len(columns)), columns)
    ax.set_yticks(range(len(rows)), rows)
    ax.set_xlabel("input graphemes")
    ax.set_ylabel("output phonemes")
    fig.colorbar(image, ax=ax, label="attention weight")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_EVAL_COLUMNS = ["subset", "words", "word_matches", "word_accuracy", "per",
                 "ref_phonemes", "distance", "substitutions", "insertions",
                 "deletions"]


def _eval_row(name: str, c: ScoreCounts) -> list:
    return [name, c.words, c.word_matches, f"{c.word_accuracy:.6f}",
            f"{c.per:.6f}", c.ref_phonemes, c.distance, c.substitutions,
            c.insertions, c.deletions]


def write_eval_csv(path, report: EvalReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(_EVAL_COLUMNS)
        writer.writerow(_eval_row("overall", report.overall))
        if report.oov is not None:
            writer.writerow(_eval_row("oov", report.oov))


def render_eval_figure(path, report: EvalReport) -> None:
    plt = _pyplot()
    subsets = [("overall", report.overall)]
    if report.oov is not None:
        subsets.append(("OOV", report.oov))
    names = [name for name, _ in subsets]
    accuracy = [c.word_accuracy for _, c in subsets]
    per = [c.per for _, c in subsets]

    fig, ax = plt.subplots(figsize=(6, 4))
    positions = range(len(subsets))
    ax.bar([p - 0.18 for p in positions], accuracy, width=0.36,
           label="word accuracy")
    ax.bar([p + 0.18 for p in positions], per, width=0.36,
           label="phoneme error rate")
    ax.set_xticks(list(positions), names)
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend()
    for p, (acc, rate) in zip(positions, zip(accuracy, per)):
        ax.annotate(f"{acc:.3f}", (p - 0.18, acc), ha="center", va="bottom")
        ax.annotate(f"{rate:.3f}", (p + 0.18, rate), ha="center", va="bottom")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def format_eval_report(report: EvalReport) -> str:
    def block(name: str, c: ScoreCounts) -> list[str]:
        return [
            f"{name}: {c.words} words",
            f"  word accuracy      {c.word_accuracy:.4f} ({c.word_matches}/{c.words})",
            f"  phoneme error rate {c.per:.4f} "
            f"({c.distance} edits / {c.ref_phonemes} phonemes; "
            f"S={c.substitutions} I={c.insertions} D={c.deletions})",
        ]

    lines = block("overall", report.overall)
    if report.oov is not None:
        lines += block("oov", report.oov)
    else:
        lines.append("oov: no out-of-vocabulary entries")
    return "\n".join(lines)
