"""Overfitting curve for the span extraction network.

Trains the network on a small synthetic question set and prints loss and
exact-span accuracy every few epochs, for the line and/or word variants.

Usage:
    python scripts/overfit_curve.py --mode line --hidden 50 --epochs 60
"""

import argparse
import time

from phocqa import bidaf
from phocqa.synth import GeneratorSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mode", choices=["line", "word", "both"], default="line")
    ap.add_argument("--hidden", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--chunk", type=int, default=5, help="epochs between accuracy reports")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--num-questions", type=int, default=32)
    args = ap.parse_args()

    spec = GeneratorSpec(
        num_documents=12,
        num_questions=args.num_questions,
        vocab_size=max(200, 4 * args.num_questions),
        lines_per_document=(3, 4),
        words_per_line=(3, 4),
        seed=7,
    )
    collection, questions = generate(spec)
    examples = [(collection[q.gold_doc_id], q) for q in questions]

    modes = ["line", "word"] if args.mode == "both" else [args.mode]
    for mode in modes:
        print(f"== mode={mode} hidden={args.hidden} seed={args.seed} ==")
        model = bidaf.BidafModel(
            bidaf.BidafConfig(hidden=args.hidden, mode=mode), seed=args.seed
        )
        start = time.time()
        done = 0
        while done < args.epochs:
            n = min(args.chunk, args.epochs - done)
            trace = bidaf.train(model, examples, epochs=n, seed=args.seed * 1000 + done)
            done += n
            acc = bidaf.span_accuracy(model, examples)
            print(
                f"epoch {done:>4}  loss {trace[-1]:.4f}  acc {acc:.3f}  "
                f"({time.time() - start:.0f}s)"
            )
            if acc == 1.0:
                break


if __name__ == "__main__":
    main()
