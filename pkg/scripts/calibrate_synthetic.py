#!/usr/bin/env python3
"""Desk-scale calibration runs over the synthetic corpus.

Trains the pipeline on a thread subset at reduced width across tau values and
paraphrase budgets, printing MAP/P@k per configuration. Used to sanity-check
the corpus generator before the full acceptance run.
"""

import argparse
import io
import time

from faqforge import corpus, synthetic
from faqforge.candidates import ClassifierConfig
from faqforge.evaluation import ExperimentConfig, run_experiment
from faqforge.seq2seq import Seq2SeqConfig


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--threads", type=int, default=40)
    ap.add_argument("--folds", type=int, default=2)
    ap.add_argument("--encoder-units", type=int, default=128)
    ap.add_argument("--clf-units", type=int, default=96)
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--taus", type=float, nargs="+", default=[0.05, 0.15, 0.4])
    ap.add_argument("--variants", type=int, nargs="+", default=[])
    ap.add_argument("--gtis2s", action="store_true")
    args = ap.parse_args()

    threads = synthetic.generate_threads(seed=args.seed, threads=args.threads)
    collection = corpus.load_faq(
        io.StringIO(synthetic.threads_to_json(threads)), format="stackfaq"
    )
    table = synthetic.generate_embeddings(seed=args.seed)

    algorithms = ("tis2s", "gtis2s") if args.gtis2s else ("tis2s",)
    base = ExperimentConfig(
        folds=args.folds,
        seed=args.seed,
        algorithms=algorithms,
        s2s=Seq2SeqConfig(
            encoder_units=args.encoder_units, epochs=args.epochs, decoder_embed_dim=32
        ),
        classifier=ClassifierConfig(units=args.clf_units, dense_units=64, epochs=args.epochs),
    )

    for tau in args.taus:
        cfg = ExperimentConfig(**{**base.__dict__, "tau": tau})
        t0 = time.time()
        result = run_experiment(collection, table, cfg)
        agg = result.aggregate()
        for algo, vals in agg.items():
            print(
                f"tau={tau:<5} {algo:7} MAP={vals['map']:.4f} "
                f"P@5={vals['p_at_k'][5]:.4f} P@2={vals['p_at_k'][2]:.4f} "
                f"({time.time()-t0:.0f}s)",
                flush=True,
            )

    for v in args.variants:
        cfg = ExperimentConfig(**{**base.__dict__, "max_train_paraphrases": v})
        t0 = time.time()
        result = run_experiment(collection, table, cfg)
        agg = result.aggregate()
        for algo, vals in agg.items():
            print(
                f"v={v:<3} tau=0.15 {algo:7} MAP={vals['map']:.4f} "
                f"P@2={vals['p_at_k'][2]:.4f} ({time.time()-t0:.0f}s)",
                flush=True,
            )


if __name__ == "__main__":
    main()
