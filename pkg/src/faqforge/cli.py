"""Command-line entry points for the full pipeline.

Stages are cached on disk under an artifacts directory (override with the
FAQFORGE_ARTIFACTS environment variable): ingest -> train -> translate ->
query/serve, plus self-contained evaluation commands (evaluate, sweep-tau,
robustness) that run the cross-validation protocol from the ingested corpus.
Re-running a stage with unchanged inputs reproduces byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import artifacts as art
from .candidates import ClassifierConfig, train_classifier
from .corpus import (
    DatasetSplit,
    build_relevance_matrix,
    load_faq,
    serialize,
)
from .errors import ArtifactMismatch, FaqForgeError, MissingArtifact
from .evaluation import (
    GTIS2S,
    TIS2S,
    ExperimentConfig,
    render_table,
    run_experiment,
)
from .embeddings import load_word2vec_binary, write_word2vec_binary
from .faq_index import index_to_jsonl, translate_faq
from .keywords import (
    compute_tfidf,
    export_keywords_jsonl,
    extract_keywords,
    group_questions,
)
from .preprocess import default_resources, preprocess
from .seq2seq import Seq2SeqConfig, Seq2SeqModel, build_training_set, train
from .service import (
    CLASSIFIER_FILE,
    EMBEDDINGS_FILE,
    INDEX_FILE,
    MODEL_FILE,
    QueryService,
    create_server,
)

CORPUS_FILE = "corpus.jsonl"
KEYWORDS_FILE = "keywords.jsonl"
REPORT_FILE = "report.json"
REPORT_TXT_FILE = "report.txt"


@dataclass(frozen=True)
class PipelineConfig:
    """Shared knobs across commands; defaults follow the reported setup."""

    corpus: Path | None
    embeddings: Path | None
    artifacts_dir: Path
    tau: float = 0.15
    candidate_k: int = 20
    prob_threshold: float = 0.5
    seed: int = 0
    folds: int = 5
    train_frac: float = 0.8
    encoder_units: int = 2048
    classifier_units: int = 1024
    dense_units: int = 512
    epochs: int = 30
    batch_size: int = 32
    dropout: float = 0.4
    classifier_dropout: float = 0.5
    learning_rate: float = 1e-3

    def s2s_config(self) -> Seq2SeqConfig:
        return Seq2SeqConfig(
            encoder_units=self.encoder_units,
            dropout=self.dropout,
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            seed=self.seed,
        )

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(
            units=self.classifier_units,
            dense_units=self.dense_units,
            dropout=self.classifier_dropout,
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            seed=self.seed,
        )

    def snapshot(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("corpus", "embeddings", "artifacts_dir"):
            d[key] = str(d[key]) if d[key] is not None else None
        return d


def _require_artifact(cfg: PipelineConfig, name: str) -> Path:
    path = cfg.artifacts_dir / name
    if not path.exists():
        raise MissingArtifact(
            f"artifact {name} not found in {cfg.artifacts_dir}; run the prior stage first"
        )
    return path


def _load_corpus_artifact(cfg: PipelineConfig):
    path = _require_artifact(cfg, CORPUS_FILE)
    manifest = art.read_manifest(cfg.artifacts_dir / "ingest.manifest.json")
    if manifest["inputs"][CORPUS_FILE] != art.file_digest(path):
        raise ArtifactMismatch(f"{CORPUS_FILE} does not match its ingest manifest")
    with open(path, encoding="utf-8") as fh:
        return load_faq(fh, format="jsonl")


def cmd_ingest(cfg: PipelineConfig, corpus_format: str) -> int:
    if cfg.corpus is None or not cfg.corpus.exists():
        raise MissingArtifact(f"corpus path does not exist: {cfg.corpus}")
    with open(cfg.corpus, encoding="utf-8") as fh:
        collection = load_faq(fh, format=corpus_format)
    cfg.artifacts_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.artifacts_dir / CORPUS_FILE
    out.write_text(serialize(collection), encoding="utf-8")
    art.write_manifest(
        cfg.artifacts_dir / "ingest.manifest.json",
        command="ingest",
        config={**cfg.snapshot(), "format": corpus_format},
        inputs={"source": art.file_digest(cfg.corpus), CORPUS_FILE: art.file_digest(out)},
        seed=cfg.seed,
    )
    print(f"ingested {collection.n} entries across {collection.thread_count} threads")
    return 0


def cmd_train(cfg: PipelineConfig, with_classifier: bool = True) -> int:
    collection = _load_corpus_artifact(cfg)
    if cfg.embeddings is None or not cfg.embeddings.exists():
        raise MissingArtifact(f"embeddings path does not exist: {cfg.embeddings}")

    resources = default_resources()
    vocab = set()
    for e in collection.entries:
        vocab.update(preprocess(e.question_text, resources).tokens)
    with open(cfg.embeddings, "rb") as fh:
        table = load_word2vec_binary(fh, vocab_filter=vocab)

    matrix = build_relevance_matrix(collection)
    groups = group_questions(matrix, collection, resources)
    keyword_sets = extract_keywords(compute_tfidf(groups), cfg.tau)
    split = DatasetSplit(0, frozenset(e.entry_id for e in collection.entries), frozenset())
    examples = build_training_set(collection, groups, keyword_sets, split, resources)
    model = train(cfg.s2s_config(), examples, table)

    (cfg.artifacts_dir / KEYWORDS_FILE).write_text(
        export_keywords_jsonl(keyword_sets), encoding="utf-8"
    )
    model.save(cfg.artifacts_dir / MODEL_FILE)
    with open(cfg.artifacts_dir / EMBEDDINGS_FILE, "wb") as fh:
        write_word2vec_binary(table, fh)

    outputs = {
        KEYWORDS_FILE: art.file_digest(cfg.artifacts_dir / KEYWORDS_FILE),
        MODEL_FILE: art.file_digest(cfg.artifacts_dir / MODEL_FILE),
        EMBEDDINGS_FILE: art.file_digest(cfg.artifacts_dir / EMBEDDINGS_FILE),
    }
    if with_classifier:
        classifier = train_classifier(
            collection,
            matrix,
            split,
            table,
            seed=cfg.seed,
            config=cfg.classifier_config(),
            resources=resources,
        )
        classifier.save(cfg.artifacts_dir / CLASSIFIER_FILE)
        outputs[CLASSIFIER_FILE] = art.file_digest(cfg.artifacts_dir / CLASSIFIER_FILE)

    art.write_manifest(
        cfg.artifacts_dir / "train.manifest.json",
        command="train",
        config=cfg.snapshot(),
        inputs={
            CORPUS_FILE: art.file_digest(cfg.artifacts_dir / CORPUS_FILE),
            "embeddings_source": art.file_digest(cfg.embeddings),
            **outputs,
        },
        seed=cfg.seed,
    )
    final_loss = model.loss_history[-1] if model.loss_history else float("nan")
    print(f"trained translation model ({len(examples)} examples, final loss {final_loss:.4f})")
    return 0


def cmd_translate(cfg: PipelineConfig) -> int:
    collection = _load_corpus_artifact(cfg)
    model_path = _require_artifact(cfg, MODEL_FILE)
    emb_path = _require_artifact(cfg, EMBEDDINGS_FILE)

    train_manifest = art.read_manifest(cfg.artifacts_dir / "train.manifest.json")
    if train_manifest["inputs"][CORPUS_FILE] != art.file_digest(cfg.artifacts_dir / CORPUS_FILE):
        raise ArtifactMismatch("corpus has changed since train; re-run train")

    model = Seq2SeqModel.load(model_path)
    with open(emb_path, "rb") as fh:
        table = load_word2vec_binary(fh)
    index = translate_faq(model, collection, table)
    out = cfg.artifacts_dir / INDEX_FILE
    out.write_text(index_to_jsonl(index), encoding="utf-8")
    art.write_manifest(
        cfg.artifacts_dir / "translate.manifest.json",
        command="translate",
        config=cfg.snapshot(),
        inputs={
            CORPUS_FILE: art.file_digest(cfg.artifacts_dir / CORPUS_FILE),
            MODEL_FILE: art.file_digest(model_path),
            INDEX_FILE: art.file_digest(out),
        },
        seed=cfg.seed,
    )
    print(f"translated {index.n} entries (model {index.model_fingerprint[:12]})")
    return 0


def _experiment_config(cfg: PipelineConfig, algorithms, **overrides) -> ExperimentConfig:
    base = dict(
        tau=cfg.tau,
        folds=cfg.folds,
        train_frac=cfg.train_frac,
        seed=cfg.seed,
        candidate_k=cfg.candidate_k,
        prob_threshold=cfg.prob_threshold,
        algorithms=algorithms,
        s2s=cfg.s2s_config(),
        classifier=cfg.classifier_config(),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def _load_eval_inputs(cfg: PipelineConfig):
    collection = _load_corpus_artifact(cfg)
    if cfg.embeddings is None or not cfg.embeddings.exists():
        raise MissingArtifact(f"embeddings path does not exist: {cfg.embeddings}")
    resources = default_resources()
    vocab = set()
    for e in collection.entries:
        vocab.update(preprocess(e.question_text, resources).tokens)
    with open(cfg.embeddings, "rb") as fh:
        table = load_word2vec_binary(fh, vocab_filter=vocab)
    return collection, table, resources


def _algorithms_for(mode: str) -> tuple[str, ...]:
    return {"tis2s": (TIS2S,), "gtis2s": (GTIS2S,), "both": (TIS2S, GTIS2S)}[mode]


def cmd_evaluate(cfg: PipelineConfig, mode: str = "both") -> int:
    collection, table, resources = _load_eval_inputs(cfg)
    config = _experiment_config(cfg, _algorithms_for(mode))
    result = run_experiment(collection, table, config, resources)
    report_path = cfg.artifacts_dir / REPORT_FILE
    report_path.write_text(result.to_json(), encoding="utf-8")
    (cfg.artifacts_dir / REPORT_TXT_FILE).write_text(render_table(result), encoding="utf-8")
    art.write_manifest(
        cfg.artifacts_dir / "evaluate.manifest.json",
        command="evaluate",
        config={**cfg.snapshot(), "mode": mode},
        inputs={
            CORPUS_FILE: art.file_digest(cfg.artifacts_dir / CORPUS_FILE),
            "embeddings_source": art.file_digest(cfg.embeddings),
            REPORT_FILE: art.file_digest(report_path),
        },
        seed=cfg.seed,
    )
    agg = result.aggregate()
    for algo, vals in agg.items():
        p5 = vals["p_at_k"].get(5, float("nan"))
        print(f"{algo}: MAP={vals['map']:.4f} P@5={p5:.4f}")
    return 0


def cmd_sweep_tau(cfg: PipelineConfig, taus: list[float], mode: str = "tis2s") -> int:
    collection, table, resources = _load_eval_inputs(cfg)
    summary = {}
    sweep_dir = cfg.artifacts_dir / "sweep"
    for tau in taus:
        config = _experiment_config(cfg, _algorithms_for(mode), tau=tau)
        result = run_experiment(collection, table, config, resources)
        out_dir = sweep_dir / f"tau_{tau}"
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / REPORT_FILE).write_text(result.to_json(), encoding="utf-8")
        agg = result.aggregate()
        summary[str(tau)] = {
            algo: {"map": vals["map"], "p_at_5": vals["p_at_k"].get(5)}
            for algo, vals in agg.items()
        }
        for algo, vals in agg.items():
            print(f"tau={tau} {algo}: MAP={vals['map']:.4f}")
    sweep_dir.mkdir(parents=True, exist_ok=True)
    (sweep_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return 0


def cmd_robustness(cfg: PipelineConfig, variants: list[int], mode: str = "both") -> int:
    collection, table, resources = _load_eval_inputs(cfg)
    summary = {}
    rob_dir = cfg.artifacts_dir / "robustness"
    for v in variants:
        config = _experiment_config(
            cfg, _algorithms_for(mode), max_train_paraphrases=v
        )
        result = run_experiment(collection, table, config, resources)
        out_dir = rob_dir / f"v_{v}"
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / REPORT_FILE).write_text(result.to_json(), encoding="utf-8")
        agg = result.aggregate()
        summary[str(v)] = {
            algo: {"map": vals["map"], "p_at_2": vals["p_at_k"].get(2)}
            for algo, vals in agg.items()
        }
        for algo, vals in agg.items():
            print(f"v={v} {algo}: P@2={vals['p_at_k'].get(2, float('nan')):.4f}")
    rob_dir.mkdir(parents=True, exist_ok=True)
    (rob_dir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return 0


def cmd_query(
    cfg: PipelineConfig, question: str, mode: str, top_k: int, as_json: bool
) -> int:
    service = QueryService(cfg.artifacts_dir)
    items = service.query(
        question,
        top_k=top_k,
        mode=mode,
        candidate_k=cfg.candidate_k,
        prob_threshold=cfg.prob_threshold,
    )
    if as_json:
        print(json.dumps(items, sort_keys=True))
    else:
        for rank_pos, item in enumerate(items, start=1):
            print(f"{rank_pos}. [{item['distance']:.4f}] {item['question']}")
            print(f"   {item['answer']}")
    return 0


def cmd_serve(cfg: PipelineConfig, host: str, port: int) -> int:
    server = create_server(cfg.artifacts_dir, host=host, port=port)
    print(f"serving on http://{host}:{server.server_address[1]} (POST /query, GET /health)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def cmd_make_synthetic(out_dir: Path, seed: int, threads: int) -> int:
    from . import synthetic

    out_dir.mkdir(parents=True, exist_ok=True)
    thread_data = synthetic.generate_threads(seed=seed, threads=threads)
    (out_dir / "threads.json").write_text(
        synthetic.threads_to_json(thread_data), encoding="utf-8"
    )
    table = synthetic.generate_embeddings(seed=seed)
    with open(out_dir / "vectors.bin", "wb") as fh:
        write_word2vec_binary(table, fh)
    print(f"wrote {threads}-thread dataset and {len(table)} vectors to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faqforge", description="keyword-translation FAQ retrieval pipeline"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_embeddings: bool = False):
        p.add_argument("--artifacts-dir", type=Path, default=None)
        p.add_argument("--tau", type=float, default=0.15)
        p.add_argument("--k", dest="candidate_k", type=int, default=20)
        p.add_argument("--threshold", dest="prob_threshold", type=float, default=0.5)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--folds", type=int, default=5)
        p.add_argument("--train-frac", type=float, default=0.8)
        p.add_argument("--encoder-units", type=int, default=2048)
        p.add_argument("--classifier-units", type=int, default=1024)
        p.add_argument("--dense-units", type=int, default=512)
        p.add_argument("--epochs", type=int, default=30)
        p.add_argument("--batch-size", type=int, default=32)
        p.add_argument("--dropout", type=float, default=0.4)
        p.add_argument("--classifier-dropout", type=float, default=0.5)
        p.add_argument("--learning-rate", type=float, default=1e-3)
        if needs_embeddings:
            p.add_argument("--embeddings", type=Path, required=True)

    p = sub.add_parser("ingest", help="validate a corpus and write the canonical JSONL")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--format", choices=("jsonl", "stackfaq"), default="jsonl")
    common(p)

    p = sub.add_parser("train", help="train keywords, translation model, and classifier")
    common(p, needs_embeddings=True)
    p.add_argument("--no-classifier", action="store_true")

    p = sub.add_parser("translate", help="materialize the translated index")
    common(p)

    p = sub.add_parser("evaluate", help="run the cross-validation protocol")
    common(p, needs_embeddings=True)
    p.add_argument("--mode", choices=("tis2s", "gtis2s", "both"), default="both")

    p = sub.add_parser("sweep-tau", help="evaluate across TF-IDF thresholds")
    common(p, needs_embeddings=True)
    p.add_argument("--taus", type=float, nargs="+", default=[0.05, 0.15, 0.25, 0.4])
    p.add_argument("--mode", choices=("tis2s", "gtis2s", "both"), default="tis2s")

    p = sub.add_parser("robustness", help="evaluate with limited training paraphrases")
    common(p, needs_embeddings=True)
    p.add_argument("--variants", type=int, nargs="+", default=[2, 4, 6, 8, 10])
    p.add_argument("--mode", choices=("tis2s", "gtis2s", "both"), default="both")

    p = sub.add_parser("query", help="rank answers for one question")
    common(p)
    p.add_argument("--question", required=True)
    p.add_argument("--mode", choices=("tis2s", "gtis2s"), default="tis2s")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("serve", help="run the JSON-over-HTTP query endpoint")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)

    p = sub.add_parser("make-synthetic", help="generate the synthetic dataset and vectors")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--threads", type=int, default=125)

    return parser


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    artifacts_dir = args.artifacts_dir
    env_override = os.environ.get("FAQFORGE_ARTIFACTS")
    if artifacts_dir is None:
        artifacts_dir = Path(env_override) if env_override else Path("artifacts")
    return PipelineConfig(
        corpus=getattr(args, "corpus", None),
        embeddings=getattr(args, "embeddings", None),
        artifacts_dir=artifacts_dir,
        tau=args.tau,
        candidate_k=args.candidate_k,
        prob_threshold=args.prob_threshold,
        seed=args.seed,
        folds=args.folds,
        train_frac=args.train_frac,
        encoder_units=args.encoder_units,
        classifier_units=args.classifier_units,
        dense_units=args.dense_units,
        epochs=args.epochs,
        batch_size=args.batch_size,
        dropout=args.dropout,
        classifier_dropout=args.classifier_dropout,
        learning_rate=args.learning_rate,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-synthetic":
            return cmd_make_synthetic(args.out, args.seed, args.threads)
        cfg = _pipeline_config(args)
        if args.command == "ingest":
            return cmd_ingest(cfg, args.format)
        if args.command == "train":
            return cmd_train(cfg, with_classifier=not args.no_classifier)
        if args.command == "translate":
            return cmd_translate(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, mode=args.mode)
        if args.command == "sweep-tau":
            return cmd_sweep_tau(cfg, args.taus, mode=args.mode)
        if args.command == "robustness":
            return cmd_robustness(cfg, args.variants, mode=args.mode)
        if args.command == "query":
            return cmd_query(cfg, args.question, args.mode, args.top_k, args.json)
        if args.command == "serve":
            return cmd_serve(cfg, args.host, args.port)
        raise ValueError(f"unknown command {args.command!r}")
    except FaqForgeError as exc:
        print(json.dumps({"error": exc.category, "detail": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
