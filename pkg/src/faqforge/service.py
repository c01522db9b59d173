"""Query execution over built artifacts and a minimal JSON-over-HTTP endpoint.

The service is read-only and stateless over immutable artifacts: it answers
POST /query with ranked QA records and GET /health with a readiness flag.
Missing artifacts yield 503; an empty question yields 400.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .candidates import CandidateClassifier, rank_guided
from .embeddings import load_word2vec_binary
from .errors import EmptyQuestion, FaqForgeError, MissingArtifact
from .faq_index import index_from_jsonl
from .preprocess import default_resources, preprocess
from .retrieval import Query, canonical_keywords, rank, ranked_result_json
from .seq2seq import Seq2SeqModel

INDEX_FILE = "index.jsonl"
MODEL_FILE = "s2s.ckpt"
CLASSIFIER_FILE = "classifier.ckpt"
EMBEDDINGS_FILE = "embeddings.bin"

MODES = ("tis2s", "gtis2s")


class QueryService:
    """Lazily loads artifacts and evaluates ranked queries against them."""

    def __init__(self, artifacts_dir: str | Path):
        self.artifacts_dir = Path(artifacts_dir)
        self._loaded = False
        self._index = None
        self._model = None
        self._table = None
        self._classifier = None

    def _require(self, name: str) -> Path:
        path = self.artifacts_dir / name
        if not path.exists():
            raise MissingArtifact(f"artifact {name} not found in {self.artifacts_dir}")
        return path

    def _load(self) -> None:
        if self._loaded:
            return
        index_path = self._require(INDEX_FILE)
        model_path = self._require(MODEL_FILE)
        emb_path = self._require(EMBEDDINGS_FILE)
        self._index = index_from_jsonl(index_path.read_text(encoding="utf-8"))
        self._model = Seq2SeqModel.load(model_path)
        with open(emb_path, "rb") as fh:
            self._table = load_word2vec_binary(fh)
        clf_path = self.artifacts_dir / CLASSIFIER_FILE
        if clf_path.exists():
            self._classifier = CandidateClassifier.load(clf_path)
        self._loaded = True

    @property
    def ready(self) -> bool:
        try:
            self._load()
        except FaqForgeError:
            return False
        return True

    def query(
        self,
        question: str,
        top_k: int = 5,
        mode: str = "tis2s",
        candidate_k: int = 20,
        prob_threshold: float = 0.5,
    ) -> list[dict]:
        if not question or not question.strip():
            raise EmptyQuestion("question text is empty")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self._load()

        resources = default_resources()
        tokens = preprocess(question, resources)
        predicted = self._model.predict(tokens, self._table)
        query = Query(
            raw_text=question,
            tokens=tokens,
            predicted_keywords=canonical_keywords(predicted),
        )
        if mode == "gtis2s":
            if self._classifier is None:
                raise MissingArtifact(f"artifact {CLASSIFIER_FILE} required for gtis2s mode")
            result = rank_guided(
                query,
                self._index,
                self._classifier,
                self._table,
                k=candidate_k,
                prob_threshold=prob_threshold,
                resources=resources,
            )
        else:
            result = rank(query, self._index, self._table)
        items = ranked_result_json(result)[:top_k]
        return items


def make_handler(service: QueryService):
    class Handler(BaseHTTPRequestHandler):
        def _send(self, status: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):  # noqa: N802 (http.server API)
            if self.path == "/health":
                self._send(200, {"status": "ok", "ready": service.ready})
            else:
                self._send(404, {"error": "NotFound", "detail": self.path})

        def do_POST(self):  # noqa: N802
            if self.path != "/query":
                self._send(404, {"error": "NotFound", "detail": self.path})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
                items = service.query(
                    question=payload.get("question", ""),
                    top_k=int(payload.get("top_k", 5)),
                    mode=payload.get("mode", "tis2s"),
                )
                self._send(200, items)
            except EmptyQuestion as exc:
                self._send(400, {"error": exc.category, "detail": str(exc)})
            except MissingArtifact as exc:
                self._send(503, {"error": exc.category, "detail": str(exc)})
            except (ValueError, json.JSONDecodeError) as exc:
                self._send(400, {"error": "BadRequest", "detail": str(exc)})
            except FaqForgeError as exc:
                self._send(500, {"error": exc.category, "detail": str(exc)})

        def log_message(self, fmt, *args):  # quiet test output
            pass

    return Handler


def create_server(artifacts_dir: str | Path, host: str = "127.0.0.1", port: int = 8080):
    service = QueryService(artifacts_dir)
    return ThreadingHTTPServer((host, port), make_handler(service))
