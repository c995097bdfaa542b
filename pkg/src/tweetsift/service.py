"""HTTP facade wiring the corpus, the model, and the live labeling loop.

The labeling protocol is a two-step handshake per batch: GET returns the
pending batch (idempotently, until it is resolved) and POST must answer
exactly those ids. Sessions start in a seeding phase that serves heuristic
hashtag candidates plus random fill for the human to label; once both
classes exist the base classifier trains and batches switch to uncertainty
selection. Every label is appended to the session's label store before any
in-memory state changes, so a crashed service rebuilds identical sessions
by replay.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .active_learning import (
    ALConfig,
    ClassifierHyperparams,
    LabelStore,
    LabeledExample,
    NEGATIVE,
    POSITIVE,
    LABEL_VALUES,
    NoMatches,
    PoolState,
    predict_proba,
    seed_candidates,
    select_uncertain,
    train_classifier,
)
from .eval_harness import binarize, precision_recall
from .ingest import CorpusStore
from .layout import load_layout
from .preprocess import clean_text, tokenize

logger = logging.getLogger(__name__)


class ServiceError(Exception):
    status = 500
    name = "ServiceError"


class UnknownSession(ServiceError):
    status = 404
    name = "UnknownSession"


class UnknownTweet(ServiceError):
    status = 404
    name = "UnknownTweet"


class LayoutMissing(ServiceError):
    status = 404
    name = "LayoutNotBuilt"


class BudgetSpent(ServiceError):
    status = 409
    name = "BudgetExhausted"


class PoolEmpty(ServiceError):
    status = 409
    name = "EmptyPool"


class BatchMismatch(ServiceError):
    status = 409
    name = "BatchMismatch"


class SingleClassSeed(ServiceError):
    status = 409
    name = "SingleClassPool"


class BadRequest(ServiceError):
    status = 400
    name = "BadRequest"


@dataclass
class SessionState:
    session_id: str
    config: ALConfig
    tags: tuple[str, ...]
    pool: PoolState
    store: LabelStore
    phase: str  # seeding | active
    seed_queue: list[str] = field(default_factory=list)
    pending: list[str] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class LoopService:
    """Engine behind the HTTP routes; usable directly in tests."""

    def __init__(
        self,
        corpus_dir,
        model,
        state_dir=None,
        layout_path=None,
        eval_dataset=None,
        hyperparams: ClassifierHyperparams = ClassifierHyperparams(),
    ):
        self.corpus_dir = Path(corpus_dir)
        self.model = model
        self.state_dir = Path(state_dir) if state_dir else self.corpus_dir / "service-state"
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.layout_path = Path(layout_path) if layout_path else self.corpus_dir / "layout.csv"
        self.eval_dataset = eval_dataset
        self.hyperparams = hyperparams
        self.sessions: dict[str, SessionState] = {}
        self._sessions_lock = threading.Lock()

        self._tweets = {}
        self._vectors: dict[str, np.ndarray] = {}
        with CorpusStore(self.corpus_dir) as store:
            texts = store.iter_texts()
            for tweet, text in zip(store.iter_tweets(), texts):
                self._tweets[tweet.id] = tweet
                tokens = tokenize(clean_text(text))
                self._vectors[tweet.id] = model.sentence_vector(tokens).astype(np.float64)
        self._restore_sessions()

    # -- session lifecycle --

    def create_session(
        self,
        tags,
        budget: int,
        batch_size: int = 5,
        seed: int = 0,
        seed_positive: int = 50,
        seed_negative: int = 50,
    ) -> dict:
        if not tags:
            raise BadRequest("tags must be non-empty")
        config = ALConfig(budget=budget, batch_size=batch_size, seed=seed)
        session_id = uuid.uuid4().hex[:12]
        with CorpusStore(self.corpus_dir) as store:
            try:
                matched = [t.id for t in seed_candidates(store, tags, seed_positive)]
            except NoMatches as exc:
                raise BadRequest(str(exc)) from exc
        rng = np.random.default_rng(seed)
        rest = sorted(set(self._vectors) - set(matched))
        fill = [
            rest[i]
            for i in rng.choice(len(rest), size=min(seed_negative, len(rest)), replace=False)
        ]
        seed_queue = matched + fill

        session = SessionState(
            session_id=session_id,
            config=config,
            tags=tuple(tags),
            pool=PoolState(
                labeled={}, unlabeled=dict(self._vectors), remaining_budget=budget
            ),
            store=LabelStore(self.state_dir / f"labels-{session_id}.tsv"),
            phase="seeding",
            seed_queue=seed_queue,
        )
        with open(self.state_dir / f"session-{session_id}.json", "w", encoding="utf-8") as f:
            json.dump(
                {
                    "session_id": session_id,
                    "budget": budget,
                    "batch_size": batch_size,
                    "seed": seed,
                    "tags": list(tags),
                    "seed_queue": seed_queue,
                    "created_at": datetime.now(timezone.utc).isoformat(),
                },
                f,
            )
        with self._sessions_lock:
            self.sessions[session_id] = session
        return self._session_summary(session)

    def _restore_sessions(self) -> None:
        for meta_path in sorted(self.state_dir.glob("session-*.json")):
            with open(meta_path, "r", encoding="utf-8") as f:
                meta = json.load(f)
            session = SessionState(
                session_id=meta["session_id"],
                config=ALConfig(
                    budget=meta["budget"], batch_size=meta["batch_size"], seed=meta["seed"]
                ),
                tags=tuple(meta["tags"]),
                pool=PoolState(
                    labeled={},
                    unlabeled=dict(self._vectors),
                    remaining_budget=meta["budget"],
                ),
                store=LabelStore(self.state_dir / f"labels-{meta['session_id']}.tsv"),
                phase="seeding",
                seed_queue=list(meta["seed_queue"]),
            )
            self._replay(session)
            self.sessions[session.session_id] = session
            logger.info(
                "restored session %s: %d labeled, budget %d",
                session.session_id,
                len(session.pool.labeled),
                session.pool.remaining_budget,
            )

    def _replay(self, session: SessionState) -> None:
        labeled: dict[str, LabeledExample] = {}
        unlabeled = dict(self._vectors)
        spent = 0
        for tweet_id, label, _stamp, source in session.store:
            vector = unlabeled.pop(tweet_id)
            labeled[tweet_id] = LabeledExample(tweet_id=tweet_id, vector=vector, label=label)
            if source == "al":
                spent += 1
            if tweet_id in session.seed_queue:
                session.seed_queue.remove(tweet_id)
        classes = {ex.label for ex in labeled.values()}
        model = (
            train_classifier(labeled.values(), self.hyperparams)
            if classes == {POSITIVE, NEGATIVE} and not session.seed_queue
            else None
        )
        session.pool = PoolState(
            labeled=labeled,
            unlabeled=unlabeled,
            remaining_budget=max(session.config.budget - spent, 0),
            model=model,
        )
        session.phase = "active" if model is not None else "seeding"

    def _session(self, session_id: str) -> SessionState:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def _session_summary(self, session: SessionState) -> dict:
        return {
            "session_id": session.session_id,
            "phase": session.phase,
            "labeled": len(session.pool.labeled),
            "remaining_budget": session.pool.remaining_budget,
            "unlabeled": len(session.pool.unlabeled),
            "batch_size": session.config.batch_size,
        }

    # -- batch protocol --

    def get_batch(self, session_id: str) -> dict:
        session = self._session(session_id)
        with session.lock:
            if not session.pending:
                session.pending = self._select_batch(session)
            items = []
            for tweet_id in session.pending:
                tweet = self._tweets[tweet_id]
                probability = (
                    predict_proba(session.pool.model, session.pool.unlabeled[tweet_id])
                    if session.pool.model is not None
                    else None
                )
                items.append(
                    {
                        "tweet_id": tweet_id,
                        "text": tweet.text,
                        "probability": probability,
                    }
                )
            return {
                "items": items,
                **self._session_summary(session),
            }

    def _select_batch(self, session: SessionState) -> list[str]:
        if session.phase == "seeding":
            queue = [t for t in session.seed_queue if t in session.pool.unlabeled]
            if queue:
                return queue[: session.config.batch_size]
            # queue drained without both classes showing up
            raise SingleClassSeed(
                "seed labels cover one class only; create a session with broader tags"
            )
        if session.pool.remaining_budget <= 0:
            raise BudgetSpent(f"budget spent for session {session.session_id}")
        if not session.pool.unlabeled:
            raise PoolEmpty("nothing left to label")
        take = min(
            session.config.batch_size,
            session.pool.remaining_budget,
            len(session.pool.unlabeled),
        )
        return select_uncertain(session.pool.model, session.pool.unlabeled, take)

    def post_labels(self, session_id: str, labels: list[dict]) -> dict:
        session = self._session(session_id)
        with session.lock:
            if not session.pending:
                raise BatchMismatch("no pending batch; GET a batch first")
            posted = {}
            for entry in labels:
                try:
                    posted[str(entry["tweet_id"])] = LABEL_VALUES[entry["label"]]
                except (KeyError, TypeError) as exc:
                    raise BadRequest(f"bad label entry {entry!r}") from exc
            if set(posted) != set(session.pending):
                raise BatchMismatch(
                    "posted ids do not match the pending batch "
                    f"(expected {sorted(session.pending)})"
                )

            source = "seed" if session.phase == "seeding" else "al"
            for tweet_id, label in sorted(posted.items()):
                session.store.append(tweet_id, label, source)

            labeled = dict(session.pool.labeled)
            unlabeled = dict(session.pool.unlabeled)
            for tweet_id, label in posted.items():
                labeled[tweet_id] = LabeledExample(
                    tweet_id=tweet_id, vector=unlabeled.pop(tweet_id), label=label
                )
                if session.phase == "seeding":
                    session.seed_queue.remove(tweet_id)
            budget = session.pool.remaining_budget - (len(posted) if source == "al" else 0)

            model = session.pool.model
            classes = {ex.label for ex in labeled.values()}
            if session.phase == "seeding":
                if not session.seed_queue:
                    if classes == {POSITIVE, NEGATIVE}:
                        model = train_classifier(labeled.values(), self.hyperparams)
                        session.phase = "active"
                    # else: next GET raises SingleClassSeed
            else:
                model = train_classifier(labeled.values(), self.hyperparams)

            session.pool = PoolState(
                labeled=labeled, unlabeled=unlabeled, remaining_budget=budget, model=model
            )
            session.pending = []
            return self._session_summary(session)

    # -- read-only endpoints --

    def get_layout(self) -> dict:
        try:
            layout = load_layout(self.layout_path)
        except FileNotFoundError as exc:
            raise LayoutMissing(str(self.layout_path)) from exc
        return {
            "fingerprint": layout.corpus_fingerprint,
            "perplexity": layout.perplexity,
            "seed": layout.seed,
            "min_frequency": layout.min_frequency,
            "points": [
                {"tag": p.tag, "frequency": p.frequency, "x": p.x, "y": p.y}
                for p in layout.points
            ],
        }

    def get_stats(self) -> dict:
        label_counts = {"seed": 0, "al": 0, "eval": 0}
        for store_path in self.state_dir.glob("labels-*.tsv"):
            for _tid, _label, _stamp, source in LabelStore(store_path):
                label_counts[source] += 1
        stats = {
            "tweets": len(self._tweets),
            "vocab_size": len(self.model.vocab) if hasattr(self.model, "vocab") else None,
            "labels": label_counts,
            "sessions": len(self.sessions),
        }
        session_stats = {}
        for session in self.sessions.values():
            entry = self._session_summary(session)
            if self.eval_dataset is not None and session.pool.model is not None:
                truth = binarize(self.eval_dataset.items, self.eval_dataset.positive_class)
                precision, recall = precision_recall(
                    session.pool.model, self.eval_dataset.items, truth
                )
                entry["precision"] = precision
                entry["recall"] = recall
            session_stats[session.session_id] = entry
        stats["session_stats"] = session_stats
        return stats

    def get_tweet(self, tweet_id: str) -> dict:
        tweet = self._tweets.get(tweet_id)
        if tweet is None:
            raise UnknownTweet(tweet_id)
        return {
            "tweet_id": tweet.id,
            "created_at": tweet.created_at.isoformat(),
            "text": tweet.text,
            "hashtags": list(tweet.hashtags),
            "mentions": list(tweet.mentions),
            "urls": list(tweet.urls),
            "is_retweet": tweet.is_retweet,
        }


class _Handler(BaseHTTPRequestHandler):
    service: LoopService = None
    ui_dir: Path | None = None

    def log_message(self, format, *args):  # quiet by default
        logger.debug("http: " + format, *args)

    def _send_json(self, payload, status=200):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, exc: ServiceError):
        self._send_json({"error": exc.name, "message": str(exc)}, status=exc.status)

    def _read_body(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise BadRequest(f"body is not valid JSON: {exc}") from exc

    def do_GET(self):
        try:
            path = self.path.split("?")[0].rstrip("/") or "/"
            if path == "/api/layout":
                return self._send_json(self.service.get_layout())
            if path == "/api/stats":
                return self._send_json(self.service.get_stats())
            if path.startswith("/api/tweet/"):
                return self._send_json(self.service.get_tweet(path.split("/")[-1]))
            if path.startswith("/api/session/") and path.endswith("/batch"):
                session_id = path.split("/")[3]
                return self._send_json(self.service.get_batch(session_id))
            return self._serve_static(path)
        except ServiceError as exc:
            self._send_error_json(exc)
        except Exception:
            logger.exception("GET %s failed", self.path)
            self._send_json({"error": "Internal", "message": "internal error"}, 500)

    def do_POST(self):
        try:
            path = self.path.split("?")[0].rstrip("/")
            if path == "/api/session":
                body = self._read_body()
                try:
                    summary = self.service.create_session(
                        tags=body.get("tags") or [],
                        budget=int(body.get("budget", 50)),
                        batch_size=int(body.get("batch_size", 5)),
                        seed=int(body.get("seed", 0)),
                        seed_positive=int(body.get("seed_positive", 50)),
                        seed_negative=int(body.get("seed_negative", 50)),
                    )
                except ValueError as exc:
                    raise BadRequest(str(exc)) from exc
                return self._send_json(summary, status=201)
            if path.startswith("/api/session/") and path.endswith("/labels"):
                session_id = path.split("/")[3]
                body = self._read_body()
                labels = body.get("labels")
                if not isinstance(labels, list):
                    raise BadRequest("body must carry a 'labels' list")
                return self._send_json(self.service.post_labels(session_id, labels))
            self._send_json({"error": "NotFound", "message": self.path}, 404)
        except ServiceError as exc:
            self._send_error_json(exc)
        except Exception:
            logger.exception("POST %s failed", self.path)
            self._send_json({"error": "Internal", "message": "internal error"}, 500)

    def _serve_static(self, path: str):
        if self.ui_dir is None:
            return self._send_json(
                {
                    "service": "tweetsift",
                    "endpoints": [
                        "POST /api/session",
                        "GET /api/session/{id}/batch",
                        "POST /api/session/{id}/labels",
                        "GET /api/layout",
                        "GET /api/stats",
                        "GET /api/tweet/{id}",
                    ],
                }
            )
        relative = path.lstrip("/") or "index.html"
        target = (self.ui_dir / relative).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return self._send_json({"error": "NotFound", "message": path}, 404)
        content = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(content)))
        self.end_headers()
        self.wfile.write(content)


def build_http_server(service: LoopService, port: int = 0, ui_dir=None) -> ThreadingHTTPServer:
    handler = type(
        "BoundHandler",
        (_Handler,),
        {"service": service, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve_forever(service: LoopService, port: int, ui_dir=None) -> None:
    server = build_http_server(service, port=port, ui_dir=ui_dir)
    host, bound_port = server.server_address
    logger.info("serving on http://%s:%d/", host, bound_port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
