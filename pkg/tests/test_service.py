import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from tweetsift.ingest import CorpusStore, parse_tweet
from tweetsift.layout import HashtagLayout, HashtagPoint, save_layout
from tweetsift.service import (
    BatchMismatch,
    BudgetSpent,
    LoopService,
    UnknownSession,
    build_http_server,
)


class BagModel:
    """Deterministic stand-in embedding: token-hash one-hot mean, dim 8."""

    dim = 8

    class vocab:  # noqa: N801 - mimics EmbeddingModel.vocab len()
        words = [f"w{i}" for i in range(30)]

        def __len__(self):
            return 30

    vocab = vocab()

    def sentence_vector(self, tokens):
        acc = np.zeros(self.dim, dtype=np.float32)
        if not tokens:
            return acc
        for token in tokens:
            vec = np.zeros(self.dim, dtype=np.float32)
            vec[sum(token.encode()) % self.dim] = 1.0
            acc += vec
        return acc / np.float32(len(tokens))


def build_corpus(tmp_path, n_crisis=30, n_other=30):
    corpus_dir = tmp_path / "corpus"
    with CorpusStore(corpus_dir) as store:
        for i in range(n_crisis):
            store.persist(
                parse_tweet(
                    json.dumps(
                        {
                            "id_str": f"c{i:04d}",
                            "created_at": "2017-10-03T00:00:00+00:00",
                            "text": f"mandalay strip report {i % 7} #vegasshooting",
                        }
                    )
                )
            )
        for i in range(n_other):
            store.persist(
                parse_tweet(
                    json.dumps(
                        {
                            "id_str": f"o{i:04d}",
                            "created_at": "2017-10-03T00:00:00+00:00",
                            "text": f"great game tonight {i % 5} #sports",
                        }
                    )
                )
            )
    return corpus_dir


@pytest.fixture
def service(tmp_path):
    corpus_dir = build_corpus(tmp_path)
    return LoopService(corpus_dir, BagModel(), state_dir=tmp_path / "state")


def drain_seed_phase(svc, session_id):
    """Label seed batches: crisis ids positive, the rest negative."""
    while True:
        batch = svc.get_batch(session_id)
        if batch["phase"] != "seeding":
            return batch
        labels = [
            {
                "tweet_id": item["tweet_id"],
                "label": "positive" if item["tweet_id"].startswith("c") else "negative",
            }
            for item in batch["items"]
        ]
        summary = svc.post_labels(session_id, labels)
        if summary["phase"] == "active":
            return summary


# --- engine-level ---


def test_session_seed_then_active(service):
    summary = service.create_session(
        tags=["vegasshooting"], budget=10, batch_size=5, seed_positive=10, seed_negative=10
    )
    assert summary["phase"] == "seeding"
    summary = drain_seed_phase(service, summary["session_id"])
    assert summary["phase"] == "active"
    assert summary["labeled"] == 20
    assert summary["remaining_budget"] == 10


def test_active_batch_carries_probabilities(service):
    sid = service.create_session(
        tags=["vegasshooting"], budget=10, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(service, sid)
    batch = service.get_batch(sid)
    assert len(batch["items"]) == 5
    for item in batch["items"]:
        assert 0.0 <= item["probability"] <= 1.0
    margins = [abs(i["probability"] - 0.5) for i in batch["items"]]
    assert margins == sorted(margins)


def test_get_batch_idempotent_until_post(service):
    sid = service.create_session(
        tags=["vegasshooting"], budget=10, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(service, sid)
    first = service.get_batch(sid)
    second = service.get_batch(sid)
    assert [i["tweet_id"] for i in first["items"]] == [
        i["tweet_id"] for i in second["items"]
    ]
    service.post_labels(
        sid,
        [{"tweet_id": i["tweet_id"], "label": "negative"} for i in first["items"]],
    )
    third = service.get_batch(sid)
    assert [i["tweet_id"] for i in third["items"]] != [
        i["tweet_id"] for i in first["items"]
    ]


def test_post_mismatched_ids_rejected_without_state_change(service):
    sid = service.create_session(
        tags=["vegasshooting"], budget=10, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(service, sid)
    batch = service.get_batch(sid)
    labels = [{"tweet_id": i["tweet_id"], "label": "positive"} for i in batch["items"]]
    labels[0] = {"tweet_id": "c9999", "label": "positive"}
    before = service.get_stats()["labels"]["al"]
    with pytest.raises(BatchMismatch):
        service.post_labels(sid, labels)
    assert service.get_stats()["labels"]["al"] == before
    again = service.get_batch(sid)
    assert [i["tweet_id"] for i in again["items"]] == [
        i["tweet_id"] for i in batch["items"]
    ]


def test_duplicate_post_rejected(service):
    sid = service.create_session(
        tags=["vegasshooting"], budget=10, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(service, sid)
    batch = service.get_batch(sid)
    labels = [{"tweet_id": i["tweet_id"], "label": "negative"} for i in batch["items"]]
    service.post_labels(sid, labels)
    with pytest.raises(BatchMismatch):
        service.post_labels(sid, labels)


def test_budget_exhaustion(service):
    sid = service.create_session(
        tags=["vegasshooting"], budget=5, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(service, sid)
    batch = service.get_batch(sid)
    service.post_labels(
        sid, [{"tweet_id": i["tweet_id"], "label": "negative"} for i in batch["items"]]
    )
    with pytest.raises(BudgetSpent):
        service.get_batch(sid)


def test_unknown_session(service):
    with pytest.raises(UnknownSession):
        service.get_batch("nope")


def test_restart_rebuilds_identical_session(tmp_path):
    corpus_dir = build_corpus(tmp_path)
    state_dir = tmp_path / "state"
    svc = LoopService(corpus_dir, BagModel(), state_dir=state_dir)
    sid = svc.create_session(
        tags=["vegasshooting"], budget=10, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(svc, sid)
    batch = svc.get_batch(sid)
    svc.post_labels(
        sid, [{"tweet_id": i["tweet_id"], "label": "positive"} for i in batch["items"]]
    )
    live = svc.sessions[sid]

    # simulated crash: rebuild a fresh service over the same state dir
    reborn = LoopService(corpus_dir, BagModel(), state_dir=state_dir)
    restored = reborn.sessions[sid]
    assert restored.pool.labeled.keys() == live.pool.labeled.keys()
    assert {t: e.label for t, e in restored.pool.labeled.items()} == {
        t: e.label for t, e in live.pool.labeled.items()
    }
    assert restored.pool.remaining_budget == live.pool.remaining_budget
    assert np.array_equal(restored.pool.model.weights, live.pool.model.weights)
    assert restored.pool.model.bias == live.pool.model.bias
    assert restored.phase == "active"
    # the rebuilt service selects the same next batch
    assert [i["tweet_id"] for i in reborn.get_batch(sid)["items"]] == [
        i["tweet_id"] for i in svc.get_batch(sid)["items"]
    ]


def test_stats_counters_monotone(service):
    s0 = service.get_stats()
    assert s0["tweets"] == 60
    assert s0["labels"] == {"seed": 0, "al": 0, "eval": 0}
    sid = service.create_session(
        tags=["vegasshooting"], budget=5, batch_size=5, seed_positive=6, seed_negative=6
    )["session_id"]
    drain_seed_phase(service, sid)
    s1 = service.get_stats()
    assert s1["labels"]["seed"] == 12
    assert s1["sessions"] == 1
    assert s1["tweets"] >= s0["tweets"]


def test_get_tweet(service):
    info = service.get_tweet("c0001")
    assert info["hashtags"] == ["vegasshooting"]
    from tweetsift.service import UnknownTweet

    with pytest.raises(UnknownTweet):
        service.get_tweet("zzz")


# --- HTTP round trip ---


@pytest.fixture
def http_server(tmp_path):
    corpus_dir = build_corpus(tmp_path)
    layout = HashtagLayout(
        points=[
            HashtagPoint("vegasshooting", 30, 1.0, 2.0),
            HashtagPoint("sports", 30, -1.0, -2.0),
        ],
        perplexity=5.0,
        seed=0,
        min_frequency=1,
        corpus_fingerprint="fixture",
    )
    layout_path = tmp_path / "layout.csv"
    save_layout(layout, layout_path)
    svc = LoopService(
        corpus_dir, BagModel(), state_dir=tmp_path / "state", layout_path=layout_path
    )
    server = build_http_server(svc, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def http_json(base, path, payload=None):
    data = json.dumps(payload).encode() if payload is not None else None
    req = urllib.request.Request(
        base + path,
        data=data,
        headers={"Content-Type": "application/json"} if data else {},
        method="POST" if data is not None else "GET",
    )
    with urllib.request.urlopen(req) as resp:
        return resp.status, json.loads(resp.read().decode())


def test_http_full_labeling_round_trip(http_server):
    status, created = http_json(
        http_server,
        "/api/session",
        {
            "tags": ["vegasshooting"],
            "budget": 10,
            "batch_size": 5,
            "seed_positive": 6,
            "seed_negative": 6,
        },
    )
    assert status == 201
    sid = created["session_id"]

    labeled_total = 0
    while True:
        _, batch = http_json(http_server, f"/api/session/{sid}/batch")
        labels = [
            {
                "tweet_id": item["tweet_id"],
                "label": "positive" if item["tweet_id"].startswith("c") else "negative",
            }
            for item in batch["items"]
        ]
        _, summary = http_json(http_server, f"/api/session/{sid}/labels", {"labels": labels})
        labeled_total = summary["labeled"]
        if summary["phase"] == "active":
            break
    assert labeled_total == 12

    _, batch = http_json(http_server, f"/api/session/{sid}/batch")
    assert len(batch["items"]) == 5
    assert all("probability" in item for item in batch["items"])

    _, stats = http_json(http_server, "/api/stats")
    assert stats["labels"]["seed"] == 12

    _, layout = http_json(http_server, "/api/layout")
    assert {p["tag"] for p in layout["points"]} == {"vegasshooting", "sports"}
    assert layout["fingerprint"] == "fixture"

    _, tweet = http_json(http_server, "/api/tweet/c0000")
    assert tweet["tweet_id"] == "c0000"


def test_http_error_statuses(http_server):
    with pytest.raises(urllib.error.HTTPError) as err:
        http_json(http_server, "/api/session/doesnotexist/batch")
    assert err.value.code == 404
    payload = json.loads(err.value.read().decode())
    assert payload["error"] == "UnknownSession"

    with pytest.raises(urllib.error.HTTPError) as err:
        http_json(http_server, "/api/session", {"tags": [], "budget": 5})
    assert err.value.code == 400


def test_http_root_lists_endpoints(http_server):
    status, body = http_json(http_server, "/")
    assert status == 200
    assert any("session" in e for e in body["endpoints"])
