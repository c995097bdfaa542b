import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tweetsift.clock import SimulatedClock
from tweetsift.ingest import (
    BackoffPolicy,
    CorpusStore,
    EndpointUnreachable,
    MalformedRecord,
    RateLimiterState,
    StreamConfig,
    acquire_stream,
    load_stream_config,
    parse_tweet,
    rate_limit_admit,
)


def record(id_, text, **extra):
    payload = {"id_str": id_, "created_at": "2017-10-03T12:00:00+00:00", "text": text}
    payload.update(extra)
    return json.dumps(payload)


def make_config(**kw):
    kw.setdefault("endpoint", "http://example.invalid/stream")
    kw.setdefault("query_terms", ("las vegas shooting",))
    return StreamConfig(**kw)


# --- parse_tweet ---


def test_parse_pattern_extraction():
    tweet = parse_tweet(record("1", "Hello #Vegas"))
    assert tweet.text == "Hello #Vegas"
    assert tweet.hashtags == ("vegas",)
    assert tweet.is_retweet is False


def test_parse_retweet_prefix():
    assert parse_tweet(record("2", "RT @a: news")).is_retweet is True


def test_parse_truncated_record():
    line = record("3", "partial")
    with pytest.raises(MalformedRecord):
        parse_tweet(line[: len(line) // 2])


def test_parse_requires_id_and_text():
    with pytest.raises(MalformedRecord):
        parse_tweet(json.dumps({"text": "no id"}))
    with pytest.raises(MalformedRecord):
        parse_tweet(json.dumps({"id_str": "4"}))


def test_entities_take_precedence_over_patterns():
    line = record(
        "5",
        "text mentions #Ignored @ignored http://ignored.example",
        entities={
            "hashtags": [{"text": "Official"}],
            "user_mentions": [{"screen_name": "someone"}],
            "urls": [{"url": "http://t.co/x", "expanded_url": "http://real.example/a"}],
        },
    )
    tweet = parse_tweet(line)
    assert tweet.hashtags == ("official",)
    assert tweet.mentions == ("someone",)
    assert tweet.urls == ("http://real.example/a",)


def test_classic_timestamp_parses():
    tweet = parse_tweet(
        json.dumps(
            {"id_str": "6", "created_at": "Wed Oct 04 15:12:32 +0000 2017", "text": "x"}
        )
    )
    assert tweet.created_at.year == 2017 and tweet.created_at.month == 10


def test_raw_round_trip():
    line = record("7", "Round trip #Test", entities={"hashtags": [{"text": "Test"}]})
    tweet = parse_tweet(line)
    assert parse_tweet(tweet.raw) == tweet


# --- rate limiter ---


def test_first_request_admitted():
    config = make_config()
    state = RateLimiterState.initial(0.0)
    retry_at, state = rate_limit_admit(0.0, state, config)
    assert retry_at is None
    assert state.requests_in_window == 1


def test_450th_admitted_451st_denied():
    config = make_config()
    state = RateLimiterState.initial(0.0)
    for i in range(450):
        retry_at, state = rate_limit_admit(i * 0.5, state, config)
        assert retry_at is None
    retry_at, state = rate_limit_admit(300.0, state, config)
    assert retry_at == 900.0


def test_window_reset_after_elapse():
    config = make_config(max_requests_per_window=2, window_seconds=10)
    state = RateLimiterState.initial(0.0)
    for now in (0.0, 1.0):
        retry_at, state = rate_limit_admit(now, state, config)
        assert retry_at is None
    retry_at, state = rate_limit_admit(2.0, state, config)
    assert retry_at == 10.0
    retry_at, state = rate_limit_admit(10.0, state, config)
    assert retry_at is None
    # grid stays anchored: the second window is [10, 20)
    assert state.window_start == 10.0


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(min_value=0.0, max_value=50.0, allow_nan=False), min_size=1, max_size=300),
    st.integers(min_value=1, max_value=7),
    st.integers(min_value=2, max_value=25),
)
def test_admits_bounded_in_every_aligned_window(deltas, cap, window):
    config = make_config(max_requests_per_window=cap, window_seconds=window)
    state = RateLimiterState.initial(0.0)
    now = 0.0
    admitted = []
    for delta in deltas:
        now += delta
        retry_at, state = rate_limit_admit(now, state, config)
        if retry_at is None:
            admitted.append(now)
    per_window: dict[int, int] = {}
    for ts in admitted:
        per_window[int(ts // window)] = per_window.get(int(ts // window), 0) + 1
    assert all(count <= cap for count in per_window.values())


# --- corpus store ---


def test_persist_line_counts(tmp_path):
    with CorpusStore(tmp_path / "corpus") as store:
        store.persist(parse_tweet(record("1", "first")))
        store.persist(parse_tweet(record("2", "second")))
    raw_lines = (tmp_path / "corpus" / "raw.jsonl").read_text().splitlines()
    text_lines = (tmp_path / "corpus" / "text.txt").read_text().splitlines()
    assert len(raw_lines) == len(text_lines) == 2


def test_text_newlines_flattened(tmp_path):
    with CorpusStore(tmp_path / "corpus") as store:
        store.persist(parse_tweet(json.dumps({"id_str": "1", "text": "line one\nline two"})))
    text_lines = (tmp_path / "corpus" / "text.txt").read_text().splitlines()
    assert text_lines == ["line one line two"]


def test_duplicate_ids_not_stored(tmp_path):
    with CorpusStore(tmp_path / "corpus") as store:
        assert store.persist(parse_tweet(record("1", "first"))) is True
        assert store.persist(parse_tweet(record("1", "again"))) is False
        assert len(store) == 1


def test_replay_identity(tmp_path):
    lines = [record(str(i), f"tweet number {i} #tag{i}") for i in range(5)]
    corpus = tmp_path / "corpus"
    with CorpusStore(corpus) as store:
        for line in lines:
            store.persist(parse_tweet(line))
    with CorpusStore(corpus) as store:
        replayed = list(store.iter_tweets())
    assert [t.raw for t in replayed] == lines
    assert replayed == [parse_tweet(line) for line in lines]


def test_crash_between_raw_and_text_append_repaired(tmp_path):
    corpus = tmp_path / "corpus"
    with CorpusStore(corpus) as store:
        store.persist(parse_tweet(record("1", "stored fully")))
    # crash injection: raw got its line, text append never happened
    with open(corpus / "raw.jsonl", "a", encoding="utf-8") as f:
        f.write(record("2", "raw only") + "\n")
    with CorpusStore(corpus) as store:
        raw_count = sum(1 for _ in store.iter_tweets())
        text_count = sum(1 for _ in store.iter_texts())
    assert raw_count == text_count == 2


def test_partial_raw_line_truncated(tmp_path):
    corpus = tmp_path / "corpus"
    with CorpusStore(corpus) as store:
        store.persist(parse_tweet(record("1", "complete")))
    with open(corpus / "raw.jsonl", "a", encoding="utf-8") as f:
        f.write('{"id_str": "2", "text": "never finis')  # no newline
    with CorpusStore(corpus) as store:
        assert len(store) == 1
        assert sum(1 for _ in store.iter_texts()) == 1


# --- acquire_stream ---


def test_replay_lossless(tmp_path):
    path = tmp_path / "replay.jsonl"
    path.write_text("\n".join(record(str(i), f"t{i}") for i in range(3)) + "\n")
    stored = []
    report = acquire_stream(make_config(), lambda t: stored.append(t) or True, replay=path)
    assert report.stored == 3 and report.skipped == 0
    assert [t.id for t in stored] == ["0", "1", "2"]


def test_replay_skips_malformed(tmp_path):
    path = tmp_path / "replay.jsonl"
    lines = [record(str(i), f"t{i}") for i in range(5)]
    lines[2] = "{truncated"
    path.write_text("\n".join(lines) + "\n")
    report = acquire_stream(make_config(), lambda t: True, replay=path)
    assert report.stored == 4 and report.skipped == 1


def test_simulated_window_respects_request_cap():
    """1000 single-record responses must take >450 requests across windows."""
    config = make_config(window_seconds=900, max_requests_per_window=450)
    clock = SimulatedClock(0.0)
    served = iter(range(1000))

    requests_by_window: dict[int, int] = {}

    def fetch(cfg):
        window = int(clock.now() // 900)
        requests_by_window[window] = requests_by_window.get(window, 0) + 1
        clock.advance(0.05)
        try:
            i = next(served)
        except StopIteration:
            return []
        return [record(str(i), f"tweet {i}")]

    report = acquire_stream(config, lambda t: True, fetch=fetch, clock=clock)
    assert report.stored == 1000
    assert all(count <= 450 for count in requests_by_window.values())
    assert requests_by_window[0] == 450  # first window saturates


def test_backoff_then_unreachable():
    config = make_config(backoff=BackoffPolicy(initial=1.0, multiplier=2.0, cap=4.0))
    clock = SimulatedClock(0.0)

    def fetch(cfg):
        raise ConnectionError("down")

    with pytest.raises(EndpointUnreachable):
        acquire_stream(config, lambda t: True, fetch=fetch, clock=clock)
    # slept 1, 2, 4 (cap) before the final failing attempt
    assert clock.now() == pytest.approx(7.0)


def test_reconnect_counted_then_recovers():
    config = make_config(backoff=BackoffPolicy(initial=0.5, multiplier=2.0, cap=8.0))
    clock = SimulatedClock(0.0)
    calls = {"n": 0}

    def fetch(cfg):
        calls["n"] += 1
        if calls["n"] == 1:
            raise ConnectionError("hiccup")
        if calls["n"] == 2:
            return [record("1", "back online")]
        return []

    report = acquire_stream(config, lambda t: True, fetch=fetch, clock=clock)
    assert report.reconnects == 1
    assert report.stored == 1


def test_load_stream_config(tmp_path):
    path = tmp_path / "stream.conf"
    path.write_text(
        "# stream settings\n"
        "endpoint = http://example.invalid/stream\n"
        "query_terms = las vegas shooting, mandalay bay\n"
        "window_seconds = 900\n"
        "max_requests_per_window = 450\n"
        "backoff_initial = 0.5\n"
    )
    config = load_stream_config(path)
    assert config.query_terms == ("las vegas shooting", "mandalay bay")
    assert config.max_requests_per_window == 450
    assert config.backoff.initial == 0.5


def test_config_requires_query_terms():
    with pytest.raises(ValueError):
        StreamConfig(endpoint="http://x", query_terms=())
