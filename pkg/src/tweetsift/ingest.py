"""Tweet acquisition: stream/replay client, rate limiting, and corpus storage.

The corpus store is a directory with two line-aligned files: ``raw.jsonl``
(the serialized records exactly as received, one per line) and ``text.txt``
(the extracted tweet text, one line per record). The raw file is the write-
ahead source of truth; a repair scan on open re-derives any text lines lost
to a crash between the two appends.
"""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .clock import SystemClock
from .preprocess import HASHTAG_RE, MENTION_RE, URL_RE

RAW_FILENAME = "raw.jsonl"
TEXT_FILENAME = "text.txt"

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
# Classic streaming timestamps look like "Wed Oct 04 15:12:32 +0000 2017";
# replay fixtures use ISO 8601.
_CREATED_AT_FORMAT = "%a %b %d %H:%M:%S %z %Y"


class MalformedRecord(ValueError):
    """Record could not be parsed; callers skip it and count it."""


class EndpointUnreachable(ConnectionError):
    """Reconnect backoff hit its cap and the endpoint still failed."""


class AuthRejected(PermissionError):
    """The endpoint rejected credentials; not retried."""


class StoreInconsistent(RuntimeError):
    """Corpus store files disagree in a way the repair scan cannot fix."""


@dataclass(frozen=True)
class RawTweet:
    id: str
    created_at: datetime
    text: str
    hashtags: tuple[str, ...]
    mentions: tuple[str, ...]
    urls: tuple[str, ...]
    is_retweet: bool
    raw: str


@dataclass(frozen=True)
class BackoffPolicy:
    initial: float = 1.0
    multiplier: float = 2.0
    cap: float = 60.0


@dataclass(frozen=True)
class StreamConfig:
    endpoint: str
    query_terms: tuple[str, ...]
    window_seconds: int = 900
    max_requests_per_window: int = 450
    backoff: BackoffPolicy = field(default_factory=BackoffPolicy)

    def __post_init__(self):
        if not self.query_terms:
            raise ValueError("query_terms must be non-empty")
        if self.window_seconds < 1:
            raise ValueError("window_seconds must be >= 1")
        if self.max_requests_per_window < 1:
            raise ValueError("max_requests_per_window must be >= 1")


@dataclass(frozen=True)
class RateLimiterState:
    window_start: float
    requests_in_window: int = 0

    @classmethod
    def initial(cls, now: float) -> "RateLimiterState":
        return cls(window_start=now, requests_in_window=0)


@dataclass
class RunReport:
    stored: int = 0
    skipped: int = 0
    duplicates: int = 0
    requests: int = 0
    reconnects: int = 0


def parse_created_at(value) -> datetime:
    if value is None:
        return _EPOCH
    if isinstance(value, (int, float)):
        return datetime.fromtimestamp(value, tz=timezone.utc)
    for parser in (datetime.fromisoformat, _parse_classic_timestamp):
        try:
            parsed = parser(value)
        except ValueError:
            continue
        if parsed.tzinfo is None:
            parsed = parsed.replace(tzinfo=timezone.utc)
        return parsed.astimezone(timezone.utc)
    raise MalformedRecord(f"unparseable created_at: {value!r}")


def _parse_classic_timestamp(value: str) -> datetime:
    return datetime.strptime(value, _CREATED_AT_FORMAT)


def parse_tweet(record: str) -> RawTweet:
    """Parse one serialized record into a RawTweet.

    Entity lists in the record are authoritative; pattern extraction from
    the text is the fallback when a list is absent.
    """
    record = record.rstrip("\n")
    try:
        data = json.loads(record)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedRecord("record is not an object")

    tweet_id = data.get("id_str") or data.get("id")
    if tweet_id is None or str(tweet_id) == "":
        raise MalformedRecord("record has no id")
    text = data.get("text")
    if not isinstance(text, str):
        raise MalformedRecord("record has no text")

    entities = data.get("entities") or {}
    if isinstance(entities.get("hashtags"), list):
        hashtags = [
            str(h.get("text", "")).lstrip("#").casefold()
            for h in entities["hashtags"]
            if isinstance(h, dict) and h.get("text")
        ]
    else:
        hashtags = [m.group(0)[1:].casefold() for m in HASHTAG_RE.finditer(text)]
    if isinstance(entities.get("user_mentions"), list):
        mentions = [
            str(m.get("screen_name", ""))
            for m in entities["user_mentions"]
            if isinstance(m, dict) and m.get("screen_name")
        ]
    else:
        mentions = [m.group(0)[1:] for m in MENTION_RE.finditer(text)]
    if isinstance(entities.get("urls"), list):
        urls = [
            str(u.get("expanded_url") or u.get("url") or "")
            for u in entities["urls"]
            if isinstance(u, dict) and (u.get("expanded_url") or u.get("url"))
        ]
    else:
        urls = [m.group(0) for m in URL_RE.finditer(text)]

    is_retweet = "retweeted_status" in data or text.startswith("RT ")

    return RawTweet(
        id=str(tweet_id),
        created_at=parse_created_at(data.get("created_at")),
        text=text,
        hashtags=tuple(hashtags),
        mentions=tuple(mentions),
        urls=tuple(urls),
        is_retweet=is_retweet,
        raw=record,
    )


def rate_limit_admit(
    now: float, state: RateLimiterState, config: StreamConfig
) -> tuple[float | None, RateLimiterState]:
    """Fixed-window admission decision.

    Returns ``(None, state')`` on admit, or ``(retry_at, state')`` giving the
    earliest timestamp at which admission will succeed. Windows tumble on a
    grid anchored at the state's first window_start, so the per-window cap
    is exact on aligned windows.
    """
    if now < state.window_start:
        raise ValueError("clock went backwards past window_start")
    window = config.window_seconds
    if now - state.window_start >= window:
        elapsed_windows = int((now - state.window_start) // window)
        state = RateLimiterState(
            window_start=state.window_start + elapsed_windows * window,
            requests_in_window=0,
        )
    if state.requests_in_window < config.max_requests_per_window:
        return None, replace(state, requests_in_window=state.requests_in_window + 1)
    return state.window_start + window, state


class CorpusStore:
    """Append-only raw+text store with id dedup and startup repair.

    Single writer, many readers. The raw line is flushed before the text
    line is written; ``_repair`` restores count equality after a crash.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.raw_path = self.directory / RAW_FILENAME
        self.text_path = self.directory / TEXT_FILENAME
        self.raw_path.touch()
        self.text_path.touch()
        self._repair()
        self._ids = set(t.id for t in self.iter_tweets())
        self._raw_file = open(self.raw_path, "a", encoding="utf-8")
        self._text_file = open(self.text_path, "a", encoding="utf-8")

    def _repair(self) -> None:
        raw_lines, had_partial = _read_complete_lines(self.raw_path)
        if had_partial:
            # A trailing partial raw line (no newline) was never
            # acknowledged; truncate it.
            _rewrite_lines(self.raw_path, raw_lines)
        with open(self.text_path, "r", encoding="utf-8") as f:
            text_lines = f.read().splitlines()
        if len(text_lines) > len(raw_lines):
            # Text is derived data; anything past the raw count has no
            # backing record and is dropped.
            _rewrite_lines(self.text_path, text_lines[: len(raw_lines)])
        elif len(text_lines) < len(raw_lines):
            missing = raw_lines[len(text_lines) :]
            with open(self.text_path, "a", encoding="utf-8") as f:
                for raw in missing:
                    try:
                        tweet = parse_tweet(raw)
                    except MalformedRecord as exc:
                        raise StoreInconsistent(
                            "raw store holds an unparseable record during repair"
                        ) from exc
                    f.write(_text_line(tweet.text) + "\n")

    def persist(self, tweet: RawTweet) -> bool:
        """Append tweet to both stores; returns False for duplicate ids."""
        if tweet.id in self._ids:
            return False
        self._raw_file.write(tweet.raw + "\n")
        self._raw_file.flush()
        self._text_file.write(_text_line(tweet.text) + "\n")
        self._text_file.flush()
        self._ids.add(tweet.id)
        return True

    def __contains__(self, tweet_id: str) -> bool:
        return tweet_id in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def iter_tweets(self) -> Iterator[RawTweet]:
        with open(self.raw_path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if line:
                    yield parse_tweet(line)

    def iter_texts(self) -> Iterator[str]:
        with open(self.text_path, "r", encoding="utf-8") as f:
            for line in f:
                yield line.rstrip("\n")

    def get(self, tweet_id: str) -> RawTweet:
        for tweet in self.iter_tweets():
            if tweet.id == tweet_id:
                return tweet
        raise KeyError(tweet_id)

    def close(self) -> None:
        self._raw_file.close()
        self._text_file.close()

    def __enter__(self) -> "CorpusStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _text_line(text: str) -> str:
    return re.sub(r"[\r\n  ]", " ", text)


def _read_complete_lines(path: Path) -> tuple[list[str], bool]:
    data = path.read_text(encoding="utf-8")
    if not data:
        return [], False
    lines = data.split("\n")
    had_partial = lines[-1] != ""
    lines.pop()  # either the empty tail after a final '\n' or a partial line
    return lines, had_partial


def _rewrite_lines(path: Path, lines: list[str]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")
    tmp.replace(path)


def replay_records(path) -> Iterator[str]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line:
                yield line


def _http_fetch(config: StreamConfig) -> list[str]:
    """One polling request against the streaming endpoint."""
    query = urllib.parse.urlencode({"track": ",".join(config.query_terms)})
    url = config.endpoint + ("&" if "?" in config.endpoint else "?") + query
    try:
        with urllib.request.urlopen(url, timeout=30) as resp:
            body = resp.read().decode("utf-8", errors="replace")
    except urllib.error.HTTPError as exc:
        if exc.code in (401, 403):
            raise AuthRejected(f"endpoint rejected request: HTTP {exc.code}") from exc
        raise ConnectionError(f"HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise ConnectionError(str(exc)) from exc
    return [line for line in body.splitlines() if line.strip()]


def acquire_stream(
    config: StreamConfig,
    sink: Callable[[RawTweet], bool],
    *,
    replay: str | Path | None = None,
    fetch: Callable[[StreamConfig], Iterable[str]] | None = None,
    clock=None,
    max_records: int | None = None,
) -> RunReport:
    """Pull records from a replay file or the live endpoint into ``sink``.

    Live requests are gated by the fixed-window rate limiter; connection
    failures trigger exponential backoff, and a failure after backing off at
    the cap raises EndpointUnreachable. An empty response body marks the
    stream as exhausted and ends the run. The sink returns False to report
    a duplicate (counted, not re-stored).
    """
    report = RunReport()

    def deliver(record: str) -> None:
        try:
            tweet = parse_tweet(record)
        except MalformedRecord:
            report.skipped += 1
            return
        if sink(tweet):
            report.stored += 1
        else:
            report.duplicates += 1

    if replay is not None:
        for record in replay_records(replay):
            deliver(record)
            if max_records is not None and report.stored >= max_records:
                break
        return report

    clock = clock or SystemClock()
    fetch = fetch or _http_fetch
    limiter = RateLimiterState.initial(clock.now())
    delay = config.backoff.initial
    at_cap_failure = False
    while max_records is None or report.stored < max_records:
        retry_at, limiter = rate_limit_admit(clock.now(), limiter, config)
        if retry_at is not None:
            clock.sleep(retry_at - clock.now())
            continue
        report.requests += 1
        try:
            records = list(fetch(config))
        except AuthRejected:
            raise
        except ConnectionError as exc:
            if at_cap_failure:
                raise EndpointUnreachable(str(exc)) from exc
            report.reconnects += 1
            clock.sleep(delay)
            if delay >= config.backoff.cap:
                at_cap_failure = True
            delay = min(delay * config.backoff.multiplier, config.backoff.cap)
            continue
        delay = config.backoff.initial
        at_cap_failure = False
        if not records:
            return report
        for record in records:
            deliver(record)
    return report


def load_stream_config(path) -> StreamConfig:
    """Read a key/value config file (``key = value`` lines, '#' comments)."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    if "endpoint" not in values:
        raise ValueError("config missing endpoint")
    terms = tuple(
        t.strip() for t in values.get("query_terms", "").split(",") if t.strip()
    )
    backoff = BackoffPolicy(
        initial=float(values.get("backoff_initial", 1.0)),
        multiplier=float(values.get("backoff_multiplier", 2.0)),
        cap=float(values.get("backoff_cap", 60.0)),
    )
    return StreamConfig(
        endpoint=values["endpoint"],
        query_terms=terms,
        window_seconds=int(values.get("window_seconds", 900)),
        max_requests_per_window=int(values.get("max_requests_per_window", 450)),
        backoff=backoff,
    )
