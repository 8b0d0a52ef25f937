"""Chat-completion backends: an OpenAI-compatible HTTP client and a
transcript-replaying scripted backend used for deterministic runs."""

from __future__ import annotations

import fnmatch
import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from .errors import BackendError

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
RETRYABLE_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    tag: str = ""
    temperature: float = 0.0
    max_tokens: int = 2048

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a request needs at least one message")
        if self.messages[-1].role != "user":
            raise ValueError("the last message must come from the user")
        for m in self.messages:
            if m.role not in ROLES:
                raise ValueError(f"bad message role {m.role!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def text(self) -> str:
        return "\n".join(m.content for m in self.messages)

    def digest(self) -> str:
        payload = json.dumps([[m.role, m.content] for m in self.messages], ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def wire_messages(self) -> list[dict]:
        return [{"role": m.role, "content": m.content} for m in self.messages]


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptEntry:
    """One canned reply.

    ``tag`` is a glob pattern over request tags and ``contains`` a substring
    that must occur in the request text; either may be omitted.
    """

    response: str
    tag: str | None = None
    contains: str | None = None
    request_digest: str | None = None

    def matches(self, request: ChatRequest) -> bool:
        if self.tag is not None and not fnmatch.fnmatchcase(request.tag, self.tag):
            return False
        if self.contains is not None and self.contains not in request.text:
            return False
        return True

    def to_dict(self) -> dict:
        d: dict = {"tag": self.tag, "request_digest": self.request_digest, "response": self.response}
        if self.contains is not None:
            d["contains"] = self.contains
        return d


def load_transcript(path: str | Path) -> list[TranscriptEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                raw = json.loads(line)
                entries.append(
                    TranscriptEntry(
                        response=raw["response"],
                        tag=raw.get("tag"),
                        contains=raw.get("contains"),
                        request_digest=raw.get("request_digest"),
                    )
                )
    return entries


def dump_transcript(entries: Iterable[TranscriptEntry]) -> str:
    return "".join(json.dumps(e.to_dict(), ensure_ascii=False) + "\n" for e in entries)


def save_transcript(entries: Iterable[TranscriptEntry], path: str | Path) -> None:
    Path(path).write_text(dump_transcript(entries), encoding="utf-8")


def _approx_tokens(text: str) -> int:
    return len(text.split())


class ScriptedBackend:
    """Replays a transcript.

    In strict mode each request must match the next unconsumed entry. In
    lenient mode the first matching unconsumed entry is used, falling back to
    the first matching entry when all matches were consumed already.
    """

    def __init__(self, entries: Sequence[TranscriptEntry], strict: bool = True,
                 check_digests: bool = True):
        self.entries = list(entries)
        self.strict = strict
        self.check_digests = check_digests
        self.consumed = [False] * len(self.entries)
        self.requests: list[ChatRequest] = []
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "ScriptedBackend":
        return cls(load_transcript(path), **kwargs)

    @property
    def calls(self) -> int:
        return len(self.requests)

    def remaining(self) -> list[int]:
        return [i for i, used in enumerate(self.consumed) if not used]

    def _pick(self, request: ChatRequest) -> int:
        if self.strict:
            i = self._cursor
            if i >= len(self.entries):
                raise BackendError("Unmatched", f"transcript exhausted at {request.tag!r}",
                                   tag=request.tag)
            entry = self.entries[i]
            if not entry.matches(request):
                raise BackendError(
                    "Unmatched",
                    f"entry {i} (tag {entry.tag!r}) does not match request {request.tag!r}",
                    tag=request.tag,
                )
            if self.check_digests and entry.request_digest and entry.request_digest != request.digest():
                raise BackendError("Unmatched", f"entry {i}: request digest differs",
                                   tag=request.tag)
            self._cursor += 1
            return i
        first = None
        for i, entry in enumerate(self.entries):
            if entry.matches(request):
                if not self.consumed[i]:
                    return i
                if first is None:
                    first = i
        if first is None:
            raise BackendError("Unmatched", f"no entry for {request.tag!r}", tag=request.tag)
        return first

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.requests.append(request)
            i = self._pick(request)
            self.consumed[i] = True
            text = self.entries[i].response
        return ChatResponse(text, _approx_tokens(request.text), _approx_tokens(text), 0.0)


class RecordingBackend:
    """Wraps another backend and keeps every exchange as a transcript entry."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.entries: list[TranscriptEntry] = []
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        with self._lock:
            self.entries.append(
                TranscriptEntry(response=response.content, tag=request.tag,
                                request_digest=request.digest())
            )
        return response


def record_session(recorder: RecordingBackend, path: str | Path) -> int:
    """Write the recorder's transcript to ``path``; returns the entry count."""
    save_transcript(recorder.entries, path)
    return len(recorder.entries)


# ---------------------------------------------------------------------------
# remote
# ---------------------------------------------------------------------------


class RemoteBackend:
    """OpenAI-compatible ``/chat/completions`` client with retries."""

    def __init__(
        self,
        base_url: str | None = None,
        model: str = "deepseek-chat",
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 3,
        backoff_base: float = 1.0,
        backoff_max: float = 30.0,
        seed: int = 0,
        sleep: Callable[[float], None] = time.sleep,
        client=None,
    ):
        import httpx

        self.base_url = (base_url or os.environ.get("TOR_BASE_URL") or "https://api.deepseek.com/v1").rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get("TOR_API_KEY", "")
        self.timeout = timeout
        self.retries = retries
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self.sleep = sleep
        self.attempts = 0
        self._rng = random.Random(seed)
        self._rng_lock = threading.Lock()
        self._httpx = httpx
        self._client = client or httpx.Client(timeout=timeout)

    def _delay(self, attempt: int, retry_after: str | None) -> float:
        if retry_after:
            try:
                return min(self.backoff_max, max(0.0, float(retry_after)))
            except ValueError:
                pass
        with self._rng_lock:
            jitter = 0.5 + 0.5 * self._rng.random()
        return min(self.backoff_max, self.backoff_base * 2**attempt) * jitter

    def complete(self, request: ChatRequest) -> ChatResponse:
        httpx = self._httpx
        body = {
            "model": self.model,
            "messages": request.wire_messages(),
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stream": False,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.base_url + "/chat/completions"
        last: BackendError | None = None
        for attempt in range(self.retries + 1):
            self.attempts += 1
            start = time.perf_counter()
            retry_after = None
            try:
                resp = self._client.post(url, json=body, headers=headers, timeout=self.timeout)
            except httpx.TimeoutException as exc:
                last = BackendError("Timeout", str(exc), tag=request.tag)
            except httpx.TransportError as exc:
                last = BackendError("Http", f"transport error: {exc}", tag=request.tag)
            else:
                if resp.status_code == 200:
                    return self._decode(resp, request, start)
                last = BackendError("Http", resp.text[:200], status=resp.status_code, tag=request.tag)
                if resp.status_code not in RETRYABLE_STATUS:
                    raise last
                retry_after = resp.headers.get("Retry-After")
            if attempt < self.retries:
                delay = self._delay(attempt, retry_after)
                log.warning("%s: attempt %d failed (%s), retrying in %.2fs",
                            request.tag, attempt + 1, last, delay)
                self.sleep(delay)
        raise BackendError("Exhausted", f"{self.retries} retries: {last}", tag=request.tag)

    def _decode(self, resp, request: ChatRequest, start: float) -> ChatResponse:
        try:
            data = resp.json()
            content = data["choices"][0]["message"].get("content") or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError("Http", f"malformed response body: {exc}", status=resp.status_code,
                               tag=request.tag) from exc
        usage = data.get("usage") or {}
        return ChatResponse(
            content,
            int(usage.get("prompt_tokens", 0)),
            int(usage.get("completion_tokens", 0)),
            (time.perf_counter() - start) * 1000.0,
        )
