from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable


def digest(payload: Any) -> str:
    if not isinstance(payload, str):
        payload = json.dumps(payload, ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    phase: str
    tag: str
    payload: dict = field(default_factory=dict)

    def to_line(self) -> dict:
        return {"seq": self.seq, "phase": self.phase, "tag": self.tag,
                "payload_digest": digest(self.payload)}


class Trace:
    """Append-only, totally ordered event log of one run."""

    def __init__(self):
        self._events: list[TraceEvent] = []
        self._lock = threading.Lock()

    def add(self, phase: str, tag: str = "", **payload: Any) -> TraceEvent:
        with self._lock:
            event = TraceEvent(len(self._events), phase, tag, payload)
            self._events.append(event)
        return event

    @property
    def events(self) -> tuple[TraceEvent, ...]:
        return tuple(self._events)

    def of(self, phase: str) -> list[TraceEvent]:
        return [e for e in self._events if e.phase == phase]

    def call_tags(self) -> list[str]:
        return [e.tag for e in self._events if e.phase == "call"]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_line(), sort_keys=True) + "\n" for e in self._events)


def call_count(events: Iterable[TraceEvent]) -> int:
    return sum(1 for e in events if e.phase == "call")
