"""Study domain objects and the append-only event store.

A study holds pairs; each pair holds two items whose provenance (real or
model name) exists only server-side. Sessions own a per-rater schedule
with randomized order and left/right placement. Every state change is an
event appended to the log, so a service can replay its full state.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..errors import ValidationError

LIKERT_MIN = 1
LIKERT_MAX = 5
LIKERT_LABELS = {
    1: "extremely subtle", 2: "subtle", 3: "moderate",
    4: "clear", 5: "obvious",
}


@dataclass(frozen=True)
class PairItem:
    image_id: str
    provenance: str        # "real", or a model name; never serialized to raters


@dataclass(frozen=True)
class Pair:
    pair_id: str
    section: int           # 1: real-vs-synthetic + likert, 2: model-vs-model
    item_a: PairItem
    item_b: PairItem
    slice_index: int
    plane: str

    def __post_init__(self):
        if self.section not in (1, 2):
            raise ValidationError(f"section must be 1 or 2, got {self.section}")


@dataclass
class Study:
    study_id: str
    name: str
    pairs: List[Pair]
    created_at: float

    @property
    def section_counts(self) -> Dict[int, int]:
        counts = {1: 0, 2: 0}
        for p in self.pairs:
            counts[p.section] += 1
        return counts


@dataclass
class ScheduledPair:
    pair_id: str
    left_item: str         # "a" or "b": which item sits on the left
    answered: bool = False


@dataclass
class VoteRecord:
    pair_id: str
    side: str              # "left" | "right"
    resolved: str          # provenance of the chosen item
    likert: Optional[int]
    latency_ms: float
    at: float


@dataclass
class Session:
    session_id: str
    study_id: str
    rater_id: str
    schedule: List[ScheduledPair]
    created_at: float
    expires_at: float
    votes: List[VoteRecord] = field(default_factory=list)
    completed_at: Optional[float] = None
    served_at: Optional[float] = None

    def state(self, now: Optional[float] = None) -> str:
        now = time.time() if now is None else now
        if self.completed_at is not None:
            return "completed"
        if now >= self.expires_at:
            return "expired"
        return "active"

    @property
    def cursor(self) -> Optional[int]:
        for i, sp in enumerate(self.schedule):
            if not sp.answered:
                return i
        return None


class EventLog:
    """Append-only JSONL event log with atomic line appends."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._lock = threading.Lock()
        self._events: List[dict] = []
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        self._events.append(json.loads(line))

    def append(self, event: dict) -> None:
        with self._lock:
            self._events.append(event)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(event, sort_keys=True,
                                       separators=(",", ":")) + "\n")
                    f.flush()
                    os.fsync(f.fileno())

    def events(self) -> List[dict]:
        with self._lock:
            return list(self._events)


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"
