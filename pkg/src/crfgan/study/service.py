"""Study service core: scheduling, blinded serving, voting, reporting.

Pure in-process logic with injectable clock and event log; the HTTP layer
in :mod:`crfgan.study.api` is a thin adapter over this class, so every
protocol rule is testable without a server.
"""

from __future__ import annotations

import base64
import threading
import time
from typing import Dict, List, Optional

import numpy as np

from ..errors import (
    ConflictError,
    ExpiredError,
    NotFoundError,
    ValidationError,
)
from .model import (
    LIKERT_MAX,
    LIKERT_MIN,
    EventLog,
    Pair,
    PairItem,
    ScheduledPair,
    Session,
    Study,
    VoteRecord,
    new_id,
)
from .stats import chi_square_preference

DEFAULT_SESSION_TTL = 60 * 60.0   # one sitting


class StudyService:

    def __init__(self, log: Optional[EventLog] = None,
                 session_ttl: float = DEFAULT_SESSION_TTL,
                 clock=time.time):
        self.log = log or EventLog()
        self.ttl = float(session_ttl)
        self.clock = clock
        self.images: Dict[str, bytes] = {}
        self.studies: Dict[str, Study] = {}
        self.sessions: Dict[str, Session] = {}
        self._lock = threading.RLock()
        for ev in self.log.events():
            self._apply(ev, replay=True)

    # -- event plumbing ---------------------------------------------------------

    def _emit(self, event: dict) -> None:
        self.log.append(event)
        self._apply(event, replay=False)

    def _apply(self, ev: dict, replay: bool) -> None:
        kind = ev["type"]
        if kind == "image":
            self.images[ev["image_id"]] = base64.b64decode(ev["png_b64"])
        elif kind == "study":
            pairs = [Pair(pair_id=p["pair_id"], section=p["section"],
                          item_a=PairItem(p["item_a"]["image_id"],
                                          p["item_a"]["provenance"]),
                          item_b=PairItem(p["item_b"]["image_id"],
                                          p["item_b"]["provenance"]),
                          slice_index=p["slice_index"], plane=p["plane"])
                     for p in ev["pairs"]]
            self.studies[ev["study_id"]] = Study(
                study_id=ev["study_id"], name=ev["name"], pairs=pairs,
                created_at=ev["at"])
        elif kind == "session":
            schedule = [ScheduledPair(pair_id=s["pair_id"],
                                      left_item=s["left_item"])
                        for s in ev["schedule"]]
            self.sessions[ev["session_id"]] = Session(
                session_id=ev["session_id"], study_id=ev["study_id"],
                rater_id=ev["rater_id"], schedule=schedule,
                created_at=ev["at"], expires_at=ev["expires_at"])
        elif kind == "vote":
            sess = self.sessions[ev["session_id"]]
            for sp in sess.schedule:
                if sp.pair_id == ev["pair_id"]:
                    sp.answered = True
            sess.votes.append(VoteRecord(
                pair_id=ev["pair_id"], side=ev["side"],
                resolved=ev["resolved"], likert=ev.get("likert"),
                latency_ms=ev.get("latency_ms", 0.0), at=ev["at"]))
            if ev.get("completed"):
                sess.completed_at = ev["at"]

    # -- content ----------------------------------------------------------------

    def add_image(self, png: bytes, image_id: Optional[str] = None) -> str:
        with self._lock:
            image_id = image_id or new_id("img")
            if image_id in self.images:
                raise ConflictError(f"image {image_id} already exists")
            self._emit({"type": "image", "image_id": image_id,
                        "png_b64": base64.b64encode(png).decode("ascii"),
                        "at": self.clock()})
            return image_id

    def create_study(self, name: str, pair_defs: List[dict]) -> Study:
        """Register a study; each pair def references stored image ids."""
        with self._lock:
            if not pair_defs:
                raise ValidationError("a study needs at least one pair")
            pairs = []
            for d in pair_defs:
                for side in ("item_a", "item_b"):
                    img = d[side]["image_id"]
                    if img not in self.images:
                        raise NotFoundError(f"unknown image {img}")
                    if not d[side].get("provenance"):
                        raise ValidationError("every item needs a provenance")
                pairs.append({"pair_id": d.get("pair_id") or new_id("pair"),
                              "section": int(d["section"]),
                              "item_a": d["item_a"], "item_b": d["item_b"],
                              "slice_index": int(d["slice_index"]),
                              "plane": d["plane"]})
            sections = {p["section"] for p in pairs}
            if not sections <= {1, 2}:
                raise ValidationError(f"sections must be 1 or 2, got {sections}")
            study_id = new_id("study")
            self._emit({"type": "study", "study_id": study_id, "name": name,
                        "pairs": pairs, "at": self.clock()})
            return self.studies[study_id]

    # -- sessions ----------------------------------------------------------------

    def _study(self, study_id: str) -> Study:
        try:
            return self.studies[study_id]
        except KeyError:
            raise NotFoundError(f"unknown study {study_id}") from None

    def _session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id}") from None

    def create_session(self, study_id: str, rater_id: str,
                       seed: Optional[int] = None) -> Session:
        with self._lock:
            study = self._study(study_id)
            if not rater_id:
                raise ValidationError("rater_id must be non-empty")
            now = self.clock()
            for s in self.sessions.values():
                if s.study_id == study_id and s.rater_id == rater_id:
                    state = s.state(now)
                    if state == "completed":
                        raise ConflictError(
                            f"rater {rater_id} already completed this study")
                    if state == "active":
                        raise ConflictError(
                            f"rater {rater_id} already has an active session")
            rng = np.random.default_rng(seed)
            order: List[ScheduledPair] = []
            for section in (1, 2):
                ids = [p.pair_id for p in study.pairs if p.section == section]
                for i in rng.permutation(len(ids)):
                    order.append(ScheduledPair(
                        pair_id=ids[i],
                        left_item="a" if rng.integers(0, 2) == 0 else "b"))
            session_id = new_id("sess")
            self._emit({"type": "session", "session_id": session_id,
                        "study_id": study_id, "rater_id": rater_id,
                        "schedule": [{"pair_id": sp.pair_id,
                                      "left_item": sp.left_item}
                                     for sp in order],
                        "at": now, "expires_at": now + self.ttl})
            return self.sessions[session_id]

    # -- serving & voting ----------------------------------------------------------

    def next_pair(self, session_id: str) -> dict:
        """The current blinded pair, or a completion marker. No provenance."""
        with self._lock:
            sess = self._session(session_id)
            now = self.clock()
            state = sess.state(now)
            if state == "expired":
                raise ExpiredError(
                    f"session {session_id} expired; the study is completed "
                    f"in one sitting")
            idx = sess.cursor
            if idx is None:
                return {"done": True, "total": len(sess.schedule)}
            sp = sess.schedule[idx]
            study = self._study(sess.study_id)
            pair = next(p for p in study.pairs if p.pair_id == sp.pair_id)
            left = pair.item_a if sp.left_item == "a" else pair.item_b
            right = pair.item_b if sp.left_item == "a" else pair.item_a
            sess.served_at = now
            return {
                "done": False,
                "pair_id": pair.pair_id,
                "index": idx,
                "total": len(sess.schedule),
                "section": pair.section,
                "requires_likert": pair.section == 1,
                "plane": pair.plane,
                "slice_index": pair.slice_index,
                "left_image_id": left.image_id,
                "right_image_id": right.image_id,
            }

    def image_png(self, image_id: str) -> bytes:
        try:
            return self.images[image_id]
        except KeyError:
            raise NotFoundError(f"unknown image {image_id}") from None

    def submit_vote(self, session_id: str, pair_id: str, side: str,
                    likert: Optional[int] = None) -> dict:
        with self._lock:
            sess = self._session(session_id)
            now = self.clock()
            state = sess.state(now)
            if state == "expired":
                raise ExpiredError(f"session {session_id} expired; votes "
                                   f"are no longer accepted")
            if state == "completed":
                raise ConflictError(f"session {session_id} already completed")
            if side not in ("left", "right"):
                raise ValidationError(f"side must be left or right, got {side!r}")
            idx = sess.cursor
            sp = sess.schedule[idx]
            if pair_id != sp.pair_id:
                answered = {s.pair_id for s in sess.schedule if s.answered}
                if pair_id in answered:
                    raise ConflictError(f"pair {pair_id} already voted")
                raise ValidationError(
                    f"pair {pair_id} is not the current pair ({sp.pair_id})")
            study = self._study(sess.study_id)
            pair = next(p for p in study.pairs if p.pair_id == pair_id)
            if pair.section == 1:
                if likert is None:
                    raise ValidationError(
                        "section-1 pairs require a likert rating")
                if not (LIKERT_MIN <= int(likert) <= LIKERT_MAX):
                    raise ValidationError(
                        f"likert must be in [{LIKERT_MIN},{LIKERT_MAX}], "
                        f"got {likert}")
            elif likert is not None:
                raise ValidationError("section-2 pairs take no likert rating")
            chose_a = (side == "left") == (sp.left_item == "a")
            chosen = pair.item_a if chose_a else pair.item_b
            latency = (now - sess.served_at) * 1000.0 if sess.served_at else 0.0
            remaining = sum(1 for s in sess.schedule if not s.answered) - 1
            self._emit({"type": "vote", "session_id": session_id,
                        "pair_id": pair_id, "side": side,
                        "resolved": chosen.provenance,
                        "likert": int(likert) if likert is not None else None,
                        "latency_ms": latency, "at": now,
                        "completed": remaining == 0})
            return {"recorded": True, "remaining": remaining,
                    "done": remaining == 0}

    # -- reporting ----------------------------------------------------------------

    def report(self, study_id: str) -> dict:
        """Aggregates over completed sessions only, so accounting is exact."""
        with self._lock:
            study = self._study(study_id)
            now = self.clock()
            sessions = [s for s in self.sessions.values()
                        if s.study_id == study_id]
            completed = [s for s in sessions if s.state(now) == "completed"]
            by_pair_sec2: Dict[str, Dict[str, int]] = {}
            model_totals: Dict[str, int] = {}
            sec1_resolved: Dict[str, int] = {}
            likert_hist = {k: 0 for k in range(LIKERT_MIN, LIKERT_MAX + 1)}
            pair_section = {p.pair_id: p.section for p in study.pairs}
            for s in completed:
                for v in s.votes:
                    if pair_section[v.pair_id] == 1:
                        sec1_resolved[v.resolved] = \
                            sec1_resolved.get(v.resolved, 0) + 1
                        if v.likert is not None:
                            likert_hist[v.likert] += 1
                    else:
                        model_totals[v.resolved] = \
                            model_totals.get(v.resolved, 0) + 1
                        d = by_pair_sec2.setdefault(v.pair_id, {})
                        d[v.resolved] = d.get(v.resolved, 0) + 1
            chi = None
            models = sorted(model_totals)
            if len(models) == 2:
                a, b = model_totals[models[0]], model_totals[models[1]]
                stat, p = chi_square_preference(a, b)
                chi = {"models": models, "votes": [a, b],
                       "statistic": stat, "p_value": p}
            per_pair = []
            if models:
                lead = models[0]
                per_pair = [d.get(lead, 0) for d in by_pair_sec2.values()]
            counts = study.section_counts
            return {
                "study_id": study_id,
                "name": study.name,
                "sections": {"1": counts[1], "2": counts[2]},
                "sessions": {
                    "completed": len(completed),
                    "active": sum(1 for s in sessions
                                  if s.state(now) == "active"),
                    "expired": sum(1 for s in sessions
                                   if s.state(now) == "expired"),
                },
                "total_votes": sum(len(s.votes) for s in completed),
                "section1_resolved": sec1_resolved,
                "likert_histogram": likert_hist,
                "model_totals": model_totals,
                "votes_per_pair_mean": float(np.mean(per_pair)) if per_pair else 0.0,
                "votes_per_pair_std": float(np.std(per_pair)) if per_pair else 0.0,
                "chi_square": chi,
            }
