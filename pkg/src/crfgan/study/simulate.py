"""Simulated raters for exercising the study protocol end to end.

The simulator builds a study definition from voxel volumes, walks real
sessions through the blinded API surface, and votes with a configurable
preference. Because it authored the study it can resolve image ids back
to provenance; the service itself never reveals that mapping.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import DomainError
from .images import slice_to_png
from .model import LIKERT_MAX, LIKERT_MIN, Study
from .service import StudyService

LIKERT_WEIGHTS = (0.05, 0.15, 0.30, 0.30, 0.20)   # leans toward visible


def study_definition_from_volumes(
        real: np.ndarray,
        fake_by_model: Dict[str, np.ndarray],
        n_section1: int = 10,
        n_section2: int = 30,
        plane: str = "axial",
        seed: int = 0,
        section1_model: Optional[str] = None) -> List[dict]:
    """Build HTTP-shaped pair definitions (png_b64 + provenance).

    Section 1 pairs a real volume against a synthetic one; section 2 pairs
    the two models against each other. Volumes are cycled when a section
    asks for more pairs than there are samples.
    """
    if real.ndim != 5 or real.shape[1] != 1:
        raise DomainError(f"expected volumes [N,1,D,H,W], got {real.shape}")
    models = sorted(fake_by_model)
    if not models:
        raise DomainError("need at least one model")
    if n_section2 > 0 and len(models) != 2:
        raise DomainError("section 2 compares exactly two models")
    rng = np.random.default_rng(seed)
    depth = real.shape[2]

    def png(vol_5d: np.ndarray, idx: int) -> str:
        import base64
        data = slice_to_png(vol_5d[idx, 0], plane, depth // 2)
        return base64.b64encode(data).decode("ascii")

    defs = []
    lead = section1_model or models[0]
    if lead not in fake_by_model:
        raise DomainError(f"unknown section-1 model {lead!r}")
    for i in range(n_section1):
        a = {"png_b64": png(real, i % real.shape[0]), "provenance": "real"}
        b = {"png_b64": png(fake_by_model[lead],
                            i % fake_by_model[lead].shape[0]),
             "provenance": lead}
        defs.append({"section": 1, "plane": plane,
                     "slice_index": depth // 2,
                     "item_a": a, "item_b": b})
    for i in range(n_section2):
        m0, m1 = models
        defs.append({
            "section": 2, "plane": plane, "slice_index": depth // 2,
            "item_a": {"png_b64": png(fake_by_model[m0],
                                      i % fake_by_model[m0].shape[0]),
                       "provenance": m0},
            "item_b": {"png_b64": png(fake_by_model[m1],
                                      i % fake_by_model[m1].shape[0]),
                       "provenance": m1},
        })
    rng.shuffle(defs)   # creation order carries no signal
    return defs


def register_definition(service: StudyService, name: str,
                        pair_defs: List[dict]) -> Study:
    """Load HTTP-shaped pair definitions into a service directly."""
    import base64

    core_defs = []
    for d in pair_defs:
        entry = {"section": d["section"], "plane": d["plane"],
                 "slice_index": d["slice_index"]}
        for side in ("item_a", "item_b"):
            png = base64.b64decode(d[side]["png_b64"])
            entry[side] = {"image_id": service.add_image(png),
                           "provenance": d[side]["provenance"]}
        core_defs.append(entry)
    return service.create_study(name, core_defs)


def exact_preference_schedule(n_votes: int, prefer_votes: int,
                              rng: np.random.Generator) -> np.ndarray:
    """Boolean vector with exactly `prefer_votes` True entries, shuffled."""
    if not 0 <= prefer_votes <= n_votes:
        raise DomainError(f"prefer_votes {prefer_votes} outside [0,{n_votes}]")
    v = np.zeros(n_votes, dtype=bool)
    v[:prefer_votes] = True
    rng.shuffle(v)
    return v


def sample_likert(rng: np.random.Generator) -> int:
    return int(rng.choice(np.arange(LIKERT_MIN, LIKERT_MAX + 1),
                          p=LIKERT_WEIGHTS))


def simulate_study(service: StudyService,
                   study_id: str,
                   provenance_of: Dict[str, str],
                   n_raters: int = 12,
                   prefer: str = "crfgan",
                   p_prefer: float = 0.597,
                   sec1_accuracy: float = 0.75,
                   seed: int = 0,
                   prefer_total: Optional[int] = None) -> dict:
    """Run `n_raters` blinded sessions and return the study report.

    `provenance_of` maps image_id -> provenance; only the simulator holds
    it. With `prefer_total` set, exactly that many of the combined
    section-2 votes go to `prefer` (shuffled); otherwise each vote is an
    independent Bernoulli(p_prefer) draw.
    """
    rng = np.random.default_rng(seed)
    sec2_schedule: Optional[np.ndarray] = None
    sec2_i = 0
    if prefer_total is not None:
        study = service.studies[study_id]
        total = study.section_counts[2] * n_raters
        sec2_schedule = exact_preference_schedule(total, prefer_total, rng)

    for r in range(n_raters):
        sess = service.create_session(study_id, f"sim-rater-{r:03d}",
                                      seed=int(rng.integers(0, 2**31)))
        while True:
            cur = service.next_pair(sess.session_id)
            if cur["done"]:
                break
            left_prov = provenance_of[cur["left_image_id"]]
            right_prov = provenance_of[cur["right_image_id"]]
            if cur["section"] == 1:
                real_side = "left" if left_prov == "real" else "right"
                other = "right" if real_side == "left" else "left"
                side = real_side if rng.random() < sec1_accuracy else other
                service.submit_vote(sess.session_id, cur["pair_id"], side,
                                    likert=sample_likert(rng))
            else:
                if sec2_schedule is not None:
                    pick_pref = bool(sec2_schedule[sec2_i])
                    sec2_i += 1
                else:
                    pick_pref = rng.random() < p_prefer
                want = prefer if pick_pref else None
                if want is not None:
                    side = "left" if left_prov == want else "right"
                else:
                    side = "right" if left_prov == prefer else "left"
                service.submit_vote(sess.session_id, cur["pair_id"], side)
    return service.report(study_id)


def provenance_map(service: StudyService, study_id: str) -> Dict[str, str]:
    """image_id -> provenance, read from stored pairs (simulator side)."""
    study = service.studies[study_id]
    out = {}
    for p in study.pairs:
        out[p.item_a.image_id] = p.item_a.provenance
        out[p.item_b.image_id] = p.item_b.provenance
    return out


def placement_frequency(service: StudyService, study_id: str,
                        n_sessions: int, seed: int = 0) -> float:
    """Fraction of schedule slots where item_a lands on the left."""
    rng = np.random.default_rng(seed)
    left_a = 0
    total = 0
    for i in range(n_sessions):
        sess = service.create_session(
            study_id, f"balance-{seed}-{i:05d}",
            seed=int(rng.integers(0, 2**31)))
        for sp in sess.schedule:
            left_a += sp.left_item == "a"
            total += 1
    return left_a / total
