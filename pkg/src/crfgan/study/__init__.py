from .api import create_app
from .images import PLANES, extract_slice, png_to_array, slice_to_png
from .model import (
    LIKERT_LABELS,
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
from .service import DEFAULT_SESSION_TTL, StudyService
from .simulate import (
    exact_preference_schedule,
    placement_frequency,
    provenance_map,
    register_definition,
    sample_likert,
    simulate_study,
    study_definition_from_volumes,
)
from .stats import chi2_sf, chi_square_preference, gammaincc

__all__ = [
    "create_app",
    "PLANES",
    "extract_slice",
    "png_to_array",
    "slice_to_png",
    "LIKERT_LABELS",
    "LIKERT_MAX",
    "LIKERT_MIN",
    "EventLog",
    "Pair",
    "PairItem",
    "ScheduledPair",
    "Session",
    "Study",
    "VoteRecord",
    "new_id",
    "DEFAULT_SESSION_TTL",
    "StudyService",
    "exact_preference_schedule",
    "placement_frequency",
    "provenance_map",
    "register_definition",
    "sample_likert",
    "simulate_study",
    "study_definition_from_volumes",
    "chi2_sf",
    "chi_square_preference",
    "gammaincc",
]
