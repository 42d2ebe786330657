from cattle_clip.curation.candidates import ClipCandidate, extract_candidates
from cattle_clip.curation.curator import (
    CurationConfig,
    CurationResult,
    Curator,
    RuleReport,
    curate,
    write_curation_outputs,
)
from cattle_clip.curation.rules import (
    BaseRule,
    RuleVerdict,
    SameBehaviourRule,
    SpatialRule,
    TemporalRule,
    check_same_behaviour,
    check_spatial,
    check_temporal,
)
from cattle_clip.curation.tracklets import Detection, ingest_tracklets

__all__ = [
    "ClipCandidate",
    "extract_candidates",
    "CurationConfig",
    "CurationResult",
    "Curator",
    "RuleReport",
    "curate",
    "write_curation_outputs",
    "BaseRule",
    "RuleVerdict",
    "SameBehaviourRule",
    "SpatialRule",
    "TemporalRule",
    "check_same_behaviour",
    "check_spatial",
    "check_temporal",
    "Detection",
    "ingest_tracklets",
]
