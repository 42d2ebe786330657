import asyncio
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from cattle_clip.curation.candidates import ClipCandidate, extract_candidates
from cattle_clip.curation.rules import RULES, RuleVerdict
from cattle_clip.curation.tracklets import Detection
from cattle_clip.data.manifest import DEFAULT_CATEGORIES, ClipRecord, Manifest, write_manifest
from cattle_clip.errors import ConfigError
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurationConfig:
    """
    Windowing and record settings. ``stride`` of None means non-overlapping
    windows; ``frame_source`` is written into every emitted record and names
    the source frames the crops refer to.
    """

    clip_len: int = 50
    stride: Optional[int] = None
    fps: float = 25.0
    frame_source: str = "frames"
    camera_id: Optional[str] = None

    def __post_init__(self):
        if self.clip_len < 1:
            raise ConfigError(f"curation.clip_len must be >= 1, got {self.clip_len}")
        if self.stride is not None and self.stride < 1:
            raise ConfigError(f"curation.stride must be >= 1, got {self.stride}")
        if self.fps <= 0:
            raise ConfigError(f"curation.fps must be positive, got {self.fps}")


@dataclass(frozen=True)
class RuleReport:
    candidate_id: str
    track_id: int
    start_frame: int
    label: Optional[str]
    rule1_same_behaviour: RuleVerdict
    rule2_spatial: RuleVerdict
    rule3_temporal: RuleVerdict

    @property
    def accepted(self) -> bool:
        return all(v.passed for v in (self.rule1_same_behaviour, self.rule2_spatial, self.rule3_temporal))

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "track_id": self.track_id,
            "start_frame": self.start_frame,
            "label": self.label,
            "rule1_same_behaviour": self.rule1_same_behaviour.to_dict(),
            "rule2_spatial": self.rule2_spatial.to_dict(),
            "rule3_temporal": self.rule3_temporal.to_dict(),
            "accepted": self.accepted,
        }


@dataclass
class CurationResult:
    candidates: List[ClipCandidate] = field(default_factory=list)
    reports: List[RuleReport] = field(default_factory=list)
    manifest: Manifest = field(default_factory=Manifest)

    def crop_records(self) -> List[dict]:
        accepted = {r.clip_id for r in self.manifest.records}
        return [
            {
                "clip_id": c.candidate_id,
                "track_id": c.track_id,
                "start_frame": c.start_frame,
                "length": c.length,
                "crop_region": list(c.crop_region),
            }
            for c in self.candidates
            if c.candidate_id in accepted
        ]


def judge_candidate(candidate: ClipCandidate) -> RuleReport:
    same, spatial, temporal = (rule.check(candidate) for rule in RULES)
    return RuleReport(
        candidate_id=candidate.candidate_id,
        track_id=candidate.track_id,
        start_frame=candidate.start_frame,
        label=candidate.focal_label,
        rule1_same_behaviour=same,
        rule2_spatial=spatial,
        rule3_temporal=temporal,
    )


class Curator(FileManager):
    """Turns tracklets into accepted clip records and a per-candidate report"""

    def __init__(
        self,
        output_files_path: str = "",
        config: CurationConfig = CurationConfig(),
        categories: Sequence[str] = DEFAULT_CATEGORIES,
    ):
        super().__init__("", output_files_path)
        self.config = config
        self.categories = tuple(categories)

    async def _check_single_candidate(self, candidate: ClipCandidate) -> RuleReport:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, judge_candidate, candidate)

    def _record_for(self, candidate: ClipCandidate, report: RuleReport) -> Optional[ClipRecord]:
        if not report.accepted:
            return None
        if report.label not in self.categories:
            logger.warning("Candidate %s passes every rule but has label %r, skipped", report.candidate_id, report.label)
            return None
        return ClipRecord(
            clip_id=candidate.candidate_id,
            frame_source=self.config.frame_source,
            label=report.label,
            num_frames=candidate.length,
            fps=self.config.fps,
            camera_id=self.config.camera_id,
        )

    async def curate(self, tracklets: Mapping[int, Sequence[Detection]]) -> CurationResult:
        """
        Extract candidates and check them concurrently; reports keep
        extraction order.
        """
        candidates = extract_candidates(tracklets, self.config.clip_len, self.config.stride)
        if not candidates:
            logger.info("No candidates found")
            return CurationResult(manifest=Manifest(categories=self.categories))
        logger.info("Found %d candidates to check", len(candidates))
        reports = await asyncio.gather(*(self._check_single_candidate(c) for c in candidates))
        records = [r for r in (self._record_for(c, rep) for c, rep in zip(candidates, reports)) if r is not None]
        logger.info("Accepted %d of %d candidates", len(records), len(candidates))
        return CurationResult(
            candidates=list(candidates),
            reports=list(reports),
            manifest=Manifest(records=tuple(records), categories=self.categories),
        )

    async def write_outputs(self, result: CurationResult) -> Dict[str, str]:
        """Manifest fragment, crop metadata and the rule report"""
        await self.ensure_output_directory()
        return {
            "manifest": await write_manifest(result.manifest, self.output_files_path),
            "crops": await self.write_jsonl("crops.jsonl", result.crop_records()),
            "report": await self.write_jsonl("report.jsonl", [r.to_dict() for r in result.reports]),
        }


async def curate(
    tracklets: Mapping[int, Sequence[Detection]],
    config: CurationConfig = CurationConfig(),
    categories: Sequence[str] = DEFAULT_CATEGORIES,
) -> CurationResult:
    return await Curator(config=config, categories=categories).curate(tracklets)


async def write_curation_outputs(result: CurationResult, output_dir: str) -> Dict[str, str]:
    return await Curator(output_dir, categories=result.manifest.categories).write_outputs(result)
