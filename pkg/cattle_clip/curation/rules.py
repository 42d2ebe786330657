"""
Retention rules for candidate clips.

Fractions are computed with ``fractions.Fraction`` over the exact binary
values of the box coordinates, so the 1/2 and 2/3 boundaries are inclusive
without rounding drift.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from cattle_clip.curation.candidates import ClipCandidate
from cattle_clip.curation.tracklets import BBox

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not-applicable"

SPATIAL_THRESHOLD = Fraction(1, 2)
TEMPORAL_THRESHOLD = Fraction(2, 3)


@dataclass(frozen=True)
class RuleVerdict:
    status: str
    fraction: Optional[Fraction] = None

    @property
    def passed(self) -> bool:
        """Not-applicable counts as a pass for acceptance"""
        return self.status != FAIL

    def to_dict(self) -> dict:
        row = {"status": self.status}
        if self.fraction is not None:
            row["fraction"] = float(self.fraction)
            row["fraction_exact"] = f"{self.fraction.numerator}/{self.fraction.denominator}"
        return row


def _verdict(fraction: Fraction, threshold: Fraction) -> RuleVerdict:
    return RuleVerdict(PASS if fraction >= threshold else FAIL, fraction)


def intersection_area(a: BBox, b: BBox) -> Fraction:
    ax, ay, aw, ah = (Fraction(v) for v in a)
    bx, by, bw, bh = (Fraction(v) for v in b)
    width = min(ax + aw, bx + bw) - max(ax, bx)
    height = min(ay + ah, by + bh) - max(ay, by)
    if width <= 0 or height <= 0:
        return Fraction(0)
    return width * height


class BaseRule:
    """Base class for all retention rules"""

    name = ""

    def check(self, candidate: ClipCandidate) -> RuleVerdict:
        """
        Judge a single candidate - to be implemented by subclasses

        Args:
            candidate: Candidate clip with its focal detections
        """
        raise NotImplementedError("Subclasses must implement this method")


class SameBehaviourRule(BaseRule):
    """Every visible cohabitant must share the focal behaviour"""

    name = "rule1_same_behaviour"

    def check(self, candidate: ClipCandidate) -> RuleVerdict:
        if not candidate.cohabitant_labels:
            return RuleVerdict(NOT_APPLICABLE)
        focal = candidate.focal_label
        if focal is None:
            return RuleVerdict(FAIL)
        for _, labels in candidate.cohabitant_labels:
            if any(label != focal for label in labels):
                return RuleVerdict(FAIL)
        return RuleVerdict(PASS)


class SpatialRule(BaseRule):
    """The focal cow covers at least half of the crop, averaged over its detected frames"""

    name = "rule2_spatial"

    def __init__(self, threshold: Fraction = SPATIAL_THRESHOLD):
        self.threshold = Fraction(threshold)

    def check(self, candidate: ClipCandidate) -> RuleVerdict:
        detections = candidate.central_detections
        if not detections:
            return RuleVerdict(FAIL, Fraction(0))
        crop_area = Fraction(candidate.crop_region[2]) * Fraction(candidate.crop_region[3])
        total = sum((intersection_area(d.bbox, candidate.crop_region) for d in detections), Fraction(0))
        return _verdict(total / crop_area / len(detections), self.threshold)


class TemporalRule(BaseRule):
    """The focal behaviour is observable for at least two thirds of the window"""

    name = "rule3_temporal"

    def __init__(self, threshold: Fraction = TEMPORAL_THRESHOLD):
        self.threshold = Fraction(threshold)

    def check(self, candidate: ClipCandidate) -> RuleVerdict:
        observable_frames = {
            d.frame_index
            for d in candidate.central_detections
            if d.is_observable and candidate.start_frame <= d.frame_index < candidate.start_frame + candidate.length
        }
        return _verdict(Fraction(len(observable_frames), candidate.length), self.threshold)


RULES = (SameBehaviourRule(), SpatialRule(), TemporalRule())


def check_same_behaviour(candidate: ClipCandidate) -> RuleVerdict:
    return RULES[0].check(candidate)


def check_spatial(candidate: ClipCandidate) -> RuleVerdict:
    return RULES[1].check(candidate)


def check_temporal(candidate: ClipCandidate) -> RuleVerdict:
    return RULES[2].check(candidate)
