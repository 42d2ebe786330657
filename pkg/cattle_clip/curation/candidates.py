"""Fixed-length candidate windows cut from each track."""

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from cattle_clip.curation.tracklets import EDGE_TOLERANCE, BBox, Detection
from cattle_clip.errors import DataError

CROP_MARGIN = 0.10


@dataclass(frozen=True)
class ClipCandidate:
    """
    ``cohabitant_labels`` holds, per frame index of the window, the labels of
    the other tracks whose boxes intersect the crop. None means no cohabitant
    was ever seen.
    """

    track_id: int
    start_frame: int
    length: int
    crop_region: BBox
    central_detections: Tuple[Detection, ...]
    cohabitant_labels: Optional[Tuple[Tuple[int, Tuple[Optional[str], ...]], ...]] = None

    def __post_init__(self):
        if self.length < 1:
            raise DataError(f"candidate length must be >= 1, got {self.length}")
        x, y, w, h = self.crop_region
        if x < 0 or y < 0 or w <= 0 or h <= 0 or x + w > 1 + EDGE_TOLERANCE or y + h > 1 + EDGE_TOLERANCE:
            raise DataError(f"crop region {self.crop_region} lies outside the frame")

    @property
    def candidate_id(self) -> str:
        return f"t{self.track_id}_f{self.start_frame}"

    @property
    def focal_label(self) -> Optional[str]:
        """Most frequent focal label; ties go to the first seen"""
        labels = [d.behaviour_label for d in self.central_detections if d.behaviour_label]
        if not labels:
            return None
        return Counter(labels).most_common(1)[0][0]


def union_bbox(boxes: Sequence[BBox]) -> BBox:
    x0 = min(b[0] for b in boxes)
    y0 = min(b[1] for b in boxes)
    x1 = max(b[0] + b[2] for b in boxes)
    y1 = max(b[1] + b[3] for b in boxes)
    return (x0, y0, x1 - x0, y1 - y0)


def expand_and_clamp(bbox: BBox, margin: float = CROP_MARGIN) -> BBox:
    """Grow width and height by ``margin`` around the centre, then clip to the frame"""
    x, y, w, h = bbox
    dx, dy = w * margin / 2, h * margin / 2
    x0, y0 = max(0.0, x - dx), max(0.0, y - dy)
    x1, y1 = min(1.0, x + w + dx), min(1.0, y + h + dy)
    return (x0, y0, x1 - x0, y1 - y0)


def intersects(a: BBox, b: BBox) -> bool:
    return a[0] < b[0] + b[2] and b[0] < a[0] + a[2] and a[1] < b[1] + b[3] and b[1] < a[1] + a[3]


def _cohabitants(
    track_id: int, start: int, length: int, crop: BBox, by_frame: Mapping[int, List[Detection]]
) -> Optional[Tuple[Tuple[int, Tuple[Optional[str], ...]], ...]]:
    rows = []
    for frame in range(start, start + length):
        labels = tuple(
            d.behaviour_label
            for d in by_frame.get(frame, ())
            if d.track_id != track_id and intersects(d.bbox, crop)
        )
        if labels:
            rows.append((frame, labels))
    return tuple(rows) if rows else None


def extract_candidates(
    tracklets: Mapping[int, Sequence[Detection]], clip_len: int = 50, stride: Optional[int] = None
) -> List[ClipCandidate]:
    """
    Cut every track into windows of ``clip_len`` frames, starting at the
    track's first detection and advancing by ``stride`` (default ``clip_len``).
    Windows without a focal detection are skipped.
    """
    stride = clip_len if stride is None else stride
    if clip_len < 1 or stride < 1:
        raise DataError(f"clip_len and stride must be >= 1, got {clip_len} and {stride}")
    by_frame: Dict[int, List[Detection]] = {}
    for detections in tracklets.values():
        for d in detections:
            by_frame.setdefault(d.frame_index, []).append(d)

    candidates = []
    for track_id in sorted(tracklets):
        detections = sorted(tracklets[track_id], key=lambda d: d.frame_index)
        if not detections:
            continue
        start, last = detections[0].frame_index, detections[-1].frame_index
        while start <= last:
            window = tuple(d for d in detections if start <= d.frame_index < start + clip_len)
            if window:
                crop = expand_and_clamp(union_bbox([d.bbox for d in window]))
                candidates.append(
                    ClipCandidate(
                        track_id=track_id,
                        start_frame=start,
                        length=clip_len,
                        crop_region=crop,
                        central_detections=window,
                        cohabitant_labels=_cohabitants(track_id, start, clip_len, crop, by_frame),
                    )
                )
            start += stride
    return candidates
