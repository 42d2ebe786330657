import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from cattle_clip.errors import DataError
from cattle_clip.utils.file_manager import FileManager

logger = logging.getLogger(__name__)

BBox = Tuple[float, float, float, float]

# decimal boxes may overshoot the frame edge by a few ulps
EDGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Detection:
    """One tracked box; bbox is (x, y, w, h) normalised to the source frame"""

    frame_index: int
    track_id: int
    bbox: BBox
    behaviour_label: Optional[str] = None
    observable: Optional[bool] = None

    def __post_init__(self):
        bbox = tuple(float(v) for v in self.bbox)
        if not bbox_in_bounds(bbox):
            raise DataError(f"bbox {bbox} lies outside the unit frame or is empty")
        object.__setattr__(self, "bbox", clamp_to_frame(bbox))
        if self.frame_index < 0:
            raise DataError(f"frame_index must be >= 0, got {self.frame_index}")

    @property
    def is_observable(self) -> bool:
        """A detection without an explicit flag counts as observable"""
        return self.observable is not False


def bbox_in_bounds(bbox: BBox) -> bool:
    if len(bbox) != 4:
        return False
    x, y, w, h = bbox
    return (
        x >= 0
        and y >= 0
        and w > 0
        and h > 0
        and x + w <= 1 + EDGE_TOLERANCE
        and y + h <= 1 + EDGE_TOLERANCE
    )


def clamp_to_frame(bbox: BBox) -> BBox:
    """Trim width and height so the box ends inside the unit frame"""
    x, y, w, h = bbox
    return (x, y, min(w, 1.0 - x), min(h, 1.0 - y))


def _parse_detection(obj: Dict[str, Any], where: str) -> Detection:
    try:
        frame_index, track_id, bbox = obj["frame_index"], obj["track_id"], obj["bbox"]
    except KeyError as exc:
        raise DataError(f"{where}: missing key {exc.args[0]!r}") from None
    for name, value in (("frame_index", frame_index), ("track_id", track_id)):
        if not isinstance(value, int) or isinstance(value, bool):
            raise DataError(f"{where}: {name} must be an integer, got {value!r}")
    if not isinstance(bbox, list) or len(bbox) != 4 or not all(isinstance(v, (int, float)) for v in bbox):
        raise DataError(f"{where}: bbox must be a list of four numbers")
    observable = obj.get("observable")
    if observable is not None and not isinstance(observable, bool):
        raise DataError(f"{where}: observable must be a boolean")
    try:
        return Detection(frame_index, track_id, tuple(bbox), obj.get("behaviour_label"), observable)
    except DataError as exc:
        raise DataError(f"{where}: {exc}") from None


async def ingest_tracklets(path: str) -> Dict[int, List[Detection]]:
    """
    Read a tracklet file into detections grouped by track and sorted by frame.

    Raises:
        DataError: malformed line or out-of-bounds bbox, naming the line
    """
    tracks: Dict[int, List[Detection]] = defaultdict(list)
    for line_no, obj in await FileManager(path).read_jsonl():
        detection = _parse_detection(obj, f"{path}:{line_no}")
        tracks[detection.track_id].append(detection)
    for detections in tracks.values():
        detections.sort(key=lambda d: d.frame_index)
    logger.info("Read %d tracks from %s", len(tracks), path)
    return dict(sorted(tracks.items()))
