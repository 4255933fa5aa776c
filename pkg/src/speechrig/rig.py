"""Rig data model: controller map, emotion labels, and rig sequences.

A face pose is a vector of 174 scalar controller activations. The
controller map names each channel, tags it with a facial region and a
side, pairs left/right channels, and marks the channels the blink and
gaze injectors drive. Everything downstream keys off these tags; no
channel index is hard-coded anywhere in the pipeline.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DataError, MapError

RIG_WIDTH = 174
RIG_FPS = 60.0

REGIONS = ("eye", "jaw", "mouth", "teeth", "tongue", "brow", "ear", "nose", "neck")
SIDES = ("left", "right", "center")
EYE_ROLES = ("lid_closure", "gaze_horizontal", "gaze_vertical")

# Region groups used by the regional error metrics.
MOUTH_AREA_REGIONS = frozenset({"jaw", "mouth", "teeth", "tongue"})
EYE_AREA_REGIONS = frozenset({"eye", "brow"})

EMOTION_NAMES = ("neutral", "happy", "sad", "angry", "surprised", "fear", "disgusted")
N_EMOTIONS = len(EMOTION_NAMES)
_EMOTION_IDS = {name: i for i, name in enumerate(EMOTION_NAMES)}


def emotion_id(name: str) -> int:
    """Map an emotion name to its integer label (0..6)."""
    try:
        return _EMOTION_IDS[name]
    except KeyError:
        raise DataError(f"unknown emotion name: {name!r}") from None


def emotion_name(label: int) -> str:
    """Map an integer label (0..6) back to its emotion name."""
    if not 0 <= int(label) < N_EMOTIONS:
        raise DataError(f"emotion label out of range 0..6: {label}")
    return EMOTION_NAMES[int(label)]


@dataclass(frozen=True)
class ControllerEntry:
    """One named rig channel with its region/side tags and value bounds."""

    name: str
    index: int
    region: str
    side: str
    pair: int | None = None
    eye_role: str | None = None
    vmin: float = -1.0
    vmax: float = 1.0


class ControllerMap:
    """Validated, immutable collection of 174 controller entries."""

    def __init__(self, entries):
        entries = sorted(entries, key=lambda e: e.index)
        _validate_entries(entries)
        self.entries = tuple(entries)
        self._by_name = {e.name: e for e in self.entries}

    @property
    def width(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)

    def entry(self, name: str) -> ControllerEntry:
        try:
            return self._by_name[name]
        except KeyError:
            raise DataError(f"unknown controller name: {name!r}") from None

    def region_indices(self, regions) -> list[int]:
        """Sorted indices of all channels whose region is in ``regions``."""
        regions = set(regions)
        unknown = regions.difference(REGIONS)
        if unknown:
            raise DataError(f"unknown regions: {sorted(unknown)}")
        return sorted(e.index for e in self.entries if e.region in regions)

    def mouth_area_indices(self) -> list[int]:
        return self.region_indices(MOUTH_AREA_REGIONS)

    def eye_area_indices(self) -> list[int]:
        return self.region_indices(EYE_AREA_REGIONS)

    def side_indices(self, side: str) -> list[int]:
        if side not in SIDES:
            raise DataError(f"unknown side: {side!r}")
        return sorted(e.index for e in self.entries if e.side == side)

    def eye_role_indices(self, role: str) -> list[int]:
        """Sorted indices of channels carrying the given eye role."""
        if role not in EYE_ROLES:
            raise DataError(f"unknown eye role: {role!r}")
        return sorted(e.index for e in self.entries if e.eye_role == role)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-channel (vmin, vmax) arrays in index order."""
        lo = np.array([e.vmin for e in self.entries])
        hi = np.array([e.vmax for e in self.entries])
        return lo, hi

    # --- serialization ---------------------------------------------------

    def to_document(self) -> list[dict]:
        return [
            {
                "name": e.name,
                "index": e.index,
                "region": e.region,
                "side": e.side,
                "pair": e.pair,
                "eye_role": e.eye_role,
                "min": e.vmin,
                "max": e.vmax,
            }
            for e in self.entries
        ]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_document(), f, indent=1)
            f.write("\n")

    def __eq__(self, other):
        return isinstance(other, ControllerMap) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)


def _validate_entries(entries) -> None:
    n = len(entries)
    if n != RIG_WIDTH:
        raise MapError("bad-count", f"expected {RIG_WIDTH} controllers, got {n}")

    indices = [e.index for e in entries]
    if len(set(indices)) != n:
        dup = sorted({i for i in indices if indices.count(i) > 1})
        raise MapError("duplicate-index", f"duplicate controller indices: {dup}")
    if sorted(indices) != list(range(n)):
        raise MapError("bad-index", f"indices must be a permutation of 0..{n - 1}")

    names = [e.name for e in entries]
    if len(set(names)) != n:
        dup = sorted({s for s in names if names.count(s) > 1})
        raise MapError("duplicate-name", f"duplicate controller names: {dup}")

    by_index = {e.index: e for e in entries}
    for e in entries:
        if e.region not in REGIONS:
            raise MapError("bad-region", f"{e.name}: unknown region {e.region!r}")
        if e.side not in SIDES:
            raise MapError("bad-side", f"{e.name}: unknown side {e.side!r}")
        if e.eye_role is not None and e.eye_role not in EYE_ROLES:
            raise MapError("bad-eye-role", f"{e.name}: unknown eye role {e.eye_role!r}")
        if not e.vmin < e.vmax:
            raise MapError("bad-bounds", f"{e.name}: min {e.vmin} must be < max {e.vmax}")

        if e.side == "center":
            if e.pair is not None:
                raise MapError("asymmetric-pair", f"{e.name}: center channel has a pair")
            continue
        if e.pair is None:
            raise MapError("asymmetric-pair", f"{e.name}: {e.side} channel has no pair")
        mate = by_index.get(e.pair)
        if mate is None:
            raise MapError("asymmetric-pair", f"{e.name}: pair index {e.pair} not found")
        if mate.pair != e.index:
            raise MapError(
                "asymmetric-pair",
                f"{e.name} pairs {mate.name}, but {mate.name} pairs index {mate.pair}",
            )
        want = "right" if e.side == "left" else "left"
        if mate.side != want:
            raise MapError(
                "asymmetric-pair", f"{e.name} ({e.side}) paired with {mate.name} ({mate.side})"
            )

    for side in ("left", "right"):
        have = {e.eye_role for e in entries if e.side == side and e.eye_role}
        if "lid_closure" not in have:
            raise MapError("missing-eye-role", f"no lid_closure channel on {side} side")
        if not have.intersection({"gaze_horizontal", "gaze_vertical"}):
            raise MapError("missing-eye-role", f"no gaze channel on {side} side")


def _entry_from_document(obj: dict) -> ControllerEntry:
    try:
        return ControllerEntry(
            name=str(obj["name"]),
            index=int(obj["index"]),
            region=str(obj["region"]),
            side=str(obj["side"]),
            pair=None if obj.get("pair") is None else int(obj["pair"]),
            eye_role=obj.get("eye_role") or None,
            vmin=float(obj.get("min", -1.0)),
            vmax=float(obj.get("max", 1.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MapError("bad-entry", f"malformed controller entry {obj!r}: {exc}") from None


def load_controller_map_document(document) -> ControllerMap:
    """Build a ControllerMap from a parsed JSON document (list of entries)."""
    if isinstance(document, dict):
        document = document.get("controllers")
    if not isinstance(document, list):
        raise MapError("bad-document", "controller map must be a JSON array of entries")
    return ControllerMap([_entry_from_document(obj) for obj in document])


def load_controller_map(path) -> ControllerMap:
    """Load and validate a controller map JSON file."""
    try:
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
    except OSError as exc:
        raise DataError(f"cannot read controller map {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MapError("bad-document", f"controller map {path} is not valid JSON: {exc}") from None
    return load_controller_map_document(document)


def default_map() -> ControllerMap:
    """The controller map shipped with the package.

    A stand-in for a production character rig: plausible channel names
    covering all nine regions with full left/right pairing. Any real rig
    can be swapped in through a map file with the same schema.
    """
    doc = resources.files("speechrig.data").joinpath("default_map.json").read_text("utf-8")
    return load_controller_map_document(json.loads(doc))


# --- rig sequences --------------------------------------------------------


@dataclass
class RigSequence:
    """Controller values over time: one row per frame, one column per channel."""

    values: np.ndarray
    fps: float = RIG_FPS

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != RIG_WIDTH:
            raise DataError(
                f"rig sequence must be (frames, {RIG_WIDTH}), got {self.values.shape}"
            )
        if not np.isfinite(self.values).all():
            raise DataError("rig sequence contains non-finite values")
        if self.fps <= 0:
            raise DataError(f"fps must be positive, got {self.fps}")

    def __len__(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "RigSequence":
        return RigSequence(self.values.copy(), self.fps)


def write_rig_csv(path, seq: RigSequence, cmap: ControllerMap | None = None) -> None:
    """Write a rig sequence as CSV: controller-name header, one row per
    frame, 9 significant digits per value."""
    names = cmap.names if cmap is not None else tuple(
        f"ch{i:03d}" for i in range(seq.values.shape[1]))
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(",".join(names) + "\n")
        for row in seq.values:
            f.write(",".join(f"{v:.9g}" for v in row) + "\n")


def read_rig_csv(path, fps: float = RIG_FPS) -> RigSequence:
    """Read a rig CSV produced by :func:`write_rig_csv`.

    A header row of names is detected and skipped; headerless numeric CSVs
    are accepted too.
    """
    with open(path, newline="", encoding="utf-8") as f:
        rows = [row for row in csv.reader(f) if row]
    if not rows:
        raise DataError(f"{path}: empty rig CSV")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: rig CSV has a header but no frames")
    try:
        values = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric rig CSV: {exc}") from None
    return RigSequence(values, fps)


# --- emotion timelines ----------------------------------------------------


def constant_timeline(label: int, n_frames: int) -> np.ndarray:
    """Timeline holding one emotion label for every frame."""
    if not 0 <= int(label) < N_EMOTIONS:
        raise DataError(f"emotion label out of range 0..6: {label}")
    return np.full(n_frames, int(label), dtype=np.int64)


def validate_timeline(labels, n_frames: int) -> np.ndarray:
    """Check a per-frame label array against the output frame count."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or len(labels) != n_frames:
        raise DataError(
            f"emotion timeline has {labels.shape} labels, expected ({n_frames},)"
        )
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= N_EMOTIONS:
        raise DataError("emotion timeline contains labels outside 0..6")
    return labels


def timeline_from_rows(rows, n_frames: int) -> np.ndarray:
    """Expand sparse (frame, label) rows to a dense per-frame timeline.

    Each label holds from its frame until the next row (step-hold). The
    first row must be at frame 0 so every output frame is covered.
    """
    rows = sorted((int(f), int(lab)) for f, lab in rows)
    if not rows:
        raise DataError("emotion timeline has no rows")
    if rows[0][0] != 0:
        raise DataError("emotion timeline must start at frame 0")
    labels = np.empty(n_frames, dtype=np.int64)
    for k, (frame, lab) in enumerate(rows):
        if not 0 <= lab < N_EMOTIONS:
            raise DataError(f"emotion timeline label out of range 0..6: {lab}")
        if frame >= n_frames:
            break
        end = rows[k + 1][0] if k + 1 < len(rows) else n_frames
        labels[frame:min(end, n_frames)] = lab
    return labels
