"""Parsers and serializers for the challenge file formats.

Ground truth (one row per labelled box, empty coordinates for negatives):

    patientId,x,y,width,height,Target
    p01,264.0,152.0,213.0,379.0,1
    p02,,,,,0

Predictions (PredictionString holds repeating "conf x y w h" groups):

    patientId,PredictionString
    p01,0.93 264.0 152.0 213.0 379.0
    p02,

Coordinates are written with 4 decimal places by default; precision=None
switches to repr, whose shortest round-trip representation is exact.
Zero-area boxes are dropped at serialization. Sweep grids, augment box
lists, JSON run configuration and 8-bit binary PGM images round out the
interchange surface.
"""

import csv
import json
from dataclasses import dataclass, replace
from io import StringIO
from pathlib import Path

import numpy as np

from .augment import AugmentPreset, preset
from .fusion import ShrinkConfig
from .geometry import Box
from .metric import ApConfig, Detection, ImageRecord
from .nms import SweepResult

__all__ = [
    "GroundTruthRow",
    "PredictionRow",
    "parse_ground_truth",
    "serialize_ground_truth",
    "parse_predictions",
    "serialize_predictions",
    "merge_predictions",
    "to_detections",
    "from_detections",
    "serialize_sweep",
    "parse_boxes_csv",
    "serialize_boxes_csv",
    "RunConfig",
    "load_config",
    "read_pgm",
    "write_pgm",
]

GROUND_TRUTH_HEADER = ("patientId", "x", "y", "width", "height", "Target")
PREDICTIONS_HEADER = ("patientId", "PredictionString")


@dataclass(frozen=True)
class GroundTruthRow:
    patient_id: str
    box: Box | None
    target: int


@dataclass(frozen=True)
class PredictionRow:
    """All predictions for one patient as (conf, x, y, w, h) tuples."""

    patient_id: str
    entries: tuple[tuple[float, float, float, float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(tuple(e) for e in self.entries))


def _format_float(value: float, precision: int | None) -> str:
    if precision is None:
        return repr(float(value))
    return f"{float(value):.{precision}f}"


def _parse_float(token: str, context: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"{context}: {token!r} is not a number") from None


def parse_ground_truth(text: str) -> list[ImageRecord]:
    """Parse a ground-truth CSV into per-patient records.

    Rows are grouped by patientId in order of first appearance; several
    target-1 rows for one patient become several truth boxes, and target-0
    patients yield empty truth lists.
    """
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("ground truth is empty; expected a header row") from None
    if tuple(h.strip() for h in header) != GROUND_TRUTH_HEADER:
        raise ValueError(f"ground truth header must be {','.join(GROUND_TRUTH_HEADER)}")
    order: list[str] = []
    boxes: dict[str, list[Box]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 6:
            raise ValueError(f"line {line_no}: expected 6 fields, got {len(row)}")
        patient_id = row[0].strip()
        if not patient_id:
            raise ValueError(f"line {line_no}: empty patientId")
        coords = [field.strip() for field in row[1:5]]
        target = row[5].strip()
        if target not in ("0", "1"):
            raise ValueError(f"line {line_no}: Target must be 0 or 1, got {target!r}")
        if patient_id not in boxes:
            order.append(patient_id)
            boxes[patient_id] = []
        if target == "1":
            if any(c == "" for c in coords):
                raise ValueError(f"line {line_no}: Target is 1 but box coordinates are missing")
            x, y, w, h = (_parse_float(c, f"line {line_no}") for c in coords)
            try:
                boxes[patient_id].append(Box(x, y, w, h))
            except ValueError as exc:
                raise ValueError(f"line {line_no}: {exc}") from None
        elif any(c != "" for c in coords):
            raise ValueError(f"line {line_no}: Target is 0 but box coordinates are present")
    return [ImageRecord(pid, tuple(boxes[pid]), ()) for pid in order]


def serialize_ground_truth(records, precision: int | None = 4) -> str:
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GROUND_TRUTH_HEADER)
    for record in records:
        truth = [b for b in record.truth if b.w > 0 and b.h > 0]
        if not truth:
            writer.writerow([record.image_id, "", "", "", "", "0"])
            continue
        for b in truth:
            writer.writerow(
                [record.image_id]
                + [_format_float(v, precision) for v in (b.x, b.y, b.w, b.h)]
                + ["1"]
            )
    return out.getvalue()


def _parse_prediction_string(patient_id: str, text: str):
    tokens = text.split()
    if len(tokens) % 5 != 0:
        raise ValueError(
            f"patient {patient_id!r}: PredictionString must hold groups of 5 values "
            f"(conf x y w h), got {len(tokens)} values"
        )
    entries = []
    for i in range(0, len(tokens), 5):
        conf, x, y, w, h = (_parse_float(t, f"patient {patient_id!r}") for t in tokens[i:i + 5])
        if not 0.0 <= conf <= 1.0:
            raise ValueError(f"patient {patient_id!r}: confidence {conf!r} outside [0, 1]")
        if w < 0 or h < 0:
            raise ValueError(f"patient {patient_id!r}: negative box size")
        entries.append((conf, x, y, w, h))
    return entries


def parse_predictions(text: str) -> list[PredictionRow]:
    """Parse a submission CSV; duplicate patientId rows are merged."""
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("predictions file is empty; expected a header row") from None
    if tuple(h.strip() for h in header) != PREDICTIONS_HEADER:
        raise ValueError(f"predictions header must be {','.join(PREDICTIONS_HEADER)}")
    order: list[str] = []
    entries: dict[str, list] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) > 2:
            raise ValueError(f"line {line_no}: expected 2 fields, got {len(row)}")
        patient_id = row[0].strip()
        if not patient_id:
            raise ValueError(f"line {line_no}: empty patientId")
        if patient_id not in entries:
            order.append(patient_id)
            entries[patient_id] = []
        if len(row) == 2 and row[1].strip():
            entries[patient_id].extend(_parse_prediction_string(patient_id, row[1]))
    return [PredictionRow(pid, tuple(entries[pid])) for pid in order]


def serialize_predictions(rows, precision: int | None = 4) -> str:
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(PREDICTIONS_HEADER)
    for row in rows:
        groups = [
            " ".join(_format_float(v, precision) for v in entry)
            for entry in row.entries
            if entry[3] > 0 and entry[4] > 0
        ]
        writer.writerow([row.patient_id, " ".join(groups)])
    return out.getvalue()


def to_detections(row: PredictionRow, source_id: int = 0) -> list[Detection]:
    return [Detection(Box(x, y, w, h), conf, source_id) for conf, x, y, w, h in row.entries]


def from_detections(patient_id: str, detections) -> PredictionRow:
    return PredictionRow(
        patient_id,
        tuple((d.confidence, d.box.x, d.box.y, d.box.w, d.box.h) for d in detections),
    )


def merge_predictions(records, rows, source_id: int = 0) -> list[ImageRecord]:
    """Attach parsed predictions to truth records by patient id.

    Patients that appear only in the prediction rows are appended as records
    with empty truth, so their predictions still count against the score.
    """
    merged = {r.image_id: r for r in records}
    order = [r.image_id for r in records]
    for row in rows:
        dets = tuple(to_detections(row, source_id))
        if row.patient_id in merged:
            existing = merged[row.patient_id]
            merged[row.patient_id] = replace(existing, predictions=existing.predictions + dets)
        else:
            order.append(row.patient_id)
            merged[row.patient_id] = ImageRecord(row.patient_id, (), dets)
    return [merged[pid] for pid in order]


def serialize_sweep(result: SweepResult) -> str:
    """Plot-ready CSV of the sweep grid: run_label,nms_threshold,map."""
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["run_label", "nms_threshold", "map"])
    for cell in result.cells:
        writer.writerow([cell.run_label, repr(cell.nms_threshold), f"{cell.mean_ap:.6f}"])
    return out.getvalue()


def parse_boxes_csv(text: str) -> list[Box]:
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("boxes file is empty; expected a header row") from None
    if tuple(h.strip() for h in header) != ("x", "y", "w", "h"):
        raise ValueError("boxes header must be x,y,w,h")
    boxes = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"line {line_no}: expected 4 fields, got {len(row)}")
        x, y, w, h = (_parse_float(c.strip(), f"line {line_no}") for c in row)
        try:
            boxes.append(Box(x, y, w, h))
        except ValueError as exc:
            raise ValueError(f"line {line_no}: {exc}") from None
    return boxes


def serialize_boxes_csv(boxes, precision: int | None = 4) -> str:
    out = StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "y", "w", "h"])
    for b in boxes:
        writer.writerow([_format_float(v, precision) for v in (b.x, b.y, b.w, b.h)])
    return out.getvalue()


@dataclass(frozen=True)
class RunConfig:
    """Configuration bundle carried by a JSON config file."""

    ap: ApConfig = ApConfig()
    shrink: ShrinkConfig = ShrinkConfig()
    augment: AugmentPreset | None = None


def _build_from_dict(cls, data: dict, context: str):
    valid = set(cls.__dataclass_fields__)
    unknown = set(data) - valid
    if unknown:
        raise ValueError(f"{context}: unknown keys {sorted(unknown)}")
    return cls(**data)


def load_config(text: str) -> RunConfig:
    """Parse a JSON config carrying ApConfig, ShrinkConfig and preset overrides.

    The "augment" section names a preset and may override any of its fields:
    {"augment": {"name": "heavy", "shift_frac": 0.1}}.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(data) - {"ap", "shrink", "augment"}
    if unknown:
        raise ValueError(f"config: unknown sections {sorted(unknown)}")
    ap = ApConfig()
    if "ap" in data:
        section = dict(data["ap"])
        if "thresholds" in section:
            section["thresholds"] = tuple(section["thresholds"])
        ap = _build_from_dict(ApConfig, section, "config section 'ap'")
    shrink = ShrinkConfig()
    if "shrink" in data:
        shrink = _build_from_dict(ShrinkConfig, dict(data["shrink"]), "config section 'shrink'")
    augment = None
    if "augment" in data:
        section = dict(data["augment"])
        name = section.pop("name", None)
        if name is None:
            raise ValueError("config section 'augment' needs a preset 'name'")
        base = preset(name)
        valid = set(AugmentPreset.__dataclass_fields__) - {"name"}
        unknown = set(section) - valid
        if unknown:
            raise ValueError(f"config section 'augment': unknown keys {sorted(unknown)}")
        augment = replace(base, **section)
    return RunConfig(ap, shrink, augment)


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary (P5) PGM into a float64 array scaled to [0, 1]."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    tokens = []
    i = 2
    while len(tokens) < 3:
        if i >= len(data):
            raise ValueError(f"{path}: truncated PGM header")
        ch = data[i:i + 1]
        if ch == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    i += 1  # single whitespace byte separates the header from the raster
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ValueError(f"{path}: malformed PGM header") from None
    if width <= 0 or height <= 0:
        raise ValueError(f"{path}: bad PGM dimensions {width} x {height}")
    if not 0 < maxval <= 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    raster = data[i:i + width * height]
    if len(raster) < width * height:
        raise ValueError(f"{path}: truncated PGM raster")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def write_pgm(path, img) -> None:
    """Write a [0, 1] float image as an 8-bit binary PGM."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {img.shape}")
    quantized = np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    height, width = img.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quantized.tobytes())
