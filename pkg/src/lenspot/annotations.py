"""Ground-truth annotations: ICDAR-style text files and JSON-lines records.

Two on-disk layouts are supported:

``icdar-dir``
    A directory with one UTF-8 file ``gt_<image_id>.txt`` per image.  Each
    line is ``x1,y1,...,xk,yk,transcription`` with 4 to 16 points; the
    transcription is double-quoted when it contains commas, and ``###``
    marks a do-not-care region.  ICDAR files carry no image size, so an
    optional ``image_sizes.json`` (``{"<image_id>": [width, height]}``) may
    sit next to them; otherwise the size is taken from the annotation extent.

``jsonl``
    One object per line::

        {"image_id": str, "width": int, "height": int,
         "instances": [{"points": [[x, y], ...], "text": str}]}
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadPointCount, IgnoredInstance, IoError, ParseError, ValidationError
from .geometry import Polygon

log = logging.getLogger(__name__)

IGNORE_LABEL = "###"
FRAME_SLACK = 0.1
FORMATS = ("icdar-dir", "jsonl")


@dataclass(frozen=True)
class Transcription:
    text: str
    ignore: bool = False

    def __post_init__(self):
        if self.ignore != (self.text == IGNORE_LABEL):
            raise ValueError("ignore flag must be set exactly when the label is '###'")
        if not self.ignore and not self.text.strip():
            raise ValueError("empty transcription")

    @classmethod
    def from_raw(cls, raw: str) -> Transcription:
        text = raw.strip()
        return cls(text, text == IGNORE_LABEL)


@dataclass(frozen=True)
class TextInstance:
    polygon: Polygon
    transcription: Transcription

    @property
    def ignore(self) -> bool:
        return self.transcription.ignore


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    width: float
    height: float
    instances: tuple[TextInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if not (self.width > 0 and self.height > 0):
            raise ValidationError(f"image {self.image_id!r} has non-positive size",
                                  [f"width={self.width}, height={self.height}"])
        problems = frame_violations(self)
        if problems:
            raise ValidationError(f"image {self.image_id!r} has out-of-frame instances",
                                  problems)

    def cared(self) -> list[TextInstance]:
        """Non-ignored instances, in annotation order."""
        return [inst for inst in self.instances if not inst.ignore]


@dataclass(frozen=True)
class Dataset:
    images: tuple[ImageAnnotation, ...] = ()
    name: str = ""
    by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        seen, dupes = set(), []
        for img in self.images:
            if img.image_id in seen:
                dupes.append(f"duplicate image_id {img.image_id!r}")
            seen.add(img.image_id)
        if dupes:
            raise ValidationError(f"dataset {self.name!r} has duplicate image ids", dupes)
        object.__setattr__(self, "by_id", {img.image_id: img for img in self.images})

    def __len__(self):
        return len(self.images)

    def __iter__(self):
        return iter(self.images)


def frame_violations(ann: ImageAnnotation) -> list[str]:
    lo_x, hi_x = -FRAME_SLACK * ann.width, (1 + FRAME_SLACK) * ann.width
    lo_y, hi_y = -FRAME_SLACK * ann.height, (1 + FRAME_SLACK) * ann.height
    problems = []
    for i, inst in enumerate(ann.instances):
        x0, y0, x1, y1 = inst.polygon.bounds()
        if x0 < lo_x or x1 > hi_x or y0 < lo_y or y1 > hi_y:
            problems.append(f"instance {i} ({inst.transcription.text!r}) extends outside "
                            f"{ann.width}x{ann.height} frame")
    return problems


def char_count(t: Transcription) -> int:
    """Number of Unicode code points, ignoring leading/trailing whitespace."""
    if t.ignore:
        raise IgnoredInstance("'###' instances have no character count")
    return len(t.text.strip())


def _split_fields(line: str) -> list[str]:
    return next(csv.reader([line], skipinitialspace=False))


def parse_icdar_line(line: str) -> TextInstance:
    """Parse one ``x1,y1,...,transcription`` ground-truth line."""
    line = line.lstrip("﻿").rstrip("\r\n")
    try:
        fields = _split_fields(line)
    except (csv.Error, StopIteration) as exc:
        raise ParseError(f"unreadable line: {exc}") from exc
    if len(fields) < 2:
        raise ParseError("expected coordinates followed by a transcription")
    *coord_fields, raw_text = fields
    coords = []
    for f in coord_fields:
        try:
            v = float(f)
        except ValueError:
            raise ParseError(f"non-numeric coordinate {f!r}") from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite coordinate {f!r}")
        coords.append(v)
    if len(coords) % 2:
        raise ParseError(f"odd number of coordinates ({len(coords)})")
    if not raw_text.strip():
        raise ParseError("empty transcription field")
    try:
        polygon = Polygon.from_flat(coords)
    except BadPointCount as exc:
        raise ParseError(str(exc)) from None
    return TextInstance(polygon, Transcription.from_raw(raw_text))


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def format_icdar_line(inst: TextInstance) -> str:
    """Inverse of :func:`parse_icdar_line`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="")
    writer.writerow([_fmt_num(c) for c in inst.polygon.flat()] + [inst.transcription.text])
    return buf.getvalue()


def instance_from_record(rec: dict) -> TextInstance:
    try:
        points = rec["points"]
        text = rec["text"]
    except (KeyError, TypeError):
        raise ParseError("instance needs 'points' and 'text'") from None
    if not isinstance(text, str) or not text.strip():
        raise ParseError("instance 'text' must be a non-empty string")
    try:
        pts = [(float(x), float(y)) for x, y in points]
    except (TypeError, ValueError):
        raise ParseError("instance 'points' must be a list of [x, y] pairs") from None
    if not all(math.isfinite(c) for p in pts for c in p):
        raise ParseError("non-finite coordinate")
    try:
        polygon = Polygon(tuple(pts))
    except BadPointCount as exc:
        raise ParseError(str(exc)) from None
    return TextInstance(polygon, Transcription.from_raw(text))


def image_to_record(ann: ImageAnnotation) -> dict:
    return {
        "image_id": ann.image_id,
        "width": ann.width,
        "height": ann.height,
        "instances": [
            {"points": [[p.x, p.y] for p in inst.polygon.points],
             "text": inst.transcription.text}
            for inst in ann.instances
        ],
    }


def image_from_record(rec: dict) -> ImageAnnotation:
    if not isinstance(rec, dict):
        raise ParseError("image record must be a JSON object")
    try:
        image_id = rec["image_id"]
        width, height = rec["width"], rec["height"]
        raw_instances = rec.get("instances", [])
    except KeyError as exc:
        raise ParseError(f"image record missing {exc.args[0]!r}") from None
    if not isinstance(image_id, str):
        raise ParseError("'image_id' must be a string")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (width, height)):
        raise ParseError("'width' and 'height' must be numbers")
    instances = []
    for i, r in enumerate(raw_instances):
        try:
            instances.append(instance_from_record(r))
        except ParseError as exc:
            raise ParseError(f"image {image_id!r} instance {i}: {exc.message}") from None
    return ImageAnnotation(image_id, width, height, tuple(instances))


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _extent_size(instances) -> tuple[float, float]:
    if not instances:
        return 1.0, 1.0
    x1 = max(inst.polygon.bounds()[2] for inst in instances)
    y1 = max(inst.polygon.bounds()[3] for inst in instances)
    return float(max(1, math.ceil(x1))), float(max(1, math.ceil(y1)))


def load_icdar_file(path, image_id=None, size=None) -> ImageAnnotation:
    path = Path(path)
    if image_id is None:
        stem = path.stem
        image_id = stem[3:] if stem.startswith("gt_") else stem
    instances = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            instances.append(parse_icdar_line(line))
        except ParseError as exc:
            raise ParseError(exc.message, path=str(path), line=lineno) from None
    width, height = size if size is not None else _extent_size(instances)
    return ImageAnnotation(image_id, width, height, tuple(instances))


def load_icdar_dir(path) -> Dataset:
    root = Path(path)
    if not root.is_dir():
        raise IoError(f"not a readable directory: {root}")
    sizes = {}
    sizes_path = root / "image_sizes.json"
    if sizes_path.exists():
        try:
            sizes = json.loads(_read_text(sizes_path))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc}", path=str(sizes_path)) from None
    images, problems = [], []
    for f in sorted(root.glob("gt_*.txt")):
        image_id = f.stem[3:]
        try:
            images.append(load_icdar_file(f, image_id, sizes.get(image_id)))
        except ValidationError as exc:
            problems.extend(f"{f.name}: {p}" for p in exc.problems)
    if problems:
        raise ValidationError(f"invalid annotations in {root}", problems)
    return Dataset(tuple(images), name=root.name)


def load_jsonl(path) -> Dataset:
    path = Path(path)
    images, problems = [], []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path=str(path), line=lineno) from None
        try:
            images.append(image_from_record(rec))
        except ParseError as exc:
            raise ParseError(exc.message, path=str(path), line=lineno) from None
        except ValidationError as exc:
            problems.extend(f"line {lineno}: {p}" for p in exc.problems)
    if problems:
        raise ValidationError(f"invalid annotations in {path}", problems)
    return Dataset(tuple(images), name=path.stem)


def load_dataset(path, format: str = "icdar-dir") -> Dataset:
    """Load and validate a dataset in one of :data:`FORMATS`."""
    if format == "icdar-dir":
        ds = load_icdar_dir(path)
    elif format == "jsonl":
        ds = load_jsonl(path)
    else:
        raise ValueError(f"unknown dataset format {format!r}; expected one of {FORMATS}")
    log.info("loaded %d images from %s", len(ds), path)
    return ds


def write_icdar_dir(ds: Dataset, path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    sizes = {}
    for img in ds.images:
        lines = [format_icdar_line(inst) for inst in img.instances]
        (root / f"gt_{img.image_id}.txt").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8")
        sizes[img.image_id] = [img.width, img.height]
    (root / "image_sizes.json").write_text(json.dumps(sizes, indent=1, sort_keys=True) + "\n",
                                           encoding="utf-8")


def write_jsonl(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for img in ds.images:
            fh.write(json.dumps(image_to_record(img), ensure_ascii=False) + "\n")
