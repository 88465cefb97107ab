"""Prediction files: JSON lines, one image per line.

Each line looks like::

    {"image_id": "img_0",
     "predictions": [{"points": [[x, y], ...], "score": 0.93,
                      "text": "word",                # optional
                      "box": [x1, y1, x2, y2],       # optional, normalised
                      "mask": [[...], ...],          # optional, square grid
                      "prior": [ratio_norm, count_norm],  # optional
                      "step_probs": [0.9, 0.8, ...]}],    # optional
     "seg_map": [[...], ...]}                        # optional, H x W

Missing optional fields are derived from the polygon: the box is its
bounding rectangle, the mask its rasterisation over that rectangle and the
prior its aspect ratio plus the length of ``text`` (0 without text).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotations import ImageAnnotation, TextInstance
from .errors import BadPointCount, IoError, ParseError
from .geometry import Polygon, aspect_ratio
from .labelgen import DEFAULT_N_MAX, DEFAULT_RATIO_CAP, instance_prior
from .matchcost import (DEFAULT_MASK_SIZE, BoxRect, GroundTruthTarget, Prediction,
                        box_from_polygon, mask_from_polygon)
from .metrics import DetPrediction


@dataclass(frozen=True)
class PredictionRecord:
    polygon: Polygon
    score: float
    text: str | None = None
    box: tuple[float, float, float, float] | None = None
    mask: np.ndarray | None = field(default=None, compare=False)
    prior: tuple[float, float] | None = None
    step_probs: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ImagePredictions:
    image_id: str
    predictions: tuple[PredictionRecord, ...] = ()
    seg_map: np.ndarray | None = field(default=None, compare=False)


def _unit_interval_numbers(values, name, length=None):
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ParseError(f"'{name}' must be a list of numbers") from None
    if length is not None and len(out) != length:
        raise ParseError(f"'{name}' must have {length} entries")
    if not all(math.isfinite(v) for v in out):
        raise ParseError(f"'{name}' has non-finite entries")
    return out


def _grid(values, name):
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"'{name}' must be a rectangular grid of numbers") from None
    if arr.ndim != 2 or arr.size == 0:
        raise ParseError(f"'{name}' must be a non-empty 2-D grid")
    if not np.all((arr >= 0) & (arr <= 1)):
        raise ParseError(f"'{name}' values must lie in [0, 1]")
    return arr


def record_from_json(rec: dict) -> PredictionRecord:
    if not isinstance(rec, dict):
        raise ParseError("prediction must be a JSON object")
    if "points" not in rec or "score" not in rec:
        raise ParseError("prediction needs 'points' and 'score'")
    try:
        pts = tuple((float(x), float(y)) for x, y in rec["points"])
        polygon = Polygon(pts)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, BadPointCount):
            raise ParseError(str(exc)) from None
        raise ParseError("'points' must be a list of finite [x, y] pairs") from None
    score = rec["score"]
    if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
        raise ParseError("'score' must be a finite number")
    text = rec.get("text")
    if text is not None and not isinstance(text, str):
        raise ParseError("'text' must be a string")
    box = rec.get("box")
    if box is not None:
        box = _unit_interval_numbers(box, "box", 4)
        try:
            BoxRect(*box)
        except ValueError as exc:
            raise ParseError(f"bad 'box': {exc}") from None
    mask = _grid(rec["mask"], "mask") if rec.get("mask") is not None else None
    if mask is not None and mask.shape[0] != mask.shape[1]:
        raise ParseError("'mask' must be square")
    prior = rec.get("prior")
    if prior is not None:
        prior = _unit_interval_numbers(prior, "prior", 2)
    steps = rec.get("step_probs")
    if steps is not None:
        steps = _unit_interval_numbers(steps, "step_probs")
        if not all(0 < p <= 1 for p in steps):
            raise ParseError("'step_probs' entries must lie in (0, 1]")
        if text is not None and len(steps) != len(text):
            raise ParseError("'step_probs' length must equal 'text' length")
    return PredictionRecord(polygon, float(score), text, box, mask, prior, steps)


def image_predictions_from_json(rec) -> ImagePredictions:
    if not isinstance(rec, dict) or not isinstance(rec.get("image_id"), str):
        raise ParseError("record needs a string 'image_id'")
    preds = rec.get("predictions", [])
    if not isinstance(preds, list):
        raise ParseError("'predictions' must be a list")
    out = []
    for i, p in enumerate(preds):
        try:
            out.append(record_from_json(p))
        except ParseError as exc:
            raise ParseError(f"prediction {i}: {exc.message}") from None
    seg = _grid(rec["seg_map"], "seg_map") if rec.get("seg_map") is not None else None
    return ImagePredictions(rec["image_id"], tuple(out), seg)


def load_predictions(path) -> dict[str, ImagePredictions]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            ip = image_predictions_from_json(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path=str(path), line=lineno) from None
        except ParseError as exc:
            raise ParseError(exc.message, path=str(path), line=lineno) from None
        if ip.image_id in out:
            raise ParseError(f"duplicate image_id {ip.image_id!r}", path=str(path), line=lineno)
        out[ip.image_id] = ip
    return out


def record_to_json(rec: PredictionRecord) -> dict:
    out = {"points": [[p.x, p.y] for p in rec.polygon.points], "score": rec.score}
    if rec.text is not None:
        out["text"] = rec.text
    if rec.box is not None:
        out["box"] = list(rec.box)
    if rec.mask is not None:
        out["mask"] = np.asarray(rec.mask).tolist()
    if rec.prior is not None:
        out["prior"] = list(rec.prior)
    if rec.step_probs is not None:
        out["step_probs"] = list(rec.step_probs)
    return out


def write_predictions(path, images) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ip in images:
            line = {"image_id": ip.image_id,
                    "predictions": [record_to_json(r) for r in ip.predictions]}
            if ip.seg_map is not None:
                line["seg_map"] = np.asarray(ip.seg_map).tolist()
            fh.write(json.dumps(line, ensure_ascii=False) + "\n")


def predictions_from_ground_truth(ann: ImageAnnotation, score: float = 1.0) -> ImagePredictions:
    """Copy every non-ignored instance of ``ann`` as a prediction with its transcript."""
    return ImagePredictions(ann.image_id, tuple(
        PredictionRecord(inst.polygon, score, inst.transcription.text) for inst in ann.cared()))


def to_det_prediction(rec: PredictionRecord, image_id: str) -> DetPrediction:
    return DetPrediction(image_id, rec.polygon, rec.score, rec.text)


def to_match_prediction(rec: PredictionRecord, ann: ImageAnnotation,
                        ratio_cap: float = DEFAULT_RATIO_CAP, n_max: int = DEFAULT_N_MAX,
                        mask_size: int = DEFAULT_MASK_SIZE) -> Prediction:
    box = BoxRect(*rec.box) if rec.box is not None else box_from_polygon(rec.polygon, ann.width, ann.height)
    mask = rec.mask if rec.mask is not None else mask_from_polygon(rec.polygon, mask_size)
    if rec.prior is not None:
        prior = rec.prior
    else:
        ratio_norm = min(aspect_ratio(rec.polygon).ratio / ratio_cap, 1.0)
        count_norm = min(len(rec.text.strip()) / n_max, 1.0) if rec.text else 0.0
        prior = (ratio_norm, count_norm)
    return Prediction(rec.score, box, mask, prior, rec.text or "", rec.step_probs or ())


def to_target(inst: TextInstance, ann: ImageAnnotation, ratio_cap: float = DEFAULT_RATIO_CAP,
              n_max: int = DEFAULT_N_MAX, mask_size: int = DEFAULT_MASK_SIZE) -> GroundTruthTarget:
    prior = instance_prior(inst, ratio_cap, n_max)
    return GroundTruthTarget(box_from_polygon(inst.polygon, ann.width, ann.height),
                             mask_from_polygon(inst.polygon, mask_size), prior.pair(),
                             inst.transcription.text)
