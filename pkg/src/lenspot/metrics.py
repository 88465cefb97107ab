"""Detection and end-to-end spotting evaluation with word-length buckets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .annotations import Dataset, ImageAnnotation, TextInstance, char_count
from .errors import MissingLexicon
from .geometry import Polygon, polygon_iou
from .labelgen import length_bucket

BUCKETS = ("short", "regular", "long")
IOU_RESOLUTION = 128


@dataclass(frozen=True)
class DetPrediction:
    image_id: str
    polygon: Polygon
    score: float = 1.0
    transcript: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score {self.score}")


@dataclass(frozen=True)
class EvalConfig:
    iou_threshold: float = 0.5
    lexicon_mode: str = "none"
    lexicon: tuple[str, ...] | None = None
    case_sensitive: bool = False

    def __post_init__(self):
        if not 0 <= self.iou_threshold <= 1:
            raise ValueError(f"iou_threshold must lie in [0, 1], got {self.iou_threshold}")
        if self.lexicon_mode not in ("none", "full"):
            raise ValueError(f"lexicon_mode must be 'none' or 'full', got {self.lexicon_mode!r}")
        if self.lexicon_mode == "full" and not self.lexicon:
            raise MissingLexicon("full-lexicon mode needs a non-empty lexicon")


@dataclass
class MatchSet:
    """Greedy detection matches for one or more images.

    ``pairs`` holds ``(pred_index, gt_index, iou)``; indices refer to the
    prediction and non-ignored ground-truth lists that were matched.
    """

    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    num_preds: int = 0
    num_gts: int = 0
    discarded: int = 0
    gt_matched: list[bool] = field(default_factory=list)

    @property
    def tp(self) -> int:
        return len(self.pairs)

    @property
    def fp(self) -> int:
        return self.num_preds - self.tp - self.discarded

    @property
    def fn(self) -> int:
        return self.num_gts - self.tp


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    fscore: float
    tp: int
    fp: int
    fn: int
    bucket_recall: dict
    bucket_counts: dict
    e2e: dict | None = None

    def as_dict(self) -> dict:
        out = {
            "precision": self.precision,
            "recall": self.recall,
            "fscore": self.fscore,
            "counts": {"tp": self.tp, "fp": self.fp, "fn": self.fn},
            "bucket_recall": dict(self.bucket_recall),
            "bucket_counts": dict(self.bucket_counts),
        }
        if self.e2e is not None:
            out["e2e"] = self.e2e
        return out


def match_detections(preds: Sequence[DetPrediction], gts: Sequence[TextInstance],
                     iou_threshold: float = 0.5, resolution: int = IOU_RESOLUTION) -> MatchSet:
    """Score-ordered greedy one-to-one matching for a single image.

    ``gts`` may contain ``###`` instances; they are never matched, and a
    prediction that overlaps one of them by at least the threshold without
    claiming a real target is discarded instead of counted as a false positive.
    """
    cared = [g for g in gts if not g.ignore]
    ignored = [g for g in gts if g.ignore]
    order = sorted(range(len(preds)), key=lambda k: -preds[k].score)
    claimed = [False] * len(cared)
    result = MatchSet(num_preds=len(preds), num_gts=len(cared))
    for k in order:
        poly = preds[k].polygon
        best, best_iou = None, -1.0
        for g, inst in enumerate(cared):
            if claimed[g]:
                continue
            iou = polygon_iou(poly, inst.polygon, resolution)
            if iou >= iou_threshold and iou > best_iou:
                best, best_iou = g, iou
        if best is not None:
            claimed[best] = True
            result.pairs.append((k, best, best_iou))
        elif any(polygon_iou(poly, inst.polygon, resolution) >= iou_threshold for inst in ignored):
            result.discarded += 1
    result.gt_matched = claimed
    return result


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def fscore(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def detection_prf(m: MatchSet) -> tuple[float, float, float]:
    p = _ratio(m.tp, m.tp + m.fp)
    r = _ratio(m.tp, m.tp + m.fn)
    return p, r, fscore(p, r)


def prf_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = _ratio(tp, tp + fp)
    r = _ratio(tp, tp + fn)
    return p, r, fscore(p, r)


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _fold(s: str, case_sensitive: bool) -> str:
    return s if case_sensitive else s.casefold()


def correct_with_lexicon(word: str, lexicon: Iterable[str], case_sensitive: bool = False) -> str:
    """Closest lexicon entry by edit distance; ties go to the lexicographically smallest."""
    key = _fold(word, case_sensitive)
    return min(lexicon, key=lambda w: (edit_distance(key, _fold(w, case_sensitive)), w))


def transcripts_agree(pred: str | None, gt: str, config: EvalConfig) -> bool:
    if pred is None:
        return False
    if config.lexicon_mode == "full":
        if not config.lexicon:
            raise MissingLexicon("full-lexicon mode needs a non-empty lexicon")
        pred = correct_with_lexicon(pred, config.lexicon, config.case_sensitive)
    return _fold(pred, config.case_sensitive) == _fold(gt, config.case_sensitive)


def e2e_counts(m: MatchSet, preds: Sequence[DetPrediction], gts: Sequence[TextInstance],
               config: EvalConfig) -> tuple[int, int, int]:
    """``(tp, fp, fn)`` where a spatial match only counts if its transcript agrees."""
    cared = [g for g in gts if not g.ignore]
    tp = sum(transcripts_agree(preds[k].transcript, cared[g].transcription.text, config)
             for k, g, _ in m.pairs)
    return tp, m.num_preds - m.discarded - tp, m.num_gts - tp


def e2e_eval(preds: Sequence[DetPrediction], gts: Sequence[TextInstance],
             config: EvalConfig = EvalConfig()) -> tuple[float, float, float]:
    m = match_detections(preds, gts, config.iou_threshold)
    return prf_from_counts(*e2e_counts(m, preds, gts, config))


def bucket_tallies(m: MatchSet, gts: Sequence[TextInstance]) -> dict[str, list[int]]:
    """``{bucket: [matched, total]}`` over the non-ignored targets of one image."""
    cared = [g for g in gts if not g.ignore]
    tally = {b: [0, 0] for b in BUCKETS}
    for inst, hit in zip(cared, m.gt_matched):
        b = length_bucket(char_count(inst.transcription))
        tally[b][1] += 1
        tally[b][0] += int(hit)
    return tally


def recall_from_tallies(tally: dict[str, list[int]]) -> dict[str, float | None]:
    """Per-bucket recall; ``None`` for buckets with no targets."""
    return {b: (hit / total if total else None) for b, (hit, total) in tally.items()}


def length_bucket_recall(m: MatchSet, gts: Sequence[TextInstance]) -> dict[str, float | None]:
    return recall_from_tallies(bucket_tallies(m, gts))


@dataclass
class ImageEval:
    """Per-image counts; summed across images by :func:`aggregate`."""

    image_id: str
    tp: int
    fp: int
    fn: int
    tally: dict
    e2e: dict = field(default_factory=dict)


def evaluate_image(ann: ImageAnnotation, preds: Sequence[DetPrediction], config: EvalConfig,
                   e2e_modes: Sequence[EvalConfig] = ()) -> ImageEval:
    m = match_detections(preds, ann.instances, config.iou_threshold)
    e2e = {cfg.lexicon_mode: list(e2e_counts(m, preds, ann.instances, cfg)) for cfg in e2e_modes}
    return ImageEval(ann.image_id, m.tp, m.fp, m.fn, bucket_tallies(m, ann.instances), e2e)


def aggregate(results: Iterable[ImageEval]) -> EvalReport:
    tp = fp = fn = 0
    tally = {b: [0, 0] for b in BUCKETS}
    e2e: dict[str, list[int]] = {}
    for r in results:
        tp, fp, fn = tp + r.tp, fp + r.fp, fn + r.fn
        for b in BUCKETS:
            tally[b][0] += r.tally[b][0]
            tally[b][1] += r.tally[b][1]
        for mode, counts in r.e2e.items():
            acc = e2e.setdefault(mode, [0, 0, 0])
            for i in range(3):
                acc[i] += counts[i]
    p, rc, f = prf_from_counts(tp, fp, fn)
    e2e_out = None
    if e2e:
        e2e_out = {}
        for mode, (etp, efp, efn) in sorted(e2e.items()):
            ep, er, ef = prf_from_counts(etp, efp, efn)
            e2e_out[mode] = {"precision": ep, "recall": er, "fscore": ef,
                             "counts": {"tp": etp, "fp": efp, "fn": efn}}
    return EvalReport(p, rc, f, tp, fp, fn, recall_from_tallies(tally),
                      {b: t for b, (_, t) in tally.items()}, e2e_out)


def evaluate(ds: Dataset, preds_by_image: dict, config: EvalConfig = EvalConfig(),
             e2e_modes: Sequence[EvalConfig] = ()) -> EvalReport:
    """Dataset-level report; images missing from ``preds_by_image`` have no predictions."""
    return aggregate(evaluate_image(img, preds_by_image.get(img.image_id, ()), config, e2e_modes)
                     for img in sorted(ds.images, key=lambda a: a.image_id))
