"""Batch command line: ``stats``, ``labels``, ``match`` and ``eval``.

Exit codes: 0 success, 2 parse/read error, 3 validation error,
4 infeasible matching, 5 missing lexicon.  Set ``LENSPOT_LOG`` to a
logging level name (``DEBUG``, ``INFO``, ...) to change verbosity.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import labelgen
from .annotations import FORMATS, Dataset, ImageAnnotation, load_dataset
from .errors import (DegenerateGeometry, InfeasibleMatrix, IoError, LenspotError,
                     MissingLexicon, OutOfRange, ParseError, ValidationError)
from .matchcost import CostWeights, detection_loss, match, recognition_loss
from .metrics import EvalConfig, evaluate_image, aggregate
from .predictions import load_predictions, to_det_prediction, to_match_prediction, to_target

log = logging.getLogger("lenspot")

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_LEXICON = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    dataset: str | None = None
    format: str = "icdar-dir"
    nmax: int = labelgen.DEFAULT_N_MAX
    ratio_cap: float = labelgen.DEFAULT_RATIO_CAP
    map_size: tuple[int, int] = labelgen.DEFAULT_MAP_SIZE
    mask_size: int = 28
    weights: CostWeights = field(default_factory=CostWeights)
    iou: float = 0.5
    lexicon: str | None = None
    lexicon_mode: str | None = None
    case_sensitive: bool = False
    out: str = "lenspot_out"
    jobs: int = 1

    def validate(self):
        problems = []
        if self.dataset is None:
            problems.append("no dataset given (--dataset or config 'dataset')")
        if self.format not in FORMATS:
            problems.append(f"format must be one of {FORMATS}, got {self.format!r}")
        if not (isinstance(self.nmax, int) and self.nmax >= 1):
            problems.append(f"nmax must be a positive integer, got {self.nmax!r}")
        if not self.ratio_cap > 0:
            problems.append(f"ratio_cap must be > 0, got {self.ratio_cap!r}")
        if len(self.map_size) != 2 or min(self.map_size) < 8:
            problems.append(f"map size must be at least 8x8, got {self.map_size!r}")
        if not 0 <= self.iou <= 1:
            problems.append(f"iou must lie in [0, 1], got {self.iou!r}")
        if not (isinstance(self.jobs, int) and self.jobs >= 1):
            problems.append(f"jobs must be a positive integer, got {self.jobs!r}")
        if self.lexicon_mode not in (None, "none", "full"):
            problems.append(f"lexicon_mode must be 'none' or 'full', got {self.lexicon_mode!r}")
        if problems:
            raise ValidationError("invalid run configuration", problems)
        for path in (self.dataset, self.lexicon):
            if path is not None and not Path(path).exists():
                raise IoError(f"path does not exist: {path}")


def parse_map_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run configuration; flags override its fields")
    p.add_argument("--dataset", help="dataset directory (icdar-dir) or file (jsonl)")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="output directory")
    p.add_argument("--iou", type=float, help="IoU threshold for detection matching")
    p.add_argument("--lexicon", help="word list, one entry per line")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--nmax", type=int, help="maximum character count")
    p.add_argument("--ratio-cap", type=float, dest="ratio_cap", help="aspect-ratio normaliser")
    p.add_argument("--map-size", type=parse_map_size, dest="map_size", metavar="WxH",
                   help="segmentation map size")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="lenspot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("stats", parents=[common], help="word-length and density histograms")
    labels = sub.add_parser("labels", parents=[common], help="generate prior or segmap labels")
    labels.add_argument("kind", choices=("prior", "segmap"))
    m = sub.add_parser("match", parents=[common], help="Hungarian matching and detection loss")
    m.add_argument("predictions")
    ev = sub.add_parser("eval", parents=[common], help="detection or end-to-end evaluation")
    ev.add_argument("mode", choices=("det", "e2e"))
    ev.add_argument("predictions")
    ev.add_argument("--lexicon-mode", choices=("none", "full"), dest="lexicon_mode")
    ev.add_argument("--case-sensitive", action="store_true", default=None, dest="case_sensitive")
    return parser


def _weights_from(raw) -> CostWeights:
    if not isinstance(raw, dict):
        raise ValidationError("config 'weights' must be an object")
    names = {f.name for f in dataclasses.fields(CostWeights)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ValidationError("unknown weight names", unknown)
    try:
        return CostWeights(**raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError("invalid weights", [str(exc)]) from None


def load_run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path=args.config, line=exc.lineno) from None
        if not isinstance(raw, dict):
            raise ParseError("config must be a JSON object", path=args.config)
        names = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ValidationError(f"unknown config fields in {args.config}", unknown)
        for key, value in raw.items():
            if key == "weights":
                value = _weights_from(value)
            elif key == "map_size":
                value = tuple(value)
            setattr(cfg, key, value)
    for key in ("dataset", "format", "out", "iou", "lexicon", "jobs", "nmax", "ratio_cap",
                "map_size", "lexicon_mode", "case_sensitive"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def pool_map(fn, items, jobs):
    """Ordered map, in-process for ``jobs == 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _ordered(ds: Dataset) -> list[ImageAnnotation]:
    return sorted(ds.images, key=lambda img: img.image_id)


def _dump_json(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- stats --------------------------------------------------------------------

def write_histogram_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_bar_svg(path: Path, hist: dict, xlabel: str, ylabel: str, title: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "lenspot", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 4))
        keys = list(hist)
        ax.bar(keys, [hist[k] for k in keys], color="#4878a8")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def cmd_stats(cfg: RunConfig) -> int:
    ds = load_dataset(cfg.dataset, cfg.format)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lengths = labelgen.dataset_length_histogram(ds)
    density = labelgen.density_histogram(ds)
    write_histogram_csv(out / "length_histogram.csv", ("char_count", "instances"),
                        lengths.buckets.items())
    write_histogram_csv(out / "density_histogram.csv", ("instances_per_image", "images"),
                        density.items())
    write_bar_svg(out / "length_histogram.svg", lengths.buckets, "characters per word",
                  "instances", f"Word length distribution ({ds.name})")
    write_bar_svg(out / "density_histogram.svg", density, "instances per image", "images",
                  f"Instance density ({ds.name})")
    summary = {"short": lengths.short, "regular": lengths.regular, "long": lengths.long,
               "total": lengths.total, "images": len(ds)}
    _dump_json(summary, out / "length_summary.json")
    print(f"short(<4)={lengths.short} regular(4-10)={lengths.regular} "
          f"long(>10)={lengths.long} total={lengths.total} images={len(ds)}")
    return EXIT_OK


# -- labels -------------------------------------------------------------------

def _prior_record(ann, ratio_cap, nmax):
    try:
        labels = labelgen.gen_prior_labels(ann, ratio_cap, nmax)
    except (DegenerateGeometry, OutOfRange) as exc:
        return ann.image_id, None, str(exc)
    return ann.image_id, [list(p.pair()) for p in labels.priors], None


def _segmap_record(ann, width, height, nmax):
    try:
        label = labelgen.gen_segmap_label(ann, width, height, nmax)
    except (DegenerateGeometry, OutOfRange) as exc:
        return ann.image_id, None, str(exc)
    return ann.image_id, label.values, None


def format_pgm(values: np.ndarray) -> str:
    """Plain (P2) graymap with 0, 0.5 and 1 stored as 0, 128 and 255."""
    levels = np.where(values >= 1.0, 255, np.where(values > 0, 128, 0)).astype(int)
    h, w = levels.shape
    rows = "\n".join(" ".join(map(str, row)) for row in levels)
    return f"P2\n{w} {h}\n255\n{rows}\n"


def read_pgm(path) -> np.ndarray:
    """Inverse of :func:`format_pgm`, back to ``{0, 0.5, 1}``."""
    tokens = Path(path).read_text(encoding="ascii").split()
    if tokens[0] != "P2":
        raise ParseError("not a plain graymap", path=str(path))
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    levels = np.array([int(t) for t in tokens[4:4 + w * h]]).reshape(h, w)
    return np.select([levels == maxval, levels > 0], [1.0, 0.5], 0.0)


def cmd_labels(cfg: RunConfig, kind: str) -> int:
    ds = load_dataset(cfg.dataset, cfg.format)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    images = _ordered(ds)
    failures = []
    if kind == "prior":
        results = pool_map(partial(_prior_record, ratio_cap=cfg.ratio_cap, nmax=cfg.nmax),
                           images, cfg.jobs)
        with open(out / "priors.jsonl", "w", encoding="utf-8") as fh:
            for image_id, priors, err in results:
                if err:
                    failures.append(err)
                    continue
                fh.write(json.dumps({"image_id": image_id, "priors": priors}) + "\n")
    else:
        w, h = cfg.map_size
        seg_dir = out / "segmap"
        seg_dir.mkdir(exist_ok=True)
        results = pool_map(partial(_segmap_record, width=w, height=h, nmax=cfg.nmax),
                           images, cfg.jobs)
        for image_id, values, err in results:
            if err:
                failures.append(err)
                continue
            (seg_dir / f"{image_id}.pgm").write_text(format_pgm(values), encoding="ascii")
    if failures:
        for f in failures:
            log.error("%s", f)
        print(f"{len(failures)} image(s) failed label generation", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"wrote {kind} labels for {len(images)} image(s) to {out}")
    return EXIT_OK


# -- match --------------------------------------------------------------------

def _check_prediction_ids(ds: Dataset, preds: dict):
    unknown = sorted(set(preds) - set(ds.by_id))
    if unknown:
        raise ValidationError("predictions reference unknown image ids", unknown)


def _match_image(item, cfg: RunConfig):
    ann, ip = item
    cared = ann.cared()
    gts = [to_target(inst, ann, cfg.ratio_cap, cfg.nmax, cfg.mask_size) for inst in cared]
    records = ip.predictions if ip is not None else ()
    preds = [to_match_prediction(r, ann, cfg.ratio_cap, cfg.nmax, cfg.mask_size) for r in records]
    try:
        assignment = match(preds, gts, cfg.weights)
    except InfeasibleMatrix as exc:
        raise InfeasibleMatrix(f"image {ann.image_id!r}: {exc}") from None
    gt_map = None
    pred_map = ip.seg_map if ip is not None else None
    if pred_map is not None:
        gt_map = labelgen.gen_segmap_label(ann, pred_map.shape[1], pred_map.shape[0], cfg.nmax)
    loss = detection_loss(preds, gts, assignment, cfg.weights, pred_map, gt_map)
    rec_terms = [recognition_loss(preds[p].step_probs) for _, p in assignment.pairs
                 if preds[p].step_probs]
    return {
        "image_id": ann.image_id,
        "pairs": [[g, p] for g, p in assignment.pairs],
        "total_cost": assignment.total_cost,
        "pair_costs": [dict(gt=g, pred=p, **b.as_dict())
                       for (g, p), b in zip(assignment.pairs, assignment.breakdowns)],
        "loss": loss.as_dict(),
        "recognition": (sum(rec_terms) / len(rec_terms)) if rec_terms else None,
    }


def cmd_match(cfg: RunConfig, predictions_path: str) -> int:
    ds = load_dataset(cfg.dataset, cfg.format)
    preds = load_predictions(predictions_path)
    _check_prediction_ids(ds, preds)
    items = [(img, preds.get(img.image_id)) for img in _ordered(ds)]
    results = pool_map(partial(_match_image, cfg=cfg), items, cfg.jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "match.jsonl", "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    total = sum(r["total_cost"] for r in results)
    print(f"matched {len(results)} image(s); summed assignment cost {total:.6g}")
    return EXIT_OK


# -- eval ---------------------------------------------------------------------

def read_lexicon(path) -> tuple[str, ...]:
    try:
        lines = Path(path).read_text(encoding="utf-8-sig").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read lexicon {path}: {exc}") from exc
    return tuple(sorted({w.strip() for w in lines if w.strip()}))


def _eval_image(item, config, e2e_modes):
    ann, ip = item
    dets = [to_det_prediction(r, ann.image_id) for r in (ip.predictions if ip else ())]
    return evaluate_image(ann, dets, config, e2e_modes)


def cmd_eval(cfg: RunConfig, predictions_path: str, mode: str) -> int:
    ds = load_dataset(cfg.dataset, cfg.format)
    preds = load_predictions(predictions_path)
    _check_prediction_ids(ds, preds)
    lexicon = read_lexicon(cfg.lexicon) if cfg.lexicon else None
    config = EvalConfig(cfg.iou, case_sensitive=cfg.case_sensitive)
    e2e_modes = []
    if mode == "e2e":
        lexicon_mode = cfg.lexicon_mode or ("full" if lexicon else "none")
        if lexicon_mode == "full" and not lexicon:
            raise MissingLexicon("e2e evaluation in full-lexicon mode needs --lexicon")
        e2e_modes.append(EvalConfig(cfg.iou, "none", None, cfg.case_sensitive))
        if lexicon_mode == "full":
            e2e_modes.append(EvalConfig(cfg.iou, "full", lexicon, cfg.case_sensitive))
    items = [(img, preds.get(img.image_id)) for img in _ordered(ds)]
    results = pool_map(partial(_eval_image, config=config, e2e_modes=tuple(e2e_modes)),
                       items, cfg.jobs)
    report = aggregate(results).as_dict()
    report["iou_threshold"] = cfg.iou
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(report, out / f"eval_{mode}.json")
    print(f"P={report['precision']:.4f} R={report['recall']:.4f} F={report['fscore']:.4f}")
    for m, r in (report.get("e2e") or {}).items():
        print(f"e2e[{m}] P={r['precision']:.4f} R={r['recall']:.4f} F={r['fscore']:.4f}")
    return EXIT_OK


def _setup_logging():
    level = os.environ.get("LENSPOT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def run(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    if args.command == "stats":
        return cmd_stats(cfg)
    if args.command == "labels":
        return cmd_labels(cfg, args.kind)
    if args.command == "match":
        return cmd_match(cfg, args.predictions)
    return cmd_eval(cfg, args.predictions, args.mode)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except MissingLexicon as exc:
        code, msg = EXIT_LEXICON, exc
    except InfeasibleMatrix as exc:
        code, msg = EXIT_INFEASIBLE, exc
    except (ParseError, IoError) as exc:
        code, msg = EXIT_PARSE, exc
    except (ValidationError, LenspotError, ValueError) as exc:
        code, msg = EXIT_VALIDATION, exc
    print(f"lenspot: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
