"""
Detection and end-to-end evaluation with length buckets
=========================================================

Predictions are matched greedily by score at IoU 0.5.  Recall is also split
by word length so that weak performance on very short or very long words
shows up directly.
"""

import numpy as np

from lenspot.metrics import DetPrediction, EvalConfig, evaluate
from lenspot.predictions import predictions_from_ground_truth, to_det_prediction
from lenspot.synthetic import make_dataset

rng = np.random.default_rng(1)
ds = make_dataset(n_images=8, words_per_image=(10, 30), seed=5)


def degrade(img):
    """A stand-in detector that misses long words more often and misspells a few."""
    out = []
    for rec in predictions_from_ground_truth(img).predictions:
        p = to_det_prediction(rec, img.image_id)
        miss = 0.5 if len(p.transcript) > 10 else 0.1
        if rng.random() < miss:
            continue
        text = p.transcript if rng.random() > 0.15 else p.transcript[1:] or "x"
        out.append(DetPrediction(p.image_id, p.polygon, float(rng.random()), text))
    return out


preds = {img.image_id: degrade(img) for img in ds}
lexicon = sorted({inst.transcription.text for img in ds for inst in img.cared()})
report = evaluate(ds, preds, EvalConfig(), e2e_modes=(
    EvalConfig(), EvalConfig(lexicon_mode="full", lexicon=tuple(lexicon))))

print(f"detection P={report.precision:.3f} R={report.recall:.3f} F={report.fscore:.3f}")
for bucket, recall in report.bucket_recall.items():
    print(f"  {bucket:>8s} recall {recall:.3f} over {report.bucket_counts[bucket]} words")
for mode, r in report.e2e.items():
    print(f"end-to-end [{mode}] F={r['fscore']:.3f}")
