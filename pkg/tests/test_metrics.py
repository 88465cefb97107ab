import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lenspot.annotations import TextInstance, Transcription
from lenspot.errors import MissingLexicon
from lenspot.geometry import Polygon
from lenspot.metrics import (DetPrediction, EvalConfig, MatchSet, correct_with_lexicon,
                             detection_prf, e2e_counts, e2e_eval, edit_distance, evaluate,
                             length_bucket_recall, match_detections, prf_from_counts)
from lenspot.predictions import predictions_from_ground_truth, to_det_prediction

from oracles import levenshtein


def sq(x, y, s=10):
    return Polygon(((x, y), (x + s, y), (x + s, y + s), (x, y + s)))


def gt(x, y, text):
    return TextInstance(sq(x, y), Transcription.from_raw(text))


def pred(x, y, text=None, score=1.0):
    return DetPrediction("img", sq(x, y), score, text)


class TestMatchDetections:
    def test_exact_copies(self):
        gts = [gt(0, 0, "a"), gt(20, 0, "b"), gt(40, 0, "c")]
        m = match_detections([pred(0, 0), pred(20, 0), pred(40, 0)], gts)
        assert (m.tp, m.fp, m.fn) == (3, 0, 0)

    def test_no_predictions(self):
        m = match_detections([], [gt(0, 0, "a"), gt(20, 0, "b")])
        assert m.fn == 2 and m.tp == 0

    def test_one_of_two(self):
        m = match_detections([pred(0, 0)], [gt(0, 0, "a"), gt(20, 0, "b")])
        p, r, _ = detection_prf(m)
        assert (p, r) == (1.0, 0.5)

    def test_below_threshold(self):
        m = match_detections([pred(6, 0)], [gt(0, 0, "a")], 0.5)
        assert (m.tp, m.fp, m.fn) == (0, 1, 1)

    def test_duplicate_is_false_positive(self):
        m = match_detections([pred(0, 0, score=0.9), pred(0, 0, score=0.8)], [gt(0, 0, "a")])
        assert (m.tp, m.fp) == (1, 1)

    def test_score_order_decides(self):
        # both predictions overlap the single target; the higher score claims it
        gts = [gt(0, 0, "a")]
        m = match_detections([pred(1, 0, score=0.2), pred(2, 0, score=0.9)], gts)
        assert m.pairs[0][0] == 1

    def test_ignored_region_discarded(self):
        gts = [gt(0, 0, "a"), gt(30, 0, "###")]
        m = match_detections([pred(0, 0), pred(30, 0)], gts)
        assert (m.tp, m.fp, m.fn, m.discarded) == (1, 0, 0, 1)

    def test_ignored_not_in_recall(self):
        m = match_detections([], [gt(30, 0, "###")])
        assert m.num_gts == 0 and detection_prf(m) == (0.0, 0.0, 0.0)


class TestPRF:
    def test_example(self):
        p, r, f = prf_from_counts(1, 0, 1)
        assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)

    def test_empty(self):
        assert prf_from_counts(0, 0, 0) == (0.0, 0.0, 0.0)

    def test_perfect(self):
        assert prf_from_counts(5, 0, 0) == (1.0, 1.0, 1.0)

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_bounds_and_monotonicity(self, tp, fp, fn):
        p, r, f = prf_from_counts(tp, fp, fn)
        if p + r > 0:
            assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12
        assert prf_from_counts(tp, fp + 1, fn)[0] <= p
        assert prf_from_counts(tp, fp, fn + 1)[1] <= r


class TestEditDistance:
    def test_identity(self):
        assert edit_distance("word", "word") == 0

    def test_empty(self):
        assert edit_distance("", "abc") == 3

    def test_kitten(self):
        assert levenshtein("kitten", "sitting") == 3
        assert edit_distance("kitten", "sitting") == 3

    @settings(max_examples=300)
    @given(st.text("abc", max_size=7), st.text("abc", max_size=7), st.text("abc", max_size=7))
    def test_metric(self, a, b, c):
        assert edit_distance(a, b) == levenshtein(a, b)
        assert edit_distance(a, b) == edit_distance(b, a)
        assert (edit_distance(a, b) == 0) == (a == b)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


class TestEndToEnd:
    def test_perfect_none_mode(self):
        gts = [gt(0, 0, "hello"), gt(20, 0, "world")]
        preds = [pred(0, 0, "hello"), pred(20, 0, "world")]
        assert e2e_eval(preds, gts)[2] == 1.0

    def test_lexicon_tie_goes_lexicographic(self):
        # "wrd" is one edit from both entries; "ward" < "word" wins and mismatches
        assert edit_distance("wrd", "word") == edit_distance("wrd", "ward") == 1
        cfg = EvalConfig(lexicon_mode="full", lexicon=("word", "ward"))
        assert correct_with_lexicon("wrd", cfg.lexicon) == "ward"
        gts = [gt(0, 0, "word")]
        preds = [pred(0, 0, "wrd")]
        m = match_detections(preds, gts)
        assert e2e_counts(m, preds, gts, cfg) == (0, 1, 1)

    def test_lexicon_fixes_typo(self):
        cfg = EvalConfig(lexicon_mode="full", lexicon=("hello", "world"))
        assert e2e_eval([pred(0, 0, "helo")], [gt(0, 0, "hello")], cfg) == (1.0, 1.0, 1.0)

    def test_case_folding(self):
        gts, preds = [gt(0, 0, "word")], [pred(0, 0, "WORD")]
        assert e2e_eval(preds, gts)[2] == 1.0
        assert e2e_eval(preds, gts, EvalConfig(case_sensitive=True))[2] == 0.0

    def test_missing_lexicon(self):
        with pytest.raises(MissingLexicon):
            EvalConfig(lexicon_mode="full")

    def test_missing_transcript(self):
        assert e2e_eval([pred(0, 0)], [gt(0, 0, "a")]) == (0.0, 0.0, 0.0)

    def test_e2e_tp_bounded_by_detection(self, fixture_dataset):
        for img in fixture_dataset:
            preds = [to_det_prediction(r, img.image_id)
                     for r in predictions_from_ground_truth(img).predictions]
            preds = [DetPrediction(p.image_id, p.polygon, p.score,
                                   p.transcript if i % 3 else "zz") for i, p in enumerate(preds)]
            m = match_detections(preds, img.instances)
            assert e2e_counts(m, preds, img.instances, EvalConfig())[0] <= m.tp


class TestBucketRecall:
    def scene(self):
        return [gt(0, 0, "ab"), gt(20, 0, "xy"), gt(40, 0, "hello"), gt(60, 0, "world"),
                gt(80, 0, "a" * 12), gt(100, 0, "b" * 13)]

    def test_all_matched(self):
        gts = self.scene()
        m = match_detections([pred(g.polygon.points[0].x, 0) for g in gts], gts)
        assert length_bucket_recall(m, gts) == {"short": 1.0, "regular": 1.0, "long": 1.0}

    def test_only_regular(self):
        gts = self.scene()
        m = match_detections([pred(40, 0), pred(60, 0)], gts)
        assert length_bucket_recall(m, gts) == {"short": 0.0, "regular": 1.0, "long": 0.0}

    def test_half_each(self):
        gts = self.scene()
        m = match_detections([pred(0, 0), pred(40, 0), pred(80, 0)], gts)
        assert length_bucket_recall(m, gts) == {"short": 0.5, "regular": 0.5, "long": 0.5}

    def test_empty_bucket_is_none(self):
        gts = [gt(0, 0, "hello")]
        m = match_detections([pred(0, 0)], gts)
        assert length_bucket_recall(m, gts)["long"] is None


def test_overall_recall_is_weighted_bucket_mean(fixture_dataset):
    preds = {}
    for img in fixture_dataset:
        recs = predictions_from_ground_truth(img).predictions
        preds[img.image_id] = [to_det_prediction(r, img.image_id) for i, r in enumerate(recs)
                               if i % 2 == 0]
    report = evaluate(fixture_dataset, preds)
    weighted = sum(report.bucket_recall[b] * report.bucket_counts[b]
                   for b in report.bucket_counts if report.bucket_counts[b])
    assert report.recall == pytest.approx(weighted / sum(report.bucket_counts.values()), abs=1e-12)


def test_matchset_counts_defaults():
    m = MatchSet(num_preds=3, num_gts=2)
    assert (m.tp, m.fp, m.fn) == (0, 3, 2)
