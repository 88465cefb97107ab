from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from lenspot.annotations import Dataset, ImageAnnotation, TextInstance, Transcription
from lenspot.errors import OutOfRange
from lenspot.geometry import Polygon
from lenspot.labelgen import (LengthClass, classify_length, dataset_length_histogram,
                              density_histogram, gen_prior_labels, gen_segmap_label)
from lenspot.synthetic import make_dataset

from oracles import inside_vertical_ray


def word(points, text):
    return TextInstance(Polygon(tuple(points)), Transcription.from_raw(text))


def box(x0, y0, x1, y1):
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]


class TestClassifyLength:
    def test_regular(self):
        assert classify_length(5, 25) is LengthClass.REGULAR

    def test_extreme(self):
        assert classify_length(3, 25) is LengthClass.EXTREME
        assert classify_length(11, 25) is LengthClass.EXTREME

    def test_boundaries(self):
        assert classify_length(4, 25) is LengthClass.REGULAR
        assert classify_length(10, 25) is LengthClass.REGULAR
        assert classify_length(25, 25) is LengthClass.EXTREME

    @pytest.mark.parametrize("n", [0, 26, -1])
    def test_out_of_range(self, n):
        with pytest.raises(OutOfRange):
            classify_length(n, 25)

    @given(st.integers(1, 100))
    def test_partition(self, n):
        regular = 4 <= n <= 10
        assert (classify_length(n, 100) is LengthClass.REGULAR) == regular


class TestPriorLabels:
    def test_axis_aligned_word(self):
        ann = ImageAnnotation("a", 100, 100, (word(box(10, 10, 50, 20), "hello"),))
        (p,) = gen_prior_labels(ann, ratio_cap=20, n_max=25).priors
        assert p.ratio_raw == pytest.approx(4.0, rel=1e-12)
        assert p.char_count == 5
        assert p.ratio_norm == pytest.approx(0.2, rel=1e-12)
        assert p.count_norm == pytest.approx(0.2, rel=1e-12)

    def test_unit_square(self):
        ann = ImageAnnotation("a", 10, 10, (word(box(0, 0, 1, 1), "I"),))
        (p,) = gen_prior_labels(ann).priors
        assert (p.ratio_raw, p.char_count) == (pytest.approx(1.0), 1)

    def test_only_ignored(self):
        ann = ImageAnnotation("a", 10, 10, (word(box(0, 0, 1, 1), "###"),) * 3)
        assert gen_prior_labels(ann).priors == ()

    def test_alignment_skips_ignored(self):
        ann = ImageAnnotation("a", 100, 100, (word(box(0, 0, 10, 10), "ab"),
                                              word(box(0, 0, 10, 10), "###"),
                                              word(box(0, 0, 30, 10), "abc")))
        priors = gen_prior_labels(ann).priors
        assert [p.char_count for p in priors] == [2, 3]

    def test_too_long_reported(self):
        ann = ImageAnnotation("a", 100, 100, (word(box(0, 0, 10, 10), "ok"),
                                              word(box(0, 0, 90, 10), "x" * 30)))
        with pytest.raises(OutOfRange, match="instance 1"):
            gen_prior_labels(ann, n_max=25)

    def test_clamped_normalisation(self):
        ann = ImageAnnotation("a", 1000, 100, (word(box(0, 0, 900, 10), "abc"),))
        (p,) = gen_prior_labels(ann, ratio_cap=20).priors
        assert p.ratio_raw == pytest.approx(90) and p.ratio_norm == 1.0

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.5, 200), st.floats(0.5, 200), st.integers(1, 25))
    def test_bounds(self, w, h, n):
        ann = ImageAnnotation("a", 300, 300, (word(box(1, 1, 1 + w, 1 + h), "x" * n),))
        (p,) = gen_prior_labels(ann).priors
        assert 0 <= p.ratio_norm <= 1 and 0 <= p.count_norm <= 1


def cellwise_oracle(ann, W, H, n_max=25):
    expected = np.zeros((H, W))
    for inst in ann.cared():
        n = len(inst.transcription.text)
        value = 0.5 if 4 <= n <= 10 else 1.0
        pts = [(p.x * W / ann.width, p.y * H / ann.height) for p in inst.polygon.points]
        for y in range(H):
            for x in range(W):
                if inside_vertical_ray(x + 0.5, y + 0.5, pts):
                    expected[y, x] = max(expected[y, x], value)
    return expected


class TestSegmap:
    def test_empty_image(self):
        lab = gen_segmap_label(ImageAnnotation("a", 640, 480), 224, 224)
        assert lab.values.shape == (224, 224) and not lab.values.any()

    def test_left_half_extreme(self):
        ann = ImageAnnotation("a", 448, 448, (word(box(0, 0, 224, 448), "ab"),))
        v = gen_segmap_label(ann, 224, 224).values
        assert np.all(v[:, :112] == 1.0) and np.all(v[:, 112:] == 0.0)

    def test_overlap_precedence(self):
        ann = ImageAnnotation("a", 100, 100, (word(box(10, 10, 60, 30), "short"),
                                              word(box(40, 10, 90, 30), "xy"),
                                              word(box(10, 50, 60, 70), "xy"),
                                              word(box(40, 50, 90, 70), "short")))
        v = gen_segmap_label(ann, 100, 100).values
        assert v[20, 50] == 1.0 and v[60, 50] == 1.0
        assert v[20, 20] == 0.5 and v[60, 80] == 0.5
        assert v[40, 50] == 0.0

    def test_ignored_not_drawn(self):
        ann = ImageAnnotation("a", 100, 100, (word(box(10, 10, 60, 30), "###"),))
        assert not gen_segmap_label(ann, 64, 64).values.any()

    def test_too_small(self):
        with pytest.raises(ValueError):
            gen_segmap_label(ImageAnnotation("a", 10, 10), 4, 4)

    def test_fixture_matches_oracle(self, fixture_dataset):
        img = fixture_dataset.images[0]
        lab = gen_segmap_label(img, 64, 48)
        assert np.array_equal(lab.values, cellwise_oracle(img, 64, 48))

    def test_value_domain(self, fixture_dataset):
        for img in fixture_dataset:
            vals = set(np.unique(gen_segmap_label(img).values))
            assert vals <= {0.0, 0.5, 1.0}

    @pytest.mark.parametrize("n", range(1, 26))
    def test_single_instance_agrees_with_classifier(self, n):
        ann = ImageAnnotation("a", 100, 100, (word(box(10, 10, 90, 40), "x" * n),))
        vals = set(np.unique(gen_segmap_label(ann, 32, 32).values)) - {0.0}
        want = 0.5 if classify_length(n) is LengthClass.REGULAR else 1.0
        assert vals == {want}

    @settings(max_examples=50, deadline=None)
    @given(st.floats(5, 40), st.floats(5, 40), st.floats(0, 10))
    def test_monotone_coverage(self, w, h, grow):
        small = ImageAnnotation("a", 100, 100, (word(box(50 - w, 50 - h, 50 + w, 50 + h), "ab"),))
        big = ImageAnnotation("a", 100, 100, (word(box(50 - w - grow, 50 - h - grow,
                                                      50 + w + grow, 50 + h + grow), "ab"),))
        a = np.count_nonzero(gen_segmap_label(small, 64, 64).values)
        b = np.count_nonzero(gen_segmap_label(big, 64, 64).values)
        assert b >= a


class TestHistograms:
    def _ds(self, lengths_per_image):
        images = []
        for i, lengths in enumerate(lengths_per_image):
            insts = tuple(word(box(0, 0, 10, 5), "###" if n == 0 else "x" * n) for n in lengths)
            images.append(ImageAnnotation(f"i{i}", 100, 100, insts))
        return Dataset(tuple(images))

    def test_length_buckets(self):
        h = dataset_length_histogram(self._ds([[1, 5], [5, 12]]))
        assert h.buckets == {1: 1, 5: 2, 12: 1}
        assert (h.short, h.regular, h.long) == (1, 2, 1)

    def test_empty(self):
        h = dataset_length_histogram(Dataset())
        assert h.buckets == {} and h.total == 0

    def test_density(self):
        assert density_histogram(self._ds([[1, 2], [3, 4], [1] * 7])) == {2: 2, 7: 1}

    def test_all_ignored_density(self):
        assert density_histogram(self._ds([[0, 0]])) == {0: 1}

    def test_synthetic_recount(self):
        ds = make_dataset(n_images=200, words_per_image=(40, 60), seed=11)
        counts = Counter()
        for img in ds:
            for inst in img.instances:
                if inst.transcription.text != "###":
                    counts[len(inst.transcription.text)] += 1
        h = dataset_length_histogram(ds)
        assert h.buckets == dict(counts)
        assert h.total == sum(counts.values())
        per_image = Counter(sum(inst.transcription.text != "###" for inst in img.instances)
                            for img in ds)
        assert density_histogram(ds) == dict(per_image)

    def test_fixture_density_recount(self, fixture_dir, fixture_dataset):
        per_file = Counter()
        for f in fixture_dir.glob("gt_*.txt"):
            lines = [l for l in f.read_text(encoding="utf-8").splitlines() if l.strip()]
            per_file[sum(not l.endswith(",###") for l in lines)] += 1
        assert density_histogram(fixture_dataset) == dict(per_file)


def test_fixture_rank_correlation(fixture_dataset):
    ratios, counts = [], []
    for img in fixture_dataset:
        for p in gen_prior_labels(img).priors:
            ratios.append(p.ratio_raw)
            counts.append(p.char_count)
    rho = spearmanr(ratios, counts).statistic
    assert rho > 0.9
