"""Analytics tests against independent brute-force and closed-form oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from abkit.analysis import (
    GtBox,
    QuantileCurve,
    SweepConfig,
    action_sequence_histogram,
    click_localization_accuracy,
    gaussian_click_sweep,
    recall_by_category_and_size,
    relative_click_histogram,
    size_bin,
    trace_quantile_accuracy,
)
from abkit.errors import DegenerateBox, EmptyInput, InvariantViolation
from abkit.records import (
    CocoRecord,
    IconAction,
    ImageNetRecord,
    ProxyPoint,
    TracePoint,
    extract_final_click,
)


def rng_for(tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(tag)))


def random_box(rng) -> tuple[float, float, float, float]:
    x0, y0 = rng.uniform(0.0, 0.6, size=2)
    w, h = rng.uniform(0.1, 0.39, size=2)
    return (round(x0, 4), round(y0, 4), round(x0 + w, 4), round(y0 + h, 4))


def make_pairs(n: int, seed: int):
    rng = rng_for(seed)
    pairs = []
    for i in range(n):
        box = GtBox(f"im-{i}", random_box(rng))
        point = ProxyPoint(float(rng.random()), float(rng.random()))
        pairs.append((point, box))
    return pairs


class TestClickLocalizationAccuracy:
    def test_center_counts_inside(self):
        box = GtBox("a", (0.4, 0.4, 0.6, 0.6))
        assert click_localization_accuracy([(ProxyPoint(0.5, 0.5), box)]) == 1.0

    def test_origin_outside_center_box(self):
        box = GtBox("a", (0.4, 0.4, 0.6, 0.6))
        assert click_localization_accuracy([(ProxyPoint(0.0, 0.0), box)]) == 0.0

    def test_boundary_counts_inside(self):
        box = GtBox("a", (0.4, 0.4, 0.6, 0.6))
        assert click_localization_accuracy([(ProxyPoint(0.4, 0.6), box)]) == 1.0

    def test_matches_bruteforce_oracle_on_200_pairs(self):
        pairs = make_pairs(200, seed=11)
        # independent oracle: explicit per-pair coordinate comparison
        hits = 0
        for point, box in pairs:
            x0, y0, x1, y1 = box.box
            if x0 <= point.x <= x1 and y0 <= point.y <= y1:
                hits += 1
        assert click_localization_accuracy(pairs) == hits / 200

    def test_any_instance_box_counts(self):
        boxes = [GtBox("a", (0.0, 0.0, 0.2, 0.2)), GtBox("a", (0.8, 0.8, 1.0, 1.0))]
        assert click_localization_accuracy([(ProxyPoint(0.9, 0.9), boxes)]) == 1.0

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            click_localization_accuracy([])


def gaussian_box_probability(box, sigma, center=0.5):
    """Closed-form P(clamped Gaussian click lands in the box), per-axis product."""

    def phi(z):
        return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))

    p = 1.0
    for lo, hi in ((box[0], box[2]), (box[1], box[3])):
        axis = phi((hi - center) / sigma) - phi((lo - center) / sigma)
        if lo == 0.0:
            axis += phi((0.0 - center) / sigma)
        if hi == 1.0:
            axis += 1.0 - phi((1.0 - center) / sigma)
        p *= axis
    return p


class TestGaussianClickSweep:
    def test_whole_image_box_is_always_hit(self):
        boxes = [GtBox("a", (0.0, 0.0, 1.0, 1.0))]
        cfg = SweepConfig(sigmas=(0.0, 0.1, 0.5, math.inf), samples_per_image=2000)
        acc = gaussian_click_sweep(boxes, cfg)
        assert all(v == 1.0 for v in acc.values())

    def test_sigma_zero_equals_center_click_accuracy(self):
        boxes = [GtBox(str(i), random_box(rng_for(21))) for i in range(50)]
        acc = gaussian_click_sweep(boxes, SweepConfig(sigmas=(0.0,)))
        centers = [(ProxyPoint(0.5, 0.5), b) for b in boxes]
        assert acc[0.0] == click_localization_accuracy(centers)

    @pytest.mark.parametrize(
        "box", [(0.35, 0.35, 0.65, 0.65), (0.0, 0.0, 0.4, 0.7), (0.2, 0.5, 1.0, 1.0)]
    )
    @pytest.mark.parametrize("sigma", [0.1, 0.25, 0.6])
    def test_matches_closed_form_integral(self, box, sigma):
        cfg = SweepConfig(sigmas=(sigma,), samples_per_image=100_000, rng_seed=3)
        acc = gaussian_click_sweep([GtBox("a", box)], cfg)
        assert acc[sigma] == pytest.approx(gaussian_box_probability(box, sigma), abs=0.005)

    def test_uniform_matches_box_area(self):
        box = (0.1, 0.2, 0.5, 0.8)
        cfg = SweepConfig(sigmas=(math.inf,), samples_per_image=100_000, rng_seed=4)
        acc = gaussian_click_sweep([GtBox("a", box)], cfg)
        assert acc[math.inf] == pytest.approx((0.5 - 0.1) * (0.8 - 0.2), abs=0.005)

    def test_accuracy_non_increasing_for_object_centric_boxes(self):
        rng = rng_for(31)
        boxes = []
        for i in range(40):
            w, h = rng.uniform(0.25, 0.5, size=2)
            cx, cy = rng.uniform(0.45, 0.55, size=2)
            boxes.append(
                GtBox(
                    str(i),
                    (
                        max(0.0, cx - w / 2),
                        max(0.0, cy - h / 2),
                        min(1.0, cx + w / 2),
                        min(1.0, cy + h / 2),
                    ),
                )
            )
        sigmas = (0.0, 0.05, 0.1, 0.2, 0.4, math.inf)
        acc = gaussian_click_sweep(boxes, SweepConfig(sigmas=sigmas, samples_per_image=20_000))
        finite = [acc[s] for s in sigmas if not math.isinf(s)]
        assert all(a >= b - 0.01 for a, b in zip(finite, finite[1:]))
        # centre clicks always beat uniform clicks on object-centric data
        assert acc[0.0] >= acc[math.inf]

    def test_deterministic_given_seed(self):
        boxes = [GtBox(str(i), random_box(rng_for(41))) for i in range(10)]
        cfg = SweepConfig(sigmas=(0.3,), samples_per_image=5000, rng_seed=9)
        assert gaussian_click_sweep(boxes, cfg) == gaussian_click_sweep(boxes, cfg)

    def test_sigmas_must_be_sorted(self):
        with pytest.raises(InvariantViolation):
            SweepConfig(sigmas=(0.5, 0.1))


def trace_record(points, image_id="im-0", selected=True):
    """Record whose mouseTracking is `points` and whose final click is the last one."""
    tps = tuple(TracePoint(x, y, 10 * (i + 1)) for i, (x, y) in enumerate(points))
    clicks = (TracePoint(points[-1][0], points[-1][1], 10 * len(points)),) if selected else ()
    return ImageNetRecord(
        image_id=image_id,
        class_id="c",
        selected=selected,
        selectedRecord=clicks,
        mouseTracking=tps,
        imagePosition=(0.0, 0.0),
        imageWidth=100.0,
        imageHeight=100.0,
        worker_id="w",
        assignment_id="a",
        page_idx=0,
    )


class TestTraceQuantileAccuracy:
    BOX = GtBox("im-0", (0.4, 0.4, 0.8, 0.8))

    def test_trace_fully_inside_box_gives_all_ones(self):
        rec = trace_record([(0.5, 0.5), (0.6, 0.6), (0.7, 0.7)])
        curve = trace_quantile_accuracy([rec], {"im-0": self.BOX}, "traceQuantile", 4)
        assert curve.accuracy == (1.0, 1.0, 1.0, 1.0)

    def test_enter_outside_end_inside(self):
        rec = trace_record([(0.05, 0.05), (0.2, 0.2), (0.5, 0.5), (0.7, 0.7)])
        curve = trace_quantile_accuracy([rec], {"im-0": self.BOX}, "traceQuantile", 4)
        assert curve.accuracy[0] < curve.accuracy[-1]

    def test_final_bin_equals_click_accuracy(self):
        rng = rng_for(51)
        records, boxes = [], {}
        for i in range(200):
            image_id = f"im-{i}"
            boxes[image_id] = GtBox(image_id, random_box(rng))
            n = int(rng.integers(2, 12))
            pts = [tuple(rng.random(2)) for _ in range(n)]
            records.append(trace_record(pts, image_id))
        for mode in ("traceQuantile", "timeQuantile"):
            curve = trace_quantile_accuracy(records, boxes, mode, 5)
            # oracle recomputed from raw traces: final click in box, per record
            hits = sum(
                1
                for r in records
                if boxes[r.image_id].contains(r.selectedRecord[-1].x, r.selectedRecord[-1].y)
            )
            assert curve.accuracy[-1] == hits / len(records)
        last_n = trace_quantile_accuracy(records, boxes, "lastN", 5)
        assert last_n.accuracy[0] == click_localization_accuracy(
            [(extract_final_click(r), boxes[r.image_id]) for r in records]
        )

    def test_last_n_walks_backwards(self):
        # approach: outside, outside, inside(click); N=1 point before click is outside
        rec = trace_record([(0.1, 0.1), (0.2, 0.2), (0.5, 0.5)])
        curve = trace_quantile_accuracy([rec], {"im-0": self.BOX}, "lastN", 3)
        assert curve.accuracy == (1.0, 0.0, 0.0)

    def test_deselected_records_are_skipped(self):
        rec = trace_record([(0.5, 0.5)], selected=False)
        with pytest.raises(EmptyInput):
            trace_quantile_accuracy([rec], {"im-0": self.BOX}, "traceQuantile", 3)

    def test_one_accuracy_per_bin(self):
        with pytest.raises(InvariantViolation):
            QuantileCurve(mode="lastN", bins=3, accuracy=(1.0,))


class TestRelativeClickHistogram:
    BOX = GtBox("a", (0.25, 0.25, 0.75, 0.75))

    def test_center_clicks_mass_in_center_bin(self):
        points = [ProxyPoint(0.5, 0.5)] * 7
        hist = relative_click_histogram(points, [self.BOX] * 7, grid_bins=5)
        assert hist[3, 3] == 7 and hist.sum() == 7

    def test_uniform_clicks_flat_inside(self):
        rng = rng_for(61)
        n = 40_000
        pts = [
            ProxyPoint(0.25 + 0.5 * float(rng.random()), 0.25 + 0.5 * float(rng.random()))
            for _ in range(n)
        ]
        hist = relative_click_histogram(pts, [self.BOX] * n, grid_bins=4)
        inner = hist[1:-1, 1:-1]
        assert hist.sum() == n
        assert inner.sum() == n  # nothing overflowed
        expected = n / 16
        assert np.all(np.abs(inner - expected) < 5 * math.sqrt(expected))

    def test_out_of_box_clicks_land_in_overflow_ring(self):
        pts = [ProxyPoint(0.1, 0.5), ProxyPoint(0.9, 0.1)]
        hist = relative_click_histogram(pts, [self.BOX] * 2, grid_bins=3)
        ring = hist.copy()
        ring[1:-1, 1:-1] = 0
        assert ring.sum() == 2 and hist.sum() == 2

    def test_simulated_enter_top_leave_right_bias(self):
        """Annotator model biased toward the upper-right displaces the mode there."""
        rng = rng_for(71)
        n = 5000
        pts = []
        for _ in range(n):
            u = min(1.0, max(0.0, 0.5 + 0.15 + 0.1 * rng.standard_normal()))
            v = min(1.0, max(0.0, 0.5 - 0.15 + 0.1 * rng.standard_normal()))
            pts.append(ProxyPoint(0.25 + 0.5 * u, 0.25 + 0.5 * v))
        hist = relative_click_histogram(pts, [self.BOX] * n, grid_bins=9)
        inner = hist[1:-1, 1:-1]
        row, col = np.unravel_index(inner.argmax(), inner.shape)
        assert col > 4 and row < 4  # right of centre, above centre

    def test_degenerate_box_rejected(self):
        bad = GtBox.__new__(GtBox)
        object.__setattr__(bad, "image_id", "a")
        object.__setattr__(bad, "box", (0.5, 0.2, 0.5, 0.8))
        object.__setattr__(bad, "mask_ref", None)
        with pytest.raises(DegenerateBox):
            relative_click_histogram([ProxyPoint(0.5, 0.5)], [bad], grid_bins=3)


def coco_record_with(actions, image_id=1, page_idx=0):
    acts = tuple(
        IconAction(kind, cat, TracePoint(x, y, 10 * (i + 1)))
        for i, (kind, cat, x, y) in enumerate(actions)
    )
    return CocoRecord(
        image_id=image_id,
        actionHistories=acts,
        mouseTracking=(),
        categoryHistories=(),
        usingKeyboard=False,
        timeSpent=10 * len(acts) + 10,
        page_idx=page_idx,
        assignment_id="a",
        worker_id="w",
    )


class TestActionSequenceHistogram:
    def test_single_add(self):
        rec = coco_record_with([("add", "dog", 0.5, 0.5)])
        assert action_sequence_histogram([rec]) == {"add": 1}

    def test_add_remove_add(self):
        rec = coco_record_with(
            [("add", "dog", 0.5, 0.5), ("remove", "dog", 0.5, 0.5), ("add", "dog", 0.4, 0.4)]
        )
        assert action_sequence_histogram([rec]) == {"add-remove-add": 1}

    def test_dead_icons_not_counted(self):
        rec = coco_record_with([("add", "dog", 0.5, 0.5), ("remove", "dog", 0.5, 0.5)])
        assert action_sequence_histogram([rec]) == {}

    def test_matches_bruteforce_oracle_on_synthetic_corpus(self):
        rng = rng_for(81)
        cats = ["dog", "cat", "car"]
        records = []
        for i in range(200):
            live, acts = set(), []
            for _ in range(int(rng.integers(1, 10))):
                cat = cats[int(rng.integers(len(cats)))]
                if cat in live:
                    kind = "move" if rng.random() < 0.5 else "remove"
                else:
                    kind = "add"
                if kind == "add":
                    live.add(cat)
                elif kind == "remove":
                    live.discard(cat)
                acts.append((kind, cat, 0.5, 0.5))
            records.append(coco_record_with(acts, image_id=i))
        result = action_sequence_histogram(records)
        # independent oracle: dict-of-lists replay per record
        expected: dict[str, int] = {}
        for r in records:
            by_cat: dict[str, list[str]] = {}
            state: dict[str, bool] = {}
            for a in r.actionHistories:
                by_cat.setdefault(a.category, []).append(a.action)
                state[a.category] = a.action != "remove"
            for cat, alive in state.items():
                if alive:
                    key = "-".join(by_cat[cat])
                    expected[key] = expected.get(key, 0) + 1
        assert result == expected
        assert sum(result.values()) == sum(
            1 for r in records for c, alive in _final_state(r).items() if alive
        )


def _final_state(record):
    state = {}
    for a in record.actionHistories:
        state[a.category] = a.action != "remove"
    return state


class TestRecallBySize:
    def _gt(self, image_ids, cat_boxes):
        return {i: cat_boxes for i in image_ids}

    def test_always_annotated_class(self):
        gt = {
            i: {"dog": (GtBox(i, (0.2, 0.2, 0.6, 0.6)),)} for i in range(5)
        }
        records = [coco_record_with([("add", "dog", 0.4, 0.4)], image_id=i) for i in range(5)]
        out = recall_by_category_and_size(records, gt)
        assert out["dog"][0] == 1.0

    def test_never_annotated_class(self):
        gt = {i: {"cat": (GtBox(i, (0.2, 0.2, 0.6, 0.6)),)} for i in range(5)}
        records = [coco_record_with([], image_id=i) for i in range(5)]
        assert recall_by_category_and_size(records, gt)["cat"][0] == 0.0

    def test_size_bins(self):
        assert size_bin(0.01) == 0
        assert size_bin(0.04) == 0
        assert size_bin(0.05) == 1
        assert size_bin(0.99) == 4

    def test_recall_correlates_with_size_when_generator_ties_them(self):
        rng = rng_for(91)
        sides = {f"c{k}": 0.15 + 0.08 * k for k in range(8)}
        gt, records = {}, []
        for i in range(400):
            cat = f"c{int(rng.integers(8))}"
            side = sides[cat]
            gt[i] = {cat: (GtBox(i, (0.1, 0.1, 0.1 + side, 0.1 + side)),)}
            annotate = rng.random() < side**2 * 1.6 + 0.2
            acts = [("add", cat, 0.2, 0.2)] if annotate else []
            records.append(coco_record_with(acts, image_id=i))
        out = recall_by_category_and_size(records, gt)
        recalls = [out[c][0] for c in sorted(out)]
        mean_bins = [out[c][1] for c in sorted(out)]
        r = np.corrcoef(mean_bins, recalls)[0, 1]
        assert r > 0.5
