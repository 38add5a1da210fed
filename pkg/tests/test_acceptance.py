"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a single "[ACCEPTANCE] <criterion>: PASS/FAIL" line (visible
with pytest -s) and then asserts, so the suite doubles as a checklist.
"""

import time

import numpy as np
import pytest

from pneumobox import io as formats
from pneumobox.augment import augment_sample, preset, sample_params
from pneumobox.fusion import Cluster, ShrinkConfig, ensemble, fuse_cluster
from pneumobox.geometry import (
    Affine,
    Box,
    area,
    transform_box_corners,
    transform_box_custom,
)
from pneumobox.metric import (
    ApConfig,
    DEFAULT_THRESHOLDS,
    Detection,
    ImageRecord,
    average_precision,
    mean_average_precision,
)
from pneumobox.nms import nms, sweep

from oracles import map_exhaustive, nms_reference_indices


def _report(name: str, passed: bool) -> None:
    print(f"[ACCEPTANCE] {name}: {'PASS' if passed else 'FAIL'}")


def _grid_instance(rng):
    truth = []
    for _ in range(int(rng.integers(0, 7))):
        x, y = (int(v) for v in rng.integers(0, 51, size=2))
        w, h = (int(v) for v in rng.integers(1, 15, size=2))
        truth.append((x, y, w, h))
    preds = []
    for _ in range(int(rng.integers(0, 9))):
        if truth and rng.random() < 0.7:
            x, y, w, h = truth[int(rng.integers(0, len(truth)))]
            x += int(rng.integers(-4, 5))
            y += int(rng.integers(-4, 5))
        else:
            x, y = (int(v) for v in rng.integers(0, 51, size=2))
            w, h = (int(v) for v in rng.integers(1, 15, size=2))
        preds.append((round(float(rng.random()), 2), (x, y, w, h)))
    return truth, preds


def test_metric_oracle_equivalence():
    rng = np.random.Generator(np.random.PCG64(2024))
    start = time.perf_counter()
    instances = []
    while len(instances) < 200:
        truth, preds = _grid_instance(rng)
        if truth or preds:
            instances.append((truth, preds))
    records = [
        ImageRecord(
            f"i{k:03d}",
            tuple(Box(*t) for t in truth),
            tuple(Detection(Box(*b), conf) for conf, b in preds),
        )
        for k, (truth, preds) in enumerate(instances)
    ]
    actual = mean_average_precision(records)
    expected = float(map_exhaustive(instances, DEFAULT_THRESHOLDS))
    elapsed = time.perf_counter() - start
    ok = abs(actual - expected) <= 1e-9 and elapsed < 10.0
    _report("metric-oracle-equivalence", ok)
    assert abs(actual - expected) <= 1e-9, f"|{actual} - {expected}| > 1e-9"
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_hand_derived_ladder_fixture():
    fixture = ImageRecord(
        "fx", (Box(0, 0, 100, 100),), (Detection(Box(10, 0, 100, 80), 0.9),)
    )
    box = Box(7, 9, 50, 60)
    perfect = ImageRecord("pf", (box,), (Detection(box, 1.0),))
    all_fp = ImageRecord("fp", (), (Detection(Box(0, 0, 10, 10), 0.8),))
    cfg = ApConfig(comparator="gt")
    ok = (
        average_precision(fixture, cfg) == 0.75
        and average_precision(perfect, cfg) == 1.0
        and average_precision(all_fp, cfg) == 0.0
    )
    _report("hand-derived-ap-fixture", ok)
    assert average_precision(fixture, cfg) == 0.75
    assert average_precision(perfect, cfg) == 1.0
    assert average_precision(all_fp, cfg) == 0.0


def test_nms_reference_equivalence():
    rng = np.random.Generator(np.random.PCG64(7))
    ok = True
    for trial in range(500):
        n = int(rng.integers(0, 51))
        dets = [
            Detection(
                Box(*(float(v) for v in rng.uniform(0, 300, size=2)),
                    *(float(v) for v in rng.uniform(5, 120, size=2))),
                float(rng.uniform(0, 1)),
            )
            for _ in range(n)
        ]
        tau = float(rng.uniform(0.05, 1.0))
        kept = nms(dets, tau)
        expected = [
            dets[i]
            for i in nms_reference_indices(
                [d.confidence for d in dets],
                [(d.box.x, d.box.y, d.box.w, d.box.h) for d in dets],
                tau,
            )
        ]
        ok = ok and set(kept) == set(expected) and nms(kept, tau) == kept
    _report("nms-reference-and-idempotence", ok)
    assert ok


def test_custom_rotation_containment():
    rng = np.random.Generator(np.random.PCG64(11))
    ok = True
    for trial in range(1000):
        b = Box(
            float(rng.uniform(0, 900)), float(rng.uniform(0, 900)),
            float(rng.uniform(1, 300)), float(rng.uniform(1, 300)),
        )
        angle = float(rng.uniform(-6.0, 6.0))
        cx, cy = (float(v) for v in rng.uniform(0, 1000, size=2))
        t = Affine.rotation(angle, cx, cy)
        cu, co = transform_box_custom(b, t), transform_box_corners(b, t)
        contained = (
            cu.x >= co.x and cu.y >= co.y
            and cu.x + cu.w <= co.x + co.w and cu.y + cu.h <= co.y + co.h
        )
        ratio_ok = area(co) == 0 or area(cu) / area(co) <= 1.0
        identity_ok = (
            transform_box_custom(b, Affine.identity()) == b
            and transform_box_corners(b, Affine.identity()) == b
        )
        ok = ok and contained and ratio_ok and identity_ok
    _report("custom-rotation-containment", ok)
    assert ok


def test_rescale_fixture():
    rng = np.random.Generator(np.random.PCG64(13))
    cfg = ShrinkConfig(mode="fixed-rescale", rescale_factor=0.875)
    ok = True
    for trial in range(100):
        x, y = (float(v) for v in rng.integers(0, 800, size=2))
        w, h = (float(v) for v in rng.integers(1, 400, size=2))
        d = Detection(Box(x, y, w, h), round(float(rng.uniform(0.01, 1.0)), 4))
        fused = fuse_cluster(Cluster((d,), d), cfg)
        center_ok = (
            abs((fused.box.x + fused.box.w / 2) - (x + w / 2)) <= 1e-9
            and abs((fused.box.y + fused.box.h / 2) - (y + h / 2)) <= 1e-9
        )
        area_ok = area(fused.box) == 0.765625 * area(d.box)
        ok = ok and center_ok and area_ok
    _report("rescale-0.875-fixture", ok)
    assert ok


def test_fusion_idempotence_and_degenerate_spread():
    rng = np.random.Generator(np.random.PCG64(17))
    ok = True
    for trial in range(50):
        source = []
        for j in range(int(rng.integers(1, 6))):
            source.append(
                Detection(
                    Box(300.0 * j + float(rng.uniform(0, 60)), float(rng.uniform(0, 200)),
                        *(float(v) for v in rng.uniform(10, 150, size=2))),
                    float(rng.uniform(0.01, 1.0)),
                )
            )
        single = ensemble([source])
        for k in (2, 3, 4):
            ok = ok and ensemble([source] * k) == single
        d = source[0]
        for k in (1, 2, 3, 4, 5, 7):
            ok = ok and fuse_cluster(Cluster((d,) * k, d), ShrinkConfig()) == d
    _report("fusion-idempotence", ok)
    assert ok


def test_postprocessing_efficacy():
    start = time.perf_counter()
    truth = (Box(5, 5, 70, 70), Box(30, 5, 70, 70))
    sources = [
        [Detection(Box(0, 0, 80, 80), 0.9, s), Detection(Box(25, 0, 80, 80), 0.8, s)]
        for s in range(4)
    ]
    scores = {}
    for factor in (0.875, 1.0):
        cfg = ShrinkConfig(mode="fixed-rescale", rescale_factor=factor)
        records = []
        for i in range(10):
            fused = ensemble(sources, cluster_iou=0.6, shrink=cfg, nms_threshold=0.5)
            records.append(ImageRecord(f"img{i}", truth, tuple(fused)))
        scores[factor] = mean_average_precision(records)
    elapsed = time.perf_counter() - start
    gap = scores[0.875] - scores[1.0]
    ok = gap > 0.1 and elapsed < 5.0
    _report("postprocessing-efficacy", ok)
    assert gap > 0.1, f"gap {gap} (scores {scores})"
    assert elapsed < 5.0


def test_sweep_consistency():
    from dataclasses import replace

    rng = np.random.Generator(np.random.PCG64(19))
    runs = []
    for r in range(5):
        records = []
        for i in range(6):
            truth = []
            preds = []
            for _ in range(int(rng.integers(1, 4))):
                x, y = (float(v) for v in rng.uniform(0, 300, size=2))
                w, h = (float(v) for v in rng.uniform(30, 90, size=2))
                truth.append(Box(x, y, w, h))
                for _ in range(3):
                    dx, dy = (float(v) for v in rng.uniform(-8, 8, size=2))
                    preds.append(
                        Detection(Box(x + dx, y + dy, w, h), float(rng.uniform(0.2, 1.0)))
                    )
            records.append(ImageRecord(f"r{r}i{i}", tuple(truth), tuple(preds)))
        runs.append((f"run{r}", records))
    thresholds = tuple(round(0.1 + 0.1 * i, 10) for i in range(10))
    result = sweep(runs, thresholds)
    ok = len(result.cells) == 50
    run_map = dict(runs)
    for cell in result.cells:
        suppressed = [
            replace(rec, predictions=tuple(nms(rec.predictions, cell.nms_threshold)))
            for rec in run_map[cell.run_label]
        ]
        ok = ok and cell.mean_ap == mean_average_precision(suppressed)
    repeat = sweep(runs, thresholds)
    ok = ok and repeat == result and repeat.best == result.best
    _report("sweep-consistency", ok)
    assert ok


def test_format_roundtrips():
    rng = np.random.Generator(np.random.PCG64(23))
    ok = True
    for trial in range(100):
        rows = []
        for p in range(int(rng.integers(1, 8))):
            entries = tuple(
                (
                    round(float(rng.uniform(0, 1)), 4),
                    round(float(rng.uniform(0, 1000)), 4),
                    round(float(rng.uniform(0, 1000)), 4),
                    round(float(rng.uniform(0.1, 400)), 4),
                    round(float(rng.uniform(0.1, 400)), 4),
                )
                for _ in range(int(rng.integers(0, 5)))
            )
            rows.append(formats.PredictionRow(f"t{trial}p{p}", entries))
        ok = ok and formats.parse_predictions(formats.serialize_predictions(rows)) == rows
    for trial in range(100):
        records = []
        for p in range(int(rng.integers(1, 8))):
            truth = tuple(
                Box(
                    round(float(rng.uniform(0, 1000)), 4),
                    round(float(rng.uniform(0, 1000)), 4),
                    round(float(rng.uniform(0.1, 400)), 4),
                    round(float(rng.uniform(0.1, 400)), 4),
                )
                for _ in range(int(rng.integers(0, 4)))
            )
            records.append(ImageRecord(f"t{trial}p{p}", truth, ()))
        ok = ok and formats.parse_ground_truth(formats.serialize_ground_truth(records)) == records
    _report("format-roundtrips", ok)
    assert ok


def test_augmentation_determinism(tmp_path):
    rng = np.random.Generator(np.random.PCG64(29))
    img = np.rint(rng.random((96, 96)) * 255) / 255.0
    boxes = [Box(8, 10, 40, 30), Box(50, 55, 30, 35)]

    source = tmp_path / "in.pgm"
    formats.write_pgm(source, img)
    out_img, out_boxes = augment_sample(formats.read_pgm(source), boxes, preset("none"), 0)
    identity = tmp_path / "identity.pgm"
    formats.write_pgm(identity, out_img)
    byte_identity = identity.read_bytes() == source.read_bytes() and out_boxes == boxes

    heavy = preset("heavy_custom_rotation")
    a_img, a_boxes = augment_sample(img, boxes, heavy, 1234)
    b_img, b_boxes = augment_sample(img, boxes, heavy, 1234)
    a_path, b_path = tmp_path / "a.pgm", tmp_path / "b.pgm"
    formats.write_pgm(a_path, a_img)
    formats.write_pgm(b_path, b_img)
    seed_identity = a_path.read_bytes() == b_path.read_bytes() and a_boxes == b_boxes

    heavy_ranges = True
    p = preset("heavy")
    for seed in range(10_000):
        params = sample_params(p, seed)
        heavy_ranges = heavy_ranges and (
            abs(params.angle_deg) <= 6.0
            and 0.85 <= params.scale <= 1.15
            and -4.0 <= params.shear_deg <= 4.0
        )
    ok = byte_identity and seed_identity and heavy_ranges
    _report("augmentation-determinism", ok)
    assert byte_identity
    assert seed_identity
    assert heavy_ranges


def test_throughput_smoke():
    rng = np.random.Generator(np.random.PCG64(31))
    records = []
    for i in range(1000):
        truth = tuple(
            Box(*(float(v) for v in rng.uniform(0, 900, size=2)),
                *(float(v) for v in rng.uniform(20, 120, size=2)))
            for _ in range(5)
        )
        preds = []
        for b in truth:
            preds.append(
                Detection(
                    Box(b.x + float(rng.uniform(-15, 15)), b.y + float(rng.uniform(-15, 15)),
                        b.w, b.h),
                    float(rng.uniform(0, 1)),
                )
            )
        for _ in range(5):
            preds.append(
                Detection(
                    Box(*(float(v) for v in rng.uniform(0, 900, size=2)),
                        *(float(v) for v in rng.uniform(20, 120, size=2))),
                    float(rng.uniform(0, 1)),
                )
            )
        records.append(ImageRecord(f"p{i:04d}", truth, tuple(preds)))
    start = time.perf_counter()
    score = mean_average_precision(records)
    elapsed = time.perf_counter() - start
    ok = elapsed < 1.0 and 0.0 <= score <= 1.0
    _report("throughput-1000x10", ok)
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    assert 0.0 <= score <= 1.0
