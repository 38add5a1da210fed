import json

import numpy as np
import pytest

from pneumobox import io as formats
from pneumobox.cli import main
from pneumobox.geometry import Box

TRUTH = "patientId,x,y,width,height,Target\np1,0,0,100,100,1\np2,,,,,0\n"
PRED_MATCH = 'patientId,PredictionString\np1,1.0 0 0 100 100\np2,\n'
PRED_EMPTY = "patientId,PredictionString\np1,\np2,\n"
PRED_666 = "patientId,PredictionString\np1,0.9 10 0 100 80\np2,\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_evaluate_perfect(tmp_path, capsys):
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_MATCH)])
    assert code == 0
    assert capsys.readouterr().out == "1.000000\n"


def test_evaluate_empty_predictions(tmp_path, capsys):
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_EMPTY)])
    assert code == 0
    assert capsys.readouterr().out == "0.000000\n"


def test_evaluate_hand_fixture(tmp_path, capsys):
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_666)])
    assert code == 0
    assert capsys.readouterr().out == "0.750000\n"


def test_evaluate_json_and_per_image(tmp_path, capsys):
    per_image = tmp_path / "per_image.csv"
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_666),
                 "--json", "--per-image", str(per_image)])
    assert code == 0
    assert json.loads(capsys.readouterr().out) == {"map": 0.75}
    assert per_image.read_text() == "image_id,ap\np1,0.750000\np2,\n"


def test_evaluate_flags_override(tmp_path, capsys):
    # IoU 0.666... with a single 0.5 threshold scores 1.0
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_666), "--thresholds", "0.5"])
    assert code == 0
    assert capsys.readouterr().out == "1.000000\n"


def test_evaluate_config_file(tmp_path, capsys):
    config = write(tmp_path, "cfg.json", '{"ap": {"thresholds": [0.7, 0.75]}}')
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_666), "--config", config])
    assert code == 0
    assert capsys.readouterr().out == "0.000000\n"


def test_evaluate_warns_on_extra_patients(tmp_path, capsys):
    pred = "patientId,PredictionString\np1,1.0 0 0 100 100\np9,0.5 0 0 10 10\n"
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", pred)])
    assert code == 0
    captured = capsys.readouterr()
    assert "only in predictions" in captured.err
    assert captured.out == "0.500000\n"  # p9 scores 0, p2 is excluded


def test_evaluate_parse_error_exit_code(tmp_path, capsys):
    code = main(["evaluate", "--truth", write(tmp_path, "t.csv", "bad header\n"),
                 "--pred", write(tmp_path, "p.csv", PRED_MATCH)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_evaluate_missing_file(tmp_path, capsys):
    code = main(["evaluate", "--truth", str(tmp_path / "none.csv"),
                 "--pred", write(tmp_path, "p.csv", PRED_MATCH)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_nms_subcommand(tmp_path):
    pred = "patientId,PredictionString\np1,0.9 0 0 10 10 0.8 0 0 10 10 0.7 50 50 10 10\n"
    out = tmp_path / "out.csv"
    code = main(["nms", "--pred", write(tmp_path, "p.csv", pred),
                 "--iou-threshold", "0.5", "-o", str(out)])
    assert code == 0
    rows = formats.parse_predictions(out.read_text())
    assert rows[0].entries == ((0.9, 0.0, 0.0, 10.0, 10.0), (0.7, 50.0, 50.0, 10.0, 10.0))


def test_sweep_output(tmp_path, capsys):
    code = main(["sweep", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_666),
                 "--nms-min", "0.4", "--nms-max", "0.5", "--nms-step", "0.05"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "run_label,nms_threshold,map"
    assert len(lines) == 5  # header + 3 cells + best comment
    assert lines[-1].startswith("# best: run=")


def test_sweep_duplicate_run_identical_columns(tmp_path, capsys):
    truth = write(tmp_path, "t.csv", TRUTH)
    a = write(tmp_path, "a.csv", PRED_666)
    b = write(tmp_path, "b.csv", PRED_666)
    code = main(["sweep", "--truth", truth, "--pred", a, b,
                 "--nms-min", "0.3", "--nms-max", "0.7", "--nms-step", "0.1"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    cells = [line.split(",") for line in lines[1:-1]]
    by_run = {}
    for label, threshold, value in cells:
        by_run.setdefault(label, []).append((threshold, value))
    assert by_run[a] == by_run[b]


def test_sweep_empty_grid_fails(tmp_path, capsys):
    code = main(["sweep", "--truth", write(tmp_path, "t.csv", TRUTH),
                 "--pred", write(tmp_path, "p.csv", PRED_666),
                 "--nms-min", "0.9", "--nms-max", "0.1"])
    assert code == 2
    assert "empty sweep grid" in capsys.readouterr().err


def test_fuse_passthrough(tmp_path, capsys):
    pred = "patientId,PredictionString\np1,0.9000 0.0000 0.0000 10.0000 10.0000 0.8000 50.0000 0.0000 10.0000 10.0000\n"
    src = write(tmp_path, "p.csv", pred)
    out = tmp_path / "fused.csv"
    code = main(["fuse", "--pred", src, "--mode", "rescale", "--rescale-factor", "1.0",
                 "--nms", "1.0", "-o", str(out)])
    assert code == 0
    assert out.read_text() == pred


def test_fuse_identical_inputs_match_single(tmp_path):
    pred = "patientId,PredictionString\np1,0.9 10 10 80 80\np2,0.5 5 5 40 40\n"
    src = write(tmp_path, "p.csv", pred)
    single, quad = tmp_path / "one.csv", tmp_path / "four.csv"
    assert main(["fuse", "--pred", src, "-o", str(single)]) == 0
    assert main(["fuse", "--pred", src, src, src, src, "-o", str(quad)]) == 0
    assert single.read_text() == quad.read_text()


def test_fuse_rescale_example(tmp_path):
    pred = "patientId,PredictionString\np1,0.9 0 0 80 80\n"
    src = write(tmp_path, "p.csv", pred)
    out = tmp_path / "fused.csv"
    code = main(["fuse", "--pred", src, "--mode", "rescale", "--rescale-factor", "0.875",
                 "--nms", "1.0", "-o", str(out)])
    assert code == 0
    rows = formats.parse_predictions(out.read_text())
    assert rows[0].entries == ((0.9, 5.0, 5.0, 70.0, 70.0),)


def test_fuse_union_warning(tmp_path, capsys):
    a = write(tmp_path, "a.csv", "patientId,PredictionString\np1,0.9 0 0 10 10\n")
    b = write(tmp_path, "b.csv", "patientId,PredictionString\np2,0.8 0 0 10 10\n")
    out = tmp_path / "fused.csv"
    code = main(["fuse", "--pred", a, b, "-o", str(out)])
    assert code == 0
    assert "union" in capsys.readouterr().err
    rows = formats.parse_predictions(out.read_text())
    assert [r.patient_id for r in rows] == ["p1", "p2"]


def _write_image(tmp_path, name="img.pgm", size=48, seed=7):
    rng = np.random.Generator(np.random.PCG64(seed))
    path = tmp_path / name
    formats.write_pgm(path, rng.random((size, size)))
    return str(path)


def test_augment_none_is_byte_identity(tmp_path):
    image = _write_image(tmp_path)
    boxes = write(tmp_path, "boxes.csv", "x,y,w,h\n4,5,12,10\n")
    out_dir = tmp_path / "out"
    code = main(["augment", "--image", image, "--boxes", boxes,
                 "--preset", "none", "--seed", "0", "-o", str(out_dir)])
    assert code == 0
    assert (out_dir / "img_aug.pgm").read_bytes() == (tmp_path / "img.pgm").read_bytes()
    assert formats.parse_boxes_csv((out_dir / "img_aug_boxes.csv").read_text()) == [Box(4, 5, 12, 10)]


def test_augment_seed_reproducible(tmp_path):
    image = _write_image(tmp_path)
    boxes = write(tmp_path, "boxes.csv", "x,y,w,h\n4,5,12,10\n")
    args = ["augment", "--image", image, "--boxes", boxes, "--preset", "heavy", "--seed", "5"]
    assert main(args + ["-o", str(tmp_path / "a")]) == 0
    assert main(args + ["-o", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a/img_aug.pgm").read_bytes() == (tmp_path / "b/img_aug.pgm").read_bytes()
    assert (tmp_path / "a/img_aug_boxes.csv").read_text() == (tmp_path / "b/img_aug_boxes.csv").read_text()


def test_augment_custom_boxes_inside_corner_boxes(tmp_path):
    image = _write_image(tmp_path, size=128)
    boxes = write(tmp_path, "boxes.csv", "x,y,w,h\n30,30,50,40\n")
    base = ["augment", "--image", image, "--boxes", boxes, "--seed", "3"]
    assert main(base + ["--preset", "heavy", "-o", str(tmp_path / "corners")]) == 0
    assert main(base + ["--preset", "heavy_custom_rotation", "-o", str(tmp_path / "custom")]) == 0
    corner_boxes = formats.parse_boxes_csv((tmp_path / "corners/img_aug_boxes.csv").read_text())
    custom_boxes = formats.parse_boxes_csv((tmp_path / "custom/img_aug_boxes.csv").read_text())
    eps = 1e-4  # serialized at 4 decimals
    for cu, co in zip(custom_boxes, corner_boxes):
        assert cu.x >= co.x - eps and cu.y >= co.y - eps
        assert cu.x + cu.w <= co.x + co.w + eps
        assert cu.y + cu.h <= co.y + co.h + eps


def test_augment_unknown_preset_exits_listing_names(tmp_path, capsys):
    image = _write_image(tmp_path)
    boxes = write(tmp_path, "boxes.csv", "x,y,w,h\n")
    with pytest.raises(SystemExit) as exc:
        main(["augment", "--image", image, "--boxes", boxes,
              "--preset", "extreme", "-o", str(tmp_path / "o")])
    assert exc.value.code == 2
    assert "heavy_custom_rotation" in capsys.readouterr().err


def test_bench_smoke(capsys):
    assert main(["bench", "--images", "1", "--boxes-per-image", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "operation,images,boxes_per_image,seconds"
    assert len(lines) == 4
    for line in lines[1:]:
        name, images, boxes, seconds = line.split(",")
        assert float(seconds) > 0


def test_bench_rejects_bad_sizes(capsys):
    assert main(["bench", "--images", "0", "--boxes-per-image", "1"]) == 2
    assert "error:" in capsys.readouterr().err


def test_bench_metric_scales_roughly_linearly(capsys):
    def metric_seconds(n):
        assert main(["bench", "--images", str(n), "--boxes-per-image", "10"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        row = next(line for line in out if line.startswith("metric,"))
        return float(row.split(",")[3])

    small = metric_seconds(500)
    large = metric_seconds(1000)
    assert 2 / 1.5 <= large / small <= 2 * 1.5
