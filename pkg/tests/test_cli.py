import json
from pathlib import Path

import numpy as np
import pytest

from sketchanim.cli import main
from sketchanim.svg_io import frame_to_svg

from conftest import make_box_sketch

FAST_FLAGS = [
    "--frames", "4",
    "--iters", "3",
    "--samples-u", "32",
    "--samples-t", "4",
    "--feature-dim", "8",
    "--frequencies", "2",
]


@pytest.fixture
def sketch_file(tmp_path) -> Path:
    path = tmp_path / "sketch.svg"
    path.write_text(frame_to_svg(make_box_sketch()), encoding="utf-8")
    return path


def run_animate(sketch_file, out_dir, extra=()):
    return main(
        ["animate", "--input", str(sketch_file), "--out", str(out_dir), *FAST_FLAGS, *extra]
    )


def test_animate_writes_outputs(sketch_file, tmp_path):
    out = tmp_path / "run"
    assert run_animate(sketch_file, out) == 0
    frames = sorted(out.glob("frame_*.svg"))
    assert [f.name for f in frames] == [f"frame_{i:04d}.svg" for i in range(4)]
    assert (out / "loss.csv").exists()
    assert (out / "metrics.json").exists()
    assert (out / "params.smv1").read_bytes()[:4] == b"SMV1"
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["schema"] == 1
    assert metrics["frames"] == 4
    lines = (out / "loss.csv").read_text().strip().split("\n")
    assert lines[0] == "iter,length,area,arap,guidance,total"
    assert len(lines) == 4


def test_animate_ppm_rasters(sketch_file, tmp_path):
    out = tmp_path / "run"
    assert run_animate(sketch_file, out, ["--ppm"]) == 0
    ppms = sorted(out.glob("frame_*.ppm"))
    assert len(ppms) == 4
    blob = ppms[0].read_bytes()
    assert blob.startswith(b"P6\n256 256\n255\n")
    assert len(blob) == 15 + 256 * 256 * 3
    body = np.frombuffer(blob[15:], dtype=np.uint8)
    assert body.min() == 0  # some black ink
    assert body.max() == 255  # on white paper


def test_animate_zero_iters_is_config_error(sketch_file, tmp_path, capsys):
    code = main(
        ["animate", "--input", str(sketch_file), "--out", str(tmp_path / "x"), "--iters", "0"]
    )
    assert code == 2
    assert "iterations" in capsys.readouterr().err


def test_animate_missing_input_is_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.svg"
    code = main(["animate", "--input", str(missing), "--out", str(tmp_path / "x"), *FAST_FLAGS])
    assert code == 1
    assert str(missing) in capsys.readouterr().err


def test_animate_malformed_svg_is_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.svg"
    bad.write_text("<svg><path d='M 0 0 Q 1 1 2 2'/></svg>")
    code = main(["animate", "--input", str(bad), "--out", str(tmp_path / "x"), *FAST_FLAGS])
    assert code == 1
    assert "Q" in capsys.readouterr().err


def test_animate_unknown_oracle_is_exit_2(sketch_file, tmp_path, capsys):
    code = run_animate(sketch_file, tmp_path / "x", ["--oracle", "diffusion"])
    assert code == 2
    assert "unknown oracle" in capsys.readouterr().err


def test_animate_deterministic_bytes(sketch_file, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    extra = ["--oracle", "rigid:angle=0.05", "--seed", "7"]
    assert run_animate(sketch_file, out_a, extra) == 0
    assert run_animate(sketch_file, out_b, extra) == 0
    for name in [f"frame_{i:04d}.svg" for i in range(4)] + ["loss.csv", "metrics.json"]:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_metrics_subcommand(sketch_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert run_animate(sketch_file, out) == 0
    capsys.readouterr()  # drop the animate summary line
    code = main(["metrics", "--dir", str(out), "--samples-u", "32", "--samples-t", "4"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["schema"] == 1
    assert payload["frames"] == 4


def test_metrics_subcommand_bad_dir(tmp_path, capsys):
    code = main(["metrics", "--dir", str(tmp_path)])
    assert code == 1


def test_oracle_spec_parsing_errors(sketch_file, tmp_path, capsys):
    code = run_animate(sketch_file, tmp_path / "x", ["--oracle", "rigid:angle=abc"])
    assert code == 2
    code = run_animate(sketch_file, tmp_path / "y", ["--oracle", "rigid:bogus=1"])
    assert code == 2


def test_target_oracle_from_directory(sketch_file, tmp_path):
    source = tmp_path / "source"
    assert run_animate(sketch_file, source, ["--oracle", "rigid:angle=0.02"]) == 0
    out = tmp_path / "fit"
    code = run_animate(sketch_file, out, ["--oracle", f"target:dir={source}"])
    assert code == 0


def test_config_file_precedence(sketch_file, tmp_path):
    cfg = {
        "input": str(sketch_file),
        "frames": 4,
        "iters": 2,
        "samples_u": 32,
        "samples_t": 4,
        "feature_dim": 8,
        "frequencies": 2,
        "seed": 3,
    }
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "from_file"
    assert main(["animate", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert len(list(out.glob("frame_*.svg"))) == 4

    # a flag overrides the file value
    out2 = tmp_path / "override"
    assert main(
        ["animate", "--config", str(cfg_path), "--out", str(out2), "--frames", "3"]
    ) == 0
    assert len(list(out2.glob("frame_*.svg"))) == 3


def test_config_file_unknown_key(sketch_file, tmp_path, capsys):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"inputs": str(sketch_file)}))
    code = main(["animate", "--config", str(cfg_path), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "inputs" in capsys.readouterr().err


def test_ablate_table(sketch_file, tmp_path, capsys):
    out = tmp_path / "ab"
    code = main(
        [
            "ablate",
            "--input", str(sketch_file),
            "--out", str(out),
            "--oracle", "rigid:angle=0.05",
            *FAST_FLAGS,
        ]
    )
    assert code == 0
    table = (out / "ablation.csv").read_text().strip().split("\n")
    assert table[0].startswith("config,")
    labels = [row.split(",")[0] for row in table[1:]]
    assert labels == ["full", "no_la", "no_arap"]

    # identical invocation reproduces the table byte for byte
    capsys.readouterr()
    out2 = tmp_path / "ab2"
    main(
        [
            "ablate",
            "--input", str(sketch_file),
            "--out", str(out2),
            "--oracle", "rigid:angle=0.05",
            *FAST_FLAGS,
        ]
    )
    assert (out / "ablation.csv").read_bytes() == (out2 / "ablation.csv").read_bytes()
