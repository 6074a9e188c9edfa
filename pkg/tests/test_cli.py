import json
import math

import pandas as pd
import pytest

from carpetdim.main import ConfigError, main, parse_config
from carpetdim.models import CommandEnum, OutputFormat
from carpetdim.utils import read_pgm

from .conftest import BM3, FULL_GRID, MERGED, SIERPINSKI8


def test_dims_text(system_file, capsys):
    assert main(["dims", "--input", str(system_file(BM3))]) == 0
    out = capsys.readouterr().out
    assert "BedfordMcMullenType" in out
    assert "dim_H = 1.3496" in out
    assert "dim_B = dim_P = 1.369070" in out
    assert "likely_outside_E" in out


def test_dims_json(system_file, capsys):
    assert main(["dims", "--input", str(system_file(BM3)), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["schema_version"] == 1
    assert report["classification"]["kind"] == "BedfordMcMullenType"
    assert report["hausdorff"]["method"] == "closed_form"
    assert not report["hausdorff"]["lower_bound_only"]
    gamma = math.log(2) / math.log(3)
    assert report["hausdorff"]["value"] == pytest.approx(math.log2(1 + 2 ** gamma), abs=1e-12)
    assert report["box"]["value"] == pytest.approx(1.369070, abs=1e-6)
    assert report["box"]["D_B"] == pytest.approx(1.215893, abs=1e-5)
    assert set(report["hausdorff"]["weights"]) == {"1,1", "2,1", "2,2"}


def test_dims_is_deterministic(system_file, capsys):
    path = str(system_file(SIERPINSKI8))
    args = ["dims", "--input", path, "--format", "json", "--starts", "2", "--seed", "5"]
    main(args)
    first = capsys.readouterr().out
    main(args + ["--threads", "2"])
    assert capsys.readouterr().out == first


def test_hausdorff_and_box_only(system_file, capsys):
    path = str(system_file(BM3))
    main(["hausdorff", "--input", path, "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert report["box"] is None and report["hausdorff"] is not None
    main(["box", "--input", path, "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert report["hausdorff"] is None and report["box"]["t_A"] == pytest.approx(1.0)


def test_missing_pattern_exits_2(system_file, capsys):
    raw = {k: v for k, v in BM3.items() if k != "pattern"}
    assert main(["dims", "--input", str(system_file(raw))]) == 2
    assert "pattern" in capsys.readouterr().err


def test_unreadable_input_exits_3(tmp_path, system_file, capsys):
    assert main(["dims", "--input", str(tmp_path / "nao_existe.json")]) == 3
    broken = tmp_path / "broken.json"
    broken.write_text("{ column_widths", encoding="utf-8")
    assert main(["dims", "--input", str(broken)]) == 3


def test_bad_ladder_exits_2(system_file):
    assert main(["empirical", "--input", str(system_file(FULL_GRID)), "--qmin", "4", "--qmax", "2"]) == 2


def test_parse_config_with_contents():
    config, system = parse_config(["diagnose", "--input", "x.json", "--kmax", "5", "--strict"], contents=BM3)
    assert config.command == CommandEnum.DIAGNOSE
    assert config.output_format == OutputFormat.JSON
    assert config.k_max == 5 and config.strict
    assert len(system.pattern) == 3


def test_parse_config_reports_invalid_system():
    with pytest.raises(ConfigError) as exc:
        parse_config(["dims", "--input", "x.json"], contents={**BM3, "column_widths": ["1/2", "1/3"]})
    assert exc.value.exit_code == 2
    assert "SumNotOne" in str(exc.value)


def test_diagnose_defaults_to_json(system_file, capsys):
    assert main(["diagnose", "--input", str(system_file(MERGED)), "--kmax", "4"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "inside_E_candidate"
    assert report["x_axis"]["overlap_level"] == 1
    assert report["hyperplane_hits"][0]["translation"] == "0"


def test_approx_csv(system_file, tmp_path):
    output = tmp_path / "trace.csv"
    args = ["approx", "--input", str(system_file(BM3)), "--k", "10", "--k", "100", "--output", str(output)]
    assert main(args) == 0
    df = pd.read_csv(output)
    assert list(df.columns) == ["flavor", "k", "theta", "s_k"]
    assert list(df["flavor"]) == ["hausdorff", "hausdorff", "box", "box"]
    assert list(df["k"]) == [10, 100, 10, 100]


def test_empirical_csv_and_summary(system_file, tmp_path, capsys):
    output = tmp_path / "samples.csv"
    args = ["empirical", "--input", str(system_file(FULL_GRID)), "--qmin", "1", "--qmax", "3", "--output", str(output)]
    assert main(args) == 0
    df = pd.read_csv(output)
    assert list(df["N_delta"]) == [9, 81, 729]
    assert "Inclinação = 2.000000" in capsys.readouterr().out


def test_render_writes_pgm(system_file, tmp_path, capsys):
    output = tmp_path / "merged.pgm"
    args = ["render", "--input", str(system_file(MERGED)), "--resolution", "6", "--delta", "0.5", "--output", str(output)]
    assert main(args) == 0
    assert str(output) in capsys.readouterr().out
    image = read_pgm(output)
    assert image.shape == (6, 6)
    assert image[5, 0] == 128 and image[2, 0] == 64 and image[0, 5] == 0


def test_empirical_csv_is_byte_identical(system_file, tmp_path):
    path = str(system_file(SIERPINSKI8))
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["empirical", "--input", path, "--qmin", "1", "--qmax", "3"]
    assert main(base + ["--output", str(first)]) == 0
    assert main(base + ["--output", str(second), "--threads", "3"]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_approx_csv_is_byte_identical(system_file, tmp_path):
    path = str(system_file(SIERPINSKI8))
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["approx", "--input", path, "--k", "10", "--k", "1000", "--seed", "4"]
    assert main(base + ["--output", str(first)]) == 0
    assert main(base + ["--output", str(second), "--threads", "2"]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_render_pgm_is_byte_identical(system_file, tmp_path):
    path = str(system_file(BM3))
    first, second = tmp_path / "a.pgm", tmp_path / "b.pgm"
    base = ["render", "--input", path, "--resolution", "64"]
    assert main(base + ["--output", str(first)]) == 0
    assert main(base + ["--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_diagnose_json_is_byte_identical(system_file, capsys):
    args = ["diagnose", "--input", str(system_file(MERGED)), "--kmax", "6"]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first
