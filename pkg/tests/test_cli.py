"""Tests for the heun-connect command line."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from config_helpers import load_settings
from heun_connect.cli import main, parse_complex, parse_resolution
from heun_connect.errors import ParseError

WITNESS_ARGS = [f"--phi={2 * math.pi / 3!r},{4 * math.pi / 3!r}", f"--a=0.5,{math.sqrt(3)!r}"]
FEASIBLE_ARGS = [f"--phi={math.pi / 2!r},{math.pi!r}", "--a=1.8,-0.6", "--lam=0.5"]


def _write_config(path: Path, z, chi=(0.3, 0.5, 0.7, 0.9), lam=0.5) -> str:
    document = {
        "z": [[complex(v).real, complex(v).imag] for v in z],
        "chi": list(chi),
        "lam": lam,
    }
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


@pytest.fixture()
def feasible_file(tmp_path: Path) -> str:
    return _write_config(tmp_path / "feasible.json", (1j, -1, -2j, 1))


class TestParsers:
    """Tests for argument parsing helpers."""

    def test_parse_complex(self) -> None:
        assert parse_complex("1.8,-0.6") == complex(1.8, -0.6)
        assert parse_complex("2") == 2

    def test_parse_complex_rejects_garbage(self) -> None:
        with pytest.raises(ParseError):
            parse_complex("1,2,3")

    def test_parse_resolution(self) -> None:
        assert parse_resolution("64") == (64, 64)
        assert parse_resolution("32,48") == (32, 48)


class TestParams:
    """Tests for the params command."""

    def test_unit_circle_input(self, isolated_env, capsys) -> None:
        assert main(["params", *WITNESS_ARGS]) == 0

        report = json.loads(capsys.readouterr().out)
        assert complex(*report["config"]["z"][2]) == pytest.approx(1 / 3, abs=1e-12)
        assert complex(*report["cross_ratio"]) == pytest.approx(complex(0.5, math.sqrt(3)), abs=1e-12)
        assert report["standard_form"]["fuchs_defect"] < 1e-12

    def test_zero_angles_give_zero_q(self, isolated_env, tmp_path, capsys) -> None:
        path = _write_config(tmp_path / "zero.json", (1j, -1, -2j, 1), chi=(0, 0, 0, 0))

        assert main(["params", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["q"] == [[0.0, 0.0]] * 4
        assert report["alpha"] == [[0.5, 0.0]] * 4

    def test_output_file(self, isolated_env, feasible_file, tmp_path) -> None:
        target = tmp_path / "params.json"

        assert main(["params", feasible_file, "-o", str(target)]) == 0
        assert json.loads(target.read_text())["disc_radii"][0] == pytest.approx(math.sqrt(2))


class TestExitCodes:
    """Each error family maps onto its own exit code."""

    def test_invalid_json(self, isolated_env, tmp_path, capsys) -> None:
        path = tmp_path / "bad.json"
        path.write_text("[1, 2", encoding="utf-8")

        assert main(["params", str(path)]) == 2
        assert "Ugyldig inndata" in capsys.readouterr().err

    def test_missing_configuration(self, isolated_env) -> None:
        assert main(["params"]) == 2

    def test_coincident_points(self, isolated_env, tmp_path) -> None:
        path = _write_config(tmp_path / "dup.json", (1j, 1j, -2j, 1))

        assert main(["params", path]) == 3

    def test_equal_exponents(self, isolated_env, tmp_path) -> None:
        path = _write_config(tmp_path / "quarter.json", (1j, -1, -2j, 1), chi=(math.pi / 4,) * 4)

        assert main(["connect", path, "-k", "1", "-l", "2"]) == 3

    def test_point_outside_disc(self, isolated_env, feasible_file) -> None:
        assert main(["connect", feasible_file, "-k", "1", "-l", "3", "--at", "2,2"]) == 4

    def test_condition_a_violation(self, isolated_env, tmp_path, capsys) -> None:
        path = _write_config(tmp_path / "close.json", (1j, complex(math.cos(2.0), math.sin(2.0)), -2j, 1))

        assert main(["atlas", path, "-o", str(tmp_path / "atlas")]) == 4
        assert "Condition A" in capsys.readouterr().err

    def test_non_convergence(self, isolated_env, feasible_file) -> None:
        assert main(["connect", feasible_file, "-k", "1", "--n-terms", "4"]) == 5

    def test_invalid_tolerance(self, isolated_env, feasible_file) -> None:
        assert main(["verify", feasible_file, "--tolerance", "0.5"]) == 2


class TestConnect:
    """Tests for the connect command."""

    def test_pair_matrix(self, isolated_env, feasible_file, capsys) -> None:
        assert main(["connect", feasible_file, "-k", "2", "-l", "4"]) == 0

        report = json.loads(capsys.readouterr().out)
        assert len(report["matrix"]["entries"]) == 4
        assert report["reconstruction_residual"] < 1e-8
        assert report["dual_path_discrepancy"] < 1e-10

    def test_to_point(self, isolated_env, feasible_file, capsys) -> None:
        assert main(["connect", feasible_file, "-k", "3", "--at", "0,0.05"]) == 0

        report = json.loads(capsys.readouterr().out)
        assert report["matrix"]["target_index"] is None
        assert report["at"] == [0.0, 0.05]


class TestAtlas:
    """Tests for the atlas command."""

    def test_single_point_atlas_files(self, isolated_env, tmp_path, capsys) -> None:
        out = tmp_path / "atlas"

        assert main(["atlas", *FEASIBLE_ARGS, "-o", str(out)]) == 0

        summary = json.loads((out / "summary.json").read_text())
        assert summary["mode"] == "single-point"
        assert summary["matrices"] == 10
        assert summary["max_residual"] < 1e-8
        assert len(list(out.glob("pair_*.json"))) == 6
        assert len(list(out.glob("base_*.json"))) == 4

    def test_no_chain(self, isolated_env, tmp_path) -> None:
        assert main(["atlas", *WITNESS_ARGS, "-o", str(tmp_path / "atlas")]) == 4

    def test_deterministic(self, isolated_env, tmp_path) -> None:
        for name in ("first", "second"):
            assert main(["atlas", *FEASIBLE_ARGS, "--seed", "2", "-o", str(tmp_path / name)]) == 0

        for path in sorted((tmp_path / "first").iterdir()):
            assert path.read_bytes() == (tmp_path / "second" / path.name).read_bytes()

    def test_default_output_from_settings(self, isolated_env, tmp_path) -> None:
        assert main(["atlas", *FEASIBLE_ARGS]) == 0

        assert (tmp_path / "out" / "atlas" / "summary.json").exists()


class TestScan:
    """Tests for the scan command."""

    def test_condition_a_scan(self, isolated_env, tmp_path, capsys) -> None:
        stem = tmp_path / "scan_a"

        assert main(["scan", "a", "--resolution", "64", "-o", str(stem)]) == 0

        summary = json.loads(capsys.readouterr().out)
        assert summary["components"] == 2
        assert stem.with_suffix(".ppm").read_bytes().startswith(b"P6\n64 64\n255\n")
        assert len(stem.with_suffix(".csv").read_text().splitlines()) == 1 + 64 * 64

    def test_scan_is_byte_identical(self, isolated_env, tmp_path) -> None:
        for name in ("one", "two"):
            assert main(["scan", "ab", "--a=0.5,1.7", "--resolution", "32", "-o", str(tmp_path / name)]) == 0

        for suffix in (".csv", ".ppm", ".json"):
            first = (tmp_path / "one").with_suffix(suffix).read_bytes()
            second = (tmp_path / "two").with_suffix(suffix).read_bytes()
            assert first == second

    def test_ab_needs_cross_ratio(self, isolated_env, tmp_path) -> None:
        assert main(["scan", "ab", "--resolution", "32", "-o", str(tmp_path / "x")]) == 2

    def test_condition_b_scan(self, isolated_env, tmp_path, capsys) -> None:
        stem = tmp_path / "scan_b"

        assert main(["scan", "b", "--a=0.5,1.7", "--resolution", "32", "-o", str(stem)]) == 0

        summary = json.loads(capsys.readouterr().out)
        assert summary["metadata"]["kind"] == "b"
        assert summary["counts"]["true"] > 0
        assert "components" in summary

    def test_b_needs_cross_ratio(self, isolated_env, tmp_path) -> None:
        assert main(["scan", "b", "--resolution", "32", "-o", str(tmp_path / "x")]) == 2

    def test_dotted_output_stem(self, isolated_env, tmp_path) -> None:
        stem = tmp_path / "run.v2"

        assert main(["scan", "a", "--resolution", "16", "-o", str(stem)]) == 0

        for name in ("run.v2.csv", "run.v2.ppm", "run.v2.json"):
            assert (tmp_path / name).exists()
        assert json.loads((tmp_path / "run.v2.json").read_text())["files"] == ["run.v2.csv", "run.v2.ppm"]

    def test_resolution_too_small(self, isolated_env, tmp_path) -> None:
        assert main(["scan", "a", "--resolution", "4", "-o", str(tmp_path / "x")]) == 2

    def test_dmn_scan(self, isolated_env, tmp_path, capsys) -> None:
        stem = tmp_path / "dmn"

        assert main(
            ["scan", "dmn", "--resolution", "16", "--phi-resolution", "16", "--window=-2,3,-3,3", "-o", str(stem)]
        ) == 0
        summary = json.loads(capsys.readouterr().out)
        assert "components" not in summary
        assert summary["metadata"]["phi_resolution"] == [16, 16]


class TestVerify:
    """Tests for the verify command."""

    def test_passes(self, isolated_env, feasible_file, capsys) -> None:
        assert main(["verify", feasible_file]) == 0
        assert json.loads(capsys.readouterr().out)["passed"] is True

    def test_fails_with_short_truncation(self, isolated_env, feasible_file) -> None:
        assert main(["verify", feasible_file, "--n-terms", "4"]) == 1


class TestConfigCommand:
    """Tests for persisting settings."""

    def test_writes_settings(self, isolated_env, capsys) -> None:
        assert main(["config", "--jobs", "3", "--tolerance", "1e-9"]) == 0

        assert "Lagra innstillingar" in capsys.readouterr().out
        settings = load_settings(isolated_env)
        assert settings.jobs == 3
        assert settings.tolerance == 1e-9

    def test_rejects_invalid_tolerance(self, isolated_env) -> None:
        assert main(["config", "--tolerance", "1"]) == 2
        assert not isolated_env.exists()

    def test_shows_current_values(self, isolated_env, capsys) -> None:
        assert main(["config"]) == 0

        shown = json.loads(capsys.readouterr().out)
        assert shown["HEUN_CONNECT_JOBS"] == "1"
        assert shown["path"] == str(isolated_env)
