"""Unit tests for config_helpers module."""

from __future__ import annotations

from pathlib import Path

import pytest

from config_helpers import (
    DEFAULTS,
    collect_preserved_lines,
    load_settings,
    merged_values,
    normalize_path,
    parse_env_file,
    parse_tolerance,
    resolve_env_path,
    write_env_file,
)
from heun_connect.errors import ParseError


class TestParseEnvFile:
    """Tests for parsing .env files."""

    def test_parse_env_file_with_key_value_pairs(self, tmp_path: Path) -> None:
        """Test parsing standard KEY=VALUE format."""
        env_file = tmp_path / ".env"
        env_file.write_text("HEUN_CONNECT_JOBS=4\nHEUN_CONNECT_OUTPUT_PATH=/home/user\n")

        result = parse_env_file(env_file)

        assert result["HEUN_CONNECT_JOBS"] == "4"
        assert result["HEUN_CONNECT_OUTPUT_PATH"] == "/home/user"

    def test_parse_env_file_with_quoted_values(self, tmp_path: Path) -> None:
        """Test parsing values with quotes."""
        env_file = tmp_path / ".env"
        env_file.write_text('HEUN_CONNECT_TOLERANCE="1e-9"\nHEUN_CONNECT_OUTPUT_PATH=\'/out\'\n')

        result = parse_env_file(env_file)

        assert result["HEUN_CONNECT_TOLERANCE"] == "1e-9"
        assert result["HEUN_CONNECT_OUTPUT_PATH"] == "/out"

    def test_parse_env_file_ignores_comments(self, tmp_path: Path) -> None:
        """Test that comments are ignored."""
        env_file = tmp_path / ".env"
        env_file.write_text("# This is a comment\nHEUN_CONNECT_SEED=3\n# Another comment\n")

        result = parse_env_file(env_file)

        assert result == {"HEUN_CONNECT_SEED": "3"}

    def test_parse_env_file_drops_empty_values(self, tmp_path: Path) -> None:
        env_file = tmp_path / ".env"
        env_file.write_text("HEUN_CONNECT_JOBS=\n\n\nHEUN_CONNECT_SEED=1\n")

        result = parse_env_file(env_file)

        assert result == {"HEUN_CONNECT_SEED": "1"}

    def test_parse_env_file_returns_empty_dict_for_missing_file(
        self, tmp_path: Path
    ) -> None:
        """Test that missing file returns empty dict."""
        env_file = tmp_path / "nonexistent.env"

        result = parse_env_file(env_file)

        assert result == {}


class TestResolveEnvPath:
    """Tests for locating the settings file."""

    def test_override_variable_wins(self, tmp_path: Path, monkeypatch) -> None:
        monkeypatch.setenv("HEUN_CONNECT_ENV_PATH", str(tmp_path / "custom.env"))

        assert resolve_env_path() == tmp_path / "custom.env"

    def test_cwd_env_file(self, tmp_path: Path, monkeypatch) -> None:
        monkeypatch.delenv("HEUN_CONNECT_ENV_PATH", raising=False)
        monkeypatch.chdir(tmp_path)
        (tmp_path / ".env").write_text("HEUN_CONNECT_SEED=2\n")

        assert resolve_env_path() == tmp_path / ".env"


class TestNormalizePath:
    """Tests for path normalization."""

    def test_normalize_path_expands_tilde(self) -> None:
        """Test that ~ is expanded to home directory."""
        result = normalize_path("~/Documents")
        assert "~" not in result
        assert "Documents" in result

    def test_normalize_path_resolves_relative_paths(self, tmp_path: Path) -> None:
        """Test that relative paths are resolved."""
        result = normalize_path(str(tmp_path / "subdir" / ".." / "file"))
        assert ".." not in result


class TestParseTolerance:
    """Tests for tolerance validation."""

    @pytest.mark.parametrize("raw", ["1e-10", "0.01", 1e-14])
    def test_accepts_valid_values(self, raw) -> None:
        assert parse_tolerance(raw) == float(raw)

    @pytest.mark.parametrize("raw", ["0", "-1e-9", "0.5", "nan", "inf", "tight"])
    def test_rejects_invalid_values(self, raw) -> None:
        with pytest.raises(ParseError):
            parse_tolerance(raw)


class TestCollectPreservedLines:
    """Tests for collecting preserved lines from env files."""

    def test_collect_preserved_lines_keeps_comments(self, tmp_path: Path) -> None:
        """Test that comments are preserved."""
        env_file = tmp_path / ".env"
        env_file.write_text("# Custom comment\nHEUN_CONNECT_JOBS=2\nCUSTOM_VAR=value\n")

        result = collect_preserved_lines(env_file)

        assert "# Custom comment" in result
        assert "CUSTOM_VAR=value" in result

    def test_collect_preserved_lines_excludes_managed_keys(self, tmp_path: Path) -> None:
        """Test that managed keys are excluded."""
        env_file = tmp_path / ".env"
        env_file.write_text(
            "HEUN_CONNECT_JOBS=2\nexport HEUN_CONNECT_SEED=5\nCUSTOM_VAR=value\n"
        )

        result = collect_preserved_lines(env_file)

        # Managed keys should be excluded
        assert not any("HEUN_CONNECT_JOBS" in line for line in result)
        assert not any("HEUN_CONNECT_SEED" in line for line in result)
        # Custom vars should be preserved
        assert any("CUSTOM_VAR" in line for line in result)


class TestWriteEnvFile:
    """Tests for writing env files."""

    values = {
        "HEUN_CONNECT_JOBS": "2",
        "HEUN_CONNECT_TOLERANCE": "1e-9",
        "HEUN_CONNECT_SEED": "0",
        "HEUN_CONNECT_OUTPUT_PATH": "/output",
    }

    def test_write_env_file_creates_file(self, tmp_path: Path) -> None:
        """Test that env file is created with correct content."""
        env_file = tmp_path / "nested" / ".env"

        write_env_file(self.values, [], env_file)

        assert env_file.exists()
        content = env_file.read_text()
        assert 'HEUN_CONNECT_JOBS="2"' in content
        assert 'HEUN_CONNECT_OUTPUT_PATH="/output"' in content

    def test_write_env_file_includes_preserved_lines(self, tmp_path: Path) -> None:
        """Test that preserved lines are included."""
        env_file = tmp_path / ".env"
        preserved = ["# My custom comment", "CUSTOM_VAR=myvalue"]

        write_env_file(self.values, preserved, env_file)

        content = env_file.read_text()
        assert "# My custom comment" in content
        assert "CUSTOM_VAR=myvalue" in content

    def test_rewriting_does_not_duplicate_headers(self, tmp_path: Path) -> None:
        env_file = tmp_path / ".env"
        write_env_file(self.values, ["CUSTOM_VAR=myvalue"], env_file)

        write_env_file(self.values, collect_preserved_lines(env_file), env_file)

        content = env_file.read_text()
        assert content.count("# Other values preserved") == 1
        assert content.count("CUSTOM_VAR=myvalue") == 1


class TestLoadSettings:
    """Tests for settings precedence and validation."""

    def test_defaults(self, tmp_path: Path) -> None:
        settings = load_settings(tmp_path / "absent.env", environ={})

        assert settings.jobs == 1
        assert settings.tolerance == 1e-10
        assert settings.seed == 0
        assert settings.output_path == DEFAULTS["HEUN_CONNECT_OUTPUT_PATH"]

    def test_file_beats_environment(self, tmp_path: Path) -> None:
        env_file = tmp_path / ".env"
        env_file.write_text("HEUN_CONNECT_JOBS=4\n")

        values = merged_values(env_file, environ={"HEUN_CONNECT_JOBS": "8", "HEUN_CONNECT_SEED": "7"})

        assert values["HEUN_CONNECT_JOBS"] == "4"
        assert values["HEUN_CONNECT_SEED"] == "7"

    @pytest.mark.parametrize(
        "line", ["HEUN_CONNECT_JOBS=0", "HEUN_CONNECT_SEED=-1", "HEUN_CONNECT_TOLERANCE=1", "HEUN_CONNECT_JOBS=many"]
    )
    def test_invalid_values(self, tmp_path: Path, line: str) -> None:
        env_file = tmp_path / ".env"
        env_file.write_text(line + "\n")

        with pytest.raises(ParseError):
            load_settings(env_file, environ={})
