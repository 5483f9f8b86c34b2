from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

from dotenv import dotenv_values

from heun_connect.errors import ParseError

APP_NAME = "heun-connect"


def get_user_config_dir() -> Path:
    """Return the user-specific configuration directory (created on first write)."""

    if sys.platform == "win32":
        base = Path(os.environ.get("APPDATA", Path.home() / "AppData" / "Roaming"))
    elif sys.platform == "darwin":
        base = Path.home() / "Library" / "Application Support"
    else:
        base = Path(os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config"))
    return base / APP_NAME


USER_CONFIG_DIR = get_user_config_dir()


def resolve_env_path() -> Path:
    """Resolve where heun-connect should read/write its configuration.

    Precedence:
      1) HEUN_CONNECT_ENV_PATH environment variable (explicit override)
      2) .env in the current working directory
      3) User config dir (~/.config/heun-connect/config.env)
    """

    override = os.environ.get("HEUN_CONNECT_ENV_PATH")
    if override:
        return Path(override).expanduser()

    cwd_env = Path.cwd() / ".env"
    if cwd_env.exists():
        return cwd_env

    return USER_CONFIG_DIR / "config.env"


MANAGED_KEYS = (
    "HEUN_CONNECT_JOBS",
    "HEUN_CONNECT_TOLERANCE",
    "HEUN_CONNECT_SEED",
    "HEUN_CONNECT_OUTPUT_PATH",
)

DEFAULTS: Dict[str, str] = {
    "HEUN_CONNECT_JOBS": "1",
    "HEUN_CONNECT_TOLERANCE": "1e-10",
    "HEUN_CONNECT_SEED": "0",
    "HEUN_CONNECT_OUTPUT_PATH": "heun-connect-output",
}


def parse_env_file(path: Optional[Path] = None) -> Dict[str, str]:
    path = resolve_env_path() if path is None else path
    if not path.exists():
        return {}
    return {key: value for key, value in dotenv_values(path).items() if value}


def normalize_path(candidate: str) -> str:
    expanded = Path(candidate).expanduser()
    return str(expanded.resolve(strict=False))


def collect_preserved_lines(path: Optional[Path] = None) -> List[str]:
    """Comments and unmanaged assignments, kept verbatim when the file is rewritten."""

    path = resolve_env_path() if path is None else path
    if not path.exists():
        return []

    preserved: List[str] = []
    for raw_line in path.read_text(encoding="utf-8").splitlines():
        stripped = raw_line.strip()
        if not stripped:
            continue
        if stripped.startswith(("# heun-connect configuration", "# Last updated:", "# Other values preserved")):
            continue
        if stripped.startswith("#") or "=" not in stripped:
            preserved.append(raw_line)
            continue
        name = stripped.split("=", 1)[0].strip()
        if name.startswith("export "):
            name = name[len("export "):].strip()
        if name in MANAGED_KEYS:
            continue
        preserved.append(raw_line)
    return preserved


def write_env_file(
    values: Mapping[str, str],
    preserved_lines: Iterable[str],
    path: Optional[Path] = None,
) -> Path:
    path = resolve_env_path() if path is None else path
    lines = [f"# {APP_NAME} configuration", f"# Last updated: {datetime.now():%Y-%m-%d %H:%M:%S}"]
    for key in MANAGED_KEYS:
        if values.get(key):
            lines.append(f'{key}="{values[key]}"')

    preserved = list(preserved_lines)
    if preserved:
        lines.append("")
        lines.append("# Other values preserved from before")
        lines.extend(preserved)

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@dataclass(frozen=True)
class Settings:
    jobs: int = 1
    tolerance: float = 1e-10
    seed: int = 0
    output_path: str = DEFAULTS["HEUN_CONNECT_OUTPUT_PATH"]


def _parse_int(key: str, raw: str, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError as exc:
        raise ParseError(f"{key} must be an integer, got {raw!r}") from exc
    if value < minimum:
        raise ParseError(f"{key} must be at least {minimum}, got {value}")
    return value


def parse_tolerance(raw: str | float, key: str = "tolerance") -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ParseError(f"{key} must be a number, got {raw!r}") from exc
    if not (math.isfinite(value) and 0 < value <= 1e-2):
        raise ParseError(f"{key} must lie in (0, 1e-2], got {value}")
    return value


def merged_values(
    path: Optional[Path] = None, environ: Optional[Mapping[str, str]] = None
) -> Dict[str, str]:
    """File values first; the process environment fills keys the file leaves empty."""

    environ = os.environ if environ is None else environ
    values = dict(DEFAULTS)
    file_values = parse_env_file(path)
    for key in MANAGED_KEYS:
        if file_values.get(key):
            values[key] = file_values[key]
        elif environ.get(key):
            values[key] = environ[key]
    return values


def load_settings(
    path: Optional[Path] = None, environ: Optional[Mapping[str, str]] = None
) -> Settings:
    values = merged_values(path, environ)
    return Settings(
        jobs=_parse_int("HEUN_CONNECT_JOBS", values["HEUN_CONNECT_JOBS"], 1),
        tolerance=parse_tolerance(values["HEUN_CONNECT_TOLERANCE"], "HEUN_CONNECT_TOLERANCE"),
        seed=_parse_int("HEUN_CONNECT_SEED", values["HEUN_CONNECT_SEED"], 0),
        output_path=values["HEUN_CONNECT_OUTPUT_PATH"],
    )
