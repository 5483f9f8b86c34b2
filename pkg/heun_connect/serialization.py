"""JSON, CSV and PPM formats.

Complex numbers are written as ``[re, im]``. JSON output is sorted and indented
so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .connection import Atlas, ConnectionMatrix
from .errors import ParseError
from .regions import DEGENERATE, FALSE, TRUE, RegionRaster
from .series import (
    LocalSolution,
    StandardFormMap,
    SymmetricHeunConfig,
    indicial_exponents,
    standard_form_map,
)

SCHEMA_VERSION = 1

PALETTE: dict[int, tuple[int, int, int]] = {
    TRUE: (173, 216, 230),
    FALSE: (24, 28, 40),
    DEGENERATE: (128, 128, 128),
}


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(value: Any, name: str = "value") -> complex:
    if isinstance(value, bool):
        raise ParseError(f"{name}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            re, im = float(value[0]), float(value[1])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{name}: entries of [re, im] must be numbers") from exc
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ParseError(f"{name}: non-finite value {value!r}")
        return complex(re, im)
    raise ParseError(f"{name}: expected a number or [re, im], got {value!r}")


def _complex_list(values: Any, name: str, length: int | None = None) -> list[complex]:
    if not isinstance(values, (list, tuple)):
        raise ParseError(f"{name}: expected a list")
    if length is not None and len(values) != length:
        raise ParseError(f"{name}: expected {length} entries, got {len(values)}")
    return [complex_from_json(v, f"{name}[{i}]") for i, v in enumerate(values)]


def _optional_number(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def dumps(payload: Mapping[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(payload: Mapping[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload), encoding="utf-8")
    return path


def read_json(path: Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ParseError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def config_to_dict(cfg: SymmetricHeunConfig) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "z": [complex_to_json(v) for v in cfg.z],
        "chi": [complex_to_json(v) for v in cfg.chi],
        "lam": complex_to_json(cfg.lam),
    }


def config_from_dict(data: Mapping[str, Any]) -> SymmetricHeunConfig:
    missing = [key for key in ("z", "chi") if key not in data]
    if missing:
        raise ParseError(f"configuration is missing {', '.join(missing)}")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r}")
    return SymmetricHeunConfig(
        z=tuple(_complex_list(data["z"], "z", 4)),  # type: ignore[arg-type]
        chi=tuple(_complex_list(data["chi"], "chi", 4)),  # type: ignore[arg-type]
        lam=complex_from_json(data.get("lam", 0.0), "lam"),
    )


def load_config(path: Path) -> SymmetricHeunConfig:
    return config_from_dict(read_json(path))


def solution_to_dict(sol: LocalSolution) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "center": complex_to_json(sol.center),
        "exponent": complex_to_json(sol.exponent),
        "conv_radius": sol.conv_radius,
        "branch_cut_direction": sol.branch_cut_direction,
        "singular_index": sol.singular_index,
        "scaled_coefficients": [complex_to_json(c) for c in sol.scaled_coefficients],
    }


def solution_from_dict(data: Mapping[str, Any]) -> LocalSolution:
    """A detached solution: fixed truncation, no recurrence to extend it."""
    try:
        return LocalSolution(
            center=complex_from_json(data["center"], "center"),
            exponent=complex_from_json(data["exponent"], "exponent"),
            scaled_coefficients=np.array(
                _complex_list(data["scaled_coefficients"], "scaled_coefficients"), dtype=complex
            ),
            conv_radius=float(data["conv_radius"]),
            branch_cut_direction=float(data.get("branch_cut_direction", 0.0)),
            singular_index=data.get("singular_index"),
        )
    except KeyError as exc:
        raise ParseError(f"local solution is missing {exc.args[0]}") from exc


def matrix_to_dict(matrix: ConnectionMatrix) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "entries": [complex_to_json(v) for v in matrix.entries.reshape(-1)],
        "source_center": complex_to_json(matrix.source_center),
        "target_center": complex_to_json(matrix.target_center),
        "source_index": matrix.source_index,
        "target_index": matrix.target_index,
        "evaluation_point": None
        if matrix.evaluation_point is None
        else complex_to_json(matrix.evaluation_point),
        "convention": matrix.convention,
        "provenance": list(matrix.provenance),
        "diagnostics": {key: _optional_number(v) for key, v in sorted(matrix.diagnostics.items())},
    }


def matrix_from_dict(data: Mapping[str, Any]) -> ConnectionMatrix:
    try:
        entries = np.array(_complex_list(data["entries"], "entries", 4), dtype=complex).reshape(2, 2)
        point = data.get("evaluation_point")
        return ConnectionMatrix(
            entries=entries,
            source_center=complex_from_json(data["source_center"], "source_center"),
            target_center=complex_from_json(data["target_center"], "target_center"),
            source_index=data.get("source_index"),
            target_index=data.get("target_index"),
            evaluation_point=None if point is None else complex_from_json(point, "evaluation_point"),
            convention=str(data["convention"]),
            provenance=tuple(data.get("provenance", ())),
            diagnostics={k: float(v) for k, v in data.get("diagnostics", {}).items() if v is not None},
        )
    except KeyError as exc:
        raise ParseError(f"connection matrix is missing {exc.args[0]}") from exc


def standard_map_to_dict(mapping: StandardFormMap) -> dict[str, Any]:
    p = mapping.params
    m = mapping.moebius
    return {
        "a": complex_to_json(p.a),
        "q": complex_to_json(p.q),
        "alpha": complex_to_json(p.alpha),
        "beta": complex_to_json(p.beta),
        "gamma": complex_to_json(p.gamma),
        "delta": complex_to_json(p.delta),
        "epsilon": complex_to_json(p.epsilon),
        "fuchs_defect": abs(p.fuchs_defect),
        "nu": [complex_to_json(v) for v in mapping.nu],
        "moebius": [complex_to_json(v) for v in (m.a_coef, m.b_coef, m.c_coef, m.d_coef)],
        "cuts": list(mapping.cuts),
    }


def params_report(cfg: SymmetricHeunConfig) -> dict[str, Any]:
    derived = cfg.derived
    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "config": config_to_dict(cfg),
        "alpha": [complex_to_json(v) for v in derived.alpha],
        "beta": [complex_to_json(v) for v in derived.beta],
        "q": [complex_to_json(v) for v in derived.q],
        "exponents": [[complex_to_json(e) for e in indicial_exponents(cfg, j)] for j in range(1, 5)],
        "disc_radii": [cfg.disc_radius(j) for j in range(1, 5)],
    }
    mapping = standard_form_map(cfg)
    report["cross_ratio"] = complex_to_json(mapping.params.a)
    report["standard_form"] = standard_map_to_dict(mapping)
    report["nu"] = report["standard_form"]["nu"]
    return report


def atlas_summary(atlas: Atlas) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": atlas.mode,
        "convention": atlas.convention,
        "admissible_triples": [list(t) for t in atlas.admissible_triples],
        "residuals": {
            f"{k}{l}": _optional_number(value) for (k, l), value in sorted(atlas.residuals.items())
        },
        "max_residual": _optional_number(atlas.max_residual),
        "chain_residual": _optional_number(atlas.chain_residual),
        "provenance": {
            f"{k}{l}": list(matrix.provenance) for (k, l), matrix in sorted(atlas.pairwise.items())
        },
    }


def raster_to_dict(raster: RegionRaster) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "axis1_range": list(raster.axis1_range),
        "axis2_range": list(raster.axis2_range),
        "resolution": list(raster.resolution),
        "metadata": dict(raster.metadata),
        "counts": {
            "true": int(np.count_nonzero(raster.labels == TRUE)),
            "false": int(np.count_nonzero(raster.labels == FALSE)),
            "degenerate": int(np.count_nonzero(raster.labels == DEGENERATE)),
        },
    }


def raster_to_csv(raster: RegionRaster) -> str:
    lines = ["axis1,axis2,label"]
    axis1, axis2 = raster.axis1_centers, raster.axis2_centers
    for i, x1 in enumerate(axis1):
        for j, x2 in enumerate(axis2):
            lines.append(f"{x1:.17g},{x2:.17g},{int(raster.labels[i, j])}")
    return "\n".join(lines) + "\n"


def raster_to_ppm(raster: RegionRaster, palette: Mapping[int, Sequence[int]] = PALETTE) -> bytes:
    """Binary P6: one pixel per cell, axis1 across, first row at the smallest axis2 value."""

    n1, n2 = raster.resolution
    lookup = np.zeros((256, 3), dtype=np.uint8)
    for label, colour in palette.items():
        lookup[label] = colour
    pixels = lookup[raster.labels.T]
    header = f"P6\n{n1} {n2}\n255\n".encode("ascii")
    return header + pixels.tobytes()


def with_extension(stem: Path, extension: str) -> Path:
    """Append ``extension`` to the stem's name; dots already in the stem are kept."""
    return stem.with_name(stem.name + extension)


def write_raster(raster: RegionRaster, stem: Path) -> tuple[Path, Path]:
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path = with_extension(stem, ".csv")
    ppm_path = with_extension(stem, ".ppm")
    csv_path.write_text(raster_to_csv(raster), encoding="utf-8", newline="\n")
    ppm_path.write_bytes(raster_to_ppm(raster))
    return csv_path, ppm_path
