"""Command-line front end: ``heun-connect <command> ...``.

Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 degeneracy,
4 domain violation, 5 non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from config_helpers import (
    MANAGED_KEYS,
    Settings,
    collect_preserved_lines,
    load_settings,
    merged_values,
    normalize_path,
    parse_tolerance,
    resolve_env_path,
    write_env_file,
)

from .connection import (
    connect_to_point,
    connection_matrix,
    multi_center_atlas,
    reconstruction_residual,
    single_point_atlas,
)
from .errors import (
    ConditionViolated,
    ConvergenceFailure,
    DegeneracyError,
    DomainViolation,
    HeunConnectError,
    ParseError,
)
from .geometry import AngleTriple
from .regions import (
    DEFAULT_DMN_WINDOW,
    DEFAULT_PHI_RESOLUTION,
    MIN_RESOLUTION,
    config_conditions,
    count_components,
    scan_condition_a,
    scan_condition_ab,
    scan_condition_b,
    scan_dmn,
    unit_circle_config,
)
from .serialization import (
    SCHEMA_VERSION,
    atlas_summary,
    complex_to_json,
    dumps,
    load_config,
    matrix_to_dict,
    params_report,
    raster_to_dict,
    with_extension,
    write_json,
    write_raster,
)
from .series import SymmetricHeunConfig
from .verify import run_suite, suite_passed

logger = logging.getLogger("heun_connect")

COMMANDS = ("params", "connect", "atlas", "scan", "verify", "config", "serve")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: Path | None = None
    output_path: Path | None = None
    tolerance: float = 1e-10
    n_terms: int | None = None
    resolution: tuple[int, int] = (512, 512)
    phi_resolution: tuple[int, int] = DEFAULT_PHI_RESOLUTION
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command {self.command!r}")
        if not (0 < self.tolerance <= 1e-2):
            raise ParseError(f"tolerance must lie in (0, 1e-2], got {self.tolerance}")
        if self.n_terms is not None and self.n_terms < 2:
            raise ParseError(f"n_terms must be at least 2, got {self.n_terms}")
        for name in ("resolution", "phi_resolution"):
            if min(getattr(self, name)) < MIN_RESOLUTION:
                raise ParseError(f"{name} must be at least {MIN_RESOLUTION} per axis")
        if self.jobs < 1:
            raise ParseError(f"jobs must be at least 1, got {self.jobs}")
        if self.seed < 0:
            raise ParseError(f"seed must be non-negative, got {self.seed}")


def parse_complex(text: str) -> complex:
    """``re,im`` or a bare real number."""
    parts = [p.strip() for p in text.split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ParseError(f"expected re,im but got {text!r}")


def parse_floats(text: str, count: Sequence[int], name: str) -> list[float]:
    try:
        values = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"{name}: expected comma-separated numbers, got {text!r}") from exc
    if len(values) not in count or not all(math.isfinite(v) for v in values):
        raise ParseError(f"{name}: expected {' or '.join(map(str, count))} finite values, got {text!r}")
    return values


def parse_resolution(text: str, name: str = "resolution") -> tuple[int, int]:
    try:
        values = [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"{name}: expected N or N1,N2, got {text!r}") from exc
    if len(values) == 1:
        values = values * 2
    if len(values) != 2:
        raise ParseError(f"{name}: expected N or N1,N2, got {text!r}")
    return values[0], values[1]


def _config_from_args(args: argparse.Namespace) -> SymmetricHeunConfig:
    if getattr(args, "config", None):
        if args.phi is not None:
            raise ParseError("use either a configuration file or --phi/--a, not both")
        return load_config(Path(args.config))
    if args.phi is None or args.a is None:
        raise ParseError("a configuration file or both --phi and --a are required")
    phis = parse_floats(args.phi, (2, 3), "--phi")
    triple = AngleTriple(*phis)
    chi = parse_floats(args.chi, (4,), "--chi") if args.chi else (0.3, 0.5, 0.7, 0.9)
    lam = parse_complex(args.lam) if args.lam else 0j
    return unit_circle_config(triple, parse_complex(args.a), chi=chi, lam=lam)


def _emit(payload: dict[str, Any], output: str | None) -> None:
    if output:
        path = write_json(payload, Path(output))
        logger.info("wrote path=%s", path)
    else:
        sys.stdout.write(dumps(payload))


def cmd_params(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    cfg = _config_from_args(args)
    _emit(params_report(cfg), args.output)
    return 0


def cmd_connect(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    cfg = _config_from_args(args)
    at = parse_complex(args.at)
    if args.l is None:
        matrix = connect_to_point(cfg, args.k, at, n_terms=run.n_terms)
    else:
        matrix = connection_matrix(cfg, args.k, args.l, at, n_terms=run.n_terms)
    if args.k == args.l:
        residual: float | None = 0.0
    else:
        residual = reconstruction_residual(cfg, matrix, seed=run.seed, n_terms=run.n_terms)
    report = {
        "schema_version": SCHEMA_VERSION,
        "matrix": matrix_to_dict(matrix),
        "dual_path_discrepancy": matrix.diagnostics.get("dual_path_discrepancy", 0.0),
        "reconstruction_residual": residual,
        "at": complex_to_json(at),
    }
    _emit(report, args.output)
    if residual is not None and residual > max(run.tolerance, 1e-8):
        logger.warning("connect residual=%.3e above threshold", residual)
    return 0


def cmd_atlas(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    cfg = _config_from_args(args)
    conditions = config_conditions(cfg)
    if conditions.single_point:
        atlas = single_point_atlas(cfg, n_terms=run.n_terms, seed=run.seed)
    elif conditions.condition_a:
        atlas = multi_center_atlas(cfg, n_terms=run.n_terms, seed=run.seed)
    else:
        raise ConditionViolated("A", "Condition A is violated; no atlas mode applies")

    directory = run.output_path or Path(settings.output_path) / "atlas"
    for k, matrix in sorted(atlas.base.items()):
        write_json(matrix_to_dict(matrix), directory / f"base_{k}.json")
    for (k, l), matrix in sorted(atlas.pairwise.items()):
        write_json(matrix_to_dict(matrix), directory / f"pair_{k}{l}.json")
    summary = atlas_summary(atlas)
    summary["conditions"] = conditions._asdict()
    summary["matrices"] = len(atlas.base) + len(atlas.pairwise)
    write_json(summary, directory / "summary.json")
    sys.stdout.write(dumps(summary))
    return 0


def cmd_scan(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    if args.kind == "a":
        raster = scan_condition_a(run.resolution)
    elif args.kind in ("b", "ab"):
        if args.a is None:
            raise ParseError(f"scan {args.kind} requires --a re,im")
        scan = scan_condition_b if args.kind == "b" else scan_condition_ab
        raster = scan(parse_complex(args.a), run.resolution)
    else:
        window = DEFAULT_DMN_WINDOW
        if args.window:
            re0, re1, im0, im1 = parse_floats(args.window, (4,), "--window")
            window = ((re0, re1), (im0, im1))
            if not (re0 < re1 and im0 < im1):
                raise ParseError("--window ranges must be ordered")
        raster = scan_dmn(window, run.resolution, run.phi_resolution, jobs=run.jobs)

    stem = run.output_path or Path(settings.output_path) / f"scan_{args.kind}"
    csv_path, ppm_path = write_raster(raster, stem)
    summary = raster_to_dict(raster)
    if args.kind in ("a", "b", "ab"):
        summary["components"] = count_components(raster, torus=True)
    summary["files"] = [csv_path.name, ppm_path.name]
    write_json(summary, with_extension(stem, ".json"))
    sys.stdout.write(dumps(summary))
    return 0


def cmd_verify(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    cfg = _config_from_args(args)
    results = run_suite(cfg, tolerance=run.tolerance, n_terms=run.n_terms, seed=run.seed)
    passed = suite_passed(results)
    report = {
        "schema_version": SCHEMA_VERSION,
        "passed": passed,
        "checks": [r.to_dict() for r in results],
    }
    _emit(report, args.output)
    return 0 if passed else 1


def cmd_config(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    path = resolve_env_path()
    values = merged_values(path)
    updates = {
        "HEUN_CONNECT_JOBS": args.set_jobs,
        "HEUN_CONNECT_TOLERANCE": args.set_tolerance,
        "HEUN_CONNECT_SEED": args.set_seed,
        "HEUN_CONNECT_OUTPUT_PATH": normalize_path(args.set_output_path) if args.set_output_path else None,
    }
    changed = {key: str(value) for key, value in updates.items() if value is not None}
    if not changed:
        sys.stdout.write(dumps({key: values[key] for key in MANAGED_KEYS} | {"path": str(path)}))
        return 0
    if "HEUN_CONNECT_TOLERANCE" in changed:
        parse_tolerance(changed["HEUN_CONNECT_TOLERANCE"], "HEUN_CONNECT_TOLERANCE")
    values.update(changed)
    write_env_file(values, collect_preserved_lines(path), path)
    load_settings(path)
    print(f"Lagra innstillingar i {path}")
    return 0


def cmd_serve(args: argparse.Namespace, run: RunConfig, settings: Settings) -> int:
    import uvicorn

    uvicorn.run("heun_connect.server:app", host=args.host, port=args.port)
    return 0


HANDLERS = {
    "params": cmd_params,
    "connect": cmd_connect,
    "atlas": cmd_atlas,
    "scan": cmd_scan,
    "verify": cmd_verify,
    "config": cmd_config,
    "serve": cmd_serve,
}


def _add_config_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", nargs="?", help="JSON configuration file")
    parser.add_argument("--phi", help="unit-circle angles phi1,phi2[,phi4] in radians")
    parser.add_argument("--a", help="cross-ratio re,im fixing z3")
    parser.add_argument("--chi", help="index angles chi1,chi2,chi3,chi4")
    parser.add_argument("--lam", help="eigenvalue re,im")


def _add_series_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-terms", type=int, default=None, help="fixed truncation (disables doubling)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tolerance", default=None)
    parser.add_argument("-o", "--output", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heun-connect",
        description="Local solutions and connection matrices of the symmetric Heun equation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    params = sub.add_parser("params", help="derived parameters and standard form")
    _add_config_source(params)
    _add_series_options(params)

    connect = sub.add_parser("connect", help="connection matrix between two local pairs")
    _add_config_source(connect)
    _add_series_options(connect)
    connect.add_argument("-k", type=int, required=True, choices=(1, 2, 3, 4))
    connect.add_argument("-l", type=int, default=None, choices=(1, 2, 3, 4))
    connect.add_argument("--at", default="0,0", help="common regular point re,im")

    atlas = sub.add_parser("atlas", help="all pairwise connection matrices")
    _add_config_source(atlas)
    _add_series_options(atlas)

    scan = sub.add_parser("scan", help="feasibility region rasters")
    scan.add_argument("kind", choices=("a", "b", "ab", "dmn"))
    scan.add_argument("--a", default=None)
    scan.add_argument("--resolution", default=None, help="N or N1,N2")
    scan.add_argument("--phi-resolution", default=None, help="inner angle grid for dmn")
    scan.add_argument("--window", default=None, help="re0,re1,im0,im1 for dmn")
    scan.add_argument("--jobs", type=int, default=None)
    scan.add_argument("-o", "--output", default=None, help="output stem (csv/ppm/json)")

    verify = sub.add_parser("verify", help="run the invariant suite on one configuration")
    _add_config_source(verify)
    _add_series_options(verify)

    config = sub.add_parser("config", help="show or persist settings")
    config.add_argument("--jobs", dest="set_jobs", type=int, default=None)
    config.add_argument("--tolerance", dest="set_tolerance", default=None)
    config.add_argument("--seed", dest="set_seed", type=int, default=None)
    config.add_argument("--output-path", dest="set_output_path", default=None)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    tolerance = getattr(args, "tolerance", None)
    resolution = getattr(args, "resolution", None)
    phi_resolution = getattr(args, "phi_resolution", None)
    output = getattr(args, "output", None)
    seed = getattr(args, "seed", None)
    jobs = getattr(args, "jobs", None)
    default_resolution = (128, 128) if getattr(args, "kind", None) == "dmn" else (512, 512)
    return RunConfig(
        command=args.command,
        input_path=Path(args.config) if getattr(args, "config", None) else None,
        output_path=Path(output) if output else None,
        tolerance=parse_tolerance(tolerance) if tolerance is not None else settings.tolerance,
        n_terms=getattr(args, "n_terms", None),
        resolution=parse_resolution(resolution) if resolution else default_resolution,
        phi_resolution=parse_resolution(phi_resolution, "phi-resolution")
        if phi_resolution
        else DEFAULT_PHI_RESOLUTION,
        seed=settings.seed if seed is None else seed,
        jobs=settings.jobs if jobs is None else jobs,
    )


def describe_error(exc: HeunConnectError) -> str:
    if isinstance(exc, ConditionViolated):
        return f"Condition {exc.condition} held ikkje for denne konfigurasjonen ({exc})."
    if isinstance(exc, ParseError):
        return f"Ugyldig inndata: {exc}"
    if isinstance(exc, DegeneracyError):
        return f"Degenerert konfigurasjon ({type(exc).__name__}): {exc}"
    if isinstance(exc, DomainViolation):
        return f"Utanfor gyldig område ({type(exc).__name__}): {exc}"
    if isinstance(exc, ConvergenceFailure):
        return f"Rekkja konvergerte ikkje ({type(exc).__name__}): {exc}"
    return f"Feil: {exc}"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
    try:
        settings = load_settings() if args.command != "config" else Settings()
        run = _run_config(args, settings)
        return HANDLERS[args.command](args, run, settings)
    except HeunConnectError as exc:
        print(describe_error(exc), file=sys.stderr)
        logger.debug("command failed command=%s exit_code=%d", args.command, exc.exit_code)
        return exc.exit_code
    except OSError as exc:
        print(f"Kunne ikkje skrive eller lese fil: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
