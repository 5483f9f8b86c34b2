"""Property suite run by ``heun-connect verify`` on a single configuration."""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .connection import (
    PAIRS,
    FundamentalPair,
    canonical_pair,
    connection_matrix,
    frobenius_pair,
    multi_center_atlas,
    single_point_atlas,
)
from .errors import DegenerateConfig, HeunConnectError, NoChain
from .regions import config_conditions
from .series import (
    SymmetricHeunConfig,
    exponents_degenerate,
    indicial_exponents,
    integrate_path,
    standard_form_map,
)

logger = logging.getLogger(__name__)

Status = Literal["pass", "fail", "skipped"]

INTEGRATION_THRESHOLD = 1e-8
RECURRENCE_THRESHOLD = 1e-12
FUCHS_THRESHOLD = 1e-12
INDICIAL_THRESHOLD = 1e-14
ATLAS_THRESHOLD = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: Status
    residual: float | None = None
    threshold: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "residual": None if self.residual is None or not math.isfinite(self.residual) else self.residual,
            "threshold": self.threshold,
            "detail": self.detail,
        }


def _measured(name: str, residual: float, threshold: float, detail: str = "") -> CheckResult:
    status: Status = "pass" if residual <= threshold else "fail"
    return CheckResult(name, status, float(residual), threshold, detail)


def _relative(a: complex, b: complex) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _polynomial(cfg: SymmetricHeunConfig, z: complex) -> complex:
    value = 1 + 0j
    for zj in cfg.z:
        value *= z - zj
    return value


def _inward(cfg: SymmetricHeunConfig, j: int, fraction: float) -> complex:
    """Point at ``fraction`` of the disc radius from z_j, opposite to its cut."""
    zj = cfg.point(j)
    return zj - fraction * cfg.disc_radius(j) * zj / abs(zj)


def _check_indicial(cfg: SymmetricHeunConfig) -> list[CheckResult]:
    worst_root = 0.0
    total = 0j
    for j in range(1, 5):
        alpha, beta = indicial_exponents(cfg, j)
        product = alpha * beta
        for rho in (alpha, beta):
            worst_root = max(worst_root, abs(rho * rho - rho / 2 + product))
        total += alpha + beta
    return [
        _measured("indicial_roots", worst_root, INDICIAL_THRESHOLD),
        _measured("exponent_sum", abs(total - 2), INDICIAL_THRESHOLD, "sum of all eight exponents"),
    ]


def _check_fuchs(cfg: SymmetricHeunConfig) -> CheckResult:
    try:
        mapping = standard_form_map(cfg)
    except DegenerateConfig as exc:
        return CheckResult("fuchs_relation", "skipped", detail=str(exc))
    return _measured("fuchs_relation", abs(mapping.params.fuchs_defect), FUCHS_THRESHOLD)


def _check_taylor(cfg: SymmetricHeunConfig, n_terms: int | None, tolerance: float) -> list[CheckResult]:
    pair = canonical_pair(cfg, 0j, n_terms)
    radius = cfg.regular_radius(0j)
    residual = max(float(np.max(pair.sol1.residuals())), float(np.max(pair.sol2.residuals())))
    results = [_measured("taylor_recurrence", residual, RECURRENCE_THRESHOLD)]

    worst = 0.0
    for fraction in (0.3, 0.5):
        end = fraction * radius * cmath.exp(0.7j)
        table = pair.evaluate(end)
        for row, init in ((0, (1, 0)), (1, (0, 1))):
            value, _ = integrate_path(cfg, 0j, init, end)
            worst = max(worst, _relative(table[row, 0], value))
    results.append(_measured("taylor_vs_integration", worst, INTEGRATION_THRESHOLD))
    results.append(_wronskian_check("wronskian_canonical", cfg, pair, radius, 0j, tolerance))
    return results


def _wronskian_check(
    name: str,
    cfg: SymmetricHeunConfig,
    pair: FundamentalPair,
    radius: float,
    center: complex,
    tolerance: float,
) -> CheckResult:
    """W(z)**2 P(z) is constant on the disc."""
    if center == 0:
        points = [0.2 * radius * cmath.exp(0.3j), 0.5 * radius * cmath.exp(2.1j)]
    else:
        unit = center / abs(center)
        points = [center - 0.3 * radius * unit, center - 0.5 * radius * unit * cmath.exp(0.4j)]
    values = [pair.wronskian(z) ** 2 * _polynomial(cfg, z) for z in points]
    return _measured(name, _relative(values[0], values[1]), tolerance)


def _check_frobenius(cfg: SymmetricHeunConfig, j: int, n_terms: int | None, tolerance: float) -> list[CheckResult]:
    names = (f"frobenius_z{j}_vs_integration", f"wronskian_z{j}")
    if exponents_degenerate(cfg, j):
        detail = f"exponents at z_{j} differ by an integer"
        return [CheckResult(name, "skipped", detail=detail) for name in names]
    pair = frobenius_pair(cfg, j, n_terms)
    start, end = _inward(cfg, j, 0.5), _inward(cfg, j, 0.3)
    start_table = pair.evaluate(start)
    end_table = pair.evaluate(end)
    worst = 0.0
    for row in (0, 1):
        value, _ = integrate_path(cfg, start, (start_table[row, 0], start_table[row, 1]), end)
        worst = max(worst, _relative(end_table[row, 0], value))
    return [
        _measured(names[0], worst, INTEGRATION_THRESHOLD),
        _wronskian_check(names[1], cfg, pair, cfg.disc_radius(j), cfg.point(j), tolerance),
    ]


def _check_connections(cfg: SymmetricHeunConfig, n_terms: int | None, seed: int) -> list[CheckResult]:
    names = ("atlas_reconstruction", "chain_identity", "inverse_identity")
    if any(exponents_degenerate(cfg, j) for j in range(1, 5)):
        return [CheckResult(n, "skipped", detail="degenerate exponents") for n in names]
    try:
        if config_conditions(cfg).single_point:
            atlas = single_point_atlas(cfg, n_terms=n_terms, seed=seed)
        else:
            atlas = multi_center_atlas(cfg, n_terms=n_terms, seed=seed)
    except NoChain as exc:
        return [CheckResult(n, "skipped", detail=str(exc)) for n in names]

    results = []
    measured = atlas.max_residual
    if measured is None:
        results.append(CheckResult(names[0], "skipped", detail="no sample disc available"))
    else:
        results.append(_measured(names[0], measured, ATLAS_THRESHOLD, f"mode={atlas.mode}"))
    if atlas.chain_residual is None:
        results.append(CheckResult(names[1], "skipped", detail="no admissible triple"))
    else:
        results.append(_measured(names[1], atlas.chain_residual, ATLAS_THRESHOLD))

    worst = 0.0
    for k, l in PAIRS:
        at = atlas.pairwise[(k, l)].evaluation_point
        if at is None:
            continue
        forward = atlas.pairwise[(k, l)].entries
        backward = connection_matrix(cfg, l, k, at, n_terms=n_terms).entries
        worst = max(worst, float(np.linalg.norm(forward @ backward - np.eye(2))))
    results.append(_measured(names[2], worst, 1e-9))
    return results


def _guarded(name: str, check: Callable[[], list[CheckResult]]) -> list[CheckResult]:
    try:
        return check()
    except HeunConnectError as exc:
        logger.info("verify_check_failed name=%s error=%s", name, type(exc).__name__)
        return [CheckResult(name, "fail", detail=f"{type(exc).__name__}: {exc}")]


def run_suite(
    cfg: SymmetricHeunConfig,
    tolerance: float = 1e-10,
    n_terms: int | None = None,
    seed: int = 0,
) -> list[CheckResult]:
    """Run every invariant check.

    ``tolerance`` bounds the series-only identities; comparisons against path
    integration use the fixed integration threshold.
    """

    results: list[CheckResult] = []
    results.extend(_check_indicial(cfg))
    results.extend(_guarded("fuchs_relation", lambda: [_check_fuchs(cfg)]))
    results.extend(_guarded("taylor", lambda: _check_taylor(cfg, n_terms, tolerance)))
    for j in range(1, 5):
        results.extend(_guarded(f"frobenius_z{j}", lambda j=j: _check_frobenius(cfg, j, n_terms, tolerance)))
    results.extend(_guarded("connections", lambda: _check_connections(cfg, n_terms, seed)))
    failed = [r.name for r in results if r.status == "fail"]
    logger.info(
        "verify checks=%d failed=%d skipped=%d tolerance=%.1e",
        len(results),
        len(failed),
        sum(r.status == "skipped" for r in results),
        tolerance,
    )
    return results


def suite_passed(results: list[CheckResult]) -> bool:
    return all(r.status != "fail" for r in results)
