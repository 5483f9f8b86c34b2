"""Feasibility predicates for the single-point construction and their parameter scans.

Angles follow the unit-circle placement z_k = e^{i phi_k} for k = 1, 2, 4 with
phi_4 = 0 in every scan; z_3 is recovered from the cross-ratio ``a``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy import ndimage

from .errors import DegenerateA
from .geometry import AngleTriple, unit_circle_maps
from .series import SAFETY_FACTOR, SymmetricHeunConfig

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MIN_RESOLUTION = 8
DISTINCT_TOLERANCE = 1e-10
DEFAULT_DMN_WINDOW = ((-6.0, 7.0), (-6.0, 6.0))
DEFAULT_PHI_RESOLUTION = (128, 128)

FALSE, TRUE, DEGENERATE = 0, 1, 2


@dataclass(frozen=True, eq=False)
class RegionRaster:
    """Cell labels over axis1 x axis2; ``labels[i, j]`` belongs to axis1 cell i, axis2 cell j."""

    axis1_range: tuple[float, float]
    axis2_range: tuple[float, float]
    labels: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (self.axis1_range[0] < self.axis1_range[1] and self.axis2_range[0] < self.axis2_range[1]):
            raise ValueError("raster ranges must be ordered")
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.ndim != 2:
            raise ValueError("raster labels must be two-dimensional")
        object.__setattr__(self, "labels", labels)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.labels.shape  # type: ignore[return-value]

    @property
    def cells(self) -> np.ndarray:
        return self.labels == TRUE

    @property
    def axis1_centers(self) -> np.ndarray:
        return _centres(self.axis1_range, self.resolution[0])

    @property
    def axis2_centers(self) -> np.ndarray:
        return _centres(self.axis2_range, self.resolution[1])

    def cell_of(self, x1: float, x2: float) -> tuple[int, int]:
        n1, n2 = self.resolution
        (lo1, hi1), (lo2, hi2) = self.axis1_range, self.axis2_range
        i = int(math.floor((x1 - lo1) / (hi1 - lo1) * n1))
        j = int(math.floor((x2 - lo2) / (hi2 - lo2) * n2))
        if not (0 <= i < n1 and 0 <= j < n2):
            raise ValueError(f"({x1}, {x2}) lies outside the raster")
        return i, j

    def label_at(self, x1: float, x2: float) -> int:
        return int(self.labels[self.cell_of(x1, x2)])


def _centres(bounds: tuple[float, float], n: int) -> np.ndarray:
    lo, hi = bounds
    return lo + (np.arange(n) + 0.5) * ((hi - lo) / n)


def _symmetric_angles(n: int) -> np.ndarray:
    """Torus cell centres listed so that the set is closed under negation exactly."""
    return (np.arange(n) + 0.5 - n / 2.0) * (TWO_PI / n)


def _check_resolution(resolution: Sequence[int]) -> tuple[int, int]:
    n1, n2 = (int(v) for v in resolution)
    if n1 < MIN_RESOLUTION or n2 < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION} per axis, got {(n1, n2)}")
    return n1, n2


def _chords(phi1: np.ndarray, phi2: np.ndarray, phi4: np.ndarray | float) -> tuple[np.ndarray, ...]:
    r12 = 2.0 * np.abs(np.sin((phi1 - phi2) / 2.0))
    r24 = 2.0 * np.abs(np.sin((phi2 - phi4) / 2.0))
    r41 = 2.0 * np.abs(np.sin((phi4 - phi1) / 2.0))
    return r12, r24, r41


def condition_a_grid(phi1: np.ndarray, phi2: np.ndarray, phi4: np.ndarray | float = 0.0) -> np.ndarray:
    r12, r24, r41 = _chords(np.asarray(phi1), np.asarray(phi2), phi4)
    return (r12 > 1.0) & (r24 > 1.0) & (r41 > 1.0)


def condition_a(phis: AngleTriple) -> bool:
    """All three unit-circle chords exceed 1, so the origin sits in each of their discs."""
    return bool(condition_a_grid(np.array(phis.phi1), np.array(phis.phi2), phis.phi4))


class _Z3Grid(NamedTuple):
    z3: np.ndarray
    valid: np.ndarray


def _zeta0_grid(phi1: np.ndarray, phi2: np.ndarray, phi4: np.ndarray | float) -> np.ndarray:
    s12 = np.sin((phi1 - phi2) / 2.0)
    s42 = np.sin((phi4 - phi2) / 2.0)
    half14 = (phi1 - phi4) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        return (np.cos(half14) + 1j * np.sin(half14)) * (s42 / s12)


def z3_grid(
    a: complex, phi1: np.ndarray, phi2: np.ndarray, phi4: np.ndarray | float = 0.0
) -> _Z3Grid:
    """Vectorised z3 = e^{i phi4} (a - zeta0) / (a - conj zeta0) with a validity mask."""

    phi1, phi2 = np.asarray(phi1, dtype=float), np.asarray(phi2, dtype=float)
    zeta0 = _zeta0_grid(phi1, phi2, phi4)
    e4 = np.exp(1j * np.asarray(phi4, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        z3 = e4 * (a - zeta0) / (a - np.conj(zeta0))
    valid = np.isfinite(z3) & (np.abs(z3) > DISTINCT_TOLERANCE)
    for phi in (phi1, phi2, phi4):
        valid &= np.abs(z3 - np.exp(1j * np.asarray(phi, dtype=float))) > DISTINCT_TOLERANCE
    return _Z3Grid(z3=np.where(valid, z3, 0j), valid=valid)


def condition_b_grid(z3: np.ndarray, phi1: np.ndarray, phi2: np.ndarray, phi4: np.ndarray | float = 0.0) -> np.ndarray:
    r3 = np.abs(z3)
    nearest = np.minimum(
        np.minimum(np.abs(z3 - np.exp(1j * phi1)), np.abs(z3 - np.exp(1j * phi2))),
        np.abs(z3 - np.exp(1j * np.asarray(phi4, dtype=float))),
    )
    return nearest > r3


def z3_from_a(a: complex, phis: AngleTriple) -> complex:
    """Fourth singular point in the unit-circle frame whose cross-ratio is ``a``."""

    a = complex(a)
    frame = unit_circle_maps(phis)
    if abs(a) <= DISTINCT_TOLERANCE or abs(a - 1) <= DISTINCT_TOLERANCE:
        raise DegenerateA(f"a = {a!r} coincides with the image of z_1 or z_2")
    if abs(a - frame.zeta0.conjugate()) <= DISTINCT_TOLERANCE * max(1.0, abs(a)):
        raise DegenerateA(f"a = {a!r} is the pole of the inverse frame map")
    z3 = frame.inverse(a)
    if abs(z3) <= DISTINCT_TOLERANCE:
        raise DegenerateA(f"a = {a!r} places z_3 at the origin")
    for point in phis.points:
        if abs(z3 - point) <= DISTINCT_TOLERANCE:
            raise DegenerateA(f"a = {a!r} places z_3 on another singular point")
    return z3


def condition_b(phis: AngleTriple, a: complex) -> bool:
    """z_3 is closer to the origin than to z_1, z_2 and z_4."""
    z3 = z3_from_a(a, phis)
    nearest = min(abs(z3 - point) for point in phis.points)
    return nearest > abs(z3)


def _angle_mesh(resolution: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    axis1 = _centres((0.0, TWO_PI), resolution[0])
    axis2 = _centres((0.0, TWO_PI), resolution[1])
    return np.meshgrid(axis1, axis2, indexing="ij")


def scan_condition_a(resolution: Sequence[int] = (512, 512)) -> RegionRaster:
    n1, n2 = _check_resolution(resolution)
    phi1, phi2 = _angle_mesh((n1, n2))
    labels = np.where(condition_a_grid(phi1, phi2), TRUE, FALSE)
    return RegionRaster(
        axis1_range=(0.0, TWO_PI),
        axis2_range=(0.0, TWO_PI),
        labels=labels,
        metadata={"kind": "a", "phi4": 0.0},
    )


def _b_labels(a: complex, phi1: np.ndarray, phi2: np.ndarray) -> np.ndarray:
    grid = z3_grid(a, phi1, phi2)
    cond_b = condition_b_grid(grid.z3, phi1, phi2) & grid.valid
    distinct_angles = np.isfinite(_zeta0_grid(phi1, phi2, 0.0))
    return np.where(cond_b, TRUE, np.where(~grid.valid & distinct_angles, DEGENERATE, FALSE))


def _ab_labels(a: complex, phi1: np.ndarray, phi2: np.ndarray) -> np.ndarray:
    labels = _b_labels(a, phi1, phi2)
    return np.where((labels == TRUE) & ~condition_a_grid(phi1, phi2), FALSE, labels)


def scan_condition_b(a: complex, resolution: Sequence[int] = (512, 512)) -> RegionRaster:
    """Angle pairs whose z_3 for the cross-ratio ``a`` satisfies Condition B, with no Condition A filter."""

    n1, n2 = _check_resolution(resolution)
    a = complex(a)
    phi1, phi2 = _angle_mesh((n1, n2))
    labels = _b_labels(a, phi1, phi2)
    logger.info("scan kind=b cells=%d true=%d", n1 * n2, int(np.count_nonzero(labels == TRUE)))
    return RegionRaster(
        axis1_range=(0.0, TWO_PI),
        axis2_range=(0.0, TWO_PI),
        labels=labels,
        metadata={"kind": "b", "a": [a.real, a.imag], "phi4": 0.0},
    )


def scan_condition_ab(a: complex, resolution: Sequence[int] = (512, 512)) -> RegionRaster:
    n1, n2 = _check_resolution(resolution)
    a = complex(a)
    phi1, phi2 = _angle_mesh((n1, n2))
    return RegionRaster(
        axis1_range=(0.0, TWO_PI),
        axis2_range=(0.0, TWO_PI),
        labels=_ab_labels(a, phi1, phi2),
        metadata={"kind": "ab", "a": [a.real, a.imag], "phi4": 0.0},
    )


class _DmnKernel:
    """Inner angle grid restricted to its Condition A cells."""

    def __init__(self, phi_resolution: tuple[int, int]) -> None:
        phi1, phi2 = np.meshgrid(
            _symmetric_angles(phi_resolution[0]), _symmetric_angles(phi_resolution[1]), indexing="ij"
        )
        keep = condition_a_grid(phi1, phi2)
        self.phi1 = phi1[keep]
        self.phi2 = phi2[keep]

    def feasible(self, a: complex) -> bool:
        if abs(a) <= DISTINCT_TOLERANCE or abs(a - 1) <= DISTINCT_TOLERANCE:
            return False
        grid = z3_grid(a, self.phi1, self.phi2)
        return bool(np.any(grid.valid & condition_b_grid(grid.z3, self.phi1, self.phi2)))

    def row(self, a_values: np.ndarray) -> np.ndarray:
        out = np.empty(len(a_values), dtype=np.uint8)
        for idx, a in enumerate(a_values):
            a = complex(a)
            if abs(a) <= DISTINCT_TOLERANCE or abs(a - 1) <= DISTINCT_TOLERANCE:
                out[idx] = DEGENERATE
            else:
                out[idx] = TRUE if self.feasible(a) else FALSE
        return out


def scan_dmn(
    a_window: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_DMN_WINDOW,
    a_resolution: Sequence[int] = (128, 128),
    phi_resolution: Sequence[int] = DEFAULT_PHI_RESOLUTION,
    jobs: int = 1,
) -> RegionRaster:
    """Cross-ratio cells for which some inner-grid angle pair satisfies Conditions A and B.

    The inner grid only witnesses membership, so the result is a lower bound
    that grows as ``phi_resolution`` is refined.
    """

    n1, n2 = _check_resolution(a_resolution)
    inner = _check_resolution(phi_resolution)
    real_range = (float(a_window[0][0]), float(a_window[0][1]))
    imag_range = (float(a_window[1][0]), float(a_window[1][1]))
    re, im = np.meshgrid(_centres(real_range, n1), _centres(imag_range, n2), indexing="ij")
    a_values = re + 1j * im

    kernel = _DmnKernel(inner)
    labels = np.empty((n1, n2), dtype=np.uint8)
    workers = max(1, int(jobs))
    if workers == 1:
        for i in range(n1):
            labels[i] = kernel.row(a_values[i])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(kernel.row, a_values)):
                labels[i] = row
    logger.info(
        "scan kind=dmn cells=%d true=%d phi_resolution=%dx%d jobs=%d",
        n1 * n2,
        int(np.count_nonzero(labels == TRUE)),
        inner[0],
        inner[1],
        workers,
    )
    return RegionRaster(
        axis1_range=real_range,
        axis2_range=imag_range,
        labels=labels,
        metadata={"kind": "dmn", "phi_resolution": list(inner), "phi4": 0.0},
    )


def count_components(mask: RegionRaster | np.ndarray, torus: bool = True) -> int:
    """Connected components with 8-connectivity, optionally wrapping both axes."""

    cells = mask.cells if isinstance(mask, RegionRaster) else np.asarray(mask, dtype=bool)
    labelled, count = ndimage.label(cells, structure=np.ones((3, 3), dtype=int))
    if not torus or count == 0:
        return int(count)

    parent = list(range(count + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        if x and y:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)

    n1, n2 = labelled.shape
    for j in range(n2):
        for dj in (-1, 0, 1):
            union(int(labelled[0, j]), int(labelled[n1 - 1, (j + dj) % n2]))
    for i in range(n1):
        for di in (-1, 0, 1):
            union(int(labelled[i, 0]), int(labelled[(i + di) % n1, n2 - 1]))
    return len({find(x) for x in range(1, count + 1)})


def unit_circle_config(
    phis: AngleTriple,
    a: complex,
    chi: Sequence[complex] = (0.3, 0.5, 0.7, 0.9),
    lam: complex = 0j,
) -> SymmetricHeunConfig:
    """Symmetric configuration with z_1, z_2, z_4 on the unit circle and z_3 fixed by ``a``."""
    z3 = z3_from_a(a, phis)
    return SymmetricHeunConfig(z=(phis.point(1), phis.point(2), z3, phis.point(4)), chi=tuple(chi), lam=lam)


class ConditionReport(NamedTuple):
    condition_a: bool
    condition_b: bool
    discs: bool

    @property
    def single_point(self) -> bool:
        return self.condition_a and self.condition_b and self.discs


def config_conditions(cfg: SymmetricHeunConfig, safety_factor: float = SAFETY_FACTOR) -> ConditionReport:
    """Conditions A and B for an arbitrary placement, plus containment of 0 in all four discs.

    On the unit circle A and B reduce to the angle predicates above.
    """

    z1, z2, z3, z4 = cfg.z
    outer = (z1, z2, z4)
    cond_a = all(
        min(abs(zk - zl) for m, zl in enumerate(outer) if m != n) > abs(zk)
        for n, zk in enumerate(outer)
    )
    cond_b = min(abs(z3 - zl) for zl in outer) > abs(z3)
    discs = all(safety_factor * cfg.disc_radius(j) > abs(cfg.point(j)) for j in range(1, 5))
    return ConditionReport(condition_a=cond_a, condition_b=cond_b, discs=discs)
