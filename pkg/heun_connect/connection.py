"""Connection matrices between local fundamental pairs.

A Frobenius pair at z_k is written in the canonical basis at a regular point
``at`` (initial data (1, 0) and (0, 1)) by the matrix whose rows are the values
and derivatives of the pair at ``at``. Two Frobenius pairs sharing a regular
point are connected through the closed-form quotient by the Wronskian of the
target pair.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    CenterOutsideDiscs,
    Collinear,
    ConditionViolated,
    ConventionMismatch,
    DegeneracyError,
    DomainViolation,
    MismatchedCenters,
    NoChain,
    PointOutsideDisc,
    SingularDenominator,
)
from .geometry import circumcircle
from .series import (
    DEFAULT_N_TERMS,
    MAX_TERMS,
    SAFETY_FACTOR,
    LocalSolution,
    SymmetricHeunConfig,
    evaluate,
    frobenius_solution,
    taylor_solution,
)

logger = logging.getLogger(__name__)

DENOMINATOR_TOLERANCE = 1e-12
DUAL_PATH_TOLERANCE = 1e-10
SAMPLE_COUNT = 10
SAMPLE_FRACTIONS = (0.3, 0.6)
TRIPLES: tuple[tuple[int, int, int], ...] = ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4))
PAIRS: tuple[tuple[int, int], ...] = tuple(itertools.combinations(range(1, 5), 2))

Cuts = tuple[float, float, float, float]


def _series_limits(n_terms: int | None) -> tuple[int, int | None]:
    """``None`` starts at the default truncation and doubles; a fixed count never grows."""
    if n_terms is None:
        return DEFAULT_N_TERMS, MAX_TERMS
    return n_terms, None


def convention_fingerprint(cfg: SymmetricHeunConfig, cuts: Sequence[float]) -> str:
    payload = {
        "z": [[repr(v.real), repr(v.imag)] for v in cfg.z],
        "chi": [[repr(v.real), repr(v.imag)] for v in cfg.chi],
        "lam": [repr(cfg.lam.real), repr(cfg.lam.imag)],
        "cuts": [repr(float(c)) for c in cuts],
    }
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8"))
    return digest.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class FundamentalPair:
    sol1: LocalSolution
    sol2: LocalSolution
    max_terms: int | None = MAX_TERMS

    def __post_init__(self) -> None:
        if abs(self.sol1.center - self.sol2.center) > 1e-14 * max(1.0, abs(self.sol1.center)):
            raise MismatchedCenters("fundamental pair needs two solutions at the same center")

    @property
    def center(self) -> complex:
        return self.sol1.center

    @property
    def radius(self) -> float:
        return min(self.sol1.conv_radius, self.sol2.conv_radius)

    def evaluate(self, z: complex) -> np.ndarray:
        """Rows [F_i(z), F_i'(z)] for i = 1, 2."""
        first = evaluate(self.sol1, z, max_terms=self.max_terms)
        second = evaluate(self.sol2, z, max_terms=self.max_terms)
        return np.array(
            [[first.value, first.derivative], [second.value, second.derivative]], dtype=complex
        )

    def wronskian(self, z: complex) -> complex:
        table = self.evaluate(z)
        return complex(table[0, 0] * table[1, 1] - table[0, 1] * table[1, 0])


def canonical_pair(cfg: SymmetricHeunConfig, at: complex, n_terms: int | None = None) -> FundamentalPair:
    start, limit = _series_limits(n_terms)
    return FundamentalPair(
        taylor_solution(cfg, at, 1, 0, n_terms=start),
        taylor_solution(cfg, at, 0, 1, n_terms=start),
        max_terms=limit,
    )


def frobenius_pair(
    cfg: SymmetricHeunConfig,
    k: int,
    n_terms: int | None = None,
    cut_direction: float | None = None,
) -> FundamentalPair:
    start, limit = _series_limits(n_terms)
    return FundamentalPair(
        frobenius_solution(cfg, k, "first", n_terms=start, cut_direction=cut_direction),
        frobenius_solution(cfg, k, "second", n_terms=start, cut_direction=cut_direction),
        max_terms=limit,
    )


@dataclass(frozen=True, eq=False)
class ConnectionMatrix:
    """F(z; source) = entries @ F(z; target).

    ``target_index`` is None when the target basis is the canonical pair at
    ``evaluation_point``.
    """

    entries: np.ndarray
    source_center: complex
    target_center: complex
    source_index: int | None
    target_index: int | None
    evaluation_point: complex | None
    convention: str
    provenance: tuple[str, ...] = ()
    diagnostics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (2, 2):
            raise ValueError(f"connection matrix must be 2x2, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise SingularDenominator("connection matrix has non-finite entries")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.determinant == 0:
            raise SingularDenominator("connection matrix is singular")

    @property
    def determinant(self) -> complex:
        e = self.entries
        return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])

    def inverse(self) -> ConnectionMatrix:
        e = self.entries
        inverse = np.array([[e[1, 1], -e[0, 1]], [-e[1, 0], e[0, 0]]]) / self.determinant
        return ConnectionMatrix(
            entries=inverse,
            source_center=self.target_center,
            target_center=self.source_center,
            source_index=self.target_index,
            target_index=self.source_index,
            evaluation_point=self.evaluation_point,
            convention=self.convention,
            provenance=tuple(reversed(self.provenance)),
        )

    def __matmul__(self, other: ConnectionMatrix) -> ConnectionMatrix:
        if self.convention != other.convention:
            raise ConventionMismatch(
                f"cannot chain matrices from conventions {self.convention} and {other.convention}"
            )
        if self.target_index != other.source_index:
            raise MismatchedCenters(
                f"chain breaks: target z_{self.target_index} != source z_{other.source_index}"
            )
        return ConnectionMatrix(
            entries=self.entries @ other.entries,
            source_center=self.source_center,
            target_center=other.target_center,
            source_index=self.source_index,
            target_index=other.target_index,
            evaluation_point=self.evaluation_point
            if self.evaluation_point == other.evaluation_point
            else None,
            convention=self.convention,
            provenance=self.provenance + other.provenance,
        )

    def apply(self, vector: np.ndarray) -> np.ndarray:
        return self.entries @ np.asarray(vector, dtype=complex)


def _distance_to_cut(point: complex, start: complex, direction: float) -> float:
    unit = complex(math.cos(direction), math.sin(direction))
    offset = point - start
    along = max(0.0, (offset * unit.conjugate()).real)
    return abs(offset - along * unit)


def overlap_radius(
    cfg: SymmetricHeunConfig,
    at: complex,
    indices: Iterable[int | None],
    cuts: Sequence[float],
    safety_factor: float = SAFETY_FACTOR,
) -> float:
    """Largest disc around ``at`` inside every relevant disc and away from their cuts.

    ``None`` in ``indices`` stands for the canonical pair at ``at``.
    """

    at = complex(at)
    radius = math.inf
    for index in indices:
        if index is None:
            radius = min(radius, safety_factor * cfg.regular_radius(at))
            continue
        zk = cfg.point(index)
        radius = min(radius, safety_factor * cfg.disc_radius(index) - abs(at - zk))
        radius = min(radius, _distance_to_cut(at, zk, cuts[index - 1]))
    return radius


def sample_points(at: complex, radius: float, seed: int = 0, count: int = SAMPLE_COUNT) -> np.ndarray:
    """Deterministic points on circles at 0.3 and 0.6 of ``radius`` around ``at``."""

    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2.0 * math.pi, size=count)
    fractions = np.array([SAMPLE_FRACTIONS[i % len(SAMPLE_FRACTIONS)] for i in range(count)])
    return complex(at) + fractions * radius * np.exp(1j * angles)


class _Workspace:
    """Frobenius pairs of one configuration under one cut convention, built on demand."""

    def __init__(
        self,
        cfg: SymmetricHeunConfig,
        cuts: Sequence[float] | None = None,
        n_terms: int | None = None,
    ) -> None:
        self.cfg = cfg
        self.cuts: Cuts = tuple(cuts) if cuts is not None else cfg.default_cuts()  # type: ignore[assignment]
        self.n_terms = n_terms
        self.convention = convention_fingerprint(cfg, self.cuts)
        self._pairs: dict[int, FundamentalPair] = {}

    def pair(self, k: int) -> FundamentalPair:
        if k not in self._pairs:
            self._pairs[k] = frobenius_pair(self.cfg, k, self.n_terms, self.cuts[k - 1])
        return self._pairs[k]

    def identity(self, k: int, at: complex | None) -> ConnectionMatrix:
        zk = self.cfg.point(k)
        return ConnectionMatrix(
            entries=np.eye(2, dtype=complex),
            source_center=zk,
            target_center=zk,
            source_index=k,
            target_index=k,
            evaluation_point=at,
            convention=self.convention,
            provenance=(f"z{k}",),
        )

    def require_inside(self, k: int, at: complex) -> None:
        distance = abs(at - self.cfg.point(k))
        limit = SAFETY_FACTOR * self.cfg.disc_radius(k)
        if distance >= limit:
            raise PointOutsideDisc(
                f"point {at!r} is {distance:.6g} from z_{k}; disc admits < {limit:.6g}"
            )

    def to_point(self, k: int, at: complex) -> ConnectionMatrix:
        at = complex(at)
        self.require_inside(k, at)
        if self.cfg.regular_radius(at) <= 0:
            raise PointOutsideDisc(f"point {at!r} is a singular point")
        table = self.pair(k).evaluate(at)
        return ConnectionMatrix(
            entries=table,
            source_center=self.cfg.point(k),
            target_center=at,
            source_index=k,
            target_index=None,
            evaluation_point=at,
            convention=self.convention,
            provenance=(f"z{k}->{_format_point(at)}",),
        )

    def between(self, k: int, l: int, at: complex, label: str | None = None) -> ConnectionMatrix:
        at = complex(at)
        if k == l:
            return self.identity(k, at)
        self.require_inside(k, at)
        self.require_inside(l, at)
        source = self.pair(k).evaluate(at)
        target = self.pair(l).evaluate(at)

        (f1k, d1k), (f2k, d2k) = source
        (f1l, d1l), (f2l, d2l) = target
        w_l = f1l * d2l - d1l * f2l
        scale = abs(f1l * d2l) + abs(d1l * f2l)
        if abs(w_l) < DENOMINATOR_TOLERANCE * scale or w_l == 0:
            raise SingularDenominator(
                f"Wronskian of the z_{l} pair at {at!r} is {abs(w_l):.3e} (scale {scale:.3e})"
            )
        closed = np.array(
            [
                [(f1k * d2l - d1k * f2l) / w_l, (d1k * f1l - f1k * d1l) / w_l],
                [(f2k * d2l - d2k * f2l) / w_l, (d2k * f1l - f2k * d1l) / w_l],
            ],
            dtype=complex,
        )
        product = source @ np.linalg.inv(target)
        discrepancy = float(np.linalg.norm(closed - product) / np.linalg.norm(closed))
        if discrepancy > DUAL_PATH_TOLERANCE:
            logger.warning(
                "dual_path_mismatch k=%d l=%d at=%s discrepancy=%.3e", k, l, at, discrepancy
            )
        w_k = complex(source[0, 0] * source[1, 1] - source[0, 1] * source[1, 0])
        return ConnectionMatrix(
            entries=closed,
            source_center=self.cfg.point(k),
            target_center=self.cfg.point(l),
            source_index=k,
            target_index=l,
            evaluation_point=at,
            convention=self.convention,
            provenance=(label or f"z{k}->z{l}@{_format_point(at)}",),
            diagnostics={
                "dual_path_discrepancy": discrepancy,
                "wronskian_ratio_defect": abs(complex(np.linalg.det(closed)) - w_k / w_l)
                / abs(w_k / w_l),
            },
        )

    def residual(self, matrix: ConnectionMatrix, around: complex | None = None, seed: int = 0) -> float | None:
        k, l = matrix.source_index, matrix.target_index
        if k is None:
            raise ValueError("reconstruction needs a Frobenius source")
        point = matrix.evaluation_point if around is None else complex(around)
        if point is None:
            return None
        radius = overlap_radius(self.cfg, point, (k, l), self.cuts)
        if not radius > 0:
            return None
        target_pair = canonical_pair(self.cfg, point, self.n_terms) if l is None else self.pair(l)
        worst = 0.0
        for z in sample_points(point, radius, seed):
            source = self.pair(k).evaluate(z)[:, 0]
            target = target_pair.evaluate(z)[:, 0]
            error = np.linalg.norm(source - matrix.apply(target)) / np.linalg.norm(source)
            worst = max(worst, float(error))
        return worst


def _format_point(z: complex) -> str:
    z = complex(z)
    return f"({z.real:.6g}{z.imag:+.6g}j)"


def connect_to_point(
    cfg: SymmetricHeunConfig,
    k: int,
    at: complex,
    *,
    n_terms: int | None = None,
    cuts: Sequence[float] | None = None,
) -> ConnectionMatrix:
    """C(z_k, at): the Frobenius pair at z_k in the canonical basis at ``at``."""
    return _Workspace(cfg, cuts, n_terms).to_point(k, at)


def connection_matrix(
    cfg: SymmetricHeunConfig,
    k: int,
    l: int,
    at: complex,
    *,
    n_terms: int | None = None,
    cuts: Sequence[float] | None = None,
) -> ConnectionMatrix:
    """C(z_k, z_l) from both Frobenius pairs evaluated at the common point ``at``."""
    return _Workspace(cfg, cuts, n_terms).between(k, l, at)


def reconstruction_residual(
    cfg: SymmetricHeunConfig,
    matrix: ConnectionMatrix,
    *,
    around: complex | None = None,
    seed: int = 0,
    n_terms: int | None = None,
    cuts: Sequence[float] | None = None,
) -> float | None:
    """Max relative |F(z; source) - C F(z; target)| on the deterministic sample set.

    Returns None when no sample disc fits around the evaluation point.
    """

    workspace = _Workspace(cfg, cuts, n_terms)
    if workspace.convention != matrix.convention:
        raise ConventionMismatch("matrix was computed under a different cut convention")
    return workspace.residual(matrix, around, seed)


def chain_residual(
    c_kl: ConnectionMatrix,
    c_lm: ConnectionMatrix,
    c_km: ConnectionMatrix,
    *,
    strict: bool = True,
) -> float:
    """Frobenius norm of C_kl C_lm - C_km, relative to max(1, |C_km|).

    With ``strict=False`` matrices from different cut conventions are compared
    entrywise anyway; such residuals are branch sensitive and need not be small.
    """

    if strict:
        product = (c_kl @ c_lm).entries
    else:
        if len({c_kl.convention, c_lm.convention, c_km.convention}) > 1:
            logger.info("chain_check branch_sensitive=true conventions=%s,%s,%s",
                        c_kl.convention, c_lm.convention, c_km.convention)
        product = c_kl.entries @ c_lm.entries
    if strict and c_km.convention != c_kl.convention:
        raise ConventionMismatch("chain target uses a different cut convention")
    scale = max(1.0, float(np.linalg.norm(c_km.entries)))
    return float(np.linalg.norm(product - c_km.entries)) / scale


def chain_check(
    cfg: SymmetricHeunConfig,
    k: int,
    l: int,
    m: int,
    at_kl: complex,
    at_lm: complex,
    at_km: complex,
    *,
    n_terms: int | None = None,
    cuts: Sequence[float] | None = None,
) -> float:
    workspace = _Workspace(cfg, cuts, n_terms)
    return chain_residual(
        workspace.between(k, l, at_kl),
        workspace.between(l, m, at_lm),
        workspace.between(k, m, at_km),
    )


def _triple_connections(workspace: _Workspace, triple: tuple[int, int, int]) -> dict[tuple[int, int], ConnectionMatrix]:
    cfg = workspace.cfg
    k, l, m = triple
    try:
        circle = circumcircle(cfg.point(k), cfg.point(l), cfg.point(m))
    except Collinear as exc:
        raise CenterOutsideDiscs(f"triple {triple} has no circumcentre: {exc}") from exc
    center = circle.center
    for index in triple:
        distance = abs(center - cfg.point(index))
        if distance >= SAFETY_FACTOR * cfg.disc_radius(index):
            raise CenterOutsideDiscs(
                f"circumcentre of z_{k}, z_{l}, z_{m} lies outside the disc of z_{index}"
            )
        if _distance_to_cut(center, cfg.point(index), workspace.cuts[index - 1]) <= 1e-12:
            raise CenterOutsideDiscs(f"circumcentre of triple {triple} lies on the cut of z_{index}")
    label = f"Z{k}{l}{m}"
    return {
        (a, b): workspace.between(a, b, center, label=label)
        for a, b in ((k, l), (l, m), (k, m))
    }


def triple_connections(
    cfg: SymmetricHeunConfig,
    triple: tuple[int, int, int],
    *,
    n_terms: int | None = None,
    cuts: Sequence[float] | None = None,
) -> dict[tuple[int, int], ConnectionMatrix]:
    """Pair matrices of a triple, all evaluated at its circumcentre Z_klm."""
    return _triple_connections(_Workspace(cfg, cuts, n_terms), tuple(sorted(triple)))  # type: ignore[arg-type]


AtlasMode = Literal["single-point", "multi-center"]


@dataclass(frozen=True, eq=False)
class Atlas:
    mode: AtlasMode
    base: dict[int, ConnectionMatrix]
    pairwise: dict[tuple[int, int], ConnectionMatrix]
    residuals: dict[tuple[int, int], float | None]
    chain_residual: float | None
    convention: str
    admissible_triples: tuple[tuple[int, int, int], ...] = ()

    @property
    def max_residual(self) -> float | None:
        measured = [r for r in self.residuals.values() if r is not None]
        return max(measured) if measured else None

    def matrix(self, k: int, l: int) -> ConnectionMatrix:
        if k == l:
            raise ValueError("use the identity for k == l")
        if (k, l) in self.pairwise:
            return self.pairwise[(k, l)]
        return self.pairwise[(l, k)].inverse()


def _max_chain_residual(
    matrices: dict[tuple[int, int], ConnectionMatrix], triples: Iterable[tuple[int, int, int]]
) -> float | None:
    def lookup(a: int, b: int) -> ConnectionMatrix:
        return matrices[(a, b)] if (a, b) in matrices else matrices[(b, a)].inverse()

    worst: float | None = None
    for triple in triples:
        for k, l, m in itertools.permutations(triple):
            value = chain_residual(lookup(k, l), lookup(l, m), lookup(k, m))
            worst = value if worst is None else max(worst, value)
    return worst


def single_point_atlas(
    cfg: SymmetricHeunConfig,
    *,
    n_terms: int | None = None,
    seed: int = 0,
) -> Atlas:
    """Every connection matrix from the one canonical basis at the origin."""

    from .regions import config_conditions

    report = config_conditions(cfg)
    for name, holds in (("A", report.condition_a), ("B", report.condition_b), ("discs", report.discs)):
        if not holds:
            raise ConditionViolated(name)

    workspace = _Workspace(cfg, n_terms=n_terms)
    origin = 0j
    base = {k: workspace.to_point(k, origin) for k in range(1, 5)}
    pairwise = {(k, l): workspace.between(k, l, origin) for k, l in PAIRS}
    residuals: dict[tuple[int, int], float | None] = {
        pair: workspace.residual(matrix, seed=seed) for pair, matrix in pairwise.items()
    }
    chain = _max_chain_residual(pairwise, TRIPLES)
    atlas = Atlas(
        mode="single-point",
        base=base,
        pairwise=pairwise,
        residuals=residuals,
        chain_residual=chain,
        convention=workspace.convention,
        admissible_triples=TRIPLES,
    )
    logger.info(
        "atlas mode=single-point max_residual=%.3e chain_residual=%.3e",
        atlas.max_residual or 0.0,
        chain or 0.0,
    )
    return atlas


def _chain_path(edges: Iterable[tuple[int, int]], start: int, goal: int) -> list[int] | None:
    neighbours: dict[int, set[int]] = {k: set() for k in range(1, 5)}
    for a, b in edges:
        neighbours[a].add(b)
        neighbours[b].add(a)
    previous: dict[int, int] = {start: start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            path = [goal]
            while path[-1] != start:
                path.append(previous[path[-1]])
            return path[::-1]
        for nxt in sorted(neighbours[node]):
            if nxt not in previous:
                previous[nxt] = node
                queue.append(nxt)
    return None


def multi_center_atlas(
    cfg: SymmetricHeunConfig,
    *,
    n_terms: int | None = None,
    seed: int = 0,
) -> Atlas:
    """Pair matrices through the circumcentres of admissible triples, chained where missing."""

    workspace = _Workspace(cfg, n_terms=n_terms)
    direct: dict[tuple[int, int], ConnectionMatrix] = {}
    admissible: list[tuple[int, int, int]] = []
    for triple in TRIPLES:
        try:
            matrices = _triple_connections(workspace, triple)
        except (DomainViolation, DegeneracyError) as exc:
            logger.info("triple_skipped triple=%s reason=%s", triple, exc)
            continue
        admissible.append(triple)
        for pair, matrix in matrices.items():
            direct.setdefault(pair, matrix)

    if not admissible:
        raise NoChain("no triple has its circumcentre inside all three discs")

    pairwise: dict[tuple[int, int], ConnectionMatrix] = {}
    residuals: dict[tuple[int, int], float | None] = {}
    for k, l in PAIRS:
        if (k, l) in direct:
            pairwise[(k, l)] = direct[(k, l)]
            residuals[(k, l)] = workspace.residual(direct[(k, l)], seed=seed)
            continue
        path = _chain_path(direct, k, l)
        if path is None:
            raise NoChain(f"no admissible triples connect z_{k} to z_{l}")
        chained = None
        for a, b in zip(path, path[1:]):
            step = direct[(a, b)] if (a, b) in direct else direct[(b, a)].inverse()
            chained = step if chained is None else chained @ step
        assert chained is not None
        pairwise[(k, l)] = chained
        r_k, r_l = cfg.disc_radius(k), cfg.disc_radius(l)
        z_k, z_l = cfg.point(k), cfg.point(l)
        between = z_k + (z_l - z_k) * r_k / (r_k + r_l)
        residuals[(k, l)] = workspace.residual(chained, around=between, seed=seed)
        logger.debug("pair_chained k=%d l=%d path=%s", k, l, path)

    chain = _max_chain_residual(direct, admissible)
    atlas = Atlas(
        mode="multi-center",
        base={},
        pairwise=pairwise,
        residuals=residuals,
        chain_residual=chain,
        convention=workspace.convention,
        admissible_triples=tuple(admissible),
    )
    logger.info(
        "atlas mode=multi-center triples=%d max_residual=%s",
        len(admissible),
        "n/a" if atlas.max_residual is None else f"{atlas.max_residual:.3e}",
    )
    return atlas
