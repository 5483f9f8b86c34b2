"""Complex-plane geometry: circumcircles and Moebius maps on the extended plane."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    Coincident,
    Collinear,
    DegenerateAngles,
    DegeneratePoints,
    DegenerateTriple,
    SingularMap,
)

INFINITY = complex(math.inf, 0.0)

COLLINEAR_TOLERANCE = 1e-13
DISTINCT_TOLERANCE = 1e-14
TWO_PI = 2.0 * math.pi


def is_infinity(z: complex) -> bool:
    return cmath.isinf(z)


def _pairwise_min_max(points: Sequence[complex]) -> tuple[float, float]:
    distances = [
        abs(points[i] - points[j]) for i in range(len(points)) for j in range(i + 1, len(points))
    ]
    return min(distances), max(distances)


def _ensure_distinct(points: Sequence[complex], error: type[Exception], what: str) -> None:
    if any(is_infinity(p) for p in points):
        finite = [p for p in points if not is_infinity(p)]
        if len(points) - len(finite) > 1:
            raise error(f"{what}: more than one point at infinity")
        points = finite
        if len(points) < 2:
            return
    smallest, largest = _pairwise_min_max(points)
    scale = max(largest, max(abs(p) for p in points), 1e-300)
    if smallest <= DISTINCT_TOLERANCE * scale:
        raise error(f"{what}: points are not pairwise distinct {tuple(points)!r}")


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        return abs(z - self.center) < self.radius - margin


def circumcircle(zk: complex, zl: complex, zm: complex) -> Circle:
    """Circle through three points.

    The centre is the quotient of two expressions in the points and their
    conjugates; it is computed relative to ``zk`` since both numerator and
    denominator are translation invariant.
    """

    zk, zl, zm = complex(zk), complex(zl), complex(zm)
    smallest, largest = _pairwise_min_max((zk, zl, zm))
    if smallest <= DISTINCT_TOLERANCE * max(largest, abs(zk), abs(zl), abs(zm), 1e-300):
        raise Coincident(f"circumcircle needs three distinct points, got {(zk, zl, zm)!r}")

    b = zl - zk
    c = zm - zk
    denominator = b.conjugate() * c - c.conjugate() * b
    if abs(denominator) < COLLINEAR_TOLERANCE * largest**2:
        raise Collinear(f"points {(zk, zl, zm)!r} are collinear")

    numerator = abs(b) ** 2 * c - abs(c) ** 2 * b
    center = zk + numerator / denominator
    radius = abs(zk - zl) * abs(zl - zm) * abs(zm - zk) / abs(denominator)
    return Circle(center=center, radius=radius)


@dataclass(frozen=True)
class MoebiusMap:
    """z -> (a z + b) / (c z + d), stored unnormalised."""

    a_coef: complex
    b_coef: complex
    c_coef: complex
    d_coef: complex

    def __post_init__(self) -> None:
        for name in ("a_coef", "b_coef", "c_coef", "d_coef"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        det = self.determinant
        size = abs(self.a_coef * self.d_coef) + abs(self.b_coef * self.c_coef)
        if det == 0 or abs(det) <= 1e-14 * size:
            raise SingularMap(f"Moebius determinant vanishes for {self!r}")

    @property
    def determinant(self) -> complex:
        return self.a_coef * self.d_coef - self.b_coef * self.c_coef

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a_coef, self.b_coef], [self.c_coef, self.d_coef]], dtype=complex)

    def __call__(self, z: complex) -> complex:
        a, b, c, d = self.a_coef, self.b_coef, self.c_coef, self.d_coef
        if is_infinity(z):
            return INFINITY if c == 0 else a / c
        z = complex(z)
        denominator = c * z + d
        if denominator == 0 or abs(denominator) <= 1e-15 * (abs(c * z) + abs(d)):
            return INFINITY
        return (a * z + b) / denominator

    def inverse(self) -> MoebiusMap:
        return MoebiusMap(self.d_coef, -self.b_coef, -self.c_coef, self.a_coef)

    def compose(self, first: MoebiusMap) -> MoebiusMap:
        """Return ``self`` after ``first``."""
        product = self.as_matrix() @ first.as_matrix()
        return MoebiusMap(product[0, 0], product[0, 1], product[1, 0], product[1, 1])

    def __matmul__(self, first: MoebiusMap) -> MoebiusMap:
        return self.compose(first)

    def is_equivalent(self, other: MoebiusMap, rtol: float = 1e-10) -> bool:
        """Projective equality: the coefficient vectors are proportional."""
        u = np.array([self.a_coef, self.b_coef, self.c_coef, self.d_coef])
        v = np.array([other.a_coef, other.b_coef, other.c_coef, other.d_coef])
        minors = np.outer(u, v) - np.outer(v, u)
        return float(np.max(np.abs(minors))) <= rtol * float(np.linalg.norm(u) * np.linalg.norm(v))


def identity_map() -> MoebiusMap:
    return MoebiusMap(1, 0, 0, 1)


def moebius_apply(m: MoebiusMap, z: complex) -> complex:
    return m(z)


def moebius_inverse(m: MoebiusMap) -> MoebiusMap:
    return m.inverse()


def moebius_compose(m2: MoebiusMap, m1: MoebiusMap) -> MoebiusMap:
    return m2.compose(m1)


def canonical_map(z1: complex, z2: complex, z4: complex) -> MoebiusMap:
    """Map z1 -> 0, z2 -> 1, z4 -> infinity; one argument may be infinite."""

    _ensure_distinct((z1, z2, z4), DegenerateTriple, "canonical_map")
    if is_infinity(z1):
        return MoebiusMap(0, z2 - z4, 1, -z4)
    if is_infinity(z2):
        return MoebiusMap(1, -z1, 1, -z4)
    if is_infinity(z4):
        return MoebiusMap(1, -z1, 0, z2 - z1)
    k_num = z2 - z4
    k_den = z2 - z1
    return MoebiusMap(k_num, -z1 * k_num, k_den, -z4 * k_den)


def _det3(rows: Sequence[Sequence[complex]]) -> complex:
    return complex(np.linalg.det(np.array(rows, dtype=complex)))


def moebius_from_triples(src: Sequence[complex], dst: Sequence[complex]) -> MoebiusMap:
    """Moebius map with src[i] -> dst[i].

    Finite triples use the 3x3 determinant construction; a triple with one
    point at infinity goes through the canonical frame (0, 1, infinity).
    """

    if len(src) != 3 or len(dst) != 3:
        raise DegenerateTriple("moebius_from_triples needs two triples")
    _ensure_distinct(src, DegenerateTriple, "source triple")
    _ensure_distinct(dst, DegenerateTriple, "target triple")

    if any(is_infinity(p) for p in (*src, *dst)):
        to_frame = canonical_map(*src)
        from_frame = canonical_map(*dst).inverse()
        return from_frame.compose(to_frame)

    (z1, z2, z4), (w1, w2, w4) = src, dst
    a = _det3([[z1 * w1, w1, 1], [z2 * w2, w2, 1], [z4 * w4, w4, 1]])
    b = _det3([[z1 * w1, z1, w1], [z2 * w2, z2, w2], [z4 * w4, z4, w4]])
    c = _det3([[z1, w1, 1], [z2, w2, 1], [z4, w4, 1]])
    d = _det3([[z1 * w1, z1, 1], [z2 * w2, z2, 1], [z4 * w4, z4, 1]])
    return MoebiusMap(a, b, c, d)


def cross_ratio(z1: complex, z2: complex, z3: complex, z4: complex) -> complex:
    """a = ((z2 - z4)(z3 - z1)) / ((z2 - z1)(z3 - z4)), the image of z3 under canonical_map."""

    points = tuple(complex(z) for z in (z1, z2, z3, z4))
    if any(is_infinity(p) for p in points):
        raise DegeneratePoints("cross_ratio expects finite points")
    _ensure_distinct(points, DegeneratePoints, "cross_ratio")
    return ((z2 - z4) * (z3 - z1)) / ((z2 - z1) * (z3 - z4))


@dataclass(frozen=True)
class AngleTriple:
    """Angles of z1, z2, z4 on the unit circle, reduced mod 2 pi."""

    phi1: float
    phi2: float
    phi4: float = 0.0

    def __post_init__(self) -> None:
        for name in ("phi1", "phi2", "phi4"):
            object.__setattr__(self, name, float(getattr(self, name)) % TWO_PI)

    def angle(self, k: int) -> float:
        try:
            return {1: self.phi1, 2: self.phi2, 4: self.phi4}[k]
        except KeyError:
            raise ValueError(f"angle index must be 1, 2 or 4, got {k}") from None

    def point(self, k: int) -> complex:
        return cmath.exp(1j * self.angle(k))

    @property
    def points(self) -> tuple[complex, complex, complex]:
        return self.point(1), self.point(2), self.point(4)

    def s(self, k: int, l: int) -> float:
        return math.sin((self.angle(k) - self.angle(l)) / 2.0)

    def c(self, k: int, l: int) -> float:
        return math.cos((self.angle(k) - self.angle(l)) / 2.0)

    def chord(self, k: int, l: int) -> float:
        """r_kl = |e^{i phi_k} - e^{i phi_l}|."""
        return 2.0 * abs(self.s(k, l))

    def ensure_distinct(self) -> None:
        if min(self.chord(1, 2), self.chord(2, 4), self.chord(4, 1)) < 1e-12:
            raise DegenerateAngles(f"angles {self!r} are not pairwise distinct mod 2 pi")


class UnitCircleFrame(NamedTuple):
    forward: MoebiusMap
    inverse: MoebiusMap
    zeta0: complex


def unit_circle_maps(phis: AngleTriple) -> UnitCircleFrame:
    """Canonical frame for z1, z2, z4 on the unit circle.

    ``forward`` sends e^{i phi1}, e^{i phi2}, e^{i phi4} to 0, 1, infinity and
    the origin to ``zeta0``.
    """

    phis.ensure_distinct()
    s12 = phis.s(1, 2)
    s42 = phis.s(4, 2)
    zeta0 = complex(phis.c(1, 4) * s42 / s12, phis.s(1, 4) * s42 / s12)
    e1, e4 = phis.point(1), phis.point(4)
    conj0 = zeta0.conjugate()
    forward = MoebiusMap(conj0, -conj0 * e1, 1, -e4)
    inverse = MoebiusMap(e4, -e4 * zeta0, 1, -conj0)
    return UnitCircleFrame(forward=forward, inverse=inverse, zeta0=zeta0)


def unit_circle_coeffs(phis: AngleTriple, points: Sequence[complex]) -> MoebiusMap:
    """Closed-form map carrying ``points`` onto e^{i phi1}, e^{i phi2}, e^{i phi4}."""

    phis.ensure_distinct()
    if len(points) != 3:
        raise DegenerateTriple("unit_circle_coeffs needs three points")
    _ensure_distinct(points, DegenerateTriple, "unit_circle_coeffs")
    z1, z2, z4 = (complex(p) for p in points)
    e1, e2, e4 = phis.points
    e12, e14, e24 = e1 * e2, e1 * e4, e2 * e4
    a = (z1 - z2) * e12 - (z1 - z4) * e14 + (z2 - z4) * e24
    b = -z4 * (z1 - z2) * e12 + z2 * (z1 - z4) * e14 - z1 * (z2 - z4) * e24
    c = -(z1 - z2) * e4 + (z1 - z4) * e2 - (z2 - z4) * e1
    d = z4 * (z1 - z2) * e4 - z2 * (z1 - z4) * e2 + z1 * (z2 - z4) * e1
    return MoebiusMap(a, b, c, d)
