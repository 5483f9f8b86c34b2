"""Local solutions of the symmetric Heun equation.

The equation

    F'' + 1/2 sum_j 1/(z - z_j) F' + (lambda + sum_j q_j/(z - z_j)) / P(z) F = 0,
    P(z) = prod_j (z - z_j),

is multiplied by P(z)**2, which turns all three coefficients into polynomials
of degree at most 8. Shifting those polynomials to an expansion point gives a
linear recurrence of bounded depth for the Taylor (regular point) or Frobenius
(singular point) coefficients. Coefficients are stored in the variable
u = (z - center) / R, R the convergence radius, so they stay O(1) for thousands
of terms.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Literal, NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import solve_ivp

from .errors import (
    CenterIsSingular,
    DegenerateConfig,
    DegenerateExponents,
    MismatchedCenters,
    NotConverged,
    OnBranchCut,
    OutsideDisc,
    PathTooCloseToSingularity,
    StepUnderflow,
)
from .geometry import MoebiusMap, canonical_map, cross_ratio

logger = logging.getLogger(__name__)

DEFAULT_N_TERMS = 64
MAX_TERMS = 4096
SAFETY_FACTOR = 0.95
DEFAULT_TAIL_TOLERANCE = 1e-14
DEGENERACY_TOLERANCE = 1e-9
SINGULAR_TOLERANCE = 1e-12
CUT_TOLERANCE = 1e-12
INTEGRATION_RTOL = 1e-12
# highest offset k with a nonzero weight Q_k: deg(P**2) = 8
RECURRENCE_DEPTH = 8

TWO_PI = 2.0 * math.pi

Branch = Literal["first", "second"]


def _as_quad(values: Sequence[complex], name: str) -> tuple[complex, complex, complex, complex]:
    converted = tuple(complex(v) for v in values)
    if len(converted) != 4:
        raise DegenerateConfig(f"{name} needs four entries, got {len(converted)}")
    return converted  # type: ignore[return-value]


@dataclass(frozen=True)
class SymmetricHeunConfig:
    """Singular points z_1..z_4, index angles chi_1..chi_4 and eigenvalue lambda."""

    z: tuple[complex, complex, complex, complex]
    chi: tuple[complex, complex, complex, complex]
    lam: complex = 0j

    def __post_init__(self) -> None:
        z = _as_quad(self.z, "z")
        chi = _as_quad(self.chi, "chi")
        lam = complex(self.lam)
        if not all(cmath.isfinite(v) for v in (*z, *chi, lam)):
            raise DegenerateConfig("configuration values must be finite")
        scale = max(abs(v) for v in z)
        if min(abs(v) for v in z) <= SINGULAR_TOLERANCE * scale:
            raise DegenerateConfig("singular points must be nonzero")
        gaps = [abs(z[i] - z[j]) for i in range(4) for j in range(i + 1, 4)]
        if min(gaps) <= SINGULAR_TOLERANCE * scale:
            raise DegenerateConfig(f"singular points must be pairwise distinct: {z!r}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "lam", lam)

    def point(self, j: int) -> complex:
        return self.z[_index(j)]

    @cached_property
    def derived(self) -> DerivedParams:
        return derived_params(self)

    def disc_radius(self, j: int) -> float:
        """Radius of convergence of the Frobenius series at z_j."""
        zj = self.point(j)
        return min(abs(zj - zi) for i, zi in enumerate(self.z) if i != _index(j))

    def regular_radius(self, center: complex) -> float:
        return min(abs(complex(center) - zj) for zj in self.z)

    def min_separation(self) -> float:
        return min(abs(self.z[i] - self.z[j]) for i in range(4) for j in range(i + 1, 4))

    def default_cut(self, j: int) -> float:
        """Direction of the cut {z_j t : t >= 1}, pointing away from the origin."""
        return cmath.phase(self.point(j))

    def default_cuts(self) -> tuple[float, float, float, float]:
        return tuple(self.default_cut(j) for j in range(1, 5))  # type: ignore[return-value]


def _index(j: int) -> int:
    if j not in (1, 2, 3, 4):
        raise ValueError(f"singular point index must be 1..4, got {j}")
    return j - 1


class DerivedParams(NamedTuple):
    alpha: tuple[complex, ...]
    beta: tuple[complex, ...]
    q: tuple[complex, ...]


def derived_params(cfg: SymmetricHeunConfig) -> DerivedParams:
    """alpha_j = cos(chi_j)**2 / 2, beta_j = 1/2 - alpha_j, q_j = alpha_j beta_j P'(z_j)."""

    alpha = tuple(cmath.cos(c) ** 2 / 2.0 for c in cfg.chi)
    beta = tuple(0.5 - a for a in alpha)
    q = []
    for j, zj in enumerate(cfg.z):
        derivative = 1 + 0j
        for i, zi in enumerate(cfg.z):
            if i != j:
                derivative *= zj - zi
        q.append(alpha[j] * beta[j] * derivative)
    return DerivedParams(alpha=alpha, beta=beta, q=tuple(q))


def indicial_exponents(cfg: SymmetricHeunConfig, j: int) -> tuple[complex, complex]:
    """Roots of rho**2 - rho/2 + alpha_j beta_j, ordered (alpha_j, beta_j)."""
    derived = cfg.derived
    return derived.alpha[_index(j)], derived.beta[_index(j)]


def _is_integer(value: complex, tol: float = 1e-15) -> bool:
    return abs(value.imag) <= tol and abs(value.real - round(value.real)) <= tol


def exponents_degenerate(cfg: SymmetricHeunConfig, j: int) -> bool:
    alpha, beta = indicial_exponents(cfg, j)
    difference = alpha - beta
    return abs(difference - round(difference.real)) <= DEGENERACY_TOLERANCE


@dataclass(frozen=True, eq=False)
class Recurrence:
    """Coefficient recurrence of the P**2-multiplied equation at one expansion point.

    ``weights[:, k]`` hold the aligned polynomial coefficients (A_k, B_{k-1}, C_{k-2})
    so that Q_k(s) = s(s-1) A_k + s B_{k-1} + C_{k-2} and

        sum_i c_i Q_{n + lead - i}(i + exponent) = 0    for every n.
    """

    center: complex
    exponent: complex
    lead: int
    scale: float
    weights: np.ndarray

    def weight(self, k: int | np.ndarray, s: complex | np.ndarray) -> complex | np.ndarray:
        a, b, c = self.weights[0, k], self.weights[1, k], self.weights[2, k]
        return s * (s - 1) * a + s * b + c

    def extend(self, head: np.ndarray, n_terms: int) -> np.ndarray:
        coeffs = np.zeros(n_terms, dtype=complex)
        start = min(len(head), n_terms)
        coeffs[:start] = head[:start]
        leading = abs(self.weights[0, self.lead]) + abs(self.weights[1, self.lead]) + abs(
            self.weights[2, self.lead]
        )
        for n in range(start, n_terms):
            s = n + self.exponent
            denominator = self.weight(self.lead, s)
            if abs(denominator) <= 1e-12 * leading * (1.0 + abs(s) ** 2):
                raise DegenerateExponents(
                    f"recurrence denominator vanishes at n={n} (exponent {self.exponent})"
                )
            low = max(0, n + self.lead - RECURRENCE_DEPTH)
            previous = np.arange(low, n)
            terms = self.weight(n + self.lead - previous, previous + self.exponent)
            coeffs[n] = -np.dot(terms, coeffs[low:n]) / denominator
        return coeffs

    def residuals(self, coeffs: np.ndarray) -> np.ndarray:
        """Relative residual of every recurrence equation the coefficients determine."""
        out = np.zeros(len(coeffs))
        for n in range(len(coeffs)):
            low = max(0, n + self.lead - RECURRENCE_DEPTH)
            indices = np.arange(low, n + 1)
            k, s = n + self.lead - indices, indices + self.exponent
            terms = self.weight(k, s) * coeffs[low : n + 1]
            parts = (
                np.abs(s * (s - 1) * self.weights[0, k])
                + np.abs(s * self.weights[1, k])
                + np.abs(self.weights[2, k])
            )
            size = float(np.sum(parts * np.abs(coeffs[low : n + 1])))
            out[n] = abs(complex(np.sum(terms))) / size if size > 0 else 0.0
        return out


def _build_recurrence(
    cfg: SymmetricHeunConfig,
    center: complex,
    exponent: complex,
    radius: float,
    singular_index: int | None = None,
) -> Recurrence:
    derived = cfg.derived
    roots = [(zj - center) / radius for zj in cfg.z]
    if singular_index is not None:
        roots[_index(singular_index)] = 0j

    p = npoly.polyfromroots(roots)
    dp = npoly.polyder(p)
    a2 = npoly.polymul(p, p)
    a1 = 0.5 * npoly.polymul(p, dp)
    a0 = cfg.lam * radius * p
    for j, q_j in enumerate(derived.q):
        others = [r for i, r in enumerate(roots) if i != j]
        a0 = npoly.polyadd(a0, q_j * npoly.polyfromroots(others))
    a0 = a0 / radius**3

    weights = np.zeros((3, RECURRENCE_DEPTH + 1), dtype=complex)
    weights[0, : len(a2)] = a2
    weights[1, 1 : len(a1) + 1] = a1[: RECURRENCE_DEPTH]
    weights[2, 2 : len(a0) + 2] = a0
    lead = 0
    if singular_index is not None:
        lead = 2
        weights[0, :2] = 0
        weights[1, :2] = 0
    return Recurrence(
        center=complex(center),
        exponent=complex(exponent),
        lead=lead,
        scale=float(radius),
        weights=weights,
    )


@dataclass(frozen=True, eq=False)
class LocalSolution:
    """(z - center)**exponent * sum_n c_n (z - center)**n, truncated.

    ``scaled_coefficients`` are c_n * conv_radius**n.
    """

    center: complex
    exponent: complex
    scaled_coefficients: np.ndarray
    conv_radius: float
    branch_cut_direction: float = 0.0
    singular_index: int | None = None
    recurrence: Recurrence | None = field(default=None, repr=False)

    @property
    def n_terms(self) -> int:
        return len(self.scaled_coefficients)

    @property
    def coefficients(self) -> np.ndarray:
        powers = self.conv_radius ** np.arange(self.n_terms, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return self.scaled_coefficients / powers

    def extended(self, n_terms: int) -> LocalSolution:
        if self.recurrence is None:
            raise NotConverged("solution has no recurrence attached and cannot be extended")
        coeffs = self.recurrence.extend(self.scaled_coefficients, n_terms)
        return replace(self, scaled_coefficients=coeffs)

    def residuals(self) -> np.ndarray:
        if self.recurrence is None:
            raise ValueError("solution has no recurrence attached")
        return self.recurrence.residuals(self.scaled_coefficients)


def taylor_solution(
    cfg: SymmetricHeunConfig,
    center: complex,
    init_value: complex,
    init_slope: complex,
    n_terms: int = DEFAULT_N_TERMS,
) -> LocalSolution:
    center = complex(center)
    radius = cfg.regular_radius(center)
    if radius <= SINGULAR_TOLERANCE * max(1.0, max(abs(zj) for zj in cfg.z)):
        raise CenterIsSingular(f"expansion point {center!r} coincides with a singular point")
    recurrence = _build_recurrence(cfg, center, 0j, radius)
    head = np.array([complex(init_value), complex(init_slope) * radius])
    coeffs = recurrence.extend(head, max(n_terms, 2))
    return LocalSolution(
        center=center,
        exponent=0j,
        scaled_coefficients=coeffs,
        conv_radius=radius,
        recurrence=recurrence,
    )


def frobenius_solution(
    cfg: SymmetricHeunConfig,
    j: int,
    branch: Branch = "first",
    n_terms: int = DEFAULT_N_TERMS,
    cut_direction: float | None = None,
) -> LocalSolution:
    """Frobenius solution at z_j with exponent alpha_j (first) or beta_j (second), c_0 = 1."""

    if branch not in ("first", "second"):
        raise ValueError(f"branch must be 'first' or 'second', got {branch!r}")
    if exponents_degenerate(cfg, j):
        alpha, beta = indicial_exponents(cfg, j)
        raise DegenerateExponents(
            f"exponents at z_{j} differ by an integer ({alpha!r}, {beta!r}); "
            "logarithmic solutions are not supported"
        )
    alpha, beta = indicial_exponents(cfg, j)
    exponent = alpha if branch == "first" else beta
    radius = cfg.disc_radius(j)
    recurrence = _build_recurrence(cfg, cfg.point(j), exponent, radius, singular_index=j)
    coeffs = recurrence.extend(np.array([1 + 0j]), max(n_terms, 2))
    cut = cfg.default_cut(j) if cut_direction is None else float(cut_direction)
    return LocalSolution(
        center=cfg.point(j),
        exponent=exponent,
        scaled_coefficients=coeffs,
        conv_radius=radius,
        branch_cut_direction=cut,
        singular_index=j,
        recurrence=recurrence,
    )


def on_cut(t: complex, cut: float) -> bool:
    if t == 0:
        return True
    offset = (cmath.phase(t) - cut) % TWO_PI
    return offset < CUT_TOLERANCE or offset > TWO_PI - CUT_TOLERANCE


def branch_power(t: complex, rho: complex, cut: float) -> complex:
    """t**rho with the cut along direction ``cut``; arg t lies in (cut - 2 pi, cut)."""

    t = complex(t)
    if on_cut(t, cut):
        raise OnBranchCut(f"point at offset {t!r} lies on the cut in direction {cut:.17g}")
    offset = (cmath.phase(t) - cut) % TWO_PI
    argument = cut - TWO_PI + offset
    return cmath.exp(complex(rho) * complex(math.log(abs(t)), argument))


class Evaluation(NamedTuple):
    value: complex
    derivative: complex
    tail: float


def _tail_estimate(coeffs: np.ndarray, u: complex, partial_sum: complex) -> float:
    window = np.arange(max(1, len(coeffs) - RECURRENCE_DEPTH - 1), len(coeffs))
    if len(window) == 0:
        return math.inf
    magnitude = float(np.max(np.abs(coeffs[window]) * abs(u) ** window))
    if partial_sum != 0:
        return magnitude / abs(partial_sum)
    return magnitude


def evaluate(
    sol: LocalSolution,
    z: complex,
    *,
    tolerance: float = DEFAULT_TAIL_TOLERANCE,
    safety_factor: float = SAFETY_FACTOR,
    max_terms: int | None = MAX_TERMS,
) -> Evaluation:
    """Value and derivative of a local solution at ``z``.

    When the tail estimate exceeds ``tolerance`` the series is doubled up to
    ``max_terms`` (``None`` keeps the stored truncation).
    """

    z = complex(z)
    t = z - sol.center
    if abs(t) > safety_factor * sol.conv_radius * (1.0 + 1e-12):
        raise OutsideDisc(
            f"|z - center| = {abs(t):.6g} exceeds {safety_factor} x radius {sol.conv_radius:.6g}"
        )
    exponent = sol.exponent
    integral = _is_integer(exponent)
    power = None if integral else branch_power(t, exponent, sol.branch_cut_direction)

    u = t / sol.conv_radius
    current = sol
    limit = sol.n_terms if max_terms is None else max(max_terms, sol.n_terms)
    while True:
        coeffs = current.scaled_coefficients
        partial = complex(npoly.polyval(u, coeffs))
        slope = complex(npoly.polyval(u, npoly.polyder(coeffs))) / sol.conv_radius
        tail = _tail_estimate(coeffs, u, partial)
        if tail <= tolerance:
            break
        if current.recurrence is None or current.n_terms >= limit:
            raise NotConverged(
                f"tail estimate {tail:.3e} above {tolerance:.1e} with {current.n_terms} terms"
            )
        current = current.extended(min(2 * current.n_terms, limit))
        logger.debug("series extended n_terms=%d tail=%.3e", current.n_terms, tail)

    if power is None:
        m = int(round(exponent.real))
        if m == 0:
            return Evaluation(partial, slope, tail)
        tm = t**m
        return Evaluation(tm * partial, m * t ** (m - 1) * partial + tm * slope, tail)
    return Evaluation(power * partial, power * (exponent * partial / t + slope), tail)


def wronskian(sol1: LocalSolution, sol2: LocalSolution, z: complex, **options) -> complex:
    """F1 F2' - F1' F2 for two solutions expanded at the same point."""

    if abs(sol1.center - sol2.center) > 1e-14 * max(1.0, abs(sol1.center)):
        raise MismatchedCenters("Wronskian needs solutions sharing a center")
    first = evaluate(sol1, z, **options)
    second = evaluate(sol2, z, **options)
    return first.value * second.derivative - first.derivative * second.value


def _segment_distance(start: complex, end: complex, point: complex) -> float:
    h = end - start
    if h == 0:
        return abs(point - start)
    s = ((point - start) * h.conjugate()).real / abs(h) ** 2
    s = min(1.0, max(0.0, s))
    return abs(start + s * h - point)


def _integrate_segment(
    second_derivative: Callable[[complex, complex, complex], complex],
    singular_points: Sequence[complex],
    start: complex,
    init: tuple[complex, complex],
    end: complex,
    rtol: float,
    min_clearance: float | None,
) -> tuple[complex, complex]:
    start, end = complex(start), complex(end)
    value, slope = complex(init[0]), complex(init[1])
    if end == start:
        return value, slope
    if min_clearance is None:
        gaps = [
            abs(singular_points[i] - singular_points[j])
            for i in range(len(singular_points))
            for j in range(i + 1, len(singular_points))
        ]
        min_clearance = 0.05 * min(gaps)
    for point in singular_points:
        distance = _segment_distance(start, end, point)
        if distance < min_clearance:
            raise PathTooCloseToSingularity(
                f"segment {start!r} -> {end!r} passes {distance:.3g} from singular point {point!r}"
            )

    h = end - start

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        z = start + s * h
        return np.array([y[1] * h, second_derivative(z, y[0], y[1]) * h])

    scale = max(1.0, abs(value), abs(slope))
    result = solve_ivp(
        rhs,
        (0.0, 1.0),
        np.array([value, slope], dtype=complex),
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-3 * scale,
    )
    if not result.success:
        raise StepUnderflow(f"integration {start!r} -> {end!r} failed: {result.message}")
    return complex(result.y[0, -1]), complex(result.y[1, -1])


def integrate_path(
    cfg: SymmetricHeunConfig,
    start: complex,
    init: tuple[complex, complex],
    end: complex,
    *,
    rtol: float = INTEGRATION_RTOL,
    min_clearance: float | None = None,
) -> tuple[complex, complex]:
    """Integrate the symmetric equation along the straight segment start -> end."""

    q = cfg.derived.q
    points = cfg.z
    lam = cfg.lam

    def second_derivative(z: complex, value: complex, slope: complex) -> complex:
        friction = 0j
        potential = lam
        product = 1 + 0j
        for zj, qj in zip(points, q):
            inverse = 1.0 / (z - zj)
            friction += inverse
            potential += qj * inverse
            product *= z - zj
        return -0.5 * friction * slope - potential / product * value

    if min_clearance is None:
        min_clearance = 0.05 * cfg.min_separation()
    return _integrate_segment(second_derivative, points, start, init, end, rtol, min_clearance)


@dataclass(frozen=True)
class StandardHeunParams:
    """Parameters of H'' + (g/x + d/(x-1) + e/(x-a)) H' + (ab x - q)/(x(x-1)(x-a)) H = 0."""

    a: complex
    q: complex
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    epsilon: complex

    def __post_init__(self) -> None:
        for name in ("a", "q", "alpha", "beta", "gamma", "delta", "epsilon"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if abs(self.a) <= SINGULAR_TOLERANCE or abs(self.a - 1) <= SINGULAR_TOLERANCE:
            raise DegenerateConfig(f"a = {self.a!r} collides with 0 or 1")
        size = 1.0 + sum(abs(v) for v in (self.alpha, self.beta, self.gamma, self.delta, self.epsilon))
        if abs(self.fuchs_defect) > 1e-12 * size:
            raise DegenerateConfig(f"gamma + delta + epsilon != alpha + beta + 1 (defect {self.fuchs_defect!r})")

    @property
    def fuchs_defect(self) -> complex:
        return self.gamma + self.delta + self.epsilon - self.alpha - self.beta - 1


def integrate_standard(
    p: StandardHeunParams,
    start: complex,
    init: tuple[complex, complex],
    end: complex,
    *,
    rtol: float = INTEGRATION_RTOL,
    min_clearance: float | None = None,
) -> tuple[complex, complex]:
    a, q = p.a, p.q
    product_ab = p.alpha * p.beta

    def second_derivative(x: complex, value: complex, slope: complex) -> complex:
        friction = p.gamma / x + p.delta / (x - 1) + p.epsilon / (x - a)
        potential = (product_ab * x - q) / (x * (x - 1) * (x - a))
        return -friction * slope - potential * value

    return _integrate_segment(second_derivative, (0j, 1 + 0j, a), start, init, end, rtol, min_clearance)


@dataclass(frozen=True)
class StandardFormMap:
    """F(z) = H(moebius(z)) * prod_k (z - z_k)**nu_k."""

    params: StandardHeunParams
    nu: tuple[complex, complex, complex, complex]
    moebius: MoebiusMap
    points: tuple[complex, complex, complex, complex]
    cuts: tuple[float, float, float, float]

    def prefactor(self, z: complex) -> complex:
        value = 1 + 0j
        for zk, nu_k, cut in zip(self.points, self.nu, self.cuts):
            value *= branch_power(complex(z) - zk, nu_k, cut)
        return value

    def log_derivative(self, z: complex) -> complex:
        return sum(nu_k / (complex(z) - zk) for zk, nu_k in zip(self.points, self.nu))

    def to_standard(self, z: complex) -> complex:
        return self.moebius(z)

    def to_standard_data(self, z: complex, value: complex, slope: complex) -> tuple[complex, complex]:
        """(H, dH/dzeta) at moebius(z) from (F, dF/dz) at z."""
        prefactor = self.prefactor(z)
        h_value = value / prefactor
        dh_dz = (slope - value * self.log_derivative(z)) / prefactor
        m = self.moebius
        dzeta_dz = m.determinant / (m.c_coef * complex(z) + m.d_coef) ** 2
        return h_value, dh_dz / dzeta_dz


def standard_form_map(cfg: SymmetricHeunConfig) -> StandardFormMap:
    """Parameters of the standard Heun equation conjugate to ``cfg``.

    z_1, z_2, z_4 go to 0, 1, infinity; the point sent to infinity carries the
    compensating exponent nu_4 = -(alpha_1 + alpha_2 + alpha_3). The accessory
    parameter follows from H'(0)/H(0) of the exponent-0 solution at zeta = 0,
    read off the first Frobenius coefficient at z_1.
    """

    alpha, beta, _ = cfg.derived
    z1, z2, z3, z4 = cfg.z
    moebius = canonical_map(z1, z2, z4)
    a = cross_ratio(z1, z2, z3, z4)

    gamma = 1 + alpha[0] - beta[0]
    delta = 1 + alpha[1] - beta[1]
    epsilon = 1 + alpha[2] - beta[2]
    head = alpha[0] + alpha[1] + alpha[2]
    nu = (alpha[0], alpha[1], alpha[2], -head)

    radius = cfg.disc_radius(1)
    recurrence = _build_recurrence(cfg, z1, alpha[0], radius, singular_index=1)
    try:
        c1 = recurrence.extend(np.array([1 + 0j]), 2)[1] / radius
    except DegenerateExponents as exc:
        raise DegenerateConfig(f"standard form undefined: {exc}") from exc

    a_c, c_c = moebius.a_coef, moebius.c_coef
    log_derivative = alpha[0] * c_c / a_c + c1 * moebius.determinant / a_c**2 + alpha[1] + alpha[2] / a
    params = StandardHeunParams(
        a=a,
        q=a * gamma * log_derivative,
        alpha=head + alpha[3],
        beta=head + beta[3],
        gamma=gamma,
        delta=delta,
        epsilon=epsilon,
    )
    return StandardFormMap(
        params=params,
        nu=nu,
        moebius=moebius,
        points=cfg.z,
        cuts=cfg.default_cuts(),
    )
