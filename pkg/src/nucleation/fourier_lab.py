"""Fourier-side diagnostics: cone decomposition, low-frequency mass, commutator probes.

All transforms use the Plancherel normalisation of :mod:`nucleation.energy`, so
that ``sum |chi^(k)|^2 = int |chi|^2`` on the periodic box.  Cones are sharp
indicators and ``k = 0`` belongs to every cone.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .constructions.common import constants
from .geometry import GridField
from .wells import Polynomial, Relation, WellSet, verify_relation

COMMUTATOR_M = float(constants()["commutator_M"])
GAMMA = float(constants()["gamma"])


class RelationPrecheckError(ValueError):
    """The field's chi does not satisfy the relation handed to the probe."""


@dataclass(frozen=True)
class Cone:
    """``{k : sum_{l != axis} k_l^2 <= mu^2 |k|^2, |k| <= radius}`` (axis 0-based)."""

    axis: int
    mu: float
    radius: float

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise ValueError(f"cone aperture must lie in (0, 1], got {self.mu}")
        if self.radius <= 0:
            raise ValueError(f"cone radius must be positive, got {self.radius}")

    def contains(self, ks) -> np.ndarray:
        k2 = sum(k**2 for k in ks)
        off = k2 - ks[self.axis] ** 2
        return (off <= self.mu**2 * k2 * (1 + 1e-12)) & (k2 <= self.radius**2 * (1 + 1e-12))

    def measure(self, n: int) -> float:
        """Lebesgue measure of the (double) cone in R^n."""
        alpha = math.asin(min(self.mu, 1.0))
        if n == 2:
            return 2 * alpha * self.radius**2
        if n == 3:
            return 4 * math.pi / 3 * self.radius**3 * (1 - math.cos(alpha))
        raise ValueError(f"unsupported dimension {n}")


def nyquist(field: GridField) -> float:
    return math.pi / field.h


def _wavevectors(field: GridField):
    k1 = 2 * np.pi * np.fft.fftfreq(field.N, d=field.h)
    return np.meshgrid(*([k1] * field.n), indexing="ij")


def _power(field: GridField, j: int) -> np.ndarray:
    return np.abs(np.fft.fftn(field.components[j])) ** 2 * (field.cell_volume / field.N**field.n)


def _check_component(field: GridField, j: int):
    if not 0 <= j < field.n:
        raise ValueError(f"component {j} out of range for n={field.n}")


def cone_mass(field: GridField, cone: Cone, j: int | None = None) -> float:
    """``sum_{k in cone} |chi_jj^(k)|^2``."""
    j = cone.axis if j is None else j
    _check_component(field, j)
    return float(_power(field, j)[cone.contains(_wavevectors(field))].sum())


def cone_residual(field: GridField, cone: Cone, j: int | None = None) -> float:
    """``sum_{k not in cone} |chi_jj^(k)|^2``; ``j`` defaults to the cone axis."""
    j = cone.axis if j is None else j
    _check_component(field, j)
    return float(_power(field, j)[~cone.contains(_wavevectors(field))].sum())


def component_mass(field: GridField, j: int) -> float:
    return float((field.components[j] ** 2).sum() * field.cell_volume)


def low_frequency_mass(field: GridField, cone: Cone, j: int | None = None) -> tuple[float, float]:
    """Low-frequency mass of ``phi = chi_jj`` in the cone and the bound ``8 |phi|_1^2 mu'^n mu^(n-1)``.

    The mass approximates ``int_cone |phi^(xi)|^2 d xi`` by the cone measure times
    the mean of ``|phi^|^2`` over the lattice points in the cone (``k = 0`` is
    always one of them), with ``phi^`` the continuous transform of the grid
    function.  Since ``|phi^| <= (2 pi)^(-n/2) |phi|_1`` pointwise the returned
    mass never exceeds the bound.
    """
    j = cone.axis if j is None else j
    _check_component(field, j)
    n = field.n
    phi = field.components[j]
    l1 = float(np.abs(phi).sum() * field.cell_volume)
    bound = 8 * l1**2 * cone.radius**n * cone.mu ** (n - 1)
    if l1 == 0:
        return 0.0, 0.0
    # continuous transform sampled on the lattice, phase from the grid origin dropped
    hat2 = np.abs(np.fft.fftn(phi) * field.cell_volume) ** 2 / (2 * np.pi) ** n
    inside = cone.contains(_wavevectors(field))
    mass = float(hat2[inside].mean() * cone.measure(n))
    return mass, bound


def psi_gamma(z: float, gamma: float = GAMMA) -> float:
    """``max(z, z^(1 - gamma))``."""
    return max(z, z ** (1 - gamma)) if z > 0 else 0.0


@dataclass
class CommutatorReport:
    lhs: float
    rhs_terms: tuple[float, float]
    mu: float
    mu_tilde: float
    mu2: float
    mu_prime: float
    gamma: float
    source: int
    target: int

    def ratio(self) -> float:
        s = sum(self.rhs_terms)
        return self.lhs / s if s > 0 else (0.0 if self.lhs == 0 else math.inf)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def relation_defect(field: GridField, relation: Relation) -> float:
    """``max |chi_target - p(sum chi_sources)|`` over the grid."""
    arg = sum(field.components[a] for a in relation.sources)
    return float(np.abs(field.components[relation.target] - relation.poly(np.asarray(arg))).max())


def commutator_probe(field: GridField, relation: Relation, mu: float, mu_prime: float, mu2: float,
                     gamma: float = GAMMA, M: float = COMMUTATOR_M, K: WellSet | None = None,
                     tol: float = 1e-9) -> CommutatorReport:
    """Probe the commutator lemma for ``chi_b = p(chi_a)``.

    ``lhs`` is the residual of ``chi_b`` outside the cone ``(mu, mu~ = M mu mu2)``;
    the right-hand terms are ``psi_gamma`` of the residual of ``chi_a`` outside
    ``(mu, mu2)`` and the residual of ``chi_b`` outside ``(mu, mu')``.  Both the
    source and the target cone use the axis of the target component.
    """
    if K is not None and not verify_relation(K, relation.sources, relation.target, relation.poly).passed:
        raise RelationPrecheckError(f"relation {relation.name or relation.poly} does not hold on {K.name}")
    defect = relation_defect(field, relation)
    if defect > tol:
        raise RelationPrecheckError(f"field violates chi_{relation.target} = p(chi_{list(relation.sources)})"
                                    f" (max defect {defect:.3g})")
    mu_t = M * mu * mu2
    if not (0 < mu_t <= mu2 <= mu_prime):
        raise ValueError(f"radius ordering 0 < mu~ <= mu'' <= mu' violated: mu~={mu_t}, mu''={mu2}, mu'={mu_prime}")
    b = relation.target
    if len(relation.sources) != 1:
        raise ValueError("commutator probe needs a single source component")
    a = relation.sources[0]
    lhs = cone_residual(field, Cone(b, mu, mu_t), b)
    r1 = psi_gamma(cone_residual(field, Cone(b, mu, mu2), a), gamma)
    r2 = cone_residual(field, Cone(b, mu, mu_prime), b)
    return CommutatorReport(lhs, (r1, r2), mu, mu_t, mu2, mu_prime, gamma, a, b)


# ----------------------------------------------------------- exponent algebra


def lower_exponent(n: int, m: int) -> Fraction:
    """Volume exponent ``(nm + 2n - 3) / (nm + 2n - 1)`` of the lower bound."""
    if n < 2 or m < 1:
        raise ValueError(f"need n >= 2 and m >= 1, got n={n}, m={m}")
    return Fraction(n * m + 2 * n - 3, n * m + 2 * n - 1)


def _log_F(lmu, lmu2, n, m, logV):
    """log of ``(V - mu^(n-1) mu_m^n V^2) / (mu^-2 + mu2^-1)``, ``-inf`` where non-positive."""
    lmu_m = (m - 1) * lmu + lmu2
    lcap = (n - 1) * lmu + n * lmu_m + logV  # log of mu^(n-1) mu_m^n V
    frac = 1 - np.exp(np.minimum(lcap, 50.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.where(frac > 0, logV + np.log(np.where(frac > 0, frac, 1.0)), -np.inf)
    den = np.logaddexp(-2 * lmu, -lmu2)
    return num - den


@dataclass
class ConeOptimum:
    mu: float
    mu2: float
    value: float
    exponent: float
    predicted: Fraction

    @property
    def matches(self) -> bool:
        return abs(self.exponent - float(self.predicted)) <= 0.01


def _maximize(n, m, logV):
    lo = -2.0 * logV - 5.0
    g = np.linspace(lo, 0.0, 241)
    A, B = np.meshgrid(g, g, indexing="ij")
    vals = _log_F(A, B, n, m, logV)
    i, k = np.unravel_index(np.argmax(vals), vals.shape)
    x = [g[i], g[k]]
    step = g[1] - g[0]
    for _ in range(20):
        old = list(x)
        for c in range(2):
            def f(t, c=c):
                y = list(x)
                y[c] = t
                return -float(_log_F(y[0], y[1], n, m, logV))
            x[c] = minimize_scalar(f, bounds=(max(lo, x[c] - 2 * step), min(0.0, x[c] + 2 * step)),
                                   method="bounded", options={"xatol": 1e-10}).x
        if max(abs(x[0] - old[0]), abs(x[1] - old[1])) < 1e-9:
            break
    return x[0], x[1], float(_log_F(x[0], x[1], n, m, logV))


def optimize_cone_parameters(n: int, m: int, V: float) -> ConeOptimum:
    """Maximise the lower-bound value over the apertures ``(mu, mu2) in (0, 1]^2``.

    From ``V <= mu^(n-1) mu_m^n V^2 + C (mu^-2 + mu2^-1) E`` with ``mu_m = mu^(m-1) mu2``
    the energy is at least ``(V - mu^(n-1) mu_m^n V^2) / (mu^-2 + mu2^-1)``.  The
    V-exponent is the local log-slope of the optimal value across ``V/10 .. 10 V``.
    """
    if V <= 1:
        raise ValueError(f"V={V} is outside the large-volume regime V > 1")
    logV = math.log(V)
    a, b, val = _maximize(n, m, logV)
    lo = _maximize(n, m, logV - math.log(10))[2]
    hi = _maximize(n, m, logV + math.log(10))[2]
    slope = (hi - lo) / (2 * math.log(10))
    return ConeOptimum(math.exp(a), math.exp(b), math.exp(val), slope, lower_exponent(n, m))


def tartar_lower_form(V: float, C0: float = 2.0, m_max: int = 64, V_grid=None) -> dict:
    """Iterated-commutator bound ``V <= C0^m V^(2/(2m+1)) E`` minimised over even ``m``.

    Returns the minimising ``m*``, the implied lower value
    ``V^(1 - 2/(2m*+1)) C0^(-m*)``, the analytic balance ``sqrt(log V / log C0) - 1/2``
    and the constant ``C`` of ``V exp(-C sqrt(log V))`` fitted over ``V_grid``.
    """
    if V <= 1:
        raise ValueError(f"V={V} is outside the large-volume regime V > 1")
    ms = np.arange(2, m_max + 1, 2)

    def best(v):
        lv = math.log(v)
        cost = ms * math.log(C0) + 2 * lv / (2 * ms + 1)
        i = int(np.argmin(cost))
        return int(ms[i]), lv - float(cost[i])

    m_star, log_val = best(V)
    grid = np.geomspace(1e4, 1e12, 33) if V_grid is None else np.asarray(V_grid, float)
    x = np.sqrt(np.log(grid))
    y = np.array([math.log(v) - best(v)[1] for v in grid])  # log(V / E)
    C, b = np.polyfit(x, y, 1)
    return {"m_star": m_star, "value": math.exp(log_val),
            "m_analytic": math.sqrt(math.log(V) / math.log(C0)) - 0.5,
            "C": float(C), "intercept": float(b)}

