"""Diagonal well sets, component relations and lamination hulls.

Wells are stored by their diagonals in exact rational arithmetic.  Phase labels
follow the convention used everywhere in the package: ``0`` is austenite (the
zero matrix) and ``1..m`` index the stored wells.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

AUSTENITE = 0

FAMILIES = (
    "two_well",
    "four_well_2d",
    "four_well_3d",
    "eight_well_3d",
    "tartar",
    "single_well_rank1",
    "symmetric_pair",
)


class WellError(ValueError):
    """Invalid well-set parameters or an unknown family."""


class InconsistentDataError(ValueError):
    """Interpolation data assigns two values to the same abscissa."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


@dataclass(frozen=True)
class WellSet:
    n: int
    wells: tuple[tuple[Fraction, ...], ...]
    name: str = "custom"

    def __post_init__(self):
        wells = tuple(tuple(_frac(v) for v in w) for w in self.wells)
        object.__setattr__(self, "wells", wells)
        for w in wells:
            if len(w) != self.n:
                raise WellError(f"well {w} does not have dimension {self.n}")
        if len(set(wells)) != len(wells):
            raise WellError("duplicate wells")
        if any(all(v == 0 for v in w) for w in wells):
            raise WellError("austenite is implicit and must not be stored")

    def __len__(self):
        return len(self.wells)

    def diag(self, label: int) -> tuple[Fraction, ...]:
        """Diagonal of phase ``label`` (0 is austenite)."""
        if label == AUSTENITE:
            return (Fraction(0),) * self.n
        return self.wells[label - 1]

    def as_array(self, include_austenite: bool = True) -> np.ndarray:
        """Float diagonals, row ``i`` is phase ``i`` (row 0 austenite)."""
        rows = [[0.0] * self.n] if include_austenite else []
        rows += [[float(v) for v in w] for w in self.wells]
        return np.array(rows, dtype=float)

    def matrix(self, label: int) -> np.ndarray:
        return np.diag([float(v) for v in self.diag(label)])

    def diagonal_values(self) -> list[set[Fraction]]:
        """Per axis, the finite set of values the component can take in K0."""
        out = []
        for a in range(self.n):
            vals = {Fraction(0)} | {w[a] for w in self.wells}
            out.append(vals)
        return out

    def to_json(self, relations: Sequence["Relation"] = ()) -> str:
        doc = {
            "name": self.name,
            "n": self.n,
            "wells": [[str(v) for v in w] for w in self.wells],
            "relations": [r.to_dict() for r in relations],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "WellSet":
        doc = json.loads(text)
        return cls(n=int(doc["n"]), wells=tuple(tuple(Fraction(v) for v in w) for w in doc["wells"]),
                   name=doc.get("name", "custom"))


def make_well_set(family: str, lam=None, n: int = 2) -> WellSet:
    """Build one of the named well families with exact rational entries."""
    F = Fraction
    if family == "two_well":
        lam = F(1, 2) if lam is None else _frac(lam)
        if not 0 < lam < 1:
            raise WellError(f"lambda must lie in (0,1), got {lam}")
        wells = [(-lam, F(0)), (1 - lam, F(0))]
        if n == 3:
            wells = [w + (F(0),) for w in wells]
        elif n != 2:
            raise WellError("two_well supports n = 2 or 3")
        return WellSet(n, tuple(wells), f"two_well({lam})")
    if family == "four_well_2d":
        return WellSet(2, ((-1, -2), (-1, 1), (1, 2), (1, -1)), family)
    if family == "four_well_3d":
        return WellSet(3, ((-1, -2, 0), (-1, 1, 0), (1, 0, 2), (1, 0, -1)), family)
    if family == "eight_well_3d":
        return WellSet(3, ((2, -2, 1), (-2, -2, 1), (-3, 2, 1), (3, 2, 1),
                           (1, -1, -1), (-1, -1, -1), (-4, 1, -1), (4, 1, -1)), family)
    if family == "tartar":
        return WellSet(2, ((-1, -3), (-3, 1), (1, 3), (3, -1)), family)
    if family == "single_well_rank1":
        if n not in (2, 3):
            raise WellError("single_well_rank1 supports n = 2 or 3")
        return WellSet(n, ((1,) + (0,) * (n - 1),), family)
    if family == "symmetric_pair":
        # the pair +-e1 (x) e1 used by the n-dimensional diamond
        if n not in (2, 3):
            raise WellError("symmetric_pair supports n = 2 or 3")
        z = (0,) * (n - 1)
        return WellSet(n, ((-1,) + z, (1,) + z), f"symmetric_pair_{n}d")
    raise WellError(f"unknown well family {family!r}")


def project_to_K0(M, K: WellSet, wells_only: bool = False) -> tuple[int, float]:
    """Nearest element of K0 in Frobenius distance.

    Off-diagonal entries of ``M`` count towards the distance but not the choice.
    Ties go to austenite, then to the lowest well index.  With ``wells_only``
    austenite is excluded from the candidates.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = np.diag(M)
    if M.shape != (K.n, K.n):
        raise WellError(f"matrix of shape {M.shape} does not match n = {K.n}")
    d = np.diag(M)
    off = float(np.sum(M**2) - np.sum(d**2))
    cand = K.as_array()
    dist2 = np.sum((cand - d) ** 2, axis=1) + off
    start = 1 if wells_only else 0
    best = start + int(np.argmin(dist2[start:]))  # argmin keeps the first minimum
    # hypot rescales internally, so tiny nonzero offsets do not underflow to 0
    return best, math.hypot(*(M - np.diag(cand[best])).ravel())


def project_many(diags: np.ndarray, K: WellSet, wells_only: bool = False, candidates=None) -> np.ndarray:
    """Vectorised :func:`project_to_K0` on an ``(m, n)`` array of diagonals."""
    cand = K.as_array()
    labels = np.arange(len(cand))
    if candidates is not None:
        labels = np.asarray(candidates)
    elif wells_only:
        labels = labels[1:]
    dist2 = ((diags[:, None, :] - cand[labels][None, :, :]) ** 2).sum(-1)
    return labels[np.argmin(dist2, axis=1)]


# ---------------------------------------------------------------- polynomials


@dataclass(frozen=True)
class Polynomial:
    """Exact rational polynomial, coefficients in ascending degree."""

    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        c = [_frac(x) for x in self.coefficients]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coefficients", tuple(c) if c else (Fraction(0),))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t):
        if isinstance(t, np.ndarray):
            out = np.zeros_like(t, dtype=float)
            for c in reversed(self.coefficients):
                out = out * t + float(c)
            return out
        t = _frac(t)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * t + c
        return acc

    def __str__(self):
        terms = []
        for k, c in enumerate(self.coefficients):
            if c:
                terms.append(f"{c}" + ("" if k == 0 else "*t" if k == 1 else f"*t^{k}"))
        return " + ".join(terms) or "0"


def interpolate_relation(pairs: Iterable[tuple]) -> Polynomial:
    """Minimal-degree polynomial through ``(s, t)`` pairs (Newton form, exact)."""
    data: dict[Fraction, Fraction] = {}
    for s, t in pairs:
        s, t = _frac(s), _frac(t)
        if s in data and data[s] != t:
            raise InconsistentDataError(f"abscissa {s} assigned both {data[s]} and {t}")
        data[s] = t
    xs = list(data)
    if not xs:
        raise InconsistentDataError("no interpolation data")
    # divided differences
    table = [data[x] for x in xs]
    newton = [table[0]]
    for level in range(1, len(xs)):
        table = [(table[i + 1] - table[i]) / (xs[i + level] - xs[i]) for i in range(len(table) - 1)]
        newton.append(table[0])
    coeffs = [Fraction(0)] * len(xs)
    basis = [Fraction(1)]  # prod (t - x_i), ascending
    for k, a in enumerate(newton):
        for i, b in enumerate(basis):
            coeffs[i] += a * b
        if k < len(xs) - 1:
            nxt = [Fraction(0)] * (len(basis) + 1)
            for i, b in enumerate(basis):
                nxt[i + 1] += b
                nxt[i] -= xs[k] * b
            basis = nxt
    return Polynomial(tuple(coeffs))


@dataclass(frozen=True)
class Relation:
    """``chi[target] = p(sum of chi[sources])`` with 0-based axis indices."""

    sources: tuple[int, ...]
    target: int
    poly: Polynomial
    name: str = ""

    def to_dict(self) -> dict:
        return {"from": list(self.sources), "to": self.target,
                "coeffs": [str(c) for c in self.poly.coefficients], "name": self.name}


@dataclass
class RelationReport:
    passed: bool
    residuals: dict = field(default_factory=dict)  # label -> exact residual

    def failures(self) -> dict:
        return {k: v for k, v in self.residuals.items() if v != 0}


def verify_relation(K: WellSet, from_component, to_component: int, p: Polynomial) -> RelationReport:
    """Check ``chi[to] == p(chi[from])`` on every well and on austenite.

    ``from_component`` may be a list of axes whose entries are summed first.
    """
    src = (from_component,) if isinstance(from_component, int) else tuple(from_component)
    res = {}
    for label in range(len(K) + 1):
        d = K.diag(label)
        arg = sum((d[a] for a in src), Fraction(0))
        res[label] = p(arg) - d[to_component]
    return RelationReport(all(v == 0 for v in res.values()), res)


def _r(*c):
    return Polynomial(tuple(Fraction(x) for x in c))


G_FOUR_WELL = _r(0, Fraction(-3, 2), 0, Fraction(1, 2))
"""chi_11 = g(chi_22) for the planar four-well set (also g(chi_22+chi_33) in 3D)."""

_a, _b, _c, _d = 1344, 1440, 576, 5040
F12_EIGHT_WELL = _r(0, 0, Fraction(-5801, _d), 0, Fraction(83, _c), 0, Fraction(11, _b), 0, Fraction(-1, _a))
F13_EIGHT_WELL_PRINTED = _r(0, 0, Fraction(-5 * 1781, _d), 0, Fraction(5 * 101, _c), 0,
                            Fraction(-5 * 31, _b), 0, Fraction(5, _a))
F13_EIGHT_WELL = _r(0, 0, Fraction(-5 * 1787, _d), 0, Fraction(5 * 101, _c), 0,
                    Fraction(-5 * 31, _b), 0, Fraction(5, _a))
"""Interpolated chi_33 = f(chi_11); the printed variant has 1781 in place of 1787."""
F23_EIGHT_WELL_PRINTED = _r(0, 0, Fraction(-7, 12), 0, Fraction(5, 12))
F23_EIGHT_WELL = _r(0, 0, Fraction(-17, 12), 0, Fraction(5, 12))
"""Interpolated chi_33 = f(chi_22); the printed -7/12 variant does not hold on the wells."""


def standard_relations(K: WellSet) -> list[Relation]:
    """Relations known to hold for the named families (verified on construction)."""
    if K.name == "four_well_2d":
        rels = [Relation((1,), 0, G_FOUR_WELL, "g")]
    elif K.name == "four_well_3d":
        rels = [Relation((1, 2), 0, G_FOUR_WELL, "g")]
    elif K.name == "eight_well_3d":
        rels = [Relation((0,), 1, F12_EIGHT_WELL, "f12"), Relation((0,), 2, F13_EIGHT_WELL, "f13"),
                Relation((1,), 2, F23_EIGHT_WELL, "f23")]
    elif K.name == "tartar":
        pairs = [(w[1], w[0]) for w in K.wells] + [(0, 0)]
        f = interpolate_relation(pairs)
        g = interpolate_relation([(w[0], w[1]) for w in K.wells] + [(0, 0)])
        rels = [Relation((1,), 0, f, "f"), Relation((0,), 1, g, "g")]
    else:
        rels = []
    return [r for r in rels if verify_relation(K, r.sources, r.target, r.poly).passed]


# ------------------------------------------------------------ lamination hulls

Box = tuple[tuple[Fraction, Fraction], ...]


@dataclass(frozen=True)
class LaminationHull:
    boxes: tuple[Box, ...]
    order: int

    def contains(self, point) -> bool:
        p = [_frac(x) for x in point]
        return any(all(lo <= x <= hi for x, (lo, hi) in zip(p, b)) for b in self.boxes)


def _inside(a: Box, b: Box) -> bool:
    return all(bl <= al and ah <= bh for (al, ah), (bl, bh) in zip(a, b))


def _prune(boxes: list[Box]) -> list[Box]:
    uniq = sorted(set(boxes), key=lambda b: -sum(float(h - l) for l, h in b))
    kept: list[Box] = []
    for b in uniq:
        if not any(_inside(b, k) for k in kept):
            kept.append(b)
    return kept


def lamination_step(boxes: Sequence[Box]) -> list[Box]:
    """One generation: add axis-aligned segments between rank-one connected boxes."""
    boxes = list(boxes)
    n = len(boxes[0])
    new = list(boxes)
    for b1, b2 in itertools.combinations(boxes, 2):
        for a in range(n):
            inter = []
            ok = True
            for i in range(n):
                if i == a:
                    inter.append((min(b1[i][0], b2[i][0]), max(b1[i][1], b2[i][1])))
                    continue
                lo, hi = max(b1[i][0], b2[i][0]), min(b1[i][1], b2[i][1])
                if lo > hi:
                    ok = False
                    break
                inter.append((lo, hi))
            if ok:
                new.append(tuple(inter))
    return _prune(new)


def lamination_hulls(K: WellSet, max_order: int) -> list[LaminationHull]:
    boxes = [tuple((v, v) for v in w) for w in K.wells]
    hulls = [LaminationHull(tuple(boxes), 0)]
    for m in range(1, max_order + 1):
        nxt = lamination_step(boxes)
        hulls.append(LaminationHull(tuple(nxt), m))
        if set(nxt) == set(boxes):
            # fixpoint: later generations are identical
            for mm in range(m + 1, max_order + 1):
                hulls.append(LaminationHull(tuple(nxt), mm))
            break
        boxes = nxt
    return hulls


def lamination_order_of_zero(K: WellSet, max_order: int = 10):
    """Smallest ``m`` with ``0`` in the closed hull ``K^(m)``, or ``None``."""
    if max_order < 1:
        raise WellError("max_order must be >= 1")
    zero = (0,) * K.n
    for hull in lamination_hulls(K, max_order)[1:]:
        if hull.contains(zero):
            return hull.order
    return None
