"""Volume sweeps: per-volume parameter optimisation, scaling fits and predicted exponents.

All energies are evaluated at ``eps = 1`` (the normalised problem); the
``eps``-dependence follows from :func:`nucleation.energy.rescale_energy`.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .constructions import (ConstructionError, constants, construct_ball, construct_branch_rect21,
                            construct_branch_rect_nd, construct_diamond_nd, construct_double_branch_4w,
                            construct_lens21, construct_lens_branch_4w, construct_tartar, default_order,
                            tartar_cell_count)
from .energy import AdmissibilityError, EnergyBreakdown, exact_energy
from .fourier_lab import lower_exponent
from .wells import make_well_set

GOLDEN = (math.sqrt(5) - 1) / 2


class InfeasibleError(ValueError):
    """No admissible parameters exist at the requested volume."""


class InsufficientDataError(ValueError):
    pass


@dataclass
class OptimizerConfig:
    rounds: int = 3
    steps: int = 20
    lam: str = "1/2"
    n: int = 2
    max_cells: int = 200_000
    bracket: float = 8.0
    check: bool = True
    seed: int = 0  # recorded for reproducibility; the optimiser is deterministic


# --------------------------------------------------------------- families


@dataclass
class Family:
    """Parametrisation of one construction at prescribed volume.

    ``free`` lists the optimised parameters; ``build(V, p, cfg)`` returns the
    construction, ``start(V, cfg)`` the asymptotic starting point and
    ``bounds(V, p, name, cfg)`` the open feasible interval of one parameter with
    the others fixed.
    """

    name: str
    wellset: Callable[[OptimizerConfig], str]
    free: tuple[str, ...]
    build: Callable
    start: Callable
    bounds: Callable
    small_volume: bool = False


def _lam(cfg):
    return Fraction(cfg.lam)


def _lens21(V, p, cfg):
    return construct_lens21(_lam(cfg), p["L"], 2 * V / p["L"])


def _branch21(V, p, cfg):
    return construct_branch_rect21(_lam(cfg), p["L"], V / p["L"])


def _branch3(V, p, cfg):
    return construct_branch_rect_nd(3, _lam(cfg), p["L"], math.sqrt(V / p["L"]))


def _diamond(V, p, cfg):
    n = cfg.n
    H = 2 * V / p["L"] if n == 2 else math.sqrt(6 * V / p["L"])
    return construct_diamond_nd(n, p["L"], H)


def _lens_branch(V, p, cfg):
    # r is carried as the fraction rho of its largest admissible value, so that
    # moving L along a coordinate never leaves the feasible set
    H = 2 * V / p["L"]
    return construct_lens_branch_4w(p["L"], H, p["rho"] * lens_branch_r_max(p["L"], H))


def _double_branch(V, p, cfg):
    return construct_double_branch_4w(p["L"], V / p["L"])


def _tartar(V, p, cfg):
    L = math.sqrt(V)
    return construct_tartar(L, L, p["r"], default_order(L))


def _ball(V, p, cfg):
    return construct_ball(make_well_set("two_well", _lam(cfg), n=cfg.n), V)


def lens_branch_r_max(L: float, H: float) -> float:
    """Largest ``r`` with ``l_j > 4 r_j`` for every rectangle (the first one binds)."""
    return min(L / (8 + 2 * L / H), H / 2)


def tartar_r_min(L: float, k: int, max_cells: int) -> float:
    """Smallest ``r`` whose construction stays within ``max_cells`` cells."""
    hi = constants()["tartar_c"] * L * (1 - 1e-9)
    if tartar_cell_count(L, L, hi, k) > max_cells:
        raise InfeasibleError(f"tartar: cell budget {max_cells} exceeded even at r = cH")
    lo = hi / 2
    while lo > 1e-6 * hi and tartar_cell_count(L, L, lo, k) <= max_cells:
        lo /= 2
    for _ in range(40):
        mid = math.sqrt(lo * hi)
        if tartar_cell_count(L, L, mid, k) <= max_cells:
            hi = mid
        else:
            lo = mid
    return hi


def _tartar_bounds(V, p, name, cfg):
    L = math.sqrt(V)
    c = constants()["tartar_c"]
    if L <= 1:
        raise InfeasibleError("tartar: requires L > 1")
    return tartar_r_min(L, default_order(L), cfg.max_cells), c * L


def _tartar_start(V, cfg):
    L = math.sqrt(V)
    k = default_order(L)
    return {"r": constants().get("tartar_c2", 1.0) * L ** (k / (k + 1))}


FAMILIES: dict[str, Family] = {
    "ball": Family("ball", lambda cfg: f"two_well_{cfg.n}d", (), _ball, lambda V, cfg: {},
                   lambda V, p, n, cfg: None, small_volume=True),
    "lens21": Family("lens21", lambda cfg: "two_well", ("L",), _lens21,
                     lambda V, cfg: {"L": 2 * V / (2 * V) ** 0.6},
                     lambda V, p, n, cfg: (1.0, math.sqrt(2 * V))),
    "branch_rect21": Family("branch_rect21", lambda cfg: "two_well", ("L",), _branch21,
                            lambda V, cfg: {"L": V**0.4},
                            lambda V, p, n, cfg: (1.0, math.sqrt(V))),
    "branch_rect_nd": Family("branch_rect_nd", lambda cfg: "two_well_3d", ("L",), _branch3,
                             lambda V, cfg: {"L": V**0.25},
                             lambda V, p, n, cfg: (1.0, V ** (1 / 3))),
    "diamond_nd": Family("diamond_nd", lambda cfg: f"symmetric_pair_{cfg.n}d", ("L",), _diamond,
                         lambda V, cfg: ({"L": 2 * V / (2 * V) ** 0.6} if cfg.n == 2
                                         else {"L": 6 * V / (6 * V) ** 0.75}),
                         lambda V, p, n, cfg: ((1e-3 * math.sqrt(2 * V), math.sqrt(2 * V)) if cfg.n == 2
                                               else (1e-3 * (6 * V) ** (1 / 3), (6 * V) ** (1 / 3)))),
    "lens_branch_4w": Family("lens_branch_4w", lambda cfg: "four_well_2d", ("L", "rho"), _lens_branch,
                             lambda V, cfg: {"L": V ** (3 / 7),
                                             "rho": V ** (2 / 7) / lens_branch_r_max(V ** (3 / 7), 2 * V ** (4 / 7))},
                             lambda V, p, n, cfg: (1.0, math.sqrt(2 * V)) if n == "L" else (1e-3, 1.0)),
    "double_branch_4w": Family("double_branch_4w", lambda cfg: "four_well_2d", ("L",), _double_branch,
                               lambda V, cfg: {"L": V ** (3 / 7)},
                               lambda V, p, n, cfg: (1.0, math.sqrt(V))),
    "tartar_k": Family("tartar_k", lambda cfg: "tartar", ("r",), _tartar, _tartar_start, _tartar_bounds),
}


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}") from None


# -------------------------------------------------------------- optimiser


def golden_section(f: Callable[[float], float], a: float, b: float, steps: int):
    """Minimise ``f`` on ``[a, b]`` with ``steps`` golden-section reductions; returns ``(x, f(x))``."""
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(steps):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass
class Optimum:
    family: str
    V: float
    params: dict
    energy: EnergyBreakdown
    admissible: bool
    evaluations: int
    at_edge: list = field(default_factory=list)  # parameters whose optimum sits on the search window edge


def _inset(lo, hi):
    # open interval in log space, kept away from the degenerate endpoints
    llo, lhi = math.log(lo), math.log(hi)
    eps = 1e-6 * max(1.0, lhi - llo)
    return llo + eps, lhi - eps


def optimize_params(family: str, V: float, cfg: OptimizerConfig | None = None) -> Optimum:
    """Coordinate descent of golden-section searches in log space, exact energy as objective."""
    cfg = cfg or OptimizerConfig()
    fam = get_family(family)
    if V <= 0:
        raise ValueError("V must be positive")
    if V <= 1 and not fam.small_volume:
        raise InfeasibleError(f"{family}: V={V} is outside the large-volume regime V > 1")
    cache: dict = {}

    def energy(p):
        key = tuple(round(p[k], 12) for k in fam.free)
        if key not in cache:
            try:
                cache[key] = exact_energy(fam.build(V, p, cfg).scene, check=False).total
            except ConstructionError:
                cache[key] = math.inf
        return cache[key]

    p = dict(fam.start(V, cfg))
    bracket = {}
    for name in fam.free:
        lo, hi = fam.bounds(V, p, name, cfg)
        if not lo < hi:
            raise InfeasibleError(f"{family}: empty range for {name} at V={V} ({lo:.4g}, {hi:.4g})")
        a, b = _inset(lo, hi)
        p[name] = math.exp(min(max(math.log(p[name]), a), b))
        bracket[name] = (p[name] / cfg.bracket, p[name] * cfg.bracket)
    best = energy(p)
    edge = set()

    def window(name):
        lo, hi = fam.bounds(V, p, name, cfg)
        lo, hi = max(lo, bracket[name][0]), min(hi, bracket[name][1])
        return (None, None) if not lo < hi else _inset(lo, hi)

    for _ in range(cfg.rounds if fam.free else 0):
        before = best
        for name in fam.free:
            a, b = window(name)
            if a is None:
                continue

            def f(x, name=name):
                q = dict(p)
                q[name] = math.exp(x)
                return energy(q)

            x, fx = golden_section(f, a, b, cfg.steps)
            if fx < best:
                best, p[name] = fx, math.exp(x)
        if not best < before:
            break
    for name in fam.free:
        a, b = window(name)
        lp = math.log(p[name])
        if a is not None and min(lp - a, b - lp) < 1e-3 * (b - a):
            edge.add(name)
    if not math.isfinite(best):
        raise InfeasibleError(f"{family}: no admissible parameters found at V={V}")
    con = fam.build(V, p, cfg)
    ok = True
    if cfg.check:
        try:
            eb = exact_energy(con.scene, check=True)
        except AdmissibilityError:
            ok = False
            eb = exact_energy(con.scene, check=False)
    else:
        eb = exact_energy(con.scene, check=False)
    params = dict(p)
    params.update({k: v for k, v in con.params.values.items() if isinstance(v, (int, float)) and k not in params})
    return Optimum(family, V, params, eb, ok, len(cache), sorted(edge))


# ---------------------------------------------------------------- sweeps


@dataclass
class Fit:
    model: str
    slope: float
    intercept: float
    r2: float
    residual_max: float
    points: int


@dataclass
class ScalingReport:
    family: str
    wellset: str
    rows: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def V(self) -> np.ndarray:
        return np.array([r["V"] for r in self.rows], float)

    @property
    def E(self) -> np.ndarray:
        return np.array([r["E_total"] for r in self.rows], float)

    def column(self, name: str) -> np.ndarray:
        return np.array([r["params"][name] for r in self.rows], float)

    def param_names(self) -> list[str]:
        names = set()
        for r in self.rows:
            names |= set(r["params"])
        return sorted(names)

    def write_csv(self, path) -> Path:
        path = Path(path)
        names = self.param_names()
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["V"] + names + ["E_el", "E_surf", "E_total", "admissible"])
            for r in self.rows:
                w.writerow([repr(float(r["V"]))] + [repr(r["params"].get(k, "")) for k in names]
                           + [repr(r["E_el"]), repr(r["E_surf"]), repr(r["E_total"]), int(r["admissible"])])
        return path

    def fit_json(self) -> str:
        return json.dumps({"family": self.family, "wellset": self.wellset,
                           "fits": [asdict(f) for f in self.fits], "failures": self.failures},
                          indent=2, sort_keys=True)

    def write(self, directory, stamp: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        base = directory / f"{self.family}_{self.wellset}_{stamp}"
        csv_path = self.write_csv(base.with_suffix(".csv"))
        json_path = base.with_suffix(".fit.json")
        json_path.write_text(self.fit_json() + "\n")
        return csv_path, json_path


def _row(args):
    family, V, cfg = args
    try:
        o = optimize_params(family, V, cfg)
    except (InfeasibleError, ConstructionError) as e:
        return {"V": V, "error": str(e)}
    return {"V": V, "params": o.params, "E_el": o.energy.elastic, "E_surf": o.energy.surface,
            "E_total": o.energy.elastic + o.energy.surface, "admissible": o.admissible, "at_edge": o.at_edge}


def sweep(family: str, V_grid, cfg: OptimizerConfig | None = None, jobs: int = 1,
          strict: bool = True) -> ScalingReport:
    """One optimised row per volume; rows are evaluated concurrently when ``jobs > 1``."""
    cfg = cfg or OptimizerConfig()
    fam = get_family(family)
    grid = [float(v) for v in V_grid]
    if not grid:
        raise ValueError("empty V grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("V grid must be strictly increasing")
    if not (all(v > 1 for v in grid) or (fam.small_volume and all(0 < v <= 1 for v in grid))):
        raise ValueError("V grid must lie entirely in V > 1 (or entirely in (0, 1] for the ball)")
    tasks = [(family, v, cfg) for v in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            out = list(ex.map(_row, tasks))
    else:
        out = [_row(t) for t in tasks]
    rep = ScalingReport(family, fam.wellset(cfg))
    for r in out:
        if "error" in r:
            if strict:
                raise InfeasibleError(f"V={r['V']}: {r['error']}")
            rep.failures.append(r)
        else:
            rep.rows.append(r)
    return rep


# ------------------------------------------------------------------ fits


def _ols(x, y) -> tuple[float, float, float, float]:
    A = np.column_stack([x, np.ones_like(x)])
    (s, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (s * x + b)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((res**2).sum()) / ss if ss > 0 else 1.0
    return float(s), float(b), r2, float(np.abs(res).max())


def _arrays(data):
    if isinstance(data, ScalingReport):
        return data.V, data.E
    V, E = data
    return np.asarray(V, float), np.asarray(E, float)


def fit_power_law(data, V_min: float | None = None, V_max: float | None = None) -> Fit:
    """OLS of ``log E`` on ``log V`` over the rows with ``V_min <= V <= V_max``."""
    V, E = _arrays(data)
    keep = np.ones(len(V), bool)
    if V_min is not None:
        keep &= V >= V_min
    if V_max is not None:
        keep &= V <= V_max
    if keep.sum() < 4:
        raise InsufficientDataError(f"power-law fit needs at least 4 points, got {int(keep.sum())}")
    s, b, r2, rm = _ols(np.log(V[keep]), np.log(E[keep]))
    return Fit("power", s, b, r2, rm, int(keep.sum()))


def fit_stretched_log(data) -> Fit:
    """OLS of ``log(V / E)`` on ``sqrt(log V)``; the slope is the constant ``C``."""
    V, E = _arrays(data)
    if len(V) < 5:
        raise InsufficientDataError(f"stretched-log fit needs at least 5 points, got {len(V)}")
    if np.any(V <= 1):
        raise ValueError("stretched-log fit needs V > 1")
    s, b, r2, rm = _ols(np.sqrt(np.log(V)), np.log(V / E))
    return Fit("stretched_log", s, b, r2, rm, len(V))


def compare_models(data) -> dict:
    """R^2 of ``log(V/E)`` regressed on ``sqrt(log V)`` versus on ``log V``.

    Both regressions share the target, so the two coefficients of determination
    are directly comparable; the ``log V`` regressor is the power-law model.
    """
    V, E = _arrays(data)
    y = np.log(V / E)
    return {"stretched_log": _ols(np.sqrt(np.log(V)), y)[2], "power": _ols(np.log(V), y)[2]}


# ------------------------------------------------------------ predictions

_FAMILY_KEYS = {
    "lens21": (2, 1), "branch_rect21": (2, 1), "lens_branch_4w": (2, 2), "double_branch_4w": (2, 2),
}


def predicted_scaling(key=None, n: int | None = None, m: int | None = None) -> dict:
    """Piecewise exponent table ``{V <= 1, V > 1, eps-exponent}``.

    ``key`` is a family name, ``"one_plus_one"`` (with ``n``) or ``None`` with
    ``(n, m)``; the eps-exponent is ``n (1 - V-exponent)``.
    """
    status = "theorem"
    if key in _FAMILY_KEYS:
        n, m = _FAMILY_KEYS[key]
        e = lower_exponent(n, m)
    elif key in ("diamond_nd", "branch_rect_nd"):
        n = n or (3 if key == "branch_rect_nd" else 2)
        e = lower_exponent(n, 1)
    elif key == "one_plus_one":
        if n is None:
            raise ValueError("one_plus_one needs n")
        e = Fraction(2 * n - 2, 2 * n - 1)
    elif key in ("tartar_k", "tartar"):
        return {"V<=1": Fraction(1, 2), "V>1": "V exp(-C sqrt(log V))", "eps_exponent": None,
                "status": "theorem"}
    elif key == "ball":
        n = n or 2
        return {"V<=1": Fraction(n - 1, n), "V>1": None, "eps_exponent": None, "status": "theorem"}
    elif key is None and n is not None and m is not None:
        e = lower_exponent(n, m)
        if m == n and n >= 4:
            status = "conjecture"
    else:
        raise ValueError(f"unknown prediction key {key!r}")
    return {"V<=1": Fraction(n - 1, n), "V>1": e, "eps_exponent": n * (1 - e), "status": status,
            "n": n}
