"""Command-line front end: ``nucleation <command> [options]``.

Usage errors exit with status 2, failed preconditions (construction, format,
relation or infeasibility errors) with status 1; every message names the
violated condition.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from . import constructions as C
from .energy import EnergyBreakdown, exact_energy, spectral_energy
from .fourier_lab import (Cone, commutator_probe, cone_residual, low_frequency_mass, nyquist)
from .geometry import FieldFormatError, GeometryError, rasterize, read_field, write_field
from .io import UnsupportedRenderError, read_scene, write_scene, write_svg
from .scaling import (FAMILIES, InfeasibleError, InsufficientDataError, OptimizerConfig, ScalingReport,
                      compare_models, fit_power_law, fit_stretched_log, predicted_scaling, sweep)
from .wells import (FAMILIES as WELL_FAMILIES, WellError, lamination_order_of_zero, make_well_set,
                    standard_relations)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything that determines a run; serialises to and from JSON."""

    command: str = ""
    family: str | None = None
    params: dict = field(default_factory=dict)
    V: float | None = None
    grid: list = field(default_factory=list)
    resolution: int | None = None
    padding: float = 2.0
    rounds: int = 3
    steps: int = 20
    max_cells: int = 200_000
    outputs: dict = field(default_factory=dict)
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


def _frac(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {s!r}") from None


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"{args.family} requires --{', --'.join(missing)}")


def build_construction(args):
    fam = args.family
    lam = args.lam if args.lam is not None else Fraction(1, 2)
    if fam == "ball":
        _need(args, "V")
        K = make_well_set("two_well", lam, n=args.n)
        return C.construct_ball(K, args.V)
    if fam == "lens21":
        _need(args, "L", "H")
        return C.construct_lens21(lam, args.L, args.H)
    if fam == "diamond_nd":
        _need(args, "L", "H")
        return C.construct_diamond_nd(args.n, args.L, args.H)
    if fam == "branch_rect21":
        _need(args, "L", "H")
        return C.construct_branch_rect21(lam, args.L, args.H)
    if fam == "branch_rect_nd":
        _need(args, "L", "H")
        return C.construct_branch_rect_nd(3, lam, args.L, args.H)
    if fam == "lens_branch_4w":
        _need(args, "L", "H", "r")
        return C.construct_lens_branch_4w(args.L, args.H, args.r)
    if fam == "double_branch_4w":
        _need(args, "L", "H")
        return C.construct_double_branch_4w(args.L, args.H, args.theta if args.theta else 1 / 3)
    if fam == "tartar_k":
        _need(args, "L", "H", "r")
        return C.construct_tartar(args.L, args.H, args.r, args.k)
    raise UsageError(f"unknown family {fam!r}")


def _print(obj):
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def _eb_dict(eb: EnergyBreakdown) -> dict:
    return json.loads(eb.to_json())


# ---------------------------------------------------------------- commands


def cmd_construct(args) -> int:
    if args.svg and (args.family in ("branch_rect_nd",) or (args.family in ("ball", "diamond_nd") and args.n == 3)):
        raise UnsupportedRenderError("SVG rendering is two-dimensional only; drop --svg for 3D families")
    if args.out and args.field and Path(args.out).resolve() == Path(args.field).with_suffix(".json").resolve():
        raise UsageError("--out collides with the field's .json sidecar; choose another scene path")
    con = build_construction(args)
    eb = exact_energy(con.scene, eps=args.eps)
    if args.out:
        write_scene(con.scene, args.out)
    if args.field:
        if not args.resolution:
            raise UsageError("--field requires --resolution")
        write_field(rasterize(con.scene, args.resolution, args.padding), args.field)
    if args.svg:
        write_svg(con.scene, args.svg)
    _print(_eb_dict(eb))
    return 0


def cmd_energy(args) -> int:
    scene = read_scene(args.scene)
    eb = exact_energy(scene, eps=args.eps)
    out = {"exact": _eb_dict(eb)}
    if args.resolution:
        out["spectral"] = _eb_dict(spectral_energy(rasterize(scene, args.resolution, args.padding), scene))
    _print(out)
    return 0


def _grid(args) -> list[float]:
    if args.grid:
        try:
            items = args.grid if isinstance(args.grid, list) else args.grid.split(",")
            vals = [float(x) for x in items if str(x).strip()]
        except ValueError:
            raise UsageError(f"bad --grid {args.grid!r}") from None
    elif args.decades:
        try:
            a, b = (int(x) for x in args.decades.split(":"))
        except ValueError:
            raise UsageError(f"bad --decades {args.decades!r}, expected lo:hi") from None
        vals = [10.0**e for e in range(a, b + 1)]
    else:
        vals = []
    if not vals:
        raise UsageError("empty V grid: give --grid or --decades")
    return vals


def _fits(rep: ScalingReport, model: str):
    if model in ("power", "both"):
        rep.fits.append(fit_power_law(rep))
    if model in ("stretched", "both"):
        rep.fits.append(fit_stretched_log(rep))


def cmd_sweep(args) -> int:
    grid = _grid(args)
    cfg = OptimizerConfig(rounds=args.rounds, steps=args.steps, lam=str(args.lam or Fraction(1, 2)), n=args.n,
                          max_cells=args.max_cells, seed=args.seed)
    rep = sweep(args.family, grid, cfg, jobs=args.jobs, strict=False)
    if len(rep.rows) and args.fit != "none":
        try:
            _fits(rep, args.fit)
        except InsufficientDataError as e:
            rep.failures.append({"fit": str(e)})
    stamp = time.strftime("%Y%m%dT%H%M%S")
    csv_path, json_path = rep.write(args.out_dir, stamp)
    out = json.loads(rep.fit_json())
    out["csv"] = str(csv_path)
    if args.fit in ("stretched", "both") and len(rep.rows) >= 2:
        out["model_comparison"] = compare_models(rep)
    _print(out)
    return 0


def _read_csv(path) -> ScalingReport:
    import csv

    rows = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.append({"V": float(r["V"]), "params": {}, "E_el": float(r["E_el"]),
                         "E_surf": float(r["E_surf"]), "E_total": float(r["E_total"]),
                         "admissible": r["admissible"] == "1"})
    return ScalingReport(Path(path).stem, "", rows)


def cmd_fit(args) -> int:
    rep = _read_csv(args.csv)
    if args.model == "power":
        out = asdict(fit_power_law(rep, args.vmin, args.vmax))
    else:
        out = asdict(fit_stretched_log(rep))
        out["model_comparison"] = compare_models(rep)
    _print(out)
    return 0


def cmd_diagnose(args) -> int:
    try:
        f = read_field(args.field)
    except FileNotFoundError:
        raise FieldFormatError(f"field file not found: {args.field}") from None
    radius = args.mu_prime if args.mu_prime else nyquist(f)
    row = {"field_id": Path(args.field).name, "mu": args.mu, "mu_prime": radius, "axis": args.axis}
    if args.kind == "cones":
        if args.mu2 is None:
            raise UsageError("cones requires --mu2")
        cone = Cone(args.axis, args.mu, radius)
        res = cone_residual(f, cone, args.component)
        row.update({"mu2": args.mu2, "residual": res})
        if args.scene:
            eb = exact_energy(read_scene(args.scene))
            rhs = args.mu**-2 * eb.elastic + args.mu2**-1 * eb.surface
            row.update({"rhs": rhs, "fitted_constant": res / rhs if rhs else None})
    elif args.kind == "lowfreq":
        mass, bound = low_frequency_mass(f, Cone(args.axis, args.mu, radius), args.component)
        row.update({"mass": mass, "bound": bound, "holds": mass <= bound})
    else:
        if not args.wells:
            raise InfeasibleError("commutator: no verified relation without --wells (relation precheck)")
        K = make_well_set(args.wells, n=f.n)
        rels = [r for r in standard_relations(K) if not args.relation or r.name == args.relation]
        if not rels:
            raise InfeasibleError(f"commutator: no verified relation {args.relation or ''} for {K.name}")
        if args.mu2 is None:
            raise UsageError("commutator requires --mu2")
        rep = commutator_probe(f, rels[0], args.mu, radius, args.mu2, gamma=args.gamma, K=K)
        row.update(json.loads(rep.to_json()))
    _print(row)
    return 0


def cmd_predict(args) -> int:
    if args.family:
        if args.family not in FAMILIES and args.family not in ("one_plus_one", "tartar"):
            raise UsageError(f"unknown family {args.family!r}")
        tab = predicted_scaling(args.family, n=args.n)
    elif args.n is not None and args.m is not None:
        tab = predicted_scaling(None, n=args.n, m=args.m)
    else:
        raise UsageError("predict needs --family or both --n and --m")
    _print({k: (str(v) if isinstance(v, Fraction) else v) for k, v in tab.items()})
    return 0


def cmd_wells(args) -> int:
    K = make_well_set(args.family, args.lam, n=args.n)
    rels = standard_relations(K)
    order = lamination_order_of_zero(K, args.max_order)
    doc = json.loads(K.to_json(rels))
    doc["lamination_order_of_zero"] = order if order is not None else f"not reached({args.max_order})"
    _print(doc)
    return 0


# ------------------------------------------------------------------ parser


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nucleation", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON RunConfig; its values override the flags")
    sub = p.add_subparsers(dest="command", required=True)

    def geom(sp):
        sp.add_argument("--family", required=True, choices=sorted(FAMILIES))
        sp.add_argument("--lambda", dest="lam", type=_frac)
        sp.add_argument("--L", type=float)
        sp.add_argument("--H", type=float)
        sp.add_argument("--r", type=float)
        sp.add_argument("--k", type=int)
        sp.add_argument("--n", type=int, default=2, choices=(2, 3))
        sp.add_argument("--V", type=float)
        sp.add_argument("--theta", type=float)

    c = sub.add_parser("construct", help="build a construction and print its exact energy")
    geom(c)
    c.add_argument("--eps", type=float, default=1.0)
    c.add_argument("--out", help="scene JSON path")
    c.add_argument("--field", help="NUCF field path (needs --resolution)")
    c.add_argument("--resolution", type=int)
    c.add_argument("--padding", type=float, default=2.0)
    c.add_argument("--svg", help="SVG path (2D only)")
    c.set_defaults(func=cmd_construct)

    e = sub.add_parser("energy", help="exact (and optionally spectral) energy of a scene JSON")
    e.add_argument("scene")
    e.add_argument("--eps", type=float, default=1.0)
    e.add_argument("--resolution", type=int)
    e.add_argument("--padding", type=float, default=2.0)
    e.set_defaults(func=cmd_energy)

    s = sub.add_parser("sweep", help="optimised volume sweep with CSV and fit JSON output")
    s.add_argument("--family", required=True, choices=sorted(FAMILIES))
    s.add_argument("--grid", help="comma separated volumes")
    s.add_argument("--decades", help="lo:hi, volumes 10^lo .. 10^hi")
    s.add_argument("--fit", choices=("power", "stretched", "both", "none"), default="power")
    s.add_argument("--lambda", dest="lam", type=_frac)
    s.add_argument("--n", type=int, default=2, choices=(2, 3))
    s.add_argument("--rounds", type=int, default=3)
    s.add_argument("--steps", type=int, default=20)
    s.add_argument("--max-cells", type=int, default=200_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_sweep)

    f = sub.add_parser("fit", help="refit a sweep CSV")
    f.add_argument("csv")
    f.add_argument("--model", choices=("power", "stretched"), default="power")
    f.add_argument("--vmin", type=float)
    f.add_argument("--vmax", type=float)
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("diagnose", help="Fourier diagnostics on a NUCF field")
    d.add_argument("kind", choices=("cones", "lowfreq", "commutator"))
    d.add_argument("field")
    d.add_argument("--mu", type=float, required=True)
    d.add_argument("--mu2", type=float)
    d.add_argument("--mu-prime", type=float)
    d.add_argument("--axis", type=int, default=0)
    d.add_argument("--component", type=int)
    d.add_argument("--gamma", type=float, default=0.5)
    d.add_argument("--wells")
    d.add_argument("--relation")
    d.add_argument("--scene", help="scene JSON for the energy side of the cone inequality")
    d.set_defaults(func=cmd_diagnose)

    r = sub.add_parser("predict", help="predicted exponent table")
    r.add_argument("--family")
    r.add_argument("--n", type=int)
    r.add_argument("--m", type=int)
    r.set_defaults(func=cmd_predict)

    w = sub.add_parser("wells", help="well set, relations and lamination order of zero")
    w.add_argument("--family", required=True, choices=WELL_FAMILIES)
    w.add_argument("--lambda", dest="lam", type=_frac)
    w.add_argument("--n", type=int, default=2)
    w.add_argument("--max-order", type=int, default=10)
    w.set_defaults(func=cmd_wells)
    return p


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            parser.error(f"cannot read config {args.config}: {e}")
        flat = {k: v for k, v in cfg.items() if k not in ("params", "outputs")}
        flat.update(cfg.get("params", {}))
        flat.update(cfg.get("outputs", {}))
        sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[args.command]
        types = {a.dest: a.type for a in sub._actions if a.type is not None}
        for k, v in flat.items():
            if hasattr(args, k) and v is not None and k not in ("command", "func"):
                try:
                    setattr(args, k, types[k](v) if k in types and not isinstance(v, list) else v)
                except (argparse.ArgumentTypeError, TypeError, ValueError) as e:
                    parser.error(f"config value {k}={v!r}: {e}")
    try:
        return args.func(args)
    except UsageError as e:
        parser.error(str(e))
    except (C.ConstructionError, GeometryError, FieldFormatError, UnsupportedRenderError, InfeasibleError,
            InsufficientDataError, WellError, ValueError) as e:
        sys.stderr.write(f"nucleation: error: {type(e).__name__}: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
