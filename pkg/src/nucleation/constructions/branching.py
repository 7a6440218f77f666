"""Period-halving branching blocks and the rectangular constructions built from them.

A block lives on ``[0, l] x [0, h]`` in local coordinates ``(s, t)``: ``s`` runs
along the laminate interfaces, ``t`` along the laminate normal.  The
displacement is ``u = G x + b + psi(s, t) e_normal`` with ``psi = 0`` on the
block boundary and ``d_t psi`` equal to ``(1-w) d`` on the first phase and
``-w d`` on the second, ``d`` being the jump of the normal diagonal entry.
Periods halve from the centre line towards both short ends; a last layer
interpolates linearly down to ``psi = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..geometry import SceneBuilder
from ..wells import WellSet, make_well_set
from .common import Construction, ConstructionError, ConstructionParams, constants, require

FIRST, SECOND, CUT = 0, 1, 2


@dataclass
class PsiCells:
    """Convex cells in local ``(s, t)`` coordinates with ``psi = a s + b t + c`` on each."""

    polys: list = field(default_factory=list)
    coef: list = field(default_factory=list)
    tag: list = field(default_factory=list)

    def add(self, poly, coef, tag):
        self.polys.append(np.asarray(poly, float))
        self.coef.append(tuple(float(c) for c in coef))
        self.tag.append(tag)

    def add_nodal(self, poly, values, tag=CUT):
        poly = np.asarray(poly, float)
        A = np.column_stack([poly[:3], np.ones(3)])
        self.add(poly, np.linalg.solve(A, np.asarray(values[:3], float)), tag)

    def extend(self, other: "PsiCells"):
        self.polys += other.polys
        self.coef += other.coef
        self.tag += other.tag

    def mirrored(self, length: float) -> "PsiCells":
        """Reflect ``s -> length - s``."""
        out = PsiCells()
        for p, (a, b, c), tg in zip(self.polys, self.coef, self.tag):
            q = p.copy()
            q[:, 0] = length - q[:, 0]
            out.add(q[::-1], (-a, b, c + a * length), tg)
        return out

    def __len__(self):
        return len(self.polys)


@dataclass
class BlockLayout:
    generations: int
    lengths: list
    periods: list
    cutoff_length: float


def _halving_cells(out: PsiCells, s0, a, t0, p, w, d):
    s1 = s0 + a
    c = p * (1 + w) / 2
    wp = w * p
    out.add([(s0, t0), (s1, t0), (s1, t0 + wp / 2), (s0, t0 + wp)],
            (0.0, (1 - w) * d, -(1 - w) * d * t0), FIRST)
    out.add([(s0, t0 + wp), (s1, t0 + wp / 2), (s1, t0 + p / 2), (s0, t0 + c)],
            (-d * wp / (2 * a), -w * d, d * wp * (1 + s0 / (2 * a)) + w * d * t0), SECOND)
    out.add([(s0, t0 + c), (s1, t0 + p / 2), (s1, t0 + c)],
            (0.0, (1 - w) * d, -(1 - w) * d * (p / 2 + t0)), FIRST)
    out.add([(s0, t0 + c), (s1, t0 + c), (s1, t0 + p), (s0, t0 + p)],
            (0.0, -w * d, w * d * (p + t0)), SECOND)


def _cutoff_cells(out: PsiCells, s0, s1, t0, p, w, d):
    top = (1 - w) * d * w * p
    wp = w * p
    out.add_nodal([(s0, t0), (s1, t0), (s0, t0 + wp)], [0, 0, top])
    out.add_nodal([(s0, t0 + wp), (s1, t0), (s1, t0 + p)], [top, 0, 0])
    out.add_nodal([(s0, t0 + wp), (s1, t0 + p), (s0, t0 + p)], [top, 0, 0])


def branching_psi(length: float, height: float, w: float, d: float, periods: int = 1,
                  theta: float | None = None) -> tuple[PsiCells, BlockLayout]:
    """Cells of one branching block; ``w`` is the volume fraction of the first phase."""
    theta = constants()["branch_theta"] if theta is None else theta
    half = length / 2
    p = height / periods
    cells = PsiCells()
    s, rem, gen = half, half, 0
    lengths, pers = [], []
    while True:
        a = (1 - theta) * rem
        if a <= p:
            break
        for k in range(periods * 2**gen):
            _halving_cells(cells, s, a, k * p, p, w, d)
        lengths.append(a)
        pers.append(p)
        s += a
        rem -= a
        p /= 2
        gen += 1
    for k in range(periods * 2**gen):
        _cutoff_cells(cells, s, length, k * p, p, w, d)
    right = cells
    full = PsiCells()
    full.extend(right)
    full.extend(right.mirrored(length))
    return full, BlockLayout(gen, lengths, pers, length - s)


def _pair_axis(K: WellSet, P: int, Q: int) -> int:
    diff = np.flatnonzero(K.as_array()[P] != K.as_array()[Q])
    if len(diff) != 1:
        raise ConstructionError(f"wells {P} and {Q} are not rank-one connected with an axis normal")
    return int(diff[0])


def embed_psi(builder: SceneBuilder, cells: PsiCells, origin, frame, normal_axis: int,
              G, b, P: int, Q: int):
    """Place local cells in a planar scene with ``u = G x + b + psi e_normal``.

    ``frame`` holds the images of the local ``s`` and ``t`` unit vectors as
    columns, so sheared blocks are allowed.  Tags FIRST/SECOND map to ``P``/``Q``;
    cut cells take whichever of the two is closer to the diagonal of their gradient.
    """
    G = np.asarray(G, float)
    b = np.asarray(b, float)
    origin = np.asarray(origin, float)
    F = np.asarray(frame, float)
    Finv_T = np.linalg.inv(F).T
    diagP = builder.wells.as_array()[P]
    diagQ = builder.wells.as_array()[Q]
    e_n = np.eye(2)[normal_axis]
    for poly, (al, be, ga), tag in zip(cells.polys, cells.coef, cells.tag):
        X = origin + poly @ F.T
        grad = Finv_T @ np.array([al, be])
        M = G + np.outer(e_n, grad)
        off = b + e_n * (ga - grad @ origin)
        if tag == FIRST:
            lab, cut = P, False
        elif tag == SECOND:
            lab, cut = Q, False
        else:
            dg = np.diag(M)
            lab = P if np.sum((dg - diagP) ** 2) <= np.sum((dg - diagQ) ** 2) else Q
            cut = True
        builder.add(X, M, off, lab, cut)


def _oriented(w: float, d: float, P: int, Q: int):
    """Put the minority phase first: the wedge layout charges ``w^2 (1-w)``."""
    if w > 0.5:
        return 1 - w, -d, Q, P
    return w, d, P, Q


def add_block(builder: SceneBuilder, origin, length: float, height: float, long_axis: int,
              normal_axis: int, G, b, P: int, Q: int, w: float, periods: int = 1, theta=None,
              check_aspect: bool = True, shear: float = 0.0) -> BlockLayout:
    """Add a block at ``origin``; ``shear`` tilts its short sides (``dx_long/dx_normal``)."""
    K = builder.wells
    d = float(K.as_array()[P][normal_axis] - K.as_array()[Q][normal_axis])
    if check_aspect and not length > 4 * height / periods:
        raise ConstructionError(f"branching block needs l > 4 h (per period): l={length:.6g}, "
                                f"h={height / periods:.6g}")
    w1, d1, P1, Q1 = _oriented(w, d, P, Q)
    cells, layout = branching_psi(length, height, w1, d1, periods, theta)
    F = np.zeros((2, 2))
    F[long_axis, 0] = 1.0
    F[normal_axis, 1] = 1.0
    F[long_axis, 1] = shear
    embed_psi(builder, cells, origin, F, normal_axis, G, b, P1, Q1)
    return layout


def branching_block(K: WellSet, P: int, Q: int, w: float, length: float, height: float,
                    periods: int = 1, theta=None) -> Construction:
    """Stand-alone block equal to ``B x`` on its boundary, ``B = w P + (1-w) Q``.

    The block is ``[0, length]`` along the interfaces and ``[0, height]`` along the
    laminate normal (the axis where ``P`` and ``Q`` differ).
    """
    require(0 < w < 1, "branching_block: weight must lie in (0,1)")
    na = _pair_axis(K, P, Q)
    require(K.n == 2, "branching_block: stand-alone blocks are two-dimensional")
    sa = 1 - na
    B = np.diag(w * K.as_array()[P] + (1 - w) * K.as_array()[Q])
    bld = SceneBuilder(2, K)
    layout = add_block(bld, np.zeros(2), length, height, sa, na, B, np.zeros(2), P, Q, w, periods, theta)
    ext = np.zeros((4, 2))
    ext[1, sa] = length
    ext[2, sa], ext[2, na] = length, height
    ext[3, na] = height
    scene = bld.build(ext, meta={"family": "branching_block", "boundary_gradient": B.tolist()})
    params = ConstructionParams("branching_block", {"l": length, "h": height, "P": P, "Q": Q, "w": w,
                                                    "periods": periods}, length * height)
    return Construction(scene, params, height**3 / length + length, "C_block*(h^3/l + l)",
                        {"layout": layout, "B": B})


def construct_branch_rect21(lam=Fraction(1, 2), L: float = 2.0, H: float = 16.0) -> Construction:
    """Rectangle ``[0,L] x [0,H]`` filled with ``N = ceil(4L/H)`` branching periods.

    The two-well laminate has normal ``e_1``; periods are stacked along ``x_1``
    and refine towards ``x_2 = 0`` and ``x_2 = H``.
    """
    require(H > L > 1, f"branch_rect21: requires H > L > 1, got L={L}, H={H}")
    K = make_well_set("two_well", Fraction(lam))
    N = math.ceil(4 * L / H)
    bld = SceneBuilder(2, K)
    lam_f = float(lam)
    layout = add_block(bld, np.zeros(2), H, L, 1, 0, np.zeros((2, 2)), np.zeros(2), 1, 2, 1 - lam_f, N,
                       check_aspect=False)
    scene = bld.build(np.array([(0, 0), (L, 0), (L, H), (0, H)]), meta={"family": "branch_rect21"})
    return Construction(scene, ConstructionParams("branch_rect21", {"lambda": str(lam), "L": L, "H": H, "N": N},
                                                  L * H),
                        L**3 / H + H, "c*(L^3/H + H)", {"layout": layout})


def construct_branch_rect_nd(n: int = 3, lam=Fraction(1, 2), L: float = 2.0, H: float = 16.0) -> Construction:
    """Three-dimensional extrusion ``u(x) = u2(x_1, rho(x_2, x_3))``.

    ``rho = max(|x_2 - H/2|, |x_3 - H/2|) + H/2`` so only the upper half of the
    planar construction is used, once per pyramid sector of the square section.
    """
    require(n == 3, f"branch_rect_nd: unsupported dimension {n}")
    require(H > L > 1, f"branch_rect_nd: requires H > L > 1, got L={L}, H={H}")
    K2 = make_well_set("two_well", Fraction(lam))
    K3 = make_well_set("two_well", Fraction(lam), n=3)
    N = math.ceil(4 * L / H)
    lam_f = float(lam)
    w1, d1, P1, Q1 = _oriented(1 - lam_f, -1.0, 1, 2)
    cells, layout = branching_psi(H, L, w1, d1, N)
    c = H / 2
    bld = SceneBuilder(3, K3)
    diagP, diagQ = K2.as_array()[P1], K2.as_array()[Q1]
    for poly, (al, be, ga), tag in zip(cells.polys, cells.coef, cells.tag):
        # local s runs along x_2 of the planar picture, t along x_1
        if poly[:, 0].min() < c - 1e-12 * H:
            continue
        x1 = poly[:, 1]
        tp = poly[:, 0] - c
        # planar psi = al * y + be * x1 + ga with y = rho
        if tag == CUT:
            lab = P1 if (be - diagP[0]) ** 2 <= (be - diagQ[0]) ** 2 else Q1
        else:
            lab = P1 if tag == FIRST else Q1
        for axis, sgn in ((1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)):
            other = 3 - axis
            pts = []
            for xa, ta in zip(x1, tp):
                for sig in ((0.0,) if ta <= 1e-14 * H else (-ta, ta)):
                    X = np.zeros(3)
                    X[0] = xa
                    X[axis] = c + sgn * ta
                    X[other] = c + sig
                    pts.append(X)
            pts = np.unique(np.round(np.array(pts), 14), axis=0)
            M = np.zeros((3, 3))
            M[0, 0] = be
            M[0, axis] = al * sgn
            off = np.zeros(3)
            off[0] = ga + al * (c - sgn * c)
            bld.add(pts, M, off, lab, tag == CUT)
    box = np.array([[x, y, z] for x in (0, L) for y in (0, H) for z in (0, H)], float)
    scene = bld.build(box, meta={"family": "branch_rect_nd"})
    return Construction(scene, ConstructionParams("branch_rect_nd", {"n": 3, "lambda": str(lam), "L": L, "H": H,
                                                                     "N": N}, L * H * H),
                        (L**3 / H + H) * H, "c*(L^3/H + H)*H^(n-2)", {"layout": layout})
