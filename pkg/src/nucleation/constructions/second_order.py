"""Second-order laminates for the planar four-well set.

Both constructions first build a macroscopic two-phase state between
``B1 = A1/3 + 2 A2/3 = diag(-1, 0)`` and ``B2 = A3/3 + 2 A4/3 = diag(1, 0)``
and then resolve each macroscopic phase by a fine laminate with normal ``e_2``.
"""

from __future__ import annotations

import numpy as np

from ..geometry import SceneBuilder
from ..wells import make_well_set, project_to_K0
from .branching import CUT, FIRST, add_block, branching_psi, embed_psi
from .common import Construction, ConstructionError, ConstructionParams, constants, require

PAIRS = {-1: (1, 2), 1: (3, 4)}  # side of x_1 -> (minority, majority) wells
WEIGHT = 1.0 / 3.0


def _k_label(K, M) -> int:
    """Nearest martensite well to the diagonal of ``M`` (austenite excluded)."""
    return project_to_K0(np.diag(np.diag(M)), K, wells_only=True)[0]


def lens_subdivision(L: float, H: float, r: float):
    """Slice heights ``h_j``, thicknesses ``r_j`` and widths ``l_j`` of the rectangles in T."""
    q = 1 - 2 * r / H
    hs, rs, ls = [0.0], [], []
    j = 0
    while True:
        rs.append(r * q**j)
        ls.append(L / 2 * q ** (j + 1))
        hs.append(hs[-1] + rs[-1])
        if not hs[j + 1] < (H - L) / 2:
            break
        j += 1
    return np.array(hs), np.array(rs), np.array(ls)


def construct_lens_branch_4w(L: float, H: float, r: float) -> Construction:
    """Rhombus ``conv{(+-L/2, 0), (0, +-H/2)}`` with branching rectangles along the long diagonal.

    In every quadrant the rectangles ``R_j = [-l_j, 0] x [h_j, h_j + r_j]`` (up to
    reflection) carry a branching block between the wells of that side, added
    to the affine macroscopic map ``w``; the rest of the quadrant keeps ``w``.
    """
    require(H > L > 1, f"lens_branch_4w: requires H > L > 1, got L={L}, H={H}")
    require(0 < r < H / 2, f"lens_branch_4w: requires 0 < r < H/2, got r={r}")
    K = make_well_set("four_well_2d")
    hs, rs, ls = lens_subdivision(L, H, r)
    bad = [j for j in range(len(rs)) if not ls[j] > 4 * rs[j]]
    if bad:
        raise ConstructionError(f"lens_branch_4w: aspect l_j > 4 r_j violated for generations {bad[:5]}"
                                f" (l_0/r_0 = {ls[0] / rs[0]:.4g})")
    bld = SceneBuilder(2, K)
    b0 = np.array([-L / 2, 0.0])
    top = hs[-1]

    def xh(y):
        return L / 2 * (1 - 2 * y / H)

    rem_area = 0.0
    for sx in (-1, 1):
        P, Q = PAIRS[sx]
        for sy in (-1, 1):
            G = np.array([[sx, sy * L / H], [0.0, 0.0]])
            lab = _k_label(K, G)

            def pt(x, y):
                return (sx * x, sy * y)

            for j in range(len(rs)):
                ylo, yhi = hs[j], hs[j + 1]
                x0 = min(0.0, sx * ls[j])
                y0 = min(sy * ylo, sy * yhi)
                add_block(bld, (x0, y0), ls[j], rs[j], 0, 1, G, b0, P, Q, WEIGHT)
                tri = [pt(xh(ylo), ylo), pt(ls[j], ylo), pt(ls[j], yhi)]
                bld.add(tri, G, b0, lab, True)
                rem_area += 0.5 * (xh(ylo) - ls[j]) * rs[j]
            tri = [pt(xh(top), top), pt(0.0, top), pt(0.0, H / 2)]
            bld.add(tri, G, b0, lab, True)
            rem_area += 0.5 * xh(top) * (H / 2 - top)
    domain = np.array([(-L / 2, 0), (0, -H / 2), (L / 2, 0), (0, H / 2)])
    scene = bld.build(domain, meta={"family": "lens_branch_4w"})
    bound = r * L + H + L**3 / H + r**2 * H / L + H * L / r
    return Construction(scene, ConstructionParams("lens_branch_4w", {"L": L, "H": H, "r": r}, L * H / 2),
                        bound, "c*(rL + H + L^3/H + r^2 H/L + HL/r)",
                        {"h": hs, "r_j": rs, "l_j": ls, "j0": len(rs) - 1,
                         "remainder_area_T": rem_area / 4})


# ------------------------------------------------------------ double branching


def _fill_piece(bld, K, poly_st, G, b, side, inner_coeff):
    """Resolve one macroscopic piece by horizontal sheared branching slabs.

    ``poly_st`` is the piece in global coordinates; its top and bottom edges are
    horizontal and its two sides are straight.  Slivers that cannot host a slab
    keep the macroscopic map and the nearest-well label.
    """
    P, Q = PAIRS[side]
    y = poly_st[:, 1]
    y0, y1 = y.min(), y.max()
    height = y1 - y0
    tol = 1e-12 * max(1.0, height)

    def sides(yy):
        # x-range of the piece at height yy
        xs = []
        m = len(poly_st)
        for i in range(m):
            (xa, ya), (xb, yb) = poly_st[i], poly_st[(i + 1) % m]
            if min(ya, yb) - tol <= yy <= max(ya, yb) + tol:
                if abs(yb - ya) <= tol:
                    xs += [xa, xb]
                else:
                    xs.append(xa + (yy - ya) * (xb - xa) / (yb - ya))
        return min(xs), max(xs)

    lo0, hi0 = sides(y0)
    lo1, hi1 = sides(y1)
    width = max(hi0 - lo0, hi1 - lo1)
    lab = _k_label(K, G)
    q = inner_coeff * width ** (2.0 / 3.0)
    N = int(max(1, round(height / q)))
    q = height / N
    m_lo = (lo1 - lo0) / height
    m_hi = (hi1 - hi0) / height
    for k in range(N):
        ya, yb = y0 + k * q, y0 + (k + 1) * q
        la, ha = lo0 + m_lo * (ya - y0), hi0 + m_hi * (ya - y0)
        lb, hb = lo0 + m_lo * (yb - y0), hi0 + m_hi * (yb - y0)
        slab_w = min(ha - la, hb - lb)
        if slab_w <= q:
            bld.add(_clean([(la, ya), (ha, ya), (hb, yb), (lb, yb)]), G, b, lab, True)
            continue
        add_block(bld, (la, ya), slab_w, q, 0, 1, G, b, P, Q, WEIGHT, check_aspect=False, shear=m_lo)
        # sliver between the sheared block and the right side
        sliver = _clean([(la + slab_w, ya), (ha, ya), (hb, yb), (lb + slab_w, yb)])
        if len(sliver) >= 3 and abs(ha - la - (hb - lb)) > 1e-9 * width:
            bld.add(sliver, G, b, lab, True)


def _clean(pts, tol=1e-12):
    out = []
    for p in pts:
        if not out or np.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) > tol * (1 + abs(p[0]) + abs(p[1])):
            out.append(p)
    if len(out) > 1 and np.hypot(out[0][0] - out[-1][0], out[0][1] - out[-1][1]) <= tol * (1 + abs(out[0][0])):
        out.pop()
    return np.array(out, float)


def construct_double_branch_4w(L: float, H: float, theta: float = 1.0 / 3.0,
                               inner_coeff: float | None = None) -> Construction:
    """Rectangle ``[0,L] x [0,H]``: outer branching between ``B1`` and ``B2``, inner branching inside.

    The outer tree has period ``L2^-j`` and band thickness proportional to
    ``(H/2) theta^j``; every outer piece is cut into horizontal slabs of
    thickness about ``inner_coeff * width^(2/3)``, each a sheared branching block.
    """
    require(1 / 4 < theta < 1 / 2, f"double_branch_4w: theta must lie in (1/4, 1/2), got {theta}")
    require(H > L > 1, f"double_branch_4w: requires H > L > 1, got L={L}, H={H}")
    K = make_well_set("four_well_2d")
    inner_coeff = constants().get("inner_period_coeff", 1.0) if inner_coeff is None else inner_coeff
    # outer laminate: first phase B1 (x_1 < 0 side wells), d = B1_11 - B2_11 = -2, equal weights
    cells, layout = branching_psi(H, L, 0.5, -2.0, 1, theta)
    bld = SceneBuilder(2, K)
    F = np.array([[0.0, 1.0], [1.0, 0.0]])  # local s -> x_2, t -> x_1
    outer = SceneBuilder(2, K)
    embed_psi(outer, cells, np.zeros(2), F, 0, np.zeros((2, 2)), np.zeros(2), 1, 3)
    for poly, M, off, tag in zip(outer.polys, outer.grads, outer.offsets, cells.tag):
        if tag == CUT:
            bld.add(poly, M, off, _k_label(K, M), True)
            continue
        side = -1 if tag == FIRST else 1
        _fill_piece(bld, K, poly, M, off, side, inner_coeff)
    domain = np.array([(0, 0), (L, 0), (L, H), (0, H)], float)
    scene = bld.build(domain, meta={"family": "double_branch_4w"})
    return Construction(scene, ConstructionParams("double_branch_4w",
                                                  {"L": L, "H": H, "theta": theta, "inner_coeff": inner_coeff},
                                                  L * H),
                        H * L ** (1 / 3) + L**3 / H, "c*(H L^(1/3) + L^3/H)",
                        {"outer_generations": layout.generations, "outer_layout": layout})
