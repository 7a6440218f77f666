"""Order-k nested laminate for the Tartar square.

Splitting ladder (diagonal entries, every pair rank-one along one axis):

    0       = (0, 1)/2  + (0, -1)/2     normal e_2
    (0, 1)  = A2/4 + 3 P2/4             normal e_1
    (0, -1) = A4/4 + 3 P4/4             normal e_1
    P2 = (1, 1)   = A3/2 + P3/2         normal e_2
    P3 = (1, -1)  = A4/2 + P4/2         normal e_1
    P4 = (-1, -1) = A1/2 + P1/2         normal e_2
    P1 = (-1, 1)  = A2/2 + P2/2         normal e_1

Level ``j`` laminates at period ``r_j = r^j / L^(j-1)`` inside the layers of level
``j-1`` and is cut off linearly to the parent's affine map near the layer ends.
"""

from __future__ import annotations

import math

import numpy as np

from ..geometry import SceneBuilder, affine_from_nodes
from ..wells import make_well_set, project_to_K0
from .common import Construction, ConstructionParams, constants, require

_STATES = {
    "0": (0, 0),
    "0+": (0, 1),
    "0-": (0, -1),
    "P1": (-1, 1),
    "P2": (1, 1),
    "P3": (1, -1),
    "P4": (-1, -1),
    "A1": (-1, -3),
    "A2": (-3, 1),
    "A3": (1, 3),
    "A4": (3, -1),
}

_LADDER = {
    "0": (1, ("0+", 0.5), ("0-", 0.5)),
    "0+": (0, ("A2", 0.25), ("P2", 0.75)),
    "0-": (0, ("A4", 0.25), ("P4", 0.75)),
    "P2": (1, ("A3", 0.5), ("P3", 0.5)),
    "P3": (0, ("A4", 0.5), ("P4", 0.5)),
    "P4": (1, ("A1", 0.5), ("P1", 0.5)),
    "P1": (0, ("A2", 0.5), ("P2", 0.5)),
}


def tartar_scales(L: float, r: float, k: int) -> np.ndarray:
    """``r_j = r^j / L^(j-1)`` for ``j = 1..k``."""
    return np.array([r**j / L ** (j - 1) for j in range(1, k + 1)])


def default_order(L: float) -> int:
    c1 = constants()["tartar_c1"]
    return max(1, int(round(c1 * math.sqrt(math.log(L)))))


def tartar_bound_form(L: float, H: float, r: float, k: int) -> float:
    rs = tartar_scales(L, r, k)
    val = 2.0**-k + r / L
    for j in range(2, k + 1):
        val += 2.0**-j * rs[j - 1] / rs[j - 2]
    val += sum(2.0**-j for j in range(1, k + 1)) / rs[-1]
    return L * H * val


def tartar_cell_count(L: float, H: float, r: float, k: int) -> int:
    """Number of cells :func:`construct_tartar` emits, without building them."""
    scales = tartar_scales(L, r, k)
    memo: dict = {}

    def count(ext, state, level):
        if state.startswith("A") or level > k:
            return 1
        key = (round(ext[0], 12), round(ext[1], 12), state, level)
        if key in memo:
            return memo[key]
        a, (s1, l1), (s2, _) = _LADDER[state]
        N = max(1, int(round(ext[a] / scales[level - 1])))
        p = ext[a] / N
        core = ext[1 - a] - 2 * min(p, ext[1 - a] / 4)
        tot = 6
        for st, w in ((s1, l1 * p), (s2, (1 - l1) * p)):
            e = [0.0, 0.0]
            e[a], e[1 - a] = w, core
            tot += count(tuple(e), st, level + 1)
        memo[key] = N * tot
        return memo[key]

    return count((float(L), float(H)), "0", 1)


class _Filler:
    def __init__(self, K, scales):
        self.K = K
        self.scales = scales
        self.b = SceneBuilder(2, K)
        self._lab: dict = {}

    def label(self, dg) -> int:
        key = (round(float(dg[0]), 9), round(float(dg[1]), 9))
        if key not in self._lab:
            self._lab[key] = project_to_K0(np.diag(dg), self.K, wells_only=True)[0]
        return self._lab[key]

    def leaf(self, rect, state, c):
        x0, x1, y0, y1 = rect
        S = np.array(_STATES[state], float)
        cut = not state.startswith("A")
        self.b.add([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], np.diag(S), c,
                   int(state[1]) if not cut else self.label(S), cut)

    def fill(self, rect, state, c, level):
        if state.startswith("A") or level > len(self.scales):
            self.leaf(rect, state, c)
            return
        a, (s1, l1), (s2, _) = _LADDER[state]
        bax = 1 - a
        lo = (rect[0], rect[2])
        hi = (rect[1], rect[3])
        ext_a = hi[a] - lo[a]
        ext_b = hi[bax] - lo[bax]
        S = np.array(_STATES[state], float)
        W1 = np.array(_STATES[s1], float)
        W2 = np.array(_STATES[s2], float)
        d = W1[a] - W2[a]
        N = max(1, int(round(ext_a / self.scales[level - 1])))
        p = ext_a / N
        delta = min(p, ext_b / 4)
        e_a = np.eye(2)[a]
        peak = (1 - l1) * d * l1 * p

        def P(av, bv):
            pt = [0.0, 0.0]
            pt[a], pt[bax] = av, bv
            return tuple(pt)

        core = (lo[bax] + delta, hi[bax] - delta)
        # cutoff triangles of the first period; later periods are translates along e_a
        t0, tm, t1 = lo[a], lo[a] + l1 * p, lo[a] + p
        templ = []
        for b_in, b_out in ((core[0], lo[bax]), (core[1], hi[bax])):
            for pts, vals in (([P(t0, b_in), P(t0, b_out), P(tm, b_in)], [0.0, 0.0, peak]),
                              ([P(tm, b_in), P(t0, b_out), P(t1, b_out)], [peak, 0.0, 0.0]),
                              ([P(tm, b_in), P(t1, b_out), P(t1, b_in)], [peak, 0.0, 0.0])):
                g, off = affine_from_nodes(pts, np.array(vals)[:, None])
                M = np.diag(S) + np.outer(e_a, g[0])
                templ.append((np.array(pts), M, c + e_a * off[0], g[0], self.label(np.diag(M))))

        for m in range(N):
            shift = m * p
            t0 = lo[a] + shift
            tm, t1 = t0 + l1 * p, t0 + p
            c1 = c - (1 - l1) * d * t0 * e_a
            c2 = c + l1 * d * t1 * e_a
            for (ta, tb, st, cc) in ((t0, tm, s1, c1), (tm, t1, s2, c2)):
                r = [0.0, 0.0, 0.0, 0.0]
                r[2 * a], r[2 * a + 1] = ta, tb
                r[2 * bax], r[2 * bax + 1] = core
                self.fill(tuple(r), st, cc, level + 1)
            for pts, M, off, g, lab in templ:
                self.b.add(pts + shift * e_a, M, off - e_a * (g[a] * shift), lab, True)


def construct_tartar(L: float, H: float, r: float, k: int | None = None) -> Construction:
    """Nested laminate of order ``k`` on ``[0, L] x [0, H]``, zero on the boundary."""
    c = constants()["tartar_c"]
    require(H <= L, f"tartar: requires H <= L, got L={L}, H={H}")
    require(L > 1, "tartar: requires L > 1")
    k = default_order(L) if k is None else int(k)
    require(k >= 1, "tartar: order k must be at least 1")
    require(0 < r < c * H, f"tartar: non-degeneracy r < cH (c={c}) violated: r={r}, cH={c * H}; "
                           "equivalently L exp(-C log(L)^(1/2)) < cH fails")
    K = make_well_set("tartar")
    scales = tartar_scales(L, r, k)
    f = _Filler(K, scales)
    f.fill((0.0, L, 0.0, H), "0", np.zeros(2), 1)
    scene = f.b.build(np.array([(0, 0), (L, 0), (L, H), (0, H)], float), meta={"family": "tartar"})
    return Construction(scene, ConstructionParams("tartar_k", {"L": L, "H": H, "r": r, "k": k}, L * H),
                        tartar_bound_form(L, H, r, k),
                        "C_T*LH(2^-k + r/L + sum_j 2^-j r_j/r_(j-1) + sum_j 2^-j/r_k)",
                        {"r_j": scales})
