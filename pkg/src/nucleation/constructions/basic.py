"""Single-laminate constructions: the small ball, the lens and the diamond."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull

from ..geometry import SceneBuilder
from ..wells import WellSet, make_well_set
from .common import Construction, ConstructionParams, constants, require


def _icosphere(level: int) -> tuple[np.ndarray, np.ndarray]:
    t = (1 + 5**0.5) / 2
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    faces = ConvexHull(np.array(verts)).simplices.tolist()
    for _ in range(level):
        cache: dict = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return np.array(verts), np.array(faces)


def construct_ball(K: WellSet, V: float, well: int = 1) -> Construction:
    """``chi = A`` on a polytopal ball of volume ``V``; ``u = Ax`` on the inner half radius.

    The annulus between the two radii carries the linear interpolation from
    ``Ax`` down to zero.
    """
    require(V > 0, "ball: V must be positive")
    n = K.n
    A = K.matrix(well).astype(float)
    b = SceneBuilder(n, K)
    if n == 2:
        m = constants()["ball_polygon_sides"]
        R = np.sqrt(V / (0.5 * m * np.sin(2 * np.pi / m)))
        ang = 2 * np.pi * np.arange(m) / m
        outer = R * np.column_stack([np.cos(ang), np.sin(ang)])
        inner = 0.5 * outer
        b.add(inner, A, np.zeros(2), well)
        for i in range(m):
            j = (i + 1) % m
            b.add_nodal_triangle([inner[i], inner[j], outer[j]], [A @ inner[i], A @ inner[j], np.zeros(2)], well)
            b.add_nodal_triangle([inner[i], outer[j], outer[i]], [A @ inner[i], np.zeros(2), np.zeros(2)], well)
        domain = outer
    else:
        unit, faces = _icosphere(constants()["ball_icosphere_level"])
        R = (V / ConvexHull(unit).volume) ** (1 / 3)
        outer, inner = R * unit, 0.5 * R * unit
        b.add(inner, A, np.zeros(3), well)
        for f in faces:
            a, bb, c = sorted(int(i) for i in f)
            # diagonal rule on every lateral quad: lower index outer to higher index inner
            for tet in ([("o", a), ("o", bb), ("o", c), ("i", c)],
                        [("o", a), ("o", bb), ("i", bb), ("i", c)],
                        [("o", a), ("i", a), ("i", bb), ("i", c)]):
                pts = np.array([outer[k] if s == "o" else inner[k] for s, k in tet])
                vals = np.array([np.zeros(3) if s == "o" else A @ inner[k] for s, k in tet])
                b.add_nodal_triangle(pts, vals, well)
        domain = outer
    scene = b.build(domain, meta={"family": "ball"})
    bound = V + V ** ((n - 1) / n)
    return Construction(scene, ConstructionParams("ball", {"R": float(R), "n": n}, V), bound,
                        "c1*V + c2*V^((n-1)/n)")


def construct_lens21(lam=Fraction(1, 2), L: float = 2.0, H: float = 4.0, K: WellSet | None = None) -> Construction:
    """Two-well lens on ``conv{(0,0), (lam L, +-H/2), (L,0)}``.

    ``u_1`` is the tent ``(1-lam)(x_1 - 2 lam L |x_2|/H)`` left of ``x_1 = lam L``
    and its mirror on the right, ``u_2 = 0``.  Since ``d_1 u_1 = 1 - lam`` on
    the left, that half carries the well ``diag(1-lam, 0)``.
    """
    lam_f = float(lam)
    require(0 < lam_f < 1, "lens21: lambda must lie in (0,1)")
    require(H > L > 1, f"lens21: requires H > L > 1, got L={L}, H={H}")
    K = K or make_well_set("two_well", Fraction(lam))
    iA, iB = 1, 2
    x0 = lam_f * L
    b = SceneBuilder(2, K)
    for s in (1.0, -1.0):
        apex = (x0, s * H / 2)
        gl = np.array([[1 - lam_f, -s * (1 - lam_f) * 2 * lam_f * L / H], [0, 0]])
        b.add([(0, 0), (x0, 0), apex], gl, np.zeros(2), iB)
        gr = np.array([[-lam_f, -s * lam_f * 2 * (1 - lam_f) * L / H], [0, 0]])
        b.add([(x0, 0), (L, 0), apex], gr, np.array([lam_f * L, 0.0]), iA)
    domain = np.array([(0, 0), (x0, H / 2), (L, 0), (x0, -H / 2)])
    scene = b.build(domain, meta={"family": "lens21"})
    V = L * H / 2
    return Construction(scene, ConstructionParams("lens21", {"lambda": str(lam), "L": L, "H": H}, V),
                        L**3 / H + H, "c*(L^3/H + H)",
                        {"elastic_closed_form": 2 * lam_f**2 * (1 - lam_f) ** 2 * L**3 / H})


def construct_diamond_nd(n: int, L: float, H: float) -> Construction:
    """Diamond ``conv{+-(L/2)e_1, +-(H/2)e_j}`` with ``u_1 = |x_1| + (L/H) sum_j |x_j| - L/2``.

    One simplex per orthant, with the wells ``-+e_1 (x) e_1`` on the two sides of
    ``x_1 = 0``.
    """
    require(n in (2, 3), f"diamond_nd: unsupported dimension {n}")
    require(H >= L > 0, f"diamond_nd: requires H >= L > 0, got L={L}, H={H}")
    K = make_well_set("symmetric_pair", n=n)
    b = SceneBuilder(n, K)
    for signs in np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T:
        pts = [np.zeros(n)]
        for j in range(n):
            e = np.zeros(n)
            e[j] = signs[j] * (L / 2 if j == 0 else H / 2)
            pts.append(e)
        g = np.zeros((n, n))
        g[0, 0] = signs[0]
        g[0, 1:] = signs[1:] * L / H
        off = np.zeros(n)
        off[0] = -L / 2
        b.add(np.array(pts), g, off, 2 if signs[0] > 0 else 1)
    ext = [np.eye(n)[j] * (L / 2 if j == 0 else H / 2) for j in range(n)]
    domain = np.array(ext + [-e for e in ext])
    scene = b.build(domain, meta={"family": "diamond_nd"})
    V = L * H ** (n - 1) / (2 if n == 2 else 6)
    return Construction(scene, ConstructionParams("diamond_nd", {"n": n, "L": L, "H": H}, V),
                        L**3 * H ** (n - 3) + H ** (n - 1), "c*(L^3 H^(n-3) + H^(n-1))",
                        {"elastic_closed_form": (n - 1) * (L / H) ** 2 * V})
