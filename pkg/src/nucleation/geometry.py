"""Polytopal scenes carrying piecewise-affine deformations.

A :class:`Scene` partitions a convex inclusion domain into convex cells.  Each
cell carries a phase label (0 austenite, ``i`` the ``i``-th well) and the affine
map ``u(x) = M x + b`` valid on it.  Interfaces are recovered geometrically, so
cells do not need to meet face-to-face (hanging nodes are fine).
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

from .wells import WellSet


class GeometryError(ValueError):
    pass


class FieldFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ConvexCell:
    vertices: np.ndarray
    phase: int
    gradient: np.ndarray
    offset: np.ndarray
    cutoff: bool = False

    def u(self, x):
        return np.asarray(x) @ self.gradient.T + self.offset


def affine_from_nodes(points, values):
    """Affine map through ``n+1`` nodes: returns ``(M, b)`` with ``M p + b = value``."""
    points = np.asarray(points, float)
    values = np.asarray(values, float)
    n = points.shape[1]
    A = np.hstack([points, np.ones((n + 1, 1))])
    sol = np.linalg.solve(A, values)
    return sol[:n].T.copy(), sol[n].copy()


class SceneBuilder:
    """Accumulates cells; :meth:`build` returns an immutable :class:`Scene`."""

    def __init__(self, n: int, wells: WellSet):
        self.n = n
        self.wells = wells
        self.polys: list[np.ndarray] = []
        self.grads: list[np.ndarray] = []
        self.offsets: list[np.ndarray] = []
        self.phases: list[int] = []
        self.cutoff: list[bool] = []

    def add(self, vertices, grad, offset, phase: int, cutoff: bool = False):
        self.polys.append(np.asarray(vertices, dtype=float))
        self.grads.append(np.asarray(grad, dtype=float))
        self.offsets.append(np.asarray(offset, dtype=float))
        self.phases.append(int(phase))
        self.cutoff.append(bool(cutoff))

    def add_nodal_triangle(self, vertices, values, phase: int, cutoff: bool = True):
        """Triangle (2D) or tetrahedron (3D) with ``u`` interpolated from nodal values."""
        M, b = affine_from_nodes(vertices, values)
        self.add(vertices, M, b, phase, cutoff)

    def extend(self, other: "SceneBuilder"):
        self.polys += other.polys
        self.grads += other.grads
        self.offsets += other.offsets
        self.phases += other.phases
        self.cutoff += other.cutoff

    def __len__(self):
        return len(self.polys)

    def build(self, domain=None, meta=None) -> "Scene":
        n = self.n
        grads = np.array(self.grads, dtype=float).reshape(-1, n, n)
        offsets = np.array(self.offsets, dtype=float).reshape(-1, n)
        if domain is None:
            domain = np.vstack(self.polys)
        return Scene(n=n, polys=list(self.polys), grads=grads, offsets=offsets,
                     phases=np.array(self.phases, dtype=int), wells=self.wells,
                     cutoff=np.array(self.cutoff, dtype=bool),
                     domain=np.asarray(domain, float), meta=dict(meta or {}))


@dataclass(eq=False)
class Scene:
    n: int
    polys: list
    grads: np.ndarray
    offsets: np.ndarray
    phases: np.ndarray
    wells: WellSet
    cutoff: np.ndarray
    domain: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n == 2 and len(self.polys):
            self.polys = _ccw_all(self.polys)
        if np.any(self.phases < 0) or np.any(self.phases > len(self.wells)):
            raise GeometryError("phase label outside K0")

    def __len__(self):
        return len(self.polys)

    @property
    def cells(self) -> list[ConvexCell]:
        return [ConvexCell(p, int(ph), g, b, bool(c)) for p, ph, g, b, c in
                zip(self.polys, self.phases, self.grads, self.offsets, self.cutoff)]

    @cached_property
    def chi(self) -> np.ndarray:
        """``(C, n)`` diagonal of the phase indicator on every cell."""
        return self.wells.as_array()[self.phases]

    @cached_property
    def volumes(self) -> np.ndarray:
        if self.n == 2:
            return _polygon_areas(self.polys)
        return np.array([_polytope_volume(p) for p in self.polys])

    @cached_property
    def interfaces(self) -> "Interfaces":
        if self.n == 2:
            return _interfaces_2d(self)
        return _interfaces_3d(self)

    @cached_property
    def diameter(self) -> float:
        d = self.domain
        if len(d) > 400:
            d = d[ConvexHull(d).vertices]
        diff = d[:, None, :] - d[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def support_volume(self) -> float:
        return scene_volume(self, lambda ph: ph != 0)

    def u(self, cell: int, x):
        return np.asarray(x) @ self.grads[cell].T + self.offsets[cell]

    def translated(self, shift) -> "Scene":
        shift = np.asarray(shift, float)
        return Scene(self.n, [p + shift for p in self.polys], self.grads.copy(),
                     self.offsets - np.einsum("cij,j->ci", self.grads, shift), self.phases.copy(),
                     self.wells, self.cutoff.copy(), self.domain + shift, dict(self.meta))


# ----------------------------------------------------------------- volumes


def _ccw(p: np.ndarray) -> np.ndarray:
    x, y = p[:, 0], p[:, 1]
    a = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    return p[::-1].copy() if a < 0 else p


def _ccw_all(polys: list) -> list:
    P = _pad(polys)
    x, y = P[..., 0], P[..., 1]
    a = (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(1)
    return [p[::-1].copy() if ai < 0 else p for p, ai in zip(polys, a)]


def _pad(polys) -> np.ndarray:
    k = max(len(p) for p in polys)
    out = np.empty((len(polys), k, polys[0].shape[1]))
    for i, p in enumerate(polys):
        out[i, : len(p)] = p
        out[i, len(p):] = p[-1]
    return out


def _polygon_areas(polys) -> np.ndarray:
    if not polys:
        return np.zeros(0)
    P = _pad(polys)
    x, y = P[..., 0], P[..., 1]
    a = 0.5 * (x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y).sum(1)
    if np.any(a < -1e-12 * (1 + np.abs(a).max())):
        raise GeometryError("degenerate polygon with negative area")
    return a


def _polytope_volume(p: np.ndarray) -> float:
    """Fan decomposition from the first vertex over the hull triangulation."""
    hull = ConvexHull(p)
    v0 = p[0]
    tri = p[hull.simplices] - v0
    return float(np.abs(np.linalg.det(tri)).sum() / 6.0)


def scene_volume(scene: Scene, predicate=None) -> float:
    """Sum of cell volumes whose phase labels satisfy ``predicate`` (all by default)."""
    if len(scene) == 0:
        return 0.0
    mask = np.ones(len(scene), bool) if predicate is None else np.asarray(predicate(scene.phases), bool)
    return float(scene.volumes[mask].sum())


# -------------------------------------------------------------- interfaces


@dataclass
class Interfaces:
    """Elementary interface patches.

    ``left``/``right`` are cell indices (-1 means outside every cell),
    ``measure`` is length (2D) or area (3D), ``points`` ``(P, q, n)`` are patch
    vertices (padded by repetition) and ``tangents`` ``(P, n-1, n)`` span the
    patch plane.
    """

    left: np.ndarray
    right: np.ndarray
    measure: np.ndarray
    points: np.ndarray
    tangents: np.ndarray


def _cluster(sorted_vals: np.ndarray, tol: float) -> np.ndarray:
    if len(sorted_vals) == 0:
        return np.zeros(0, int)
    return np.concatenate([[0], np.cumsum(np.diff(sorted_vals) > tol)])


def _cover(gi, a, b, owner, gq, mq):
    """For each query ``(gq, mq)`` return the owner of the interval containing it, else -1.

    Intervals within a group must be pairwise disjoint (true for one side of a line).
    """
    ni, nq = len(gi), len(gq)
    g = np.concatenate([gi, gq])
    s = np.concatenate([a, mq])
    typ = np.concatenate([np.zeros(ni, int), np.ones(nq, int)])
    order = np.lexsort((typ, s, g))
    pos = np.where(order < ni, np.arange(ni + nq), -1)
    last = np.maximum.accumulate(pos)
    inv = np.empty(ni + nq, int)
    inv[order] = np.arange(ni + nq)
    qpos = inv[ni + np.arange(nq)]
    hit_pos = last[qpos]
    out = np.full(nq, -1)
    ok = hit_pos >= 0
    idx = np.where(ok, order[np.maximum(hit_pos, 0)], 0)
    ok &= (gi[idx] == gq) & (b[idx] >= mq)
    out[ok] = owner[idx[ok]]
    return out


def _interfaces_2d(scene: Scene) -> Interfaces:
    P = _pad(scene.polys)
    C, K, _ = P.shape
    v0 = P.reshape(-1, 2)
    v1 = np.roll(P, -1, axis=1).reshape(-1, 2)
    cell = np.repeat(np.arange(C), K)
    e = v1 - v0
    length = np.hypot(e[:, 0], e[:, 1])
    scale = max(1.0, scene.diameter)
    tol = 1e-9 * scale
    keep = length > tol
    v0, v1, cell, e, length = v0[keep], v1[keep], cell[keep], e[keep], length[keep]
    d = e / length[:, None]
    horiz = np.abs(d[:, 1]) <= 1e-12
    flip = (d[:, 1] < 0) & ~horiz | horiz & (d[:, 0] < 0)
    dc = np.where(flip[:, None], -d, d)
    dc[horiz] = (1.0, 0.0)
    side_left = ~flip  # CCW polygons keep their interior on the left
    ang = np.where(horiz, 0.0, np.arctan2(dc[:, 1], dc[:, 0]))
    nc = np.stack([-dc[:, 1], dc[:, 0]], axis=1)
    c = (nc * v0).sum(1)

    o1 = np.argsort(ang, kind="stable")
    ag = np.empty(len(ang), int)
    ag[o1] = _cluster(ang[o1], 1e-10)
    o2 = np.lexsort((c, ag))
    newg = np.concatenate([[True], (np.diff(ag[o2]) != 0) | (np.diff(c[o2]) > tol)]) if len(o2) else np.zeros(0, bool)
    g = np.empty(len(c), int)
    g[o2] = np.cumsum(newg) - 1
    ng = int(g.max()) + 1 if len(g) else 0
    first = np.full(ng, -1)
    first[g[o2[::-1]]] = o2[::-1]
    rep_d, rep_n, rep_c = dc[first], nc[first], c[first]

    s0 = (rep_d[g] * v0).sum(1)
    s1 = (rep_d[g] * v1).sum(1)
    lo, hi = np.minimum(s0, s1), np.maximum(s0, s1)

    # breakpoints per group
    bg = np.concatenate([g, g])
    bs = np.concatenate([lo, hi])
    ob = np.lexsort((bs, bg))
    bg, bs = bg[ob], bs[ob]
    same = np.concatenate([[False], (np.diff(bg) == 0) & (np.diff(bs) <= tol)])
    bg, bs = bg[~same], bs[~same]
    segok = np.diff(bg) == 0
    sg = bg[:-1][segok]
    sa, sb = bs[:-1][segok], bs[1:][segok]
    mid = 0.5 * (sa + sb)

    L, R = side_left, ~side_left
    left = _cover(g[L], lo[L], hi[L], cell[L], sg, mid)
    right = _cover(g[R], lo[R], hi[R], cell[R], sg, mid)
    used = (left >= 0) | (right >= 0)
    sg, sa, sb, left, right = sg[used], sa[used], sb[used], left[used], right[used]
    base = rep_n[sg] * rep_c[sg][:, None]
    p0 = base + rep_d[sg] * sa[:, None]
    p1 = base + rep_d[sg] * sb[:, None]
    return Interfaces(left, right, sb - sa, np.stack([p0, p1], axis=1), rep_d[sg][:, None, :])


def _plane_basis(normal):
    a = np.array([1.0, 0, 0]) if abs(normal[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(normal, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    return e1, e2


def _polys_of(geom):
    from shapely.geometry import Polygon
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    return [gg for gg in getattr(geom, "geoms", []) if isinstance(gg, Polygon)]


def _interfaces_3d(scene: Scene) -> Interfaces:
    from shapely.geometry import Polygon
    from shapely.ops import unary_union
    from shapely.strtree import STRtree

    scale = max(1.0, scene.diameter)
    tol = 1e-9 * scale
    tris, normals, owners = [], [], []
    for ci, p in enumerate(scene.polys):
        hull = ConvexHull(p)
        tris.append(p[hull.simplices])
        normals.append(hull.equations[:, :3])
        owners.append(np.full(len(hull.simplices), ci))
    tris = np.concatenate(tris)
    nout = np.concatenate(normals)
    owner = np.concatenate(owners)
    first = np.argmax(np.abs(nout) > 1e-12, axis=1)
    sign = np.sign(nout[np.arange(len(nout)), first])
    ncan = nout * sign[:, None]
    cell_left = sign < 0  # cell lies on the positive side of the canonical normal
    off = (ncan * tris[:, 0]).sum(1)
    key = np.column_stack([np.round(ncan / 1e-9), np.round(off / tol)]).astype(np.int64)
    _, g = np.unique(key, axis=0, return_inverse=True)
    g = g.ravel()

    left_l, right_l, meas, pts, tans = [], [], [], [], []
    order = np.argsort(g, kind="stable")
    bounds = np.flatnonzero(np.diff(g[order])) + 1
    for grp in np.split(order, bounds):
        nrm = ncan[grp[0]]
        o = off[grp[0]]
        e1, e2 = _plane_basis(nrm)
        base = nrm * o

        def to2(t):
            return np.column_stack([(t - base) @ e1, (t - base) @ e2])

        sides = {True: {}, False: {}}
        for t in grp:
            sides[bool(cell_left[t])].setdefault(int(owner[t]), []).append(Polygon(to2(tris[t])))
        lp = [(c, unary_union(v)) for c, v in sides[True].items()]
        rp = [(c, unary_union(v)) for c, v in sides[False].items()]

        def emit(poly, lc, rc):
            for pg in _polys_of(poly):
                if pg.area <= tol * tol:
                    continue
                xy = np.asarray(pg.exterior.coords)[:-1]
                left_l.append(lc)
                right_l.append(rc)
                meas.append(pg.area)
                pts.append(base + xy[:, :1] * e1 + xy[:, 1:] * e2)
                tans.append(np.stack([e1, e2]))

        tree = STRtree([q for _, q in rp]) if rp else None
        covered_r = {i: [] for i in range(len(rp))}
        for lc, lpoly in lp:
            hits = tree.query(lpoly) if tree is not None else []
            inter_parts = []
            for h in hits:
                inter = lpoly.intersection(rp[h][1])
                if inter.area > tol * tol:
                    emit(inter, lc, rp[h][0])
                    inter_parts.append(inter)
                    covered_r[h].append(inter)
            rest = lpoly.difference(unary_union(inter_parts)) if inter_parts else lpoly
            emit(rest, lc, -1)
        for h, (rc, rpoly) in enumerate(rp):
            rest = rpoly.difference(unary_union(covered_r[h])) if covered_r[h] else rpoly
            emit(rest, -1, rc)

    q = max((len(p) for p in pts), default=1)
    P = np.zeros((len(pts), q, 3))
    for i, p in enumerate(pts):
        P[i, : len(p)] = p
        P[i, len(p):] = p[-1]
    return Interfaces(np.array(left_l, int), np.array(right_l, int), np.array(meas),
                      P, np.array(tans).reshape(-1, 2, 3))


# ---------------------------------------------------------- admissibility


@dataclass
class AdmissibilityReport:
    continuity_jump: float
    boundary_max: float
    rank_one_violation: float
    rank_one_violation_cutoff: float = 0.0

    def ok(self, tol: float = 1e-9) -> bool:
        return max(self.continuity_jump, self.boundary_max, self.rank_one_violation) <= tol

    def as_dict(self):
        return {"continuity_jump": self.continuity_jump, "boundary_max": self.boundary_max,
                "rank_one_violation": self.rank_one_violation,
                "rank_one_violation_cutoff": self.rank_one_violation_cutoff}


def _eval(scene: Scene, cells: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.einsum("pij,pqj->pqi", scene.grads[cells], pts) + scene.offsets[cells][:, None, :]


def check_admissible(scene: Scene) -> AdmissibilityReport:
    """Continuity across shared faces, zero trace on the domain boundary, rank-one jumps.

    A scene whose metadata carries ``boundary_gradient`` (and optionally
    ``boundary_offset``) is checked against that affine trace instead of zero.

    Values are absolute; callers compare against a tolerance scaled to the scene.
    """
    itf = scene.interfaces
    both = (itf.left >= 0) & (itf.right >= 0)
    one = ~both
    cont = 0.0
    r1 = r1c = 0.0
    if both.any():
        l, r, pts = itf.left[both], itf.right[both], itf.points[both]
        cont = float(np.abs(_eval(scene, l, pts) - _eval(scene, r, pts)).max())
        dM = scene.grads[l] - scene.grads[r]
        Mt = np.einsum("pij,pkj->pik", dM, itf.tangents[both])
        viol = np.linalg.norm(Mt, ord=2, axis=(1, 2))
        cut = scene.cutoff[l] | scene.cutoff[r]
        r1 = float(viol[~cut].max()) if (~cut).any() else 0.0
        r1c = float(viol[cut].max()) if cut.any() else 0.0
    bnd = 0.0
    if one.any():
        c = np.where(itf.left[one] >= 0, itf.left[one], itf.right[one])
        pts = itf.points[one]
        vals = _eval(scene, c, pts)
        if "boundary_gradient" in scene.meta:
            # blocks are matched to an affine map rather than to zero
            G = np.asarray(scene.meta["boundary_gradient"], float)
            b0 = np.asarray(scene.meta.get("boundary_offset", np.zeros(scene.n)), float)
            vals = vals - (pts @ G.T + b0)
        bnd = float(np.abs(vals).max())
    return AdmissibilityReport(cont, bnd, r1, r1c)


# ------------------------------------------------------------- rasterizing


@dataclass
class GridField:
    n: int
    T: float
    N: int
    components: np.ndarray  # (n, N, ..., N)
    origin: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=float)
        if self.origin is None:
            self.origin = np.full(self.n, -self.T / 2)
        self.origin = np.asarray(self.origin, float)

    @property
    def h(self) -> float:
        return self.T / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def support_volume(self) -> float:
        return float(np.any(self.components != 0, axis=0).sum() * self.cell_volume)

    def centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.N) + 0.5) * self.h

    def __eq__(self, other):
        return (isinstance(other, GridField) and self.n == other.n and self.N == other.N
                and self.T == other.T and np.array_equal(self.components, other.components))


def _feature_size(scene: Scene) -> float:
    vols = scene.volumes
    if scene.n == 2:
        per = np.array([np.linalg.norm(np.diff(np.vstack([p, p[:1]]), axis=0), axis=1).sum() for p in scene.polys])
        return float((2 * vols / per).min())
    surf = np.array([ConvexHull(p).area for p in scene.polys])
    return float((3 * vols / surf).min())


def rasterize(scene: Scene, resolution: int, padding: float = 2.0) -> GridField:
    """Centre-point sampling of chi on a periodic box of side ``padding * diam``."""
    N = int(resolution)
    if N < 2 or N & (N - 1):
        raise GeometryError(f"resolution must be a power of two, got {N}")
    if padding < 2:
        raise GeometryError("padding factor must be >= 2")
    n = scene.n
    T = padding * scene.diameter
    lo, hi = scene.domain.min(0), scene.domain.max(0)
    origin = 0.5 * (lo + hi) - T / 2
    h = T / N
    comps = np.zeros((n,) + (N,) * n)
    filled = np.zeros((N,) * n, bool)
    chi = scene.chi
    for ci, p in enumerate(scene.polys):
        if scene.phases[ci] == 0:
            continue
        imin = np.maximum(np.floor((p.min(0) - origin) / h - 0.5).astype(int), 0)
        imax = np.minimum(np.ceil((p.max(0) - origin) / h - 0.5).astype(int), N - 1)
        if np.any(imax < imin):
            continue
        axes = [origin[a] + (np.arange(imin[a], imax[a] + 1) + 0.5) * h for a in range(n)]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        if n == 2:
            q = np.vstack([p, p[:1]])
            e = np.diff(q, axis=0)
            rel = X[..., None, :] - q[:-1]
            cross = e[:, 0] * rel[..., 1] - e[:, 1] * rel[..., 0]
            inside = np.all(cross >= -1e-12 * scene.diameter, axis=-1)
        else:
            eq = ConvexHull(p).equations
            inside = np.all(X @ eq[:, :3].T + eq[:, 3] <= 1e-12 * scene.diameter, axis=-1)
        sl = tuple(slice(imin[a], imax[a] + 1) for a in range(n))
        sub_filled = filled[sl]
        take = inside & ~sub_filled
        for a in range(n):
            comps[(a,) + sl][take] = chi[ci, a]
        filled[sl] = sub_filled | take
    feat = _feature_size(scene)
    meta = {"padding": padding, "feature_size": feat, "resolution_warning": bool(feat < 2 * h),
            "wells": scene.wells.name, "family": scene.meta.get("family")}
    if meta["resolution_warning"]:
        warnings.warn(f"finest feature {feat:.3g} is below two grid cells ({2 * h:.3g})", stacklevel=2)
    return GridField(n, T, N, comps, origin, meta)


# --------------------------------------------------------------- field I/O

_MAGIC = b"NUCF"
_VERSION = 1


def write_field(f: GridField, path, sidecar: dict | None = None) -> Path:
    path = Path(path)
    header = _MAGIC + struct.pack("<IIId", _VERSION, f.n, f.N, f.T)
    payload = np.ascontiguousarray(f.components, dtype="<f8").tobytes()
    path.write_bytes(header + payload)
    side = dict(f.meta)
    side["origin"] = [float(x) for x in f.origin]
    if sidecar:
        side.update(sidecar)
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True, default=str))
    return path


def read_field(path) -> GridField:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise FieldFormatError("bad magic bytes, not a NUCF field file")
    if len(raw) < 24:
        raise FieldFormatError("truncated header")
    version, n, N, T = struct.unpack("<IIId", raw[4:24])
    if version != _VERSION:
        raise FieldFormatError(f"unsupported field file version {version} (reader supports {_VERSION})")
    count = n * N**n
    if len(raw) - 24 != 8 * count:
        raise FieldFormatError(f"truncated payload: expected {8 * count} bytes, got {len(raw) - 24}")
    comps = np.frombuffer(raw, dtype="<f8", offset=24, count=count).reshape((n,) + (N,) * n).astype(float)
    origin, meta = None, {}
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text())
        origin = meta.pop("origin", None)
    return GridField(n, T, N, comps, origin, meta)
