"""Scene serialisation (JSON) and static SVG rendering of planar scenes."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import Scene
from .wells import WellSet

# fixed phase -> colour map so figures are comparable across runs
PHASE_COLORS = ("#d9d9d9", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                "#9467bd", "#8c564b", "#e377c2", "#17becf")
CUTOFF_OPACITY = 0.55


class UnsupportedRenderError(ValueError):
    """SVG output is only defined for two-dimensional scenes."""


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return str(v)


def scene_to_json(scene: Scene) -> str:
    doc = {
        "n": scene.n,
        "wells": json.loads(scene.wells.to_json()),
        "domain": scene.domain.tolist(),
        "cells": [{"vertices": p.tolist(), "grad": g.tolist(), "offset": b.tolist(),
                   "phase": int(ph), "cutoff": bool(c)}
                  for p, g, b, ph, c in zip(scene.polys, scene.grads, scene.offsets, scene.phases, scene.cutoff)],
        "meta": _jsonable(scene.meta),
    }
    return json.dumps(doc, sort_keys=True)


def scene_from_json(text: str) -> Scene:
    doc = json.loads(text)
    K = WellSet.from_json(json.dumps(doc["wells"]))
    n = int(doc["n"])
    cells = doc["cells"]
    return Scene(n=n, polys=[np.array(c["vertices"], float) for c in cells],
                 grads=np.array([c["grad"] for c in cells], float).reshape(-1, n, n),
                 offsets=np.array([c["offset"] for c in cells], float).reshape(-1, n),
                 phases=np.array([c["phase"] for c in cells], int), wells=K,
                 cutoff=np.array([c["cutoff"] for c in cells], bool),
                 domain=np.array(doc["domain"], float), meta=doc.get("meta", {}))


def write_scene(scene: Scene, path) -> Path:
    path = Path(path)
    path.write_text(scene_to_json(scene) + "\n")
    return path


def read_scene(path) -> Scene:
    return scene_from_json(Path(path).read_text())


def scene_svg(scene: Scene, width: int = 800) -> str:
    """Polygons filled by phase; cutoff cells are drawn translucent."""
    if scene.n != 2:
        raise UnsupportedRenderError(f"SVG rendering needs a planar scene, got n={scene.n}")
    lo, hi = scene.domain.min(0), scene.domain.max(0)
    span = np.maximum(hi - lo, 1e-300)
    s = width / span[0]
    height = max(1, int(round(span[1] * s)))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    for p, ph, c in zip(scene.polys, scene.phases, scene.cutoff):
        q = (p - lo) * s
        pts = " ".join(f"{x:.3f},{height - y:.3f}" for x, y in q)
        op = f' fill-opacity="{CUTOFF_OPACITY}"' if c else ""
        out.append(f'<polygon points="{pts}" fill="{PHASE_COLORS[int(ph) % len(PHASE_COLORS)]}"{op}/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(scene: Scene, path) -> Path:
    text = scene_svg(scene)  # raises before touching the file system for 3D scenes
    path = Path(path)
    path.write_text(text)
    return path
