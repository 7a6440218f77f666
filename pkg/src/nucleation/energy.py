"""Sharp-interface energy of a scene, exact and spectral.

With ``eps = 1`` the energy of ``(u, chi)`` is the elastic misfit
``int |grad u - chi|^2`` plus the total variation of ``chi`` on R^n, where the
outside of the inclusion carries ``chi = 0``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import GridField, Scene, check_admissible


class AdmissibilityError(ValueError):
    pass


@dataclass
class EnergyBreakdown:
    elastic: float
    surface: float
    epsilon: float
    total: float
    V: float
    k0_term: float | None = None
    resolution: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EnergyBreakdown":
        return cls(**json.loads(text))


def admissibility_tolerance(scene: Scene) -> float:
    """Absolute tolerance for continuity and trace checks, scaled to the scene size."""
    g = float(np.abs(scene.grads).max()) if len(scene) else 1.0
    return 1e-8 * max(1.0, scene.diameter) * max(1.0, g)


def elastic_energy(scene: Scene) -> float:
    diff = scene.grads.copy()
    idx = np.arange(scene.n)
    diff[:, idx, idx] -= scene.chi
    return float((scene.volumes * (diff**2).sum((1, 2))).sum())


def surface_energy(scene: Scene) -> float:
    """Total variation of chi: face measure times the Frobenius norm of the jump."""
    itf = scene.interfaces
    chi = np.vstack([scene.chi, np.zeros((1, scene.n))])  # index -1 -> outside
    jump = np.linalg.norm(chi[itf.left] - chi[itf.right], axis=1)
    return float((itf.measure * jump).sum())


def exact_energy(scene: Scene, eps: float = 1.0, check: bool = True) -> EnergyBreakdown:
    """Closed-form energy of a piecewise-affine scene, ``total = elastic + eps * surface``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if check:
        rep = check_admissible(scene)
        tol = admissibility_tolerance(scene)
        if not rep.ok(tol):
            raise AdmissibilityError(f"scene is not admissible: {rep.as_dict()} (tol {tol:.2e})")
    el = elastic_energy(scene)
    sf = surface_energy(scene)
    return EnergyBreakdown(el, sf, eps, el + eps * sf, scene.support_volume())


def _check_pow2(N: int):
    if N < 2 or N & (N - 1):
        raise ValueError(f"grid resolution must be a power of two, got {N}")


def _wavevectors(field: GridField):
    k1 = 2 * np.pi * np.fft.fftfreq(field.N, d=field.h)
    return np.meshgrid(*([k1] * field.n), indexing="ij")


def spectral_elastic(field: GridField) -> float:
    """Relaxed elastic energy of the grid field, zero mode included."""
    return spectral_elastic_terms(field)[0]


def spectral_elastic_terms(field: GridField) -> tuple[float, float]:
    """Relaxed elastic energy of a diagonal chi field.

    Returns ``(E, k0)`` where ``E`` sums ``k_l^2/|k|^2 |chi_jj^(k)|^2`` over
    ``l != j`` and ``k0`` is the zero-mode contribution ``sum_j |mean chi_jj|^2 T^n``,
    which is included in ``E``.  The transform is normalised so that
    ``sum |chi^|^2 = int |chi|^2`` on the periodic box.
    """
    _check_pow2(field.N)
    n = field.n
    ks = _wavevectors(field)
    k2 = sum(k**2 for k in ks)
    zero = k2 == 0
    k2s = np.where(zero, 1.0, k2)
    norm = field.cell_volume / field.N**n
    total = 0.0
    k0 = 0.0
    for j in range(n):
        p = np.abs(np.fft.fftn(field.components[j])) ** 2 * norm
        w = (k2 - ks[j] ** 2) / k2s
        w = np.where(zero, 0.0, w)
        total += float((w * p).sum())
        k0 += float(p[zero].sum())
    return total + k0, k0


def spectral_energy(field: GridField, scene: Scene | None = None) -> EnergyBreakdown:
    """Spectral elastic energy; surface is taken exactly from ``scene`` when given."""
    el, k0 = spectral_elastic_terms(field)
    sf = surface_energy(scene) if scene is not None else _grid_perimeter(field)
    V = scene.support_volume() if scene is not None else field.support_volume()
    return EnergyBreakdown(el, sf, 1.0, el + sf, V, k0, field.N)


def _grid_perimeter(field: GridField) -> float:
    """Anisotropic TV of the voxelised chi (axis-aligned faces only)."""
    area = field.h ** (field.n - 1)
    c = field.components
    tot = 0.0
    for a in range(field.n):
        d = c - np.roll(c, -1, axis=a + 1)
        tot += float(np.sqrt((d**2).sum(0)).sum())
    return tot * area


def rescale_energy(b: EnergyBreakdown, eps: float, n: int) -> EnergyBreakdown:
    """Breakdown of the ``eps``-dilated pair in dimension ``n``.

    Under ``x -> eps x`` elastic terms scale by ``eps^n`` and surface terms by
    ``eps^(n-1)``; with the surface weight multiplied by ``eps`` the total scales
    by ``eps^n`` and the inclusion volume becomes ``eps^n V``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    en = eps**n
    el = b.elastic * en
    sf = b.surface * eps ** (n - 1)
    k0 = None if b.k0_term is None else b.k0_term * en
    return EnergyBreakdown(el, sf, b.epsilon * eps, en * b.total, b.V * en, k0, b.resolution)
