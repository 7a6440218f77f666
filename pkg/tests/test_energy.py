import math
from fractions import Fraction

import numpy as np
import pytest

from nucleation.constructions import construct_diamond_nd, construct_lens21
from nucleation.energy import (AdmissibilityError, EnergyBreakdown, exact_energy, rescale_energy, spectral_elastic,
                               spectral_elastic_terms, spectral_energy, surface_energy)
from nucleation.geometry import GridField, SceneBuilder, rasterize
from nucleation.wells import make_well_set

from conftest import stripes

LENS_SURFACE = 4 + 2 * math.sqrt(5)


def test_lens_exact():
    e = exact_energy(construct_lens21(Fraction(1, 2), 2, 4).scene)
    assert e.elastic == pytest.approx(0.25, abs=1e-12)
    assert e.surface == pytest.approx(LENS_SURFACE, abs=1e-12)
    assert e.total == e.elastic + e.surface
    assert e.V == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("lam, L, H", [(Fraction(1, 3), 2, 5), (Fraction(1, 2), 3, 7), (Fraction(2, 5), 4, 11)])
def test_lens_elastic_closed_form(lam, L, H):
    lf = float(lam)
    e = exact_energy(construct_lens21(lam, L, H).scene)
    assert e.elastic == pytest.approx(2 * lf**2 * (1 - lf) ** 2 * L**3 / H, rel=1e-12)


def test_diamond_square_elastic():
    for L in (2.0, 3.0, 5.0):
        e = exact_energy(construct_diamond_nd(2, L, L).scene)
        assert e.elastic == pytest.approx(L**2 / 2, rel=1e-12)


def test_zero_scene():
    b = SceneBuilder(2, make_well_set("two_well"))
    b.add([(0, 0), (1, 0), (1, 1), (0, 1)], np.zeros((2, 2)), np.zeros(2), 0)
    e = exact_energy(b.build())
    assert (e.elastic, e.surface, e.total) == (0.0, 0.0, 0.0)


def test_inadmissible_raises():
    b = SceneBuilder(2, make_well_set("two_well"))
    b.add([(0, 0), (1, 0), (1, 1), (0, 1)], np.diag([-0.5, 0]), np.zeros(2), 1)
    with pytest.raises(AdmissibilityError):
        exact_energy(b.build())


def test_eps_weighting():
    s = construct_lens21(Fraction(1, 2), 2, 4).scene
    e = exact_energy(s, eps=0.3)
    assert e.total == pytest.approx(0.25 + 0.3 * LENS_SURFACE, rel=1e-14)
    with pytest.raises(ValueError):
        exact_energy(s, eps=0)


def test_surface_translation_invariant():
    s = construct_lens21(Fraction(1, 3), 3, 8).scene
    assert surface_energy(s.translated([7.25, -3.5])) == pytest.approx(surface_energy(s), rel=1e-12)


def test_compatible_stripes_zero():
    assert spectral_elastic(stripes(axis=0)) == pytest.approx(0.0, abs=1e-10)


def test_incompatible_stripes_full_mass():
    f = stripes(axis=1)
    mass = float((f.components[0] ** 2).sum() * f.cell_volume)
    assert spectral_elastic(f) == pytest.approx(mass, rel=1e-10)


def test_k0_term_mean_penalty():
    f = stripes(axis=0, values=(1.0, 0.0))
    el, k0 = spectral_elastic_terms(f)
    assert k0 == pytest.approx(0.5**2 * f.T**2, rel=1e-12)
    assert el == pytest.approx(k0, rel=1e-10)


def test_spectral_lens_below_exact():
    s = construct_lens21(Fraction(1, 2), 2, 4).scene
    el = spectral_elastic(rasterize(s, 256, 2.0))
    assert 0 <= el <= 0.25 * 1.10


def test_spectral_energy_uses_scene_surface():
    s = construct_lens21(Fraction(1, 2), 2, 4).scene
    e = spectral_energy(rasterize(s, 64, 2.0), s)
    assert e.surface == pytest.approx(LENS_SURFACE)
    assert e.resolution == 64


def test_spectral_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        spectral_elastic(GridField(2, 1.0, 12, np.zeros((2, 12, 12))))


def test_rescale_identity_and_lens():
    b = EnergyBreakdown(0.25, LENS_SURFACE, 1.0, 0.25 + LENS_SURFACE, 4.0)
    assert rescale_energy(b, 1.0, 2) == b
    r = rescale_energy(b, 0.1, 2)
    assert r.total == pytest.approx(0.01 * (0.25 + LENS_SURFACE), rel=1e-12)
    assert r.V == pytest.approx(0.04, rel=1e-12)
    assert r.total == pytest.approx(r.elastic + r.epsilon * r.surface, rel=1e-12)


def test_rescale_group():
    b = EnergyBreakdown(1.5, 2.5, 1.0, 4.0, 3.0)
    back = rescale_energy(rescale_energy(b, 2.0, 3), 0.5, 3)
    for k in ("elastic", "surface", "epsilon", "total", "V"):
        assert getattr(back, k) == pytest.approx(getattr(b, k), rel=1e-12)


@pytest.mark.parametrize("eps, n", [(0.0, 2), (-1.0, 2), (1.0, 4)])
def test_rescale_errors(eps, n):
    with pytest.raises(ValueError):
        rescale_energy(EnergyBreakdown(1, 1, 1, 2, 1), eps, n)


def test_breakdown_json_roundtrip():
    b = EnergyBreakdown(0.25, 8.0, 1.0, 8.25, 4.0, 0.01, 256)
    assert EnergyBreakdown.from_json(b.to_json()) == b
