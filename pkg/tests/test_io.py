from fractions import Fraction

import numpy as np
import pytest

from nucleation.constructions import construct_diamond_nd, construct_lens21, construct_tartar
from nucleation.energy import exact_energy
from nucleation.io import (CUTOFF_OPACITY, PHASE_COLORS, UnsupportedRenderError, read_scene, scene_svg,
                           write_scene, write_svg)


@pytest.mark.parametrize("make", [lambda: construct_lens21(Fraction(1, 3), 3, 8),
                                  lambda: construct_diamond_nd(3, 2, 3),
                                  lambda: construct_tartar(20, 20, 5, 2)])
def test_scene_roundtrip(tmp_path, make):
    s = make().scene
    t = read_scene(write_scene(s, tmp_path / "s.json"))
    assert t.wells == s.wells and t.n == s.n
    assert np.array_equal(t.phases, s.phases) and np.array_equal(t.cutoff, s.cutoff)
    assert all(np.array_equal(a, b) for a, b in zip(t.polys, s.polys))
    assert exact_energy(t, check=False).total == exact_energy(s, check=False).total


def test_svg_colors_and_cutoff():
    s = construct_tartar(20, 20, 5, 2).scene
    svg = scene_svg(s)
    assert svg.count("<polygon") == len(s)
    assert f'fill-opacity="{CUTOFF_OPACITY}"' in svg
    for ph in np.unique(s.phases):
        assert PHASE_COLORS[ph] in svg


def test_svg_rejects_3d(tmp_path):
    with pytest.raises(UnsupportedRenderError):
        write_svg(construct_diamond_nd(3, 2, 3).scene, tmp_path / "x.svg")
    assert not (tmp_path / "x.svg").exists()
