import math
from fractions import Fraction

import numpy as np
import pytest

from nucleation.constructions import construct_lens21, construct_lens_branch_4w
from nucleation.energy import exact_energy
from nucleation.fourier_lab import (COMMUTATOR_M, Cone, RelationPrecheckError, commutator_probe, component_mass,
                                    cone_mass, cone_residual, low_frequency_mass, lower_exponent, nyquist,
                                    optimize_cone_parameters, psi_gamma, tartar_lower_form)
from nucleation.geometry import GridField, rasterize
from nucleation.wells import G_FOUR_WELL, Relation, make_well_set, standard_relations

from conftest import stripes

G_REL = Relation((1,), 0, G_FOUR_WELL, "g")


def test_cone_validation():
    for mu, R in [(0.0, 1.0), (1.5, 1.0), (0.5, 0.0)]:
        with pytest.raises(ValueError):
            Cone(0, mu, R)


def test_stripes_in_own_axis_cone():
    f = stripes(axis=0)
    assert cone_residual(f, Cone(0, 0.1, nyquist(f) * 2)) == pytest.approx(0, abs=1e-12)


def test_stripes_orthogonal_cone():
    f = stripes(axis=0)
    full = component_mass(f, 0)
    k0 = abs(f.components[0].mean()) ** 2 * f.T**2
    assert cone_residual(f, Cone(1, 0.05, nyquist(f) * 2), 0) == pytest.approx(full - k0, rel=1e-10)


def test_parseval_split():
    f = rasterize(construct_lens21(Fraction(1, 2), 2, 4).scene, 128, 2.0)
    c = Cone(0, 0.4, nyquist(f) / 3)
    total = component_mass(f, 0)
    assert cone_mass(f, c) + cone_residual(f, c) == pytest.approx(total, rel=1e-10)


def test_lens_cone_control_constant():
    s = construct_lens21(Fraction(1, 2), 3, 9).scene
    e = exact_energy(s)
    f = rasterize(s, 256, 2.0)
    mu, mp = 0.3, nyquist(f) / 2
    C = cone_residual(f, Cone(0, mu, mp)) / (mu**-2 * e.elastic + e.surface / mp)
    assert C <= 50


def test_low_frequency_zero_field():
    f = GridField(2, 4.0, 16, np.zeros((2, 16, 16)))
    assert low_frequency_mass(f, Cone(0, 0.5, 1.0)) == (0.0, 0.0)


def test_low_frequency_unit_square():
    N, T = 128, 4.0
    c = np.zeros((2, N, N))
    x = (np.arange(N) + 0.5) * T / N - T / 2
    X, Y = np.meshgrid(x, x, indexing="ij")
    c[0] = ((np.abs(X) < 0.5) & (np.abs(Y) < 0.5)).astype(float)
    f = GridField(2, T, N, c)
    mass, bound = low_frequency_mass(f, Cone(0, 1.0, 2 * math.pi / T * 1.01))
    # tiny radius: the cone holds a handful of lattice points near k = 0
    assert 0 < mass <= bound
    l1 = 1.0
    assert mass == pytest.approx(l1**2 / (2 * math.pi) ** 2 * math.pi * (2 * math.pi / T * 1.01) ** 2, rel=0.2)


def test_psi_gamma():
    assert psi_gamma(4.0, 0.5) == 4.0
    assert psi_gamma(0.25, 0.5) == 0.5
    assert psi_gamma(0.0) == 0.0


def lens_branch_field():
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return rasterize(construct_lens_branch_4w(8, 40, 0.8).scene, 256, 2.0)


def test_commutator_zero_field():
    f = GridField(2, 4.0, 16, np.zeros((2, 16, 16)))
    rep = commutator_probe(f, G_REL, 0.1, 8.0, 1.0)
    assert rep.lhs == 0 and rep.rhs_terms == (0.0, 0.0)
    assert rep.ratio() == 0.0


def test_commutator_lens_branch():
    f = lens_branch_field()
    K = make_well_set("four_well_2d")
    mp = nyquist(f)
    rep = commutator_probe(f, standard_relations(K)[0], 0.1, mp, mp / 2, K=K)
    assert rep.mu_tilde == pytest.approx(COMMUTATOR_M * 0.1 * mp / 2)
    assert rep.ratio() <= 100
    assert '"lhs"' in rep.to_json()


def test_commutator_mislabeled_field():
    f = lens_branch_field()
    f.components[0] = -f.components[0]
    with pytest.raises(RelationPrecheckError):
        commutator_probe(f, G_REL, 0.1, 10.0, 1.0)


def test_commutator_relation_not_on_wells():
    f = GridField(2, 4.0, 16, np.zeros((2, 16, 16)))
    with pytest.raises(RelationPrecheckError):
        commutator_probe(f, G_REL, 0.1, 8.0, 1.0, K=make_well_set("tartar"))


def test_commutator_radius_ordering():
    f = GridField(2, 4.0, 16, np.zeros((2, 16, 16)))
    with pytest.raises(ValueError, match="ordering"):
        commutator_probe(f, G_REL, 0.5, 1.0, 2.0)


@pytest.mark.parametrize("n, m, val", [(2, 1, Fraction(3, 5)), (2, 2, Fraction(5, 7)), (3, 2, Fraction(9, 11)),
                                       (3, 3, Fraction(6, 7))])
def test_lower_exponent_values(n, m, val):
    assert lower_exponent(n, m) == val


def test_lower_exponent_conjecture_formula():
    for n in range(2, 7):
        assert lower_exponent(n, n) == Fraction(n * n + 2 * n - 3, n * n + 2 * n - 1)


def test_lower_exponent_domain():
    with pytest.raises(ValueError):
        lower_exponent(1, 1)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_cone_optimum_matches(n, m):
    assert optimize_cone_parameters(n, m, 1e6).matches


@pytest.mark.parametrize("n, m, slope", [(2, 2, -1 / 7), (3, 3, -1 / 14)])
def test_mu_slope(n, m, slope):
    mus = [optimize_cone_parameters(n, m, V).mu for V in (1e4, 1e5, 1e6)]
    fit = np.polyfit(np.log([1e4, 1e5, 1e6]), np.log(mus), 1)[0]
    assert fit == pytest.approx(slope, rel=0.05)


def test_cone_optimum_regime():
    with pytest.raises(ValueError):
        optimize_cone_parameters(2, 2, 1.0)


def test_tartar_lower_m_star():
    out = tartar_lower_form(1e8, 2.0)
    brute = min(range(2, 65, 2), key=lambda m: m * math.log(2) + 2 * math.log(1e8) / (2 * m + 1))
    assert out["m_star"] == brute
    assert abs(out["m_star"] - out["m_analytic"]) <= 1


def test_tartar_lower_monotone_and_stable():
    ms = [tartar_lower_form(V)["m_star"] for V in np.geomspace(10, 1e12, 40)]
    assert all(a <= b for a, b in zip(ms, ms[1:]))
    full = tartar_lower_form(1e8)["C"]
    lo = tartar_lower_form(1e8, V_grid=np.geomspace(1e4, 1e8, 17))["C"]
    hi = tartar_lower_form(1e8, V_grid=np.geomspace(1e8, 1e12, 17))["C"]
    assert full > 0
    for c in (lo, hi):
        assert abs(c / full - 1) <= 0.10
