"""Property-based checks (hypothesis)."""

from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from nucleation.constructions import (branching_block, construct_diamond_nd, construct_lens21,
                                      construct_lens_branch_4w, construct_tartar)
from nucleation.energy import EnergyBreakdown, admissibility_tolerance, exact_energy, rescale_energy
from nucleation.fourier_lab import Cone, component_mass, cone_mass, cone_residual, low_frequency_mass, lower_exponent
from nucleation.geometry import GridField, check_admissible
from nucleation.scaling import lens_branch_r_max
from nucleation.wells import interpolate_relation, make_well_set, project_to_K0

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=12)


@st.composite
def fields(draw, n=2):
    N = draw(st.sampled_from([8, 16, 32]))
    vals = draw(st.lists(st.sampled_from([-2.0, -1.0, 0.0, 1.0, 3.0]), min_size=N**n, max_size=N**n))
    c = np.zeros((n,) + (N,) * n)
    c[0] = np.reshape(vals, (N,) * n)
    c[1] = np.roll(c[0], 1, axis=0) * 0.5
    return GridField(n, draw(st.floats(1.0, 20.0)), N, c)


@SETTINGS
@given(fields(), st.floats(0.05, 1.0), st.floats(0.1, 10.0), st.integers(0, 1))
def test_parseval(f, mu, R, axis):
    c = Cone(axis, mu, R)
    total = component_mass(f, axis)
    assert abs(cone_mass(f, c) + cone_residual(f, c) - total) <= 1e-10 * max(total, 1e-300) + 1e-14


@SETTINGS
@given(fields(), st.floats(0.05, 0.5), st.floats(1.0, 2.0), st.floats(0.1, 5.0), st.floats(1.0, 3.0))
def test_cone_monotone(f, mu, grow_mu, R, grow_R):
    small = cone_residual(f, Cone(0, mu, R))
    big = cone_residual(f, Cone(0, min(mu * grow_mu, 1.0), R * grow_R))
    assert big <= small * (1 + 1e-12) + 1e-14


@SETTINGS
@given(fields(), st.floats(0.05, 1.0), st.floats(0.05, 20.0))
def test_low_frequency_bound(f, mu, R):
    mass, bound = low_frequency_mass(f, Cone(0, mu, R))
    assert 0 <= mass <= bound * (1 + 1e-12)


@given(st.integers(2, 8), st.integers(1, 30))
def test_lower_exponent_monotone(n, m):
    e = lower_exponent(n, m)
    assert 0 < e < 1
    assert lower_exponent(n, m + 1) > e
    assert lower_exponent(n + 1, m) > e


def test_lower_exponent_limit():
    assert 1 - lower_exponent(2, 10_000) < 1e-3


@given(st.floats(1e-3, 1e3), st.floats(0, 1e3), st.floats(1e-3, 1e2), st.integers(2, 3), st.floats(0.1, 10))
def test_rescale_homogeneity(el, sf, V, n, eps):
    b = EnergyBreakdown(el, sf, 1.0, el + sf, V)
    r = rescale_energy(b, eps, n)
    assert np.isclose(r.total, eps**n * b.total, rtol=1e-12)
    assert np.isclose(r.total, r.elastic + r.epsilon * r.surface, rtol=1e-12)
    back = rescale_energy(r, 1 / eps, n)
    assert np.isclose(back.total, b.total, rtol=1e-12) and np.isclose(back.V, V, rtol=1e-12)


@given(st.dictionaries(rationals, rationals, min_size=1, max_size=6))
def test_interpolation_reproduces_pairs(data):
    p = interpolate_relation(data.items())
    assert all(p(s) == t for s, t in data.items())


@given(st.lists(st.floats(-4, 4), min_size=2, max_size=2))
def test_projection_zero_iff_member(d):
    K = make_well_set("four_well_2d")
    label, dist = project_to_K0(np.diag(d), K)
    member = tuple(K.as_array()[label]) == tuple(d)
    assert (dist == 0) == member


def _admissible(con):
    s = con.scene
    assert check_admissible(s).ok(admissibility_tolerance(s))
    assert abs(s.support_volume() / con.params.V - 1) <= 1e-9


@SETTINGS
@given(st.fractions(Fraction(1, 10), Fraction(9, 10), max_denominator=10), st.floats(1.1, 20), st.floats(1.05, 5))
def test_lens_random_params(lam, L, aspect):
    _admissible(construct_lens21(lam, L, L * aspect))


@SETTINGS
@given(st.integers(2, 3), st.floats(1.1, 10), st.floats(1.05, 4))
def test_diamond_random_params(n, L, aspect):
    _admissible(construct_diamond_nd(n, L, L * aspect))


@SETTINGS
@given(st.floats(5, 50), st.floats(0.5, 4), st.floats(0.1, 0.9))
def test_block_random_params(l, h, w):
    assume(l > 4 * h)
    K = make_well_set("four_well_2d")
    c = branching_block(K, 1, 2, w, l, h)
    assert check_admissible(c.scene).ok(admissibility_tolerance(c.scene))


@SETTINGS
@given(st.floats(6, 20), st.floats(2, 6), st.floats(0.4, 0.95))
def test_lens_branch_random_params(L, aspect, rho):
    H = L * aspect
    _admissible(construct_lens_branch_4w(L, H, rho * lens_branch_r_max(L, H)))


@SETTINGS
@given(st.floats(10, 40), st.floats(0.15, 0.45), st.integers(1, 2))
def test_tartar_random_params(L, frac, k):
    c = construct_tartar(L, L, frac * L, k)
    assert check_admissible(c.scene).ok(admissibility_tolerance(c.scene))
    assert abs(c.scene.support_volume() / (L * L) - 1) <= 1e-9
    assert exact_energy(c.scene, check=False).total > 0
