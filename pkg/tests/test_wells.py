from fractions import Fraction as F

import numpy as np
import pytest

from nucleation.wells import (AUSTENITE, F12_EIGHT_WELL, F13_EIGHT_WELL, F13_EIGHT_WELL_PRINTED, F23_EIGHT_WELL,
                              F23_EIGHT_WELL_PRINTED, FAMILIES, G_FOUR_WELL, InconsistentDataError, Polynomial,
                              WellError, WellSet, interpolate_relation, lamination_hulls, lamination_order_of_zero,
                              make_well_set, project_to_K0, standard_relations, verify_relation)


def diags(K):
    return {tuple(w) for w in K.wells}


def test_two_well_half():
    assert diags(make_well_set("two_well", F(1, 2))) == {(F(-1, 2), 0), (F(1, 2), 0)}


def test_four_well_2d_values():
    assert diags(make_well_set("four_well_2d")) == {(-1, -2), (-1, 1), (1, 2), (1, -1)}


def test_tartar_values():
    assert diags(make_well_set("tartar")) == {(-1, -3), (-3, 1), (1, 3), (3, -1)}


@pytest.mark.parametrize("lam", [0, 1, F(3, 2), -1])
def test_two_well_lambda_range(lam):
    with pytest.raises(WellError):
        make_well_set("two_well", lam)


def test_unknown_family():
    with pytest.raises(WellError, match="unknown"):
        make_well_set("nine_well")


def test_wellset_rejects_austenite_and_duplicates():
    with pytest.raises(WellError):
        WellSet(2, ((0, 0), (1, 0)))
    with pytest.raises(WellError):
        WellSet(2, ((1, 0), (1, 0)))


def test_wellset_json_roundtrip():
    K = make_well_set("eight_well_3d")
    assert WellSet.from_json(K.to_json()) == K


@pytest.mark.parametrize("M, label, dist", [
    (np.zeros((2, 2)), AUSTENITE, 0.0),
    (np.diag([-1.0, -2.0]), 1, 0.0),
    (np.diag([0.9, 2.0]), 3, 0.1),
])
def test_projection_examples(M, label, dist):
    got = project_to_K0(M, make_well_set("four_well_2d"))
    assert got[0] == label
    assert got[1] == pytest.approx(dist, abs=1e-12)


def test_projection_tie_prefers_austenite():
    # diag(1/4, 0) is equidistant from 0 and from (1/2, 0)
    K = make_well_set("two_well", F(1, 2))
    assert project_to_K0(np.diag([0.25, 0.0]), K)[0] == AUSTENITE


def test_projection_dimension_mismatch():
    with pytest.raises(WellError):
        project_to_K0(np.eye(3), make_well_set("four_well_2d"))


def test_interpolate_g():
    p = interpolate_relation([(-2, -1), (1, -1), (2, 1), (-1, 1), (0, 0)])
    assert p == G_FOUR_WELL
    assert p.coefficients == (0, F(-3, 2), 0, F(1, 2))


def test_interpolate_identity():
    assert interpolate_relation([(-1, -1), (0, 0), (1, 1)]).coefficients == (0, 1)


def test_interpolate_tartar():
    p = interpolate_relation([(-1, -3), (-3, 1), (1, 3), (3, -1), (0, 0)])
    assert p.coefficients == (0, F(41, 12), 0, F(-5, 12))


def test_interpolate_conflict():
    with pytest.raises(InconsistentDataError):
        interpolate_relation([(1, 2), (1, 3)])


def test_g_on_four_well():
    assert verify_relation(make_well_set("four_well_2d"), 1, 0, G_FOUR_WELL).passed


def test_g_on_four_well_3d_sum():
    assert verify_relation(make_well_set("four_well_3d"), [1, 2], 0, G_FOUR_WELL).passed


def test_f12_verifies():
    assert verify_relation(make_well_set("eight_well_3d"), 0, 1, F12_EIGHT_WELL).passed


def test_f12_at_one():
    # (-15 + 154 + 2905 - 23204) / 20160
    assert F12_EIGHT_WELL(1) == F(-15 + 154 + 2905 - 23204, 20160) == -1


def test_f23_printed_fails_and_corrected_passes():
    K = make_well_set("eight_well_3d")
    bad = verify_relation(K, 1, 2, F23_EIGHT_WELL_PRINTED)
    assert not bad.passed
    assert F23_EIGHT_WELL_PRINTED(2) == F(13, 3)
    assert verify_relation(K, 1, 2, F23_EIGHT_WELL).passed


def test_f13_interpolated_passes_printed_differs():
    K = make_well_set("eight_well_3d")
    assert verify_relation(K, 0, 2, F13_EIGHT_WELL).passed
    rep = verify_relation(K, 0, 2, F13_EIGHT_WELL_PRINTED)
    assert rep.failures()[5] == F(1, 168)


def test_standard_relations_vanish_at_zero():
    for fam in FAMILIES:
        for r in standard_relations(make_well_set(fam)):
            assert r.poly(0) == 0


@pytest.mark.parametrize("fam, order", [
    ("two_well", 1), ("four_well_2d", 2), ("four_well_3d", 2), ("eight_well_3d", 3), ("tartar", None),
    ("symmetric_pair", 1), ("single_well_rank1", None),
])
def test_lamination_orders(fam, order):
    assert lamination_order_of_zero(make_well_set(fam), 10) == order


def test_lamination_monotone_in_max_order():
    K = make_well_set("eight_well_3d")
    assert lamination_order_of_zero(K, 2) is None
    assert all(lamination_order_of_zero(K, m) == 3 for m in range(3, 8))


def test_four_well_second_hull_contains_square():
    hull = lamination_hulls(make_well_set("four_well_2d"), 2)[2]
    for x in (-1, 0, F(1, 2), 1):
        for y in (-1, F(-1, 3), 0, 1):
            assert hull.contains((x, y))


def test_lamination_bad_max_order():
    with pytest.raises(WellError):
        lamination_order_of_zero(make_well_set("two_well"), 0)


def test_polynomial_array_eval():
    t = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    assert np.array_equal(G_FOUR_WELL(t), [-1, 1, 0, -1, 1])
    assert Polynomial((0, 0, 0)).degree == 0
