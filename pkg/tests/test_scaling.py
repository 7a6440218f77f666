import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from nucleation.scaling import (FAMILIES, InfeasibleError, InsufficientDataError, OptimizerConfig, ScalingReport,
                                compare_models, fit_power_law, fit_stretched_log, golden_section, lens_branch_r_max,
                                optimize_params, predicted_scaling, sweep, tartar_r_min)
from nucleation.constructions import tartar_cell_count


def test_power_fit_synthetic():
    V = np.geomspace(1e2, 1e6, 5)
    f = fit_power_law((V, 3.0 * V**0.6))
    assert f.slope == pytest.approx(0.6, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert f.r2 == pytest.approx(1.0)


def test_power_fit_window_and_insufficient():
    V = np.geomspace(1e2, 1e6, 5)
    with pytest.raises(InsufficientDataError):
        fit_power_law((V, V), V_min=1e3, V_max=1e5)
    assert fit_power_law((V, V), V_min=1e3).points == 4


def test_stretched_fit_synthetic():
    V = np.geomspace(1e2, 1e8, 7)
    E = V * np.exp(-2 * np.sqrt(np.log(V)))
    f = fit_stretched_log((V, E))
    assert f.slope == pytest.approx(2.0, abs=1e-10)
    assert f.r2 == pytest.approx(1.0)


def test_stretched_fit_errors():
    with pytest.raises(InsufficientDataError):
        fit_stretched_log((np.geomspace(2, 100, 4), np.ones(4)))
    with pytest.raises(ValueError):
        fit_stretched_log((np.geomspace(0.5, 100, 6), np.ones(6)))


def test_model_discrimination():
    V = np.geomspace(1e2, 1e8, 7)
    power = compare_models((V, V**0.6))
    assert power["power"] > power["stretched_log"]
    stretched = compare_models((V, V * np.exp(-1.5 * np.sqrt(np.log(V)))))
    assert stretched["stretched_log"] > stretched["power"]


def test_golden_section_quadratic():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2, -2.0, 2.0, 40)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("key, table", [
    ("lens21", (Fraction(1, 2), Fraction(3, 5), Fraction(4, 5))),
    ("lens_branch_4w", (Fraction(1, 2), Fraction(5, 7), Fraction(4, 7))),
])
def test_predicted_family(key, table):
    t = predicted_scaling(key)
    assert (t["V<=1"], t["V>1"], t["eps_exponent"]) == table


def test_predicted_nm():
    t = predicted_scaling(n=3, m=3)
    assert (t["V<=1"], t["V>1"], t["eps_exponent"]) == (Fraction(2, 3), Fraction(6, 7), Fraction(3, 7))
    assert predicted_scaling(n=3, m=2)["V>1"] == Fraction(9, 11)
    assert predicted_scaling(n=4, m=4)["status"] == "conjecture"


def test_predicted_one_plus_one():
    t = predicted_scaling("one_plus_one", n=2)
    assert (t["V<=1"], t["V>1"], t["eps_exponent"]) == (Fraction(1, 2), Fraction(2, 3), Fraction(2, 3))


def test_predicted_diamond_3d():
    assert predicted_scaling("diamond_nd", n=3)["V>1"] == Fraction(3, 4)


def test_eps_exponent_identity():
    for n in (2, 3):
        for m in (1, 2, 3):
            t = predicted_scaling(n=n, m=m)
            assert t["eps_exponent"] == n * (1 - t["V>1"])
    # published eps powers of the first- and second-order laws
    assert predicted_scaling(n=2, m=1)["eps_exponent"] == Fraction(4, 5)
    assert predicted_scaling(n=3, m=2)["eps_exponent"] == Fraction(6, 11)


def test_predicted_unknown():
    with pytest.raises(ValueError):
        predicted_scaling("hexagon")


def test_optimizer_regime():
    with pytest.raises(InfeasibleError):
        optimize_params("lens21", 0.5)


def test_optimizer_lens21_relation():
    Hs = [optimize_params("lens21", V).params["H"] for V in (1e3, 1e4, 1e5)]
    slope = np.polyfit(np.log([1e3, 1e4, 1e5]), np.log(Hs), 1)[0]
    assert slope == pytest.approx(0.6, rel=0.10)


def test_optimizer_reports_admissible():
    o = optimize_params("diamond_nd", 1e3)
    assert o.admissible
    assert o.energy.V == pytest.approx(1e3, rel=1e-9)


def test_sweep_grid_validation():
    with pytest.raises(ValueError):
        sweep("lens21", [])
    with pytest.raises(ValueError):
        sweep("lens21", [1e3, 1e2])
    with pytest.raises(ValueError):
        sweep("lens21", [0.5, 10])
    with pytest.raises(ValueError, match="unknown family"):
        sweep("nonexistent", [10, 100])


def test_sweep_deterministic_csv(tmp_path):
    cfg = OptimizerConfig()
    a = sweep("lens21", [1e2, 1e3], cfg).write_csv(tmp_path / "a.csv").read_bytes()
    b = sweep("lens21", [1e2, 1e3], cfg, jobs=2).write_csv(tmp_path / "b.csv").read_bytes()
    assert a == b


def test_sweep_energy_monotone():
    rep = sweep("lens21", [1e2, 1e3, 1e4, 1e5])
    assert np.all(np.diff(rep.E) > 0)
    assert all(r["admissible"] for r in rep.rows)


def test_report_write(tmp_path):
    rep = sweep("lens21", [1e2, 1e3, 1e4, 1e5])
    rep.fits.append(fit_power_law(rep))
    c, j = rep.write(tmp_path, "20260101T000000")
    assert c.name == f"lens21_{rep.wellset}_20260101T000000.csv"
    with open(c, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["V", "H", "L", "E_el", "E_surf", "E_total", "admissible"]
    assert float(rows[2]["E_total"]) == rep.rows[2]["E_total"]
    assert json.loads(j.read_text())["fits"][0]["model"] == "power"


def test_strict_sweep_propagates_infeasibility():
    with pytest.raises(InfeasibleError, match="V="):
        sweep("tartar_k", [2.0, 3.0], OptimizerConfig(max_cells=10))
    rep = sweep("tartar_k", [2.0, 3.0], OptimizerConfig(max_cells=10), strict=False)
    assert len(rep.failures) == 2 and not rep.rows


def test_lens_branch_r_max_is_aspect_limit():
    L, H = 40.0, 100.0
    r = lens_branch_r_max(L, H)
    assert L / 2 * (1 - 2 * r / H) == pytest.approx(4 * r)


def test_tartar_r_min_respects_budget():
    L, k, budget = 300.0, 3, 50_000
    r = tartar_r_min(L, k, budget)
    assert tartar_cell_count(L, L, r, k) <= budget


def test_registry_covers_families():
    assert set(FAMILIES) == {"ball", "lens21", "branch_rect21", "branch_rect_nd", "diamond_nd", "lens_branch_4w",
                             "double_branch_4w", "tartar_k"}


def test_report_sorted_empty():
    rep = ScalingReport("lens21", "two_well(1/2)")
    assert rep.V.size == 0
