import csv
from types import SimpleNamespace

import numpy as np
import pytest
import statsmodels.api as sm

from rdquant.datasets import (
    density_jump_sample,
    noiseless_linear_fixture,
    noiseless_quadratic_fixture,
    planted_rdd,
)
from rdquant.exceptions import (
    BandwidthTooSmallError,
    CollinearityError,
    DomainError,
    InsufficientDataError,
    SchemaError,
    ValidationError,
)
from rdquant.grid import PopulationProfile
from rdquant.rdd import (
    EffectEstimate,
    RddDataset,
    UnitsTable,
    counterfactual_lines,
    effect_to_eta,
    fit_global,
    fit_local,
    load_rdd_dataset,
    load_units,
    mccrary_test,
    reassign_units,
    save_rdd_dataset,
    select_bandwidth_cv,
)


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


# --- loading ---------------------------------------------------------------------


def test_load_balanced(tmp_path):
    d = np.linspace(-1, 1, 100)
    d = d[d != 0]
    rows = [(f"u{i}", x, 2 * x) for i, x in enumerate(np.concatenate([d[:50], d[-50:]]))]
    data = load_rdd_dataset(write_rows(tmp_path / "r.csv", ["unit_id", "distance", "outcome"], rows),
                            "outcome", "distance", [], 0.0)
    assert (data.n_left, data.n_right) == (50, 50)
    assert data.n_dropped == 0


def test_load_one_sided(tmp_path):
    rows = [(f"u{i}", 0.1 + i, 1.0) for i in range(30)]
    with pytest.raises(InsufficientDataError):
        load_rdd_dataset(write_rows(tmp_path / "r.csv", ["unit_id", "distance", "outcome"], rows))


def test_load_drops_blank_rows(tmp_path):
    rows = [(f"u{i}", x, "" if i in (3, 17, 40) else x) for i, x in enumerate(np.linspace(-1, 1, 60))]
    data = load_rdd_dataset(write_rows(tmp_path / "r.csv", ["unit_id", "distance", "outcome"], rows))
    assert data.n_dropped == 3
    assert len(data) == 57


def test_load_controls_and_unknown_column(tmp_path):
    rows = [(f"u{i}", x, x, i % 3, "") for i, x in enumerate(np.linspace(-1, 1, 40))]
    path = write_rows(tmp_path / "r.csv", ["unit_id", "distance", "outcome", "age", "note"], rows)
    data = load_rdd_dataset(path, control_cols=["age"])
    assert data.control_names == ("age",)
    assert data.controls.shape == (40, 1)
    with pytest.raises(SchemaError, match="income"):
        load_rdd_dataset(path, control_cols=["income"])


def test_save_load_round_trip(tmp_path):
    data = planted_rdd(200, seed=1, control_coef=0.5)
    save_rdd_dataset(data, tmp_path / "r.csv")
    back = load_rdd_dataset(tmp_path / "r.csv", control_cols=["c"])
    np.testing.assert_array_equal(back.distance, data.distance)
    np.testing.assert_array_equal(back.outcome, data.outcome)
    np.testing.assert_array_equal(back.controls, data.controls)


def test_dataset_validation():
    d = np.linspace(-1, 1, 40)
    with pytest.raises(ValidationError, match="unique"):
        RddDataset(["a"] * 40, d, d)
    with pytest.raises(ValidationError, match="NaN"):
        RddDataset(np.arange(40), d, np.where(d > 0.5, np.nan, d))


# --- local and global fits ---------------------------------------------------------


def test_noiseless_local_fit():
    f = fit_local(noiseless_linear_fixture(), 1.0)
    assert f.beta1 == pytest.approx(1.5, abs=1e-9)
    assert len(f.coef) == 4 and np.all(f.se >= 0)
    assert (f.n_left, f.n_right) == (20, 20)


def test_no_discontinuity():
    base = noiseless_linear_fixture()
    f = fit_local(RddDataset(base.unit_id, base.distance, base.distance.copy()), 1.0)
    assert abs(f.beta1) < 1e-9


def test_planted_local_fit_within_three_se():
    f = fit_local(planted_rdd(2000, -0.5, seed=7), 0.5)
    assert abs(f.beta1 + 0.5) < 3 * f.se[1]


def test_bandwidth_too_small():
    with pytest.raises(BandwidthTooSmallError):
        fit_local(noiseless_linear_fixture(), 0.12)
    with pytest.raises(DomainError):
        fit_local(noiseless_linear_fixture(), -1.0)


def test_noiseless_quadratic_global_fit():
    f = fit_global(noiseless_quadratic_fixture(), 2)
    assert f.beta1 == pytest.approx(0.5, abs=1e-9)
    assert len(f.coef) == 2 + 2 * 2


def test_global_poly_guard():
    with pytest.raises(DomainError):
        fit_global(noiseless_quadratic_fixture(), 6)
    with pytest.raises(DomainError):
        fit_global(noiseless_quadratic_fixture(), 0)


def test_collinear_control_named():
    base = planted_rdd(300, seed=2)
    data = RddDataset(base.unit_id, base.distance, base.outcome, np.full((300, 1), 3.0), ("const",))
    with pytest.raises(CollinearityError) as err:
        fit_global(data, 1)
    assert set(err.value.columns) & {"const", "intercept"}


def test_relevant_control_tightens_se():
    with_c = planted_rdd(2000, -0.5, seed=3, control_coef=1.5)
    without = RddDataset(with_c.unit_id, with_c.distance, with_c.outcome)
    assert fit_global(with_c, 1).se[1] <= fit_global(without, 1).se[1]


def test_hc1_matches_statsmodels():
    data = planted_rdd(800, -0.5, seed=11, control_coef=0.7)
    for fit in (fit_local(data, 0.6), fit_global(data, 3)):
        if fit.kind == "local":
            m = np.abs(data.centered) <= 0.6
            sub = data.subset(m)
        else:
            sub = data
        ref = sm.OLS(sub.outcome, fit.design).fit(cov_type="HC1")
        np.testing.assert_allclose(fit.coef, ref.params, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(fit.se, ref.bse, rtol=1e-10)


def test_residuals_orthogonal_to_design():
    data = planted_rdd(500, seed=5, control_coef=1.0)
    for fit in (fit_local(data, 0.5), fit_global(data, 2)):
        assert np.max(np.abs(fit.design.T @ fit.residuals)) < 1e-9


def test_wide_local_equals_linear_global():
    data = planted_rdd(400, seed=6)
    wide = fit_local(data, float(np.max(np.abs(data.centered))))
    assert wide.beta1 == pytest.approx(fit_global(data, 1).beta1, rel=1e-12)


def test_affine_outcome_and_translation():
    data = planted_rdd(600, -0.5, seed=8)
    base = fit_local(data, 0.5)
    moved = RddDataset(data.unit_id, data.distance, 3.0 * data.outcome + 7.0)
    f = fit_local(moved, 0.5)
    assert f.beta1 == pytest.approx(3.0 * base.beta1, rel=1e-10)
    assert f.effect.z == pytest.approx(base.effect.z, rel=1e-10)
    # shifts by a power of two keep distances exact
    shifted = RddDataset(data.unit_id, data.distance + 4.0, data.outcome, cutoff=4.0)
    g = fit_local(shifted, 0.5)
    assert g.beta1 == pytest.approx(base.beta1, rel=1e-9)
    assert g.se[1] == pytest.approx(base.se[1], rel=1e-9)


def test_effect_estimate_p_value():
    e = EffectEstimate.from_estimate(-1.96, 1.0)
    assert e.p_value == pytest.approx(0.05, abs=1e-4)
    assert EffectEstimate.from_estimate(3.0, 1.0).significant_at == 0.01
    assert EffectEstimate.from_estimate(0.1, 1.0).significant_at is None


# --- bandwidth selection -----------------------------------------------------------


def test_cv_noiseless_picks_smallest_feasible():
    data = noiseless_linear_fixture()
    assert select_bandwidth_cv(data, [1.0, 0.5, 0.3, 0.1]) == 0.3


def test_cv_single_element():
    assert select_bandwidth_cv(planted_rdd(300, seed=1), [0.4]) == 0.4


def test_cv_avoids_curved_region():
    rng = np.random.default_rng(21)
    d = rng.uniform(-3, 3, 3000)
    y = 0.5 * (d >= 0) + 0.2 * d + np.where(np.abs(d) > 1, 4.0 * (np.abs(d) - 1) ** 2, 0.0)
    y = y + 0.1 * rng.standard_normal(d.size)
    bw = select_bandwidth_cv(RddDataset(np.arange(d.size), d, y), [0.5, 1.0, 2.0, 3.0])
    assert bw <= 1.0


def test_cv_all_infeasible_lists_failures():
    with pytest.raises(BandwidthTooSmallError, match="0.01"):
        select_bandwidth_cv(noiseless_linear_fixture(), [0.01, 0.02])
    with pytest.raises(DomainError):
        select_bandwidth_cv(noiseless_linear_fixture(), [])


# --- McCrary -----------------------------------------------------------------------


def test_mccrary_null():
    r = mccrary_test(density_jump_sample(5000, 1.0, seed=1), 40)
    assert abs(r.log_ratio) < 0.2
    assert not r.manipulated


def test_mccrary_jump():
    r = mccrary_test(density_jump_sample(5000, 2.0, seed=2), 40)
    assert r.log_ratio == pytest.approx(np.log(2), abs=0.15)
    assert r.manipulated


def test_mccrary_small_sample_wide_se():
    big = mccrary_test(density_jump_sample(5000, 2.0, seed=3))
    small = mccrary_test(RddDataset(*_sample40()))
    assert small.se > 4 * big.se


def _sample40():
    d = density_jump_sample(40, 2.0, seed=4)
    return d.unit_id, d.distance, d.outcome, None, (), 0.0, 0


def test_mccrary_size_under_null():
    rejections = [mccrary_test(density_jump_sample(2000, 1.0, seed=s)).manipulated for s in range(500)]
    assert np.mean(rejections) <= 0.10


def test_mccrary_argument_checks():
    with pytest.raises(DomainError):
        mccrary_test(noiseless_linear_fixture(), 8)
    d = np.linspace(0.1, 1, 30)
    one_sided = RddDataset(np.arange(30), d, d, min_side=0)
    with pytest.raises(InsufficientDataError):
        mccrary_test(one_sided)


# --- counterfactual lines ----------------------------------------------------------


def test_counterfactual_line_arithmetic():
    f = fit_local(noiseless_linear_fixture(), 1.0)
    lines = counterfactual_lines(f, [0.5, 0.0, -0.5, 1.5])
    assert lines.observed[0] == pytest.approx(3.65, abs=1e-9)
    assert lines.counterfactual[0] == pytest.approx(2.15, abs=1e-9)
    assert lines.observed[1] - lines.counterfactual[1] == pytest.approx(f.beta1, abs=1e-12)
    assert lines.observed[2] == pytest.approx(2.0 - 0.15, abs=1e-9)
    assert lines.in_support.tolist() == [True, True, True, False]
    assert set(lines.rows()[0]) == {"distance", "observed_side_prediction", "counterfactual_prediction",
                                    "in_support"}


def test_counterfactual_curves_coincide_without_effect():
    f = fit_local(planted_rdd(4000, 0.0, seed=9, beta3=0.0, sigma=0.5), 0.8)
    lines = counterfactual_lines(f, np.linspace(-0.8, 0.8, 9))
    gap = np.abs(lines.observed - lines.counterfactual)
    assert np.all(gap < 4 * f.se[1] + 4 * f.se[3])


# --- effect to eta -----------------------------------------------------------------


@pytest.mark.parametrize("beta1, eta", [(-1.194, 1.194), (-0.522, 0.522)])
def test_effect_to_eta_table_values(beta1, eta):
    assert effect_to_eta(EffectEstimate.from_estimate(beta1, 0.1)) == eta


def test_effect_to_eta_zero_warns():
    with pytest.warns(UserWarning, match="not significant"):
        assert effect_to_eta(EffectEstimate.from_estimate(0.0, 0.3)) == 0.0


# --- reassignment ------------------------------------------------------------------


@pytest.fixture
def degree_grid():
    # 1-degree cells from -180: boundary cell b sits at longitude -179 + b
    return PopulationProfile(np.ones(360))


def units(lons):
    n = len(lons)
    return UnitsTable([f"u{i}" for i in range(n)], lons, np.zeros(n), None)


def test_reassign_examples(degree_grid):
    part = SimpleNamespace(boundaries=(0, 194))  # -179 and 15 degrees east
    data = reassign_units(units([10.0, 15.0, 179.0, -170.0]), part, degree_grid)
    np.testing.assert_allclose(data.distance, [-5.0, 0.0, -2.0, 9.0])
    np.testing.assert_array_equal(data.treated, [0, 1, 0, 1])


def test_reassign_scale_and_wrapping(degree_grid):
    part = SimpleNamespace(boundaries=(194,))
    with pytest.warns(UserWarning, match="wrapped"):
        data = reassign_units(units([370.0, 16.0]), part, degree_grid, scale=69.0)
    np.testing.assert_allclose(data.distance, [-5.0 * 69.0, 69.0])


def test_load_units(tmp_path):
    path = write_rows(tmp_path / "u.csv", ["unit_id", "longitude_deg", "outcome", "x"],
                      [("a", 1.5, 2.0, 3.0), ("b", -20, "", 1.0)])
    u = load_units(path)
    assert u.control_names == ("x",)
    assert u.unit_id.tolist() == ["a"]
