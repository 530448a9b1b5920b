import dataclasses
import warnings

import numpy as np
import pytest

from conftest import random_profiles
from rdquant.distortion import ObjectiveConfig, partition_cost
from rdquant.dp_quantizer import design_fixed_k
from rdquant.exceptions import ConstraintError, DomainError
from rdquant.grid import PopulationProfile
from rdquant.vi_quantizer import (
    bellman_residual,
    build_mdp,
    design_fixed_k_vi,
    extract_policy,
    horizon_bound,
    value_iteration,
)


def test_eight_cell_mdp_layout(two_spikes):
    mdp = build_mdp(two_spikes, 2, 0)
    states = mdp.states()
    assert states[0] == mdp.root == (0, 0)
    assert mdp.is_terminal(states[-1])
    assert len(states) <= 8 * 2 + 1
    assert mdp.actions((0, 0)) == [2, 3, 4, 5, 6]
    assert mdp.actions((4, 1)) == [0]
    assert mdp.successor((0, 0), 3) == (3, 1)
    assert mdp.reward((0, 0), 3) == 0.0
    with pytest.raises(DomainError):
        mdp.actions((1, 1))
    with pytest.raises(DomainError):
        mdp.reward((0, 0), 7)


def test_single_layer():
    p = PopulationProfile(np.arange(1.0, 7.0))
    mdp = build_mdp(p, 1, 2)
    assert mdp.states() == [(2, 0), (2, 1)]
    assert mdp.actions(mdp.root) == [2]
    vt = value_iteration(mdp)
    assert extract_policy(vt, mdp).boundaries == (2,)


def test_actions_respect_width_floor():
    for i, p in enumerate(random_profiles(8, 100, (6, 16))):
        cfg = ObjectiveConfig(min_width=2 + i % 2)
        n = p.n_cells
        k = 1 + i % max(1, n // cfg.min_width)
        k = min(k, n // cfg.min_width)
        mdp = build_mdp(p, k, i % n, cfg)
        for s in mdp.states():
            if mdp.is_terminal(s):
                continue
            start, level = s
            covered = (start - mdp.anchor) % n
            for a in mdp.actions(s):
                w = (a - start) % n or n
                assert w >= cfg.min_width
                assert n - covered - w >= (k - level - 1) * cfg.min_width
                if level == k - 1:
                    assert covered + w == n


def test_infeasible_mdp():
    with pytest.raises(ConstraintError):
        build_mdp(PopulationProfile(np.ones(8)), 5, 0)
    with pytest.raises(DomainError):
        build_mdp(PopulationProfile(np.ones(8)), 2, 8)


def test_horizon_bound_examples():
    assert horizon_bound(1.0, 0.5, 0.1) == 6
    assert horizon_bound(0.0, 0.5, 0.1) == 1
    assert horizon_bound(1.0, 0.999, 1e-3) > horizon_bound(1.0, 0.9, 1e-3)
    with pytest.raises(DomainError):
        horizon_bound(1.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        horizon_bound(1.0, 0.5, 0.0)


def test_layered_convergence_within_depth():
    for i, p in enumerate(random_profiles(9, 100, (6, 16))):
        k = 1 + i % 3
        mdp = build_mdp(p, k, i % p.n_cells)
        vt = value_iteration(mdp, order="reverse", max_sweeps=50, record=True)
        assert vt.converged
        assert vt.sweeps_run <= k + 1
        np.testing.assert_array_equal(vt.history[-1], vt.history[-2])


def test_synchronous_order_needs_depth_sweeps():
    p = PopulationProfile(np.random.default_rng(1).uniform(0, 1, 12))
    mdp = build_mdp(p, 3, 0)
    vt = value_iteration(mdp, order="synchronous", max_sweeps=20)
    assert vt.converged and vt.sweeps_run == 4
    ref = value_iteration(mdp)
    np.testing.assert_array_equal(vt.values, ref.values)


def test_two_spike_root_value(two_spikes):
    vt = value_iteration(build_mdp(two_spikes, 2, 3))
    assert vt.root_value == 0.0
    part = design_fixed_k_vi(two_spikes, 2)
    assert part == design_fixed_k(two_spikes, 2)


def test_uniform_sixteen_matches_dp():
    p = PopulationProfile(np.ones(16))
    assert design_fixed_k_vi(p, 4) == design_fixed_k(p, 4)


@pytest.mark.parametrize("gamma", [1.0, 0.8])
def test_reward_shift(gamma):
    rng = np.random.default_rng(4)
    for _ in range(10):
        p = PopulationProfile(rng.uniform(0, 1, int(rng.integers(6, 13))))
        k = int(rng.integers(1, 4))
        mdp = build_mdp(p, k, 0)
        shifted = dataclasses.replace(mdp, rewards=mdp.rewards + 2.5)
        a = value_iteration(mdp, gamma, 1e-12, max_sweeps=400)
        b = value_iteration(shifted, gamma, 1e-12, max_sweeps=400)
        expect = sum(gamma ** j * 2.5 for j in range(k))
        assert b.root_value - a.root_value == pytest.approx(expect, abs=1e-9)
        np.testing.assert_array_equal(a.greedy, b.greedy)


def test_values_monotone_and_residual_small():
    p = PopulationProfile(np.random.default_rng(2).uniform(0, 1, 14))
    mdp = build_mdp(p, 3, 5)
    for order, gamma in (("synchronous", 1.0), ("synchronous", 0.7), ("reverse", 0.7)):
        vt = value_iteration(mdp, gamma, 1e-10, order=order, max_sweeps=500, record=True)
        for before, after in zip(vt.history, vt.history[1:]):
            ok = ~np.isnan(before)
            assert np.all(after[ok] >= before[ok] - 1e-15)
        assert bellman_residual(vt, mdp) <= 1e-9


def test_discounted_never_beats_dp():
    for i, p in enumerate(random_profiles(12, 200, (4, 16))):
        k = 1 + i % 3
        if 2 * k > p.n_cells:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vi = design_fixed_k_vi(p, k, gamma=0.9, epsilon=1e-9)
        dp = design_fixed_k(p, k)
        assert partition_cost(p, vi) >= partition_cost(p, dp) * (1 - 1e-12)


def test_unconverged_is_flagged():
    p = PopulationProfile(np.random.default_rng(3).uniform(0, 1, 10))
    mdp = build_mdp(p, 3, 0)
    with pytest.warns(RuntimeWarning, match="sup delta"):
        vt = value_iteration(mdp, 0.99, 1e-9, max_sweeps=1)
    assert not vt.converged
    assert vt.sweeps_run == 1
    with pytest.warns(RuntimeWarning):
        part = extract_policy(vt, mdp)
    assert part.k == 3


def test_threads_do_not_change_result():
    p = PopulationProfile(np.random.default_rng(6).uniform(0, 1, 40))
    assert design_fixed_k_vi(p, 5, n_jobs=1) == design_fixed_k_vi(p, 5, n_jobs=4)


def test_bad_arguments():
    mdp = build_mdp(PopulationProfile(np.ones(8)), 2, 0)
    for kwargs in (dict(gamma=0.0), dict(gamma=1.5), dict(epsilon=0), dict(order="random"),
                   dict(max_sweeps=0)):
        with pytest.raises(DomainError):
            value_iteration(mdp, **kwargs)
