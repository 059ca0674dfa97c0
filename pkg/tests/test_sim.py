import math
from fractions import Fraction as F

import pytest

from refundmech.mechanism import RefundMenu
from refundmech.model import cdf_strict
from refundmech.sim import SHARD_SIZE, NotIncentiveCompatible, choose_options, simulate
from refundmech.solver import solve_general

from conftest import small_random


def outcome_law(inst, menu):
    """Exact distribution of one trial's seller revenue, as {payment: prob}."""
    law = {}
    for i, o in enumerate(choose_options(inst, menu)):
        if o is None:
            law[F(0)] = law.get(F(0), 0) + F(1, inst.m)
            continue
        p, r = menu.options[o]
        for v, g in zip(inst.values, inst.pmf[i]):
            pay = p - r if v < r else p
            law[pay] = law.get(pay, 0) + g / inst.m
    return law


def moments(law):
    mean = sum(x * q for x, q in law.items())
    var = sum((x - mean) ** 2 * q for x, q in law.items())
    return mean, var


def test_instance_b_population_std(inst_b):
    menu = solve_general(inst_b).menu
    mean, var = moments(outcome_law(inst_b, menu))
    assert mean == F(101, 20)
    assert var == F(83610, 4000)
    assert math.sqrt(var) == pytest.approx(4.572, abs=5e-4)


def test_deterministic(inst_b):
    menu = solve_general(inst_b).menu
    assert simulate(inst_b, menu, 5000, seed=3) == simulate(inst_b, menu, 5000, seed=3)
    assert simulate(inst_b, menu, 5000, seed=3) != simulate(inst_b, menu, 5000, seed=4)


def test_threads_do_not_change_results(inst_b):
    menu = solve_general(inst_b).menu
    trials = 3 * SHARD_SIZE + 17
    assert simulate(inst_b, menu, trials, 1) == simulate(inst_b, menu, trials, 1, threads=4)


def test_zero_menu_earns_nothing(inst_a):
    res = simulate(inst_a, RefundMenu(((0, 0),), (0, 0)), 10_000, seed=0)
    assert res.empirical_revenue == 0
    assert res.std_error == 0


def test_non_ic_menu_refused(inst_b):
    bad = RefundMenu(((10, 10), (F(92, 10), 1)), (0, 1))
    with pytest.raises(NotIncentiveCompatible):
        simulate(inst_b, bad, 100, seed=0)
    forced = simulate(inst_b, bad, 1000, seed=0, force=True)
    # type 1 defects to the full-refund option
    assert forced.take_rates[1] == 0


def test_trials_must_be_positive(inst_b):
    with pytest.raises(ValueError):
        simulate(inst_b, solve_general(inst_b).menu, 0, seed=0)


def test_opt_out_bucket(inst_a):
    res = simulate(inst_a, RefundMenu(((5, 0),), (0, 0)), 2000, seed=1, force=True)
    assert res.take_rates == (0.0, 1.0)
    assert res.empirical_revenue == 0


@pytest.mark.parametrize("seed", range(10))
def test_rates_within_three_standard_errors(seed):
    inst = small_random(seed, 5, 5)
    menu = solve_general(inst).menu
    trials = 50_000
    res = simulate(inst, menu, trials, seed)
    picks = choose_options(inst, menu)
    for o in range(len(menu.options)):
        types = [i for i, p in enumerate(picks) if p == o]
        take = len(types) / inst.m
        se = math.sqrt(take * (1 - take) / trials)
        assert abs(res.take_rates[o] - take) <= 3 * se + 1e-12
        if take:
            ret = float(sum(cdf_strict(inst, i, menu.options[o].refund) for i in types) / len(types))
            n_o = res.take_rates[o] * trials
            se_r = math.sqrt(ret * (1 - ret) / n_o)
            assert abs(res.return_rates[o] - ret) <= 3 * se_r + 1e-12


def test_unbiased_at_small_scale(inst_b):
    menu = solve_general(inst_b).menu
    hits = 0
    for seed in range(40):
        res = simulate(inst_b, menu, 20_000, seed)
        hits += abs(res.empirical_revenue - 5.05) <= 3 * res.std_error
    assert hits >= 37


def test_standard_error_matches_population_std(inst_b):
    menu = solve_general(inst_b).menu
    res = simulate(inst_b, menu, 200_000, seed=5)
    assert res.std_error == pytest.approx(4.572 / math.sqrt(200_000), rel=0.02)


def test_json_is_repr_strings(inst_b):
    doc = simulate(inst_b, solve_general(inst_b).menu, 100, 0).to_json()
    assert float(doc["empirical_revenue"]) == pytest.approx(5.05, abs=2)
    assert isinstance(doc["take_rates"][0], str)
