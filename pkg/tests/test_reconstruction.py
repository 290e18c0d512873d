import numpy as np
import pytest

import oracles
from l0spikes.extended_costs import ARp, Intercept, intercept_cost_extend, intercept_cost_init, intercept_cost_value
from l0spikes.model import InvalidChangepoints, SpikeFit
from l0spikes.reconstruction import (
    deconvolve,
    fit_objective,
    positivity_audit,
    reconstruct,
    reconstruct_ar1,
    reconstruct_arp,
    reconstruct_intercept,
)
from l0spikes.simulation import SimConfig, simulate
from l0spikes.solvers import solve_pelt


def random_cps(rng, T):
    k = int(rng.integers(0, max(1, T // 5)))
    return tuple(sorted(rng.choice(np.arange(1, T), size=min(k, T - 1), replace=False).tolist()))


def test_worked_example():
    fit = reconstruct_ar1([1, 0.5, 5, 2.5], [2], 0.5)
    assert fit.calcium.tolist() == [1.0, 0.5, 5.0, 2.5]
    assert fit.spike_times == (3,)
    assert fit.spike_magnitudes.tolist() == [4.75]


def test_no_changepoints_on_exact_decay():
    fit = reconstruct_ar1([2, 1, 0.5], [], 0.5)
    assert fit.calcium.tolist() == [2.0, 1.0, 0.5]
    assert fit.k == 0


def test_recursion_holds_exactly_between_spikes(rng):
    for _ in range(50):
        g = rng.uniform(0.1, 0.99)
        y = rng.normal(size=150)
        fit = reconstruct_ar1(y, random_cps(rng, 150), g)
        heads = {1, *fit.spike_times}
        for t in range(2, 151):
            if t not in heads:
                assert fit.calcium[t - 1] == g * fit.calcium[t - 2]


def test_residual_orthogonality(rng):
    for _ in range(100):
        g = rng.uniform(0.1, 0.99)
        T = int(rng.integers(2, 200))
        y = rng.normal(size=T)
        cps = random_cps(rng, T)
        fit = reconstruct_ar1(y, cps, g)
        bounds = (0,) + cps + (T,)
        for a, b in zip(bounds, bounds[1:]):
            gp = g ** np.arange(b - a)
            assert abs((y[a:b] - fit.calcium[a:b]) @ gp) <= 1e-8


def test_head_value_is_the_unconstrained_minimizer(rng):
    for _ in range(30):
        g = rng.uniform(0.1, 0.99)
        y = rng.normal(size=40)
        fit = reconstruct_ar1(y, [], g)
        gp = g ** np.arange(40)
        base = 0.5 * np.sum((y - fit.calcium) ** 2)
        for delta in (1e-3, -1e-3):
            assert 0.5 * np.sum((y - fit.calcium - delta * gp) ** 2) > base


def test_magnitudes_are_jumps_past_the_recursion(rng):
    y = rng.normal(size=30)
    fit = reconstruct_ar1(y, [5, 17], 0.8)
    for t, m in zip(fit.spike_times, fit.spike_magnitudes):
        assert m == fit.calcium[t - 1] - 0.8 * fit.calcium[t - 2]


def test_no_spike_reported_at_first_timestep(rng):
    fit = reconstruct_ar1(rng.normal(size=10), [1], 0.5)
    assert fit.spike_times == (2,)


def test_invalid_changepoints():
    for cps in ([0], [4], [2, 2]):
        with pytest.raises(InvalidChangepoints):
            reconstruct_ar1([1, 2, 3, 4], cps, 0.5)


def test_intercept_constant_trace():
    fit = reconstruct_intercept([5, 5, 5, 5], [], 0.5)
    assert fit.intercepts == pytest.approx([5, 5, 5, 5], abs=1e-12)
    assert fit.calcium == pytest.approx([0, 0, 0, 0], abs=1e-12)
    assert fit.k == 0


def test_intercept_piecewise_exact():
    y = [5, 5, 1 + 2 * 0.5 ** 0, 1 + 2 * 0.5 ** 1]
    fit = reconstruct_intercept(y, [2], 0.5)
    assert fit.intercepts[2:] == pytest.approx([1, 1], abs=1e-12)
    assert fit.calcium[2] == pytest.approx(2.0, abs=1e-12)
    assert fit.fitted == pytest.approx(y, abs=1e-12)


def test_intercept_segments_match_cost_state(rng):
    for _ in range(50):
        g = rng.uniform(0.1, 0.99)
        T = int(rng.integers(2, 80))
        y = rng.normal(size=T) + 3
        cps = random_cps(rng, T)
        fit = reconstruct_intercept(y, cps, g)
        bounds = (0,) + cps + (T,)
        for a, b in zip(bounds, bounds[1:]):
            st = intercept_cost_init(y[a], g)
            for v in y[a + 1:b]:
                st = intercept_cost_extend(st, v)
            d, c, b0 = intercept_cost_value(st)
            assert fit.calcium[a] == pytest.approx(c, abs=1e-8)
            assert np.all(fit.intercepts[a:b] == fit.intercepts[a])
            assert fit.intercepts[a] == pytest.approx(b0, abs=1e-8)
            r = y[a:b] - fit.fitted[a:b]
            assert 0.5 * r @ r == pytest.approx(d, abs=1e-8)


def test_arp_p1_matches_ar1(rng):
    for _ in range(30):
        g = rng.uniform(0.1, 0.99)
        y = rng.normal(size=60)
        cps = random_cps(rng, 60)
        a = reconstruct_ar1(y, cps, g)
        b = reconstruct_arp(y, cps, (g,))
        assert np.allclose(a.calcium, b.calcium, rtol=1e-10, atol=1e-12)
        assert a.spike_times == b.spike_times
        assert np.allclose(a.spike_magnitudes, b.spike_magnitudes, rtol=1e-10, atol=1e-12)


def test_arp_difference_of_exponentials():
    k = np.arange(50)
    y = 3 * 0.8 ** k - 1.5 * 0.3 ** k
    fit = reconstruct_arp(y, [], (1.1, -0.24))
    assert np.max(np.abs(y - fit.calcium)) <= 1e-9


def test_arp_short_segment_copies_data():
    y = [1.0, 2.0, 0.7, 0.4, 0.2]
    fit = reconstruct_arp(y, [2], (0.5, 0.1))
    assert fit.calcium[:2].tolist() == [1.0, 2.0]


def test_arp_recursion_inside_segments(rng):
    gammas = (0.9, -0.1)
    y = rng.normal(size=100)
    fit = reconstruct_arp(y, [30, 31, 70], gammas)
    heads = [0, 30, 31, 70]
    for a, b in zip(heads, heads[1:] + [100]):
        for t in range(a + 2, b):
            assert fit.calcium[t] == gammas[0] * fit.calcium[t - 1] + gammas[1] * fit.calcium[t - 2]


def test_arp_matches_dense_design(rng):
    gammas = (0.6, 0.25)
    y = rng.normal(size=40)
    fit = reconstruct_arp(y, [15], gammas)
    for a, b in ((0, 15), (15, 40)):
        ref = oracles.lstsq_fit(oracles.arp_design(gammas, b - a), y[a:b])[2]
        assert np.allclose(fit.calcium[a:b], ref, atol=1e-9)


def test_objective_consistency_after_solve():
    for seed in range(10):
        y = simulate(SimConfig(1000, 0.95, 0.15, 0.02, seed=seed)).trace
        for model in (0.95, Intercept(0.95), ARp((0.9, 0.04))):
            sol, fit = deconvolve(y, model, 1.0)
            assert fit_objective(y, fit, 1.0) == pytest.approx(sol.optimal_objective, rel=1e-9)
            assert fit.spike_times == sol.spike_times


def test_dispatcher_rejects_unknown_model():
    class Other:
        def init(self, y): ...
        def extend(self, s, y): ...
        def value(self, s): ...

    with pytest.raises(TypeError):
        reconstruct([1.0, 2.0], [], Other())


@pytest.mark.parametrize(
    "mags, expected",
    [([4.75], ()), ([-0.2, 1.0], ((3, -0.2),)), ([], ())],
)
def test_positivity_audit(mags, expected):
    times = [3, 8][: len(mags)]
    fit = SpikeFit(np.zeros(10), times, mags)
    rep = positivity_audit(fit)
    assert rep.violations == expected
    assert rep.all_nonnegative == (not expected)
