import math

import numpy as np
import pytest

from declab.noise import (
    BiasedBitflipModel,
    DepolarizingModel,
    model_from_json,
    prior_gap_bound,
    sample_error,
    sample_rates,
    scale_knob,
    tail_bound,
)
from declab.pauli import pauli_arrays, popcount


def test_bitflip_no_error_probability():
    model = BiasedBitflipModel(8, 0.1, 0.7)
    assert model.prob(0) == pytest.approx(0.9**4 * 0.93**4, rel=1e-14)


def test_depolarizing_identity_and_single_x():
    model = DepolarizingModel(9, (0.05,) * 9)
    assert model.prob(0, 0) == pytest.approx(0.95**9, rel=1e-14)
    single = DepolarizingModel(1, (0.05,))
    assert single.prob(1, 0) == pytest.approx(0.05 / 3, rel=1e-14)


def test_bitflip_probabilities_sum_to_one():
    model = BiasedBitflipModel(10, 0.13, 0.4)
    total = math.fsum(model.prob_array(np.arange(2**10, dtype=np.int64)))
    assert abs(total - 1.0) < 1e-12


def test_depolarizing_probabilities_sum_to_one():
    rng = np.random.default_rng(2)
    rates = sample_rates(7, 0.05, 0.03, rng)
    model = DepolarizingModel(7, rates)
    x, z = pauli_arrays(7)
    assert abs(math.fsum(model.prob_arrays(x, z)) - 1.0) < 1e-12


def test_scale_knob_identity_and_composition():
    model = BiasedBitflipModel(8, 0.1, 0.7)
    assert scale_knob(model, 1.0) == model
    assert scale_knob(scale_knob(model, 1.5), 2.0) == scale_knob(model, 3.0)
    dep = DepolarizingModel(3, (0.01, 0.02, 0.03))
    a = scale_knob(scale_knob(dep, 2.0), 3.0)
    b = scale_knob(dep, 6.0)
    assert np.allclose(a.rates, b.rates, rtol=1e-15)


def test_scale_knob_example_beta_three():
    scaled = scale_knob(BiasedBitflipModel(8, 0.1, 0.7), 3.0)
    assert scaled.p == pytest.approx(0.3) and scaled.alpha == 0.7


def test_scale_knob_guards():
    with pytest.raises(ValueError):
        scale_knob(BiasedBitflipModel(8, 0.1, 0.7), 10.0)  # rate would reach 1
    with pytest.raises(ValueError):
        scale_knob(DepolarizingModel(2, (0.3, 0.3)), 2.6)  # rate would pass 3/4
    # rates above 1/2 are permitted: the knob is allowed to break min-weight
    # decoding assumptions, that is the phenomenon under study
    assert scale_knob(BiasedBitflipModel(8, 0.1, 0.7), 8.0).p == pytest.approx(0.8)


def test_sample_error_mean_weight():
    model = BiasedBitflipModel(8, 0.1, 0.7)
    rng = np.random.default_rng(7)
    draws = model.sample(100_000, rng)
    mean_weight = popcount(draws).mean()
    expect = 4 * 0.1 + 4 * 0.07
    sigma = math.sqrt(sum(r * (1 - r) for r in model.rates) / 100_000)
    assert abs(mean_weight - expect) < 3 * sigma


def test_sample_error_depolarizing_identity_rate():
    model = DepolarizingModel(9, (0.05,) * 9)
    rng = np.random.default_rng(8)
    x, z = model.sample(100_000, rng)
    frac_identity = np.mean((x | z) == 0)
    expect = 0.95**9
    assert abs(frac_identity - expect) < 3 * math.sqrt(expect * (1 - expect) / 100_000)


def test_sample_error_single():
    rng = np.random.default_rng(0)
    e = sample_error(BiasedBitflipModel(8, 0.1, 0.7), rng)
    assert 0 <= e < 2**8
    x, z = sample_error(DepolarizingModel(5, (0.1,) * 5), rng)
    assert 0 <= x < 32 and 0 <= z < 32


def test_sample_rates_bounds_and_degenerate_variance():
    rng = np.random.default_rng(3)
    assert sample_rates(9, 0.05, 0.0, rng) == (0.05,) * 9
    for p, s2 in [(0.05, 0.03), (1e-3, 1e-3)]:
        rates = sample_rates(50, p, s2, rng)
        assert all(0.0 < r < 0.75 for r in rates)


def test_weight_distribution_matches_enumeration():
    model = BiasedBitflipModel(8, 0.1, 0.7)
    dist = model.weight_distribution()
    errors = np.arange(2**8, dtype=np.int64)
    p = model.prob_array(errors)
    w = popcount(errors)
    enum = np.bincount(w, weights=p, minlength=9)
    assert np.max(np.abs(dist - enum)) < 1e-12
    assert abs(math.fsum(dist) - 1.0) < 1e-12
    assert dist[0] == pytest.approx(0.9**4 * 0.93**4, rel=1e-14)


def test_weight_distribution_depolarizing():
    rng = np.random.default_rng(5)
    rates = sample_rates(9, 0.05, 0.03, rng)
    model = DepolarizingModel(9, rates)
    dist = model.weight_distribution()
    x, z = pauli_arrays(9)
    enum = np.bincount(popcount(x | z), weights=model.prob_arrays(x, z), minlength=10)
    assert np.max(np.abs(dist - enum)) < 1e-12
    # weight-n mass sums the 3 Pauli choices per qubit: prod_i (p_i/3 * 3)
    assert dist[9] == pytest.approx(np.prod(rates), rel=1e-12)


def test_tail_bounds_dominate_exact_tail():
    model = BiasedBitflipModel(8, 0.1, 0.7)
    iid = BiasedBitflipModel(8, 0.1, 1.0)  # bounds use the max rate
    dist = iid.weight_distribution()
    for t in range(0, 9):
        exact = math.fsum(dist[t:])
        bounds = tail_bound(model, t)
        assert bounds["bernstein"] >= exact - 1e-15
        assert bounds["hoeffding"] >= exact - 1e-15
    assert tail_bound(model, 0)["bernstein"] == 1.0


def test_prior_gap_bound_value():
    # exp(-(n/2)(1-2p)^2) at n=8, p=0.1
    assert prior_gap_bound(8, 0.1) == pytest.approx(math.exp(-2.56), rel=1e-12)


def test_model_json_round_trip():
    for model in (BiasedBitflipModel(8, 0.1, 0.7), DepolarizingModel(3, (0.1, 0.2, 0.3))):
        assert model_from_json(model.to_json()) == model
