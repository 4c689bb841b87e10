import math

import numpy as np
import pytest

from declab.codes import build_code
from declab import datasets as ds
from declab.decoders import RepetitionProblem, StabilizerProblem, mld_degenerate
from declab import importance as imp
from declab.noise import BiasedBitflipModel, DepolarizingModel


@pytest.fixture(scope="module")
def rep():
    return RepetitionProblem(BiasedBitflipModel(8, 0.1, 0.7))


def test_sample_dataset_empty(rep):
    dataset, raw = ds.sample_dataset(rep, 0, "classical_error", np.random.default_rng(0))
    assert raw == [] and dataset.entries == {} and dataset.total == 0.0


def test_sample_dataset_tiny_rate_is_all_trivial():
    problem = RepetitionProblem(BiasedBitflipModel(8, 1e-9, 0.7))
    _, raw = ds.sample_dataset(problem, 500, "classical_error", np.random.default_rng(1))
    assert all(pair == (0, 0) for pair in raw)


def test_error_labels_carry_their_syndrome(rep):
    _, raw = ds.sample_dataset(rep, 300, "classical_error", np.random.default_rng(2))
    for ex in ds.as_examples(raw):
        assert int(rep.sigma[ex.label]) == ex.syndrome


def test_sample_dataset_expected_important_count(rep):
    base, mld = rep.min_weight_table(), rep.mld_table()
    pr_imp = imp.masses(rep, base, mld).pr_important
    rng = np.random.default_rng(12)
    totals = 0
    trials = 50
    for _ in range(trials):
        _, raw = ds.sample_dataset(rep, 2000, "classical_error", rng)
        totals += sum(
            imp.classify_example(rep, base, mld, sigma, label) == "important"
            for sigma, label in raw
        )
    expect = 2000 * pr_imp  # about 1/400 of N = 2000, i.e. roughly 5 per dataset
    mean = totals / trials
    sigma3 = 3 * math.sqrt(2000 * pr_imp / trials)
    assert abs(mean - expect) < sigma3


def test_sampled_histogram_converges(rep):
    rng = np.random.default_rng(123)
    n_draws = 10**6
    dataset, _ = ds.sample_dataset(rep, n_draws, "classical_error", rng)
    for e in range(2**8):
        p = float(rep.p[e])
        count = dataset.entries.get((int(rep.sigma[e]), e), 0.0)
        se = math.sqrt(n_draws * p * (1 - p))
        assert abs(count - n_draws * p) <= 5 * max(se, 1.0)


def test_degenerate_labels_use_sampled_error_class():
    code = build_code("five_qubit")
    problem = StabilizerProblem(code, DepolarizingModel(5, (0.2,) * 5))
    _, raw = ds.sample_dataset(problem, 2000, "logical_class", np.random.default_rng(3))
    classes = {label for _, label in raw}
    assert classes <= {0, 1, 2, 3} and len(classes) == 4


def test_virtual_batches_unit_batch(rep):
    _, raw = ds.sample_dataset(rep, 7, "classical_error", np.random.default_rng(5))
    batches = list(ds.virtual_batches(raw, 1))
    assert len(batches) == 7
    assert all(list(b.values()) == [1.0] for b in batches)


def test_virtual_batches_weights_sum_to_one(rep):
    _, raw = ds.sample_dataset(rep, 1000, "classical_error", np.random.default_rng(6))
    for batch in ds.virtual_batches(raw, 128, np.random.default_rng(0)):
        assert math.fsum(batch.values()) == pytest.approx(1.0, abs=1e-12)


def test_exact_dataset_weights_sum_to_one(rep):
    exact = ds.exact_dataset(rep, "classical_error")
    assert math.fsum(exact.entries.values()) == pytest.approx(1.0, abs=1e-12)
    code = build_code("steane")
    problem = StabilizerProblem(code, DepolarizingModel(7, (0.05,) * 7))
    exact_deg = ds.exact_dataset(problem, "logical_class")
    assert math.fsum(exact_deg.entries.values()) == pytest.approx(1.0, abs=1e-12)


def test_relabel_round_trip(rep):
    base = rep.min_weight_table(stochastic=False)
    _, raw = ds.sample_dataset(rep, 500, "classical_error", np.random.default_rng(8))
    binary = ds.relabel_binary(raw, base)
    assert ds.reconstruct_binary(binary, base, 8) == raw
    for (sigma, label), (_, z) in zip(raw, binary):
        assert z == int(int(base.entries[sigma]) == label)


def test_relabel_requires_determinized_baseline(rep):
    with pytest.raises(ValueError):
        ds.relabel_binary([(0, 0)], rep.min_weight_table())


def test_noisy_oracle_equals_relabel_pushforward(rep):
    base = rep.min_weight_table(stochastic=False)
    mld = rep.mld_table()
    oracle = ds.noisy_oracle_distribution(rep, base, mld)
    push = ds.relabel_pushforward(rep, base)
    assert set(oracle) == set(push)
    for key in oracle:
        assert abs(oracle[key] - push[key]) < 1e-12
    assert math.fsum(oracle.values()) == pytest.approx(1.0, abs=1e-12)


def test_oracle_noise_mass_equals_pr_bad(rep):
    base, mld = rep.min_weight_table(), rep.mld_table()
    pr_bad = imp.masses(rep, base, mld).pr_bad
    assert ds.oracle_noise_mass(rep, mld) == pytest.approx(pr_bad, abs=1e-12)


def test_oracle_z_one_dominates_at_tiny_rate():
    problem = RepetitionProblem(BiasedBitflipModel(8, 1e-6, 0.7))
    base = problem.min_weight_table(stochastic=False)
    mld = problem.mld_table()
    oracle = ds.noisy_oracle_distribution(problem, base, mld)
    z1 = math.fsum(v for (sigma, z), v in oracle.items() if z == 1)
    assert z1 > 1.0 - 1e-5


def test_uniform_good_distribution_support(rep):
    mld = rep.mld_table()
    dist = ds.uniform_good_distribution(rep, mld)
    assert len(dist.entries) == 2**7
    assert all(w == 1.0 / 2**7 for w in dist.entries.values())
    for sigma, label in dist.entries:
        assert int(mld.entries[sigma]) == label


def test_uniform_good_distribution_degenerate():
    code = build_code("surface_d3")
    problem = StabilizerProblem(code, DepolarizingModel(9, (0.05,) * 9))
    dist = ds.uniform_good_distribution(problem, mld_degenerate(problem))
    assert len(dist.entries) == 2**8


def test_dataset_csv_round_trip(rep, tmp_path):
    dataset, _ = ds.sample_dataset(rep, 200, "classical_error", np.random.default_rng(9))
    path = tmp_path / "data.csv"
    dataset.write_csv(path, sidecar={"n_samples": 200})
    text = path.read_text().splitlines()
    assert text[0].startswith("# schema: declab/dataset/v1")
    assert text[1] == "syndrome_hex,label_hex,count"
    assert (tmp_path / "data.csv.json").exists()
    total = sum(float(line.split(",")[2]) for line in text[2:])
    assert total == 200.0
