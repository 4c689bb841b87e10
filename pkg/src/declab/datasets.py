"""Dataset sampling and exact distribution constructions for decoder training.

Datasets are sparse histograms over (syndrome, label) pairs rather than
example lists, which keeps training cost bounded by the example-space size
and makes the infinite-data ("exact") mode a single persistent weighted
batch.  Labels are the physical error (repetition / nondegenerate) or the
logical class of the sampled error (degenerate).

The binary-relabeling oracle construction turns a repetition dataset into a
noisy binary classification dataset given a fixed deterministic baseline, and
its exact distribution-level counterpart is computed here as closed algebra
so the equivalence can be checked atom by atom.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .decoders import DecoderTable, Problem, RepetitionProblem


@dataclass(frozen=True)
class Example:
    """One (syndrome, label) pair; error labels carry their own syndrome."""

    syndrome: int
    label: int


def as_examples(raw: list[tuple[int, int]]) -> list[Example]:
    """Wrap raw (syndrome, label) pairs; sampling paths keep tuples for speed."""
    return [Example(sigma, label) for sigma, label in raw]


@dataclass
class WeightedDataset:
    """Sparse map from (syndrome, label) to weight.

    ``mode`` is "counts" for sampled data (weights are raw counts; use
    ``normalized`` for count/N weights summing to 1) or "exact" for
    probability-mode weights.
    """

    label_kind: str
    n: int
    num_syndromes: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)
    mode: str = "counts"
    total: float = 0.0

    def normalized(self) -> dict[tuple[int, int], float]:
        if self.total == 0:
            return {}
        return {k: v / self.total for k, v in self.entries.items()}

    def write_csv(self, path, sidecar: dict | None = None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("# schema: declab/dataset/v1\n")
            writer = csv.writer(fh)
            writer.writerow(["syndrome_hex", "label_hex", "count"])
            for (sigma, label), count in sorted(self.entries.items()):
                writer.writerow([format(sigma, "x"), format(label, "x"), repr(count)])
        if sidecar is not None:
            with open(str(path) + ".json", "w") as fh:
                json.dump(sidecar, fh, indent=2, sort_keys=True)


def sample_examples(
    problem: Problem, count: int, label_kind: str, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Draw count iid errors and map each to its (syndrome, label) pair."""
    if count == 0:
        return []
    if isinstance(problem, RepetitionProblem):
        if label_kind != "classical_error":
            raise ValueError("repetition datasets use classical_error labels")
        errors = problem.model.sample(count, rng)
        sigmas = (errors ^ (errors >> 1)) & (problem.num_syndromes - 1)
        return list(zip(sigmas.tolist(), errors.tolist()))
    x, z = problem.model.sample(count, rng)
    idx = (z << problem.n) | x
    sigmas = problem.sigma[idx]
    if label_kind == "logical_class":
        labels = problem.cls[idx]
    elif label_kind == "pauli_error":
        labels = idx
    else:
        raise ValueError(f"unsupported label kind {label_kind!r}")
    return list(zip(sigmas.tolist(), labels.tolist()))


def sample_dataset(
    problem: Problem, count: int, label_kind: str, rng: np.random.Generator
) -> tuple[WeightedDataset, list[tuple[int, int]]]:
    """Sampled dataset as a histogram, plus the raw draw sequence."""
    raw = sample_examples(problem, count, label_kind, rng)
    entries: dict[tuple[int, int], float] = {}
    for pair in raw:
        entries[pair] = entries.get(pair, 0.0) + 1.0
    ds = WeightedDataset(
        label_kind, problem.n, problem.num_syndromes, entries, "counts", float(count)
    )
    return ds, raw


def exact_dataset(problem: Problem, label_kind: str) -> WeightedDataset:
    """Infinite-data mode: weights are the exact example probabilities."""
    entries: dict[tuple[int, int], float] = {}
    if isinstance(problem, RepetitionProblem):
        for e in range(2**problem.n):
            entries[(int(problem.sigma[e]), e)] = float(problem.p[e])
    elif label_kind == "logical_class":
        for sigma in range(problem.num_syndromes):
            for cls in range(problem.num_classes):
                entries[(sigma, cls)] = float(problem.joint_deg[sigma, cls])
    else:
        raise ValueError("exact mode supports repetition or degenerate labels")
    return WeightedDataset(
        label_kind, problem.n, problem.num_syndromes, entries, "exact", 1.0
    )


def virtual_batches(
    raw: list[tuple[int, int]], batch_size: int, rng: np.random.Generator | None = None
):
    """Yield per-batch histograms {(sigma, label): count/m} over shuffled draws."""
    order = list(range(len(raw)))
    if rng is not None:
        order = rng.permutation(len(raw)).tolist()
    for start in range(0, len(raw), batch_size):
        chunk = [raw[i] for i in order[start : start + batch_size]]
        weights: dict[tuple[int, int], float] = {}
        for pair in chunk:
            weights[pair] = weights.get(pair, 0.0) + 1.0
        m = len(chunk)
        yield {k: v / m for k, v in weights.items()}


def uniform_good_distribution(problem: Problem, mld: DecoderTable) -> WeightedDataset:
    """Uniform weights over the good examples (one per syndrome, via the MLD)."""
    entries: dict[tuple[int, int], float] = {}
    weight = 1.0 / problem.num_syndromes
    if isinstance(problem, RepetitionProblem):
        for sigma in range(problem.num_syndromes):
            entries[(sigma, int(mld.entries[sigma]))] = weight
        kind = "classical_error"
    else:
        cls_entries = problem.table_classes(mld)
        for sigma in range(problem.num_syndromes):
            entries[(sigma, int(cls_entries[sigma]))] = weight
        kind = "logical_class"
    return WeightedDataset(
        kind, problem.n, problem.num_syndromes, entries, "exact", 1.0
    )


# ---------------------------------------------------------------------------
# Binary relabeling (repetition code only)
# ---------------------------------------------------------------------------


def relabel_binary(
    raw: list[tuple[int, int]], baseline: DecoderTable
) -> list[tuple[int, int]]:
    """Map (sigma, e) -> (sigma, 1{baseline(sigma) == e}).

    Requires a deterministic baseline table; invertible via
    ``reconstruct_binary`` because each syndrome has exactly two coset errors.
    """
    if baseline.label_kind != "classical_error":
        raise ValueError("binary relabeling applies to repetition datasets only")
    if baseline.stochastic:
        raise ValueError("relabeling needs a determinized baseline")
    return [
        (sigma, int(int(baseline.entries[sigma]) == label)) for sigma, label in raw
    ]


def reconstruct_binary(
    binary: list[tuple[int, int]], baseline: DecoderTable, n: int
) -> list[tuple[int, int]]:
    """Inverse of relabel_binary: z=1 -> baseline guess, z=0 -> its complement."""
    full = (1 << n) - 1
    out = []
    for sigma, z in binary:
        guess = int(baseline.entries[sigma])
        out.append((sigma, guess if z else guess ^ full))
    return out


def noisy_oracle_distribution(
    problem: RepetitionProblem, baseline: DecoderTable, mld: DecoderTable
) -> dict[tuple[int, int], float]:
    """Exact joint law of (sigma, z~) produced by the noisy-source oracle.

    The oracle draws sigma from the syndrome law, emits the MLD guess with
    probability 1 - eta(sigma)/p(sigma) and its complement otherwise, then
    labels z~ = 1{baseline agrees with the emitted guess}.  eta(sigma) is the
    bad-example mass at sigma.  Summed over sigma, the z-noise mass equals
    Pr(bad).
    """
    if baseline.stochastic:
        raise ValueError("oracle construction needs a determinized baseline")
    joint: dict[tuple[int, int], float] = {}
    for sigma in range(problem.num_syndromes):
        e0, e1 = int(problem.cand[0][sigma]), int(problem.cand[1][sigma])
        p0, p1 = float(problem.cand_p[0][sigma]), float(problem.cand_p[1][sigma])
        star = int(mld.entries[sigma])
        p_sigma = p0 + p1
        eta = p1 if star == e0 else p0
        base = int(baseline.entries[sigma])
        if base == star:
            joint[(sigma, 1)] = p_sigma - eta
            joint[(sigma, 0)] = eta
        else:
            joint[(sigma, 1)] = eta
            joint[(sigma, 0)] = p_sigma - eta
    return joint


def relabel_pushforward(
    problem: RepetitionProblem, baseline: DecoderTable
) -> dict[tuple[int, int], float]:
    """Exact law of (sigma, z~) obtained by relabeling the full example law."""
    if baseline.stochastic:
        raise ValueError("pushforward needs a determinized baseline")
    joint: dict[tuple[int, int], float] = {}
    for sigma in range(problem.num_syndromes):
        e0, e1 = int(problem.cand[0][sigma]), int(problem.cand[1][sigma])
        p0, p1 = float(problem.cand_p[0][sigma]), float(problem.cand_p[1][sigma])
        base = int(baseline.entries[sigma])
        joint[(sigma, 1)] = p0 if base == e0 else p1
        joint[(sigma, 0)] = p1 if base == e0 else p0
    return joint


def oracle_noise_mass(
    problem: RepetitionProblem, mld: DecoderTable
) -> float:
    """Total eta mass: probability that the sampled error is not the MLD guess."""
    star = mld.entries
    e0 = problem.cand[0]
    eta = np.where(star == e0, problem.cand_p[1], problem.cand_p[0])
    return float(math.fsum(eta))
