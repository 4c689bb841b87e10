"""Exact decoders for enumerable decoding problems.

Everything here works on a fully enumerated problem instance: either the
classical repetition code under a biased bitflip model, or a small stabilizer
code under depolarizing noise.  A decoder is always represented as an explicit
syndrome -> label table (``DecoderTable``), and logical error probabilities
are exact sums of error-model mass, never Monte Carlo estimates.  Stochastic
baselines (the min-weight repetition decoder that guesses on weight-n/2
syndromes) are evaluated analytically with fractional success credit.

Tie-breaking is lexicographic in the canonical enumeration order everywhere;
tie sets are recorded on the table so downstream accounting can reason about
co-maximal labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .codes import (
    StabilizerCode,
    logical_class_array,
    repetition_candidates,
    repetition_syndrome_array,
    syndrome_array,
)
from .noise import BiasedBitflipModel, DepolarizingModel
from .pauli import popcount

LABEL_KINDS = ("classical_error", "pauli_error", "logical_class")


@dataclass(frozen=True)
class DecoderTable:
    """Total syndrome -> label map.

    ``entries[sigma]`` is the label in canonical integer form (error bits,
    Pauli index, or logical class index).  ``ties`` maps a syndrome to the
    full set of co-maximal labels where the argmax was not unique; for
    ``stochastic`` tables the decoder is understood to pick uniformly among
    the tie set at decode time, and exact evaluations give fractional credit.
    """

    label_kind: str
    n: int
    num_syndromes: int
    entries: np.ndarray
    ties: dict[int, tuple[int, ...]] = field(default_factory=dict)
    stochastic: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if self.label_kind not in LABEL_KINDS:
            raise ValueError(f"unknown label kind {self.label_kind!r}")
        if len(self.entries) != self.num_syndromes:
            raise ValueError("entries must cover every syndrome")

    def determinized(self) -> "DecoderTable":
        """Same canonical entries, but treated as a fixed deterministic map."""
        return replace(self, ties={}, stochastic=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "label_kind": self.label_kind,
                "n": self.n,
                "name": self.name,
                "stochastic": self.stochastic,
                "entries": {
                    format(s, "x"): int(v) for s, v in enumerate(self.entries)
                },
                "ties": {
                    format(s, "x"): [int(v) for v in vs] for s, vs in self.ties.items()
                },
            }
        )

    @classmethod
    def from_json(cls, payload: str) -> "DecoderTable":
        data = json.loads(payload)
        num = len(data["entries"])
        entries = np.zeros(num, dtype=np.int64)
        for key, value in data["entries"].items():
            entries[int(key, 16)] = value
        ties = {
            int(k, 16): tuple(v) for k, v in data["ties"].items()
        }
        return cls(
            label_kind=data["label_kind"],
            n=data["n"],
            num_syndromes=num,
            entries=entries,
            ties=ties,
            stochastic=data["stochastic"],
            name=data.get("name", ""),
        )


@dataclass
class LepReport:
    lep: float
    success_mass: float
    per_weight_failures: np.ndarray


class RepetitionProblem:
    """Fully enumerated repetition-code instance under a biased bitflip model."""

    kind = "repetition"
    label_kind = "classical_error"

    def __init__(self, model: BiasedBitflipModel):
        if model.n > 24:
            raise ValueError("repetition enumeration limited to n <= 24")
        self.model = model
        self.n = model.n
        self.num_syndromes = 2 ** (self.n - 1)
        self.errors = np.arange(2**self.n, dtype=np.int64)
        self.sigma = repetition_syndrome_array(self.errors, self.n)
        self.p = model.prob_array(self.errors)
        self.weight = popcount(self.errors)
        self.labels = self.errors  # nondegenerate: the label is the error
        e0, e1 = repetition_candidates(self.n)
        self.cand = (e0, e1)
        self.cand_p = (model.prob_array(e0), model.prob_array(e1))
        self.p_sigma = self.cand_p[0] + self.cand_p[1]

    def mld_table(self) -> DecoderTable:
        """Nondegenerate MLD: the more probable of the two coset errors."""
        e0, e1 = self.cand
        p0, p1 = self.cand_p
        entries = np.where(p0 > p1, e0, np.where(p1 > p0, e1, np.minimum(e0, e1)))
        ties = {
            int(s): (int(min(e0[s], e1[s])), int(max(e0[s], e1[s])))
            for s in np.nonzero(p0 == p1)[0]
        }
        return DecoderTable(
            "classical_error", self.n, self.num_syndromes, entries, ties, name="mld"
        )

    def min_weight_table(self, stochastic: bool = True) -> DecoderTable:
        """Min-weight baseline; guesses uniformly on weight-n/2 tie syndromes.

        The analytic (stochastic) table keeps the lexicographically smaller
        candidate as its canonical entry and flags the tie; pass
        stochastic=False for the determinized variant.
        """
        e0, e1 = self.cand
        w0 = popcount(e0)
        w1 = self.n - w0
        entries = np.where(w0 < w1, e0, np.where(w1 < w0, e1, np.minimum(e0, e1)))
        ties = {
            int(s): (int(min(e0[s], e1[s])), int(max(e0[s], e1[s])))
            for s in np.nonzero(w0 == w1)[0]
        }
        table = DecoderTable(
            "classical_error",
            self.n,
            self.num_syndromes,
            entries,
            ties,
            stochastic=stochastic,
            name="min_weight",
        )
        return table if stochastic else table.determinized()

    def lep(self, table: DecoderTable, criterion: str = "nondegenerate") -> LepReport:
        if criterion != "nondegenerate" or table.label_kind != "classical_error":
            raise ValueError("repetition decoding is nondegenerate with error labels")
        success = (table.entries[self.sigma] == self.errors).astype(float)
        if table.stochastic and table.ties:
            # Every repetition coset has exactly two errors, so a tie set is
            # the whole coset and a fair guess succeeds with probability 1/2.
            is_tie = np.zeros(self.num_syndromes, dtype=bool)
            is_tie[np.fromiter(table.ties.keys(), dtype=np.int64)] = True
            success = np.where(is_tie[self.sigma], 0.5, success)
        return _lep_report(self.p, success, self.weight, self.n)


class StabilizerProblem:
    """Fully enumerated stabilizer-code instance under depolarizing noise."""

    kind = "stabilizer"

    def __init__(self, code: StabilizerCode, model: DepolarizingModel):
        if code.n != model.n:
            raise ValueError("code and model disagree on qubit count")
        if code.n > 12:
            raise ValueError("stabilizer enumeration limited to n <= 12")
        self.code = code
        self.model = model
        self.n = code.n
        self.num_classes = 4**code.k
        self.num_syndromes = 2**code.r
        idx = np.arange(4**code.n, dtype=np.int64)
        self.x = idx & ((1 << code.n) - 1)
        self.z = idx >> code.n
        self.index = idx
        self.sigma = syndrome_array(code, self.x, self.z)
        self.cls = logical_class_array(code, self.x, self.z, self.sigma)
        self.p = model.prob_arrays(self.x, self.z)
        self.weight = popcount(self.x | self.z)
        # joint mass over (syndrome, logical class)
        self.joint_deg = np.bincount(
            self.sigma * self.num_classes + self.cls,
            weights=self.p,
            minlength=self.num_syndromes * self.num_classes,
        ).reshape(self.num_syndromes, self.num_classes)
        self.p_sigma = self.joint_deg.sum(axis=1)

    def pauli_class(self, pauli_index: np.ndarray) -> np.ndarray:
        return self.cls[pauli_index]

    def mld_degenerate(self) -> DecoderTable:
        """Degenerate MLD: argmax over logical-coset masses, smallest index on ties."""
        entries = np.argmax(self.joint_deg, axis=1).astype(np.int64)
        best = self.joint_deg[np.arange(self.num_syndromes), entries]
        ties = {}
        tie_counts = (self.joint_deg == best[:, None]).sum(axis=1)
        for s in np.nonzero(tie_counts > 1)[0]:
            ties[int(s)] = tuple(
                int(c) for c in np.nonzero(self.joint_deg[s] == best[s])[0]
            )
        return DecoderTable(
            "logical_class", self.n, self.num_syndromes, entries, ties, name="mld_deg"
        )

    def mld_nondegenerate(self) -> DecoderTable:
        """Nondegenerate MLD: most probable single error per syndrome."""
        entries, ties = _argbest_per_group(
            self.sigma, -self.p, self.index, self.num_syndromes
        )
        return DecoderTable(
            "pauli_error", self.n, self.num_syndromes, entries, ties, name="mld_nondeg"
        )

    def baseline_table(self) -> DecoderTable:
        """Matching-style baseline: weighted minimum over enumerated cosets.

        CSS codes decode the X and Z error components independently against
        the Z-type and X-type sub-syndromes (equivalent to MWPM at this
        scale); the five-qubit code gets the weighted minimum over the full
        coset.  Per-qubit weights are log((1-p_i)/p_i).
        """
        weights = np.array([math.log((1 - r) / r) for r in self.model.rates])
        if _is_css(self.code):
            entries, ties = self._css_baseline(weights)
        else:
            score = np.zeros(len(self.index))
            support = self.x | self.z
            for i, w in enumerate(weights):
                score += ((support >> i) & 1) * w
            entries, ties = _argbest_per_group(
                self.sigma, score, self.index, self.num_syndromes
            )
        return DecoderTable(
            "pauli_error", self.n, self.num_syndromes, entries, ties, name="baseline"
        )

    def _css_baseline(self, weights: np.ndarray):
        code = self.code
        z_type = [i for i, g in enumerate(code.stabilizer_gens) if g.x == 0]
        x_type = [i for i, g in enumerate(code.stabilizer_gens) if g.z == 0]
        if len(z_type) + len(x_type) != code.r:
            raise ValueError("mixed-type generators: not a CSS generator set")

        def best_patterns(gen_rows: list[int]):
            patterns = np.arange(2**code.n, dtype=np.int64)
            sub = np.zeros_like(patterns)
            for t, gi in enumerate(gen_rows):
                g = code.stabilizer_gens[gi]
                mask = g.z | g.x  # pure-type: exactly one of the two is set
                sub |= (popcount(patterns & mask) & 1) << t
            score = np.zeros(len(patterns))
            for i, w in enumerate(weights):
                score += ((patterns >> i) & 1) * w
            return _argbest_per_group(sub, score, patterns, 2 ** len(gen_rows))

        xhat, x_ties = best_patterns(z_type)  # Z-type checks constrain X flips
        zhat, z_ties = best_patterns(x_type)
        sigmas = np.arange(self.num_syndromes, dtype=np.int64)
        sub_z = np.zeros_like(sigmas)
        for t, gi in enumerate(z_type):
            sub_z |= ((sigmas >> gi) & 1) << t
        sub_x = np.zeros_like(sigmas)
        for t, gi in enumerate(x_type):
            sub_x |= ((sigmas >> gi) & 1) << t
        entries = xhat[sub_z] | (zhat[sub_x] << self.n)
        ties = {}
        for s in range(self.num_syndromes):
            xs = x_ties.get(int(sub_z[s]), (int(xhat[sub_z[s]]),))
            zs = z_ties.get(int(sub_x[s]), (int(zhat[sub_x[s]]),))
            if len(xs) > 1 or len(zs) > 1:
                ties[s] = tuple(sorted(xc | (zc << self.n) for xc in xs for zc in zs))
        return entries, ties

    def lep(self, table: DecoderTable, criterion: str) -> LepReport:
        if criterion == "nondegenerate":
            if table.label_kind != "pauli_error":
                raise ValueError("nondegenerate evaluation needs pauli_error labels")
            success = (table.entries[self.sigma] == self.index).astype(float)
            if table.stochastic and table.ties:
                for s, labels in table.ties.items():
                    credit = 1.0 / len(labels)
                    in_coset = self.sigma == s
                    member = np.isin(self.index, np.array(labels, dtype=np.int64))
                    success[in_coset] = np.where(member[in_coset], credit, 0.0)
        elif criterion == "degenerate":
            cls_entries = self.table_classes(table)
            success = (cls_entries[self.sigma] == self.cls).astype(float)
        else:
            raise ValueError(f"unknown criterion {criterion!r}")
        return _lep_report(self.p, success, self.weight, self.n)

    def table_classes(self, table: DecoderTable) -> np.ndarray:
        """Logical class implied by each table entry (for degenerate scoring).

        Correction labels whose syndrome does not match their slot can never
        succeed degenerately and are mapped to an out-of-range class.
        """
        if table.label_kind == "logical_class":
            return table.entries
        if table.label_kind != "pauli_error":
            raise ValueError("degenerate evaluation needs class or pauli labels")
        cls = self.cls[table.entries]
        valid = self.sigma[table.entries] == np.arange(self.num_syndromes)
        return np.where(valid, cls, -1)


Problem = RepetitionProblem | StabilizerProblem


def mld_nondegenerate(problem: Problem) -> DecoderTable:
    if isinstance(problem, RepetitionProblem):
        return problem.mld_table()
    return problem.mld_nondegenerate()


def mld_degenerate(problem: StabilizerProblem) -> DecoderTable:
    return problem.mld_degenerate()


def baseline_table(problem: Problem) -> DecoderTable:
    """The paper-style baseline: min-weight (repetition) or matching (QECC)."""
    if isinstance(problem, RepetitionProblem):
        return problem.min_weight_table()
    return problem.baseline_table()


def min_weight_repetition(
    problem: RepetitionProblem, sigma: int, rng: np.random.Generator | None = None
) -> tuple[int, bool]:
    """Decode one syndrome by minimum weight.

    Returns (error, tie).  On a weight-n/2 tie the stochastic mode (rng given)
    picks fairly between the candidates; the analytic mode returns the
    canonical lexicographic choice and flags the tie.
    """
    e0 = int(problem.cand[0][sigma])
    e1 = int(problem.cand[1][sigma])
    w0 = bin(e0).count("1")
    w1 = problem.n - w0
    if w0 < w1:
        return e0, False
    if w1 < w0:
        return e1, False
    if rng is not None:
        return (e0 if rng.random() < 0.5 else e1), True
    return min(e0, e1), True


def lep(problem: Problem, table: DecoderTable, criterion: str) -> LepReport:
    return problem.lep(table, criterion)


def lookup_table_decoder(
    counts: dict[tuple[int, int], float],
    problem: Problem,
    label_kind: str | None = None,
) -> DecoderTable:
    """Histogram decoder: per syndrome, the most frequent label in the dataset.

    Ties break toward the lexicographically smallest label; syndromes never
    seen map to the identity label.
    """
    if label_kind is None:
        label_kind = (
            "classical_error" if isinstance(problem, RepetitionProblem) else
            "logical_class"
        )
    entries = np.zeros(problem.num_syndromes, dtype=np.int64)
    best: dict[int, tuple[float, int]] = {}
    for (sigma, label), count in sorted(counts.items()):
        cur = best.get(sigma)
        if cur is None or count > cur[0]:
            best[sigma] = (count, label)
    for sigma, (_, label) in best.items():
        entries[sigma] = label
    return DecoderTable(
        label_kind, problem.n, problem.num_syndromes, entries, name="lookup"
    )


def random_table(
    problem: Problem, label_kind: str, rng: np.random.Generator
) -> DecoderTable:
    """Uniformly random decoder table (error labels stay syndrome-consistent)."""
    if label_kind == "classical_error":
        pick = rng.integers(0, 2, size=problem.num_syndromes)
        entries = np.where(pick == 0, problem.cand[0], problem.cand[1])
    elif label_kind == "logical_class":
        entries = rng.integers(0, problem.num_classes, size=problem.num_syndromes)
    elif label_kind == "pauli_error":
        order = np.argsort(problem.sigma, kind="stable")
        starts = np.searchsorted(problem.sigma[order], np.arange(problem.num_syndromes))
        coset = 4**problem.n // problem.num_syndromes
        offsets = rng.integers(0, coset, size=problem.num_syndromes)
        entries = problem.index[order][starts + offsets]
    else:
        raise ValueError(f"unknown label kind {label_kind!r}")
    return DecoderTable(
        label_kind, problem.n, problem.num_syndromes, entries.astype(np.int64),
        name="random",
    )


def _argbest_per_group(
    groups: np.ndarray, score: np.ndarray, values: np.ndarray, num_groups: int
) -> tuple[np.ndarray, dict[int, tuple[int, ...]]]:
    """Per group, the value minimizing score (ties -> smallest value), plus tie sets."""
    order = np.lexsort((values, score, groups))
    g_sorted = groups[order]
    first = np.searchsorted(g_sorted, np.arange(num_groups), side="left")
    entries = values[order][first]
    best_score = score[order][first]
    ties: dict[int, tuple[int, ...]] = {}
    tied_mask = score == best_score[groups]
    counts = np.bincount(groups[tied_mask], minlength=num_groups)
    for g in np.nonzero(counts > 1)[0]:
        members = values[tied_mask & (groups == g)]
        ties[int(g)] = tuple(sorted(int(v) for v in members))
    return entries, ties


def _lep_report(
    p: np.ndarray, success: np.ndarray, weight: np.ndarray, n: int
) -> LepReport:
    success_mass = float(np.dot(p, success))
    failures = np.bincount(weight, weights=p * (1.0 - success), minlength=n + 1)
    return LepReport(
        lep=1.0 - success_mass, success_mass=success_mass, per_weight_failures=failures
    )


def _is_css(code: StabilizerCode) -> bool:
    return all(g.x == 0 or g.z == 0 for g in code.stabilizer_gens)
