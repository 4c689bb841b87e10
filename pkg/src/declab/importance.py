"""Example-importance calculus for exact decoding problems.

An example (sigma, y) is *good* when y matches a fixed maximum-likelihood
decoder at sigma, *bad* otherwise, and *important* when it is good but the
baseline decoder fails to produce it.  For a stochastic baseline (the
min-weight repetition decoder guessing on weight-n/2 syndromes) a good
example on a guess syndrome counts as important at its full mass: the
baseline cannot reliably decode it, and this convention is what the
closed-form masses below reproduce exactly.

Also here: the improvement upper bound for any trained decoder, the
well-orderedness predicate and the knob-factor threshold for the two-block
bitflip model, closed-form repetition masses, misalignment/total-variation
diagnostics between a true and a knob-scaled model, and the finite-class
sample-complexity bound.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .decoders import (
    DecoderTable,
    Problem,
    RepetitionProblem,
    lep,
)
from .noise import BiasedBitflipModel, scale_knob


@dataclass
class ImportanceReport:
    pr_good: float
    pr_bad: float
    pr_important: float
    pr_unimportant: float
    per_weight: list[tuple[int, float, float, float]]  # (w, important, bad, good)
    baseline_id: str = ""
    mld_id: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "pr_good": self.pr_good,
                "pr_bad": self.pr_bad,
                "pr_important": self.pr_important,
                "pr_unimportant": self.pr_unimportant,
                "baseline_id": self.baseline_id,
                "mld_id": self.mld_id,
                "per_weight": [
                    {"weight": w, "important_mass": i, "bad_mass": b, "good_mass": g}
                    for (w, i, b, g) in self.per_weight
                ],
            },
            indent=2,
        )

    def write_weight_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("# schema: declab/importance_weights/v1\n")
            writer = csv.writer(fh)
            writer.writerow(["weight", "important_mass", "bad_mass", "good_mass"])
            for w, imp, bad, good in self.per_weight:
                writer.writerow([w, repr(imp), repr(bad), repr(good)])


def _label_arrays(problem: Problem, mld: DecoderTable, baseline: DecoderTable):
    """Per-error label, MLD label at its syndrome, and baseline label."""
    if isinstance(problem, RepetitionProblem):
        labels = problem.errors
        mld_at = mld.entries[problem.sigma]
        base_at = baseline.entries[problem.sigma]
    else:
        labels = problem.cls
        mld_at = problem.table_classes(mld)[problem.sigma]
        base_at = problem.table_classes(baseline)[problem.sigma]
    return labels, mld_at, base_at


def _baseline_unreliable(problem: Problem, baseline: DecoderTable) -> np.ndarray:
    """Boolean per error: baseline guesses at this error's syndrome."""
    out = np.zeros(len(problem.p), dtype=bool)
    if baseline.stochastic and baseline.ties:
        tie = np.zeros(problem.num_syndromes, dtype=bool)
        tie[np.fromiter(baseline.ties.keys(), dtype=np.int64)] = True
        out = tie[problem.sigma]
    return out


def classify_example(
    problem: Problem,
    baseline: DecoderTable,
    mld: DecoderTable,
    sigma: int,
    label: int,
) -> str:
    """Classify one (syndrome, label) pair as bad / unimportant / important."""
    if isinstance(problem, RepetitionProblem):
        good = int(mld.entries[sigma]) == label
        base_wrong = int(baseline.entries[sigma]) != label
    else:
        good = int(problem.table_classes(mld)[sigma]) == label
        base_wrong = int(problem.table_classes(baseline)[sigma]) != label
    if not good:
        return "bad"
    if baseline.stochastic and sigma in baseline.ties:
        return "important"
    return "important" if base_wrong else "unimportant"


def importance_J(
    problem: Problem,
    baseline: DecoderTable,
    mld: DecoderTable,
    sigma: int,
    label: int,
) -> float:
    """Mass-weighted importance of one example: p(sigma, y) if important else 0."""
    if classify_example(problem, baseline, mld, sigma, label) != "important":
        return 0.0
    if isinstance(problem, RepetitionProblem):
        return float(problem.p[label])
    return float(problem.joint_deg[sigma, label])


def masses(
    problem: Problem, baseline: DecoderTable, mld: DecoderTable
) -> ImportanceReport:
    """Exact good/bad/important/unimportant masses by full enumeration.

    Per-weight rows attribute each example's mass to the weight of the
    underlying physical error.
    """
    labels, mld_at, base_at = _label_arrays(problem, mld, baseline)
    good = labels == mld_at
    base_wrong = (labels != base_at) | _baseline_unreliable(problem, baseline)
    important = good & base_wrong

    p, w = problem.p, problem.weight
    pr_good = float(math.fsum(p[good]))
    pr_bad = float(math.fsum(p[~good]))
    pr_important = float(math.fsum(p[important]))
    pr_unimportant = float(math.fsum(p[good & ~important]))

    n = problem.n
    per_weight = []
    imp_w = np.bincount(w, weights=p * important, minlength=n + 1)
    bad_w = np.bincount(w, weights=p * ~good, minlength=n + 1)
    good_w = np.bincount(w, weights=p * good, minlength=n + 1)
    for weight in range(n + 1):
        per_weight.append(
            (weight, float(imp_w[weight]), float(bad_w[weight]), float(good_w[weight]))
        )
    return ImportanceReport(
        pr_good, pr_bad, pr_important, pr_unimportant, per_weight,
        baseline_id=baseline.name, mld_id=mld.name,
    )


# ---------------------------------------------------------------------------
# Two-block combinatorics for the repetition code (no enumeration)
# ---------------------------------------------------------------------------


def repetition_block_masses(model: BiasedBitflipModel) -> ImportanceReport:
    """Exact masses for the min-weight baseline via the two-block structure.

    Every error is described by (k, j) flip counts in the p and alpha*p
    blocks, and its coset partner is the complement (h-k, h-j); goodness and
    baseline success depend only on the cell, so masses reduce to a sum over
    (h+1)^2 cells.  Handles non-well-ordered models too.
    """
    h = model.half
    n = model.n
    good_terms: list[tuple[int, float]] = []
    bad_terms: list[tuple[int, float]] = []
    imp_terms: list[tuple[int, float]] = []
    for k in range(h + 1):
        for j in range(h + 1):
            w = k + j
            q = model.block_prob(k, j)
            q_comp = model.block_prob(h - k, h - j)
            cell = math.comb(h, k) * math.comb(h, j) * q
            if q > q_comp:
                good_frac = 1.0
            elif q < q_comp:
                good_frac = 0.0
            else:
                good_frac = 0.5  # MLD tie: one of each complement pair is good
            good_terms.append((w, cell * good_frac))
            bad_terms.append((w, cell * (1.0 - good_frac)))
            # min-weight baseline: right below n/2, guessing at n/2, wrong above
            if w < n / 2:
                imp_frac = 0.0
            else:
                imp_frac = good_frac
            imp_terms.append((w, cell * imp_frac))
    pr_good = math.fsum(v for _, v in good_terms)
    pr_bad = math.fsum(v for _, v in bad_terms)
    pr_important = math.fsum(v for _, v in imp_terms)
    per_weight = []
    for weight in range(n + 1):
        per_weight.append(
            (
                weight,
                math.fsum(v for w, v in imp_terms if w == weight),
                math.fsum(v for w, v in bad_terms if w == weight),
                math.fsum(v for w, v in good_terms if w == weight),
            )
        )
    return ImportanceReport(
        pr_good, pr_bad, pr_important, pr_good - pr_important, per_weight,
        baseline_id="min_weight", mld_id="mld",
    )


def well_ordered(model: BiasedBitflipModel) -> bool:
    """True iff min-weight decoding is maximum likelihood away from n/2 ties.

    Checked pairwise over the two-block cells: every error below weight n/2
    must be strictly more probable than its bitwise complement.
    """
    h = model.half
    for k in range(h + 1):
        for j in range(h + 1):
            if k + j >= h:
                continue
            if model.block_prob(k, j) <= model.block_prob(h - k, h - j):
                return False
    return True


def closed_form_masses(n: int, p: float, alpha: float) -> tuple[float, float]:
    """Closed-form (pr_important, pr_bad) for a well-ordered two-block model.

    pr_important = f_n(p, alpha*p) with the half-weight remainder term when
    4 | n; pr_bad adds the complementary f_n term and the full mass above
    weight n/2.  Only valid for well-ordered models.
    """
    model = BiasedBitflipModel(n, p, alpha)
    if not well_ordered(model):
        raise ValueError("closed-form masses require a well-ordered model")
    x, y = p, alpha * p
    pr_important = _f_n(n, x, y)
    h = n // 2
    tail = []
    for w in range(h + 1, n + 1):
        for k in range(max(1, w - h), min(h, w - 1) + 1):
            ell = w - k
            if not (0 < ell <= h):
                continue
            tail.append(
                math.comb(h, k)
                * math.comb(h, ell)
                * x**k
                * (1 - x) ** (h - k)
                * y**ell
                * (1 - y) ** (h - ell)
            )
    pr_bad = _f_n(n, y, x) + math.fsum(tail)
    return pr_important, pr_bad


def _f_n(n: int, x: float, y: float) -> float:
    h = n // 2
    terms = [
        math.comb(h, k) ** 2
        * x ** (h - k)
        * (1 - x) ** k
        * y**k
        * (1 - y) ** (h - k)
        for k in range(math.ceil(n / 4))
    ]
    if n % 4 == 0:
        q = n // 4
        terms.append(
            0.5 * math.comb(h, q) ** 2 * x**q * (1 - x) ** q * y**q * (1 - y) ** q
        )
    return math.fsum(terms)


@dataclass
class ThresholdReport:
    p: float
    alpha: float
    n: int
    grid_step: float
    beta_star_analytic: float | None
    beta_star_enumerated: float | None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2)


def threshold_beta(
    p: float, alpha: float, n: int = 8, grid_step: float = 0.05
) -> ThresholdReport:
    """Knob factor at which the scaled two-block model stops being well-ordered.

    The analytic root solves odds(beta*p)^(n/2) = odds(alpha*beta*p)^(n/2-1+1)
    ... specifically odds(bp)^(n/2) = odds(abp)^(n/2-2), the first complement
    pair to invert (lowest-probability weight n/2-1 error against the
    highest-probability weight n/2+1 error), found by bisection to 1e-9.  The
    enumerated value scans well_ordered on the beta grid from 1.  Both are
    None when no violation occurs in the valid range.
    """
    h = n // 2

    def gap(beta: float) -> float:
        bp, abp = beta * p, alpha * beta * p
        return h * math.log(bp / (1 - bp)) - (h - 2) * math.log(abp / (1 - abp))

    beta_max = (0.5 - 1e-12) / p
    analytic = None
    lo, hi = 1e-9, beta_max
    if gap(hi) > 0:
        if gap(lo) > 0:
            analytic = lo
        else:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if gap(mid) > 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-9:
                    break
            analytic = 0.5 * (lo + hi)

    enumerated = None
    beta = 1.0
    model = BiasedBitflipModel(n, p, alpha)
    while beta * p < 0.5:
        if not well_ordered(scale_knob(model, beta)):
            enumerated = beta
            break
        beta = round(beta + grid_step, 12)
    return ThresholdReport(p, alpha, n, grid_step, analytic, enumerated)


def improvement_bound_check(
    problem: Problem,
    baseline: DecoderTable,
    candidate: DecoderTable,
    mld: DecoderTable,
    criterion: str,
) -> tuple[float, float, bool]:
    """Check accuracy(candidate) - accuracy(baseline) <= Pr(important)."""
    lhs = (
        lep(problem, baseline, criterion).lep - lep(problem, candidate, criterion).lep
    )
    rhs = masses(problem, baseline, mld).pr_important
    return lhs, rhs, lhs <= rhs + 1e-12


def misalignment(
    problem_p: Problem, problem_q: Problem, criterion: str
) -> tuple[float, float]:
    """Pr_{sigma~p}(mld_p != mld_q) and the total variation of the syndrome laws.

    MLD ties are resolved canonically (lexicographic) on both sides.
    """
    if problem_p.n != problem_q.n or type(problem_p) is not type(problem_q):
        raise ValueError("misalignment needs two models of the same problem")
    if criterion == "degenerate":
        table_p = problem_p.mld_degenerate().entries
        table_q = problem_q.mld_degenerate().entries
    else:
        table_p = _mld_entries(problem_p)
        table_q = _mld_entries(problem_q)
    disagree = table_p != table_q
    pr_mis = float(math.fsum(problem_p.p_sigma[disagree]))
    tv = 0.5 * float(math.fsum(np.abs(problem_p.p_sigma - problem_q.p_sigma)))
    return pr_mis, tv


def _mld_entries(problem: Problem) -> np.ndarray:
    if isinstance(problem, RepetitionProblem):
        return problem.mld_table().entries
    return problem.mld_nondegenerate().entries


def surrogate_bound_check(
    problem_p: Problem,
    problem_q: Problem,
    fhat: DecoderTable,
    criterion: str,
) -> tuple[float, float, bool]:
    """Check the decoder-transfer bound between a true and a scaled model:

    Pr_{s~p}(fhat != mld_p) <= Pr_{s~q}(fhat != mld_q) + 2 d_TV(p_S, q_S)
                               + Pr_{s~p}(mld_p != mld_q)
    """
    if criterion == "degenerate":
        mld_p = problem_p.mld_degenerate()
        mld_q = problem_q.mld_degenerate()
        f_entries = problem_p.table_classes(fhat)
        p_entries, q_entries = mld_p.entries, mld_q.entries
    else:
        p_entries = _mld_entries(problem_p)
        q_entries = _mld_entries(problem_q)
        f_entries = fhat.entries
    lhs = float(math.fsum(problem_p.p_sigma[f_entries != p_entries]))
    train_err = float(math.fsum(problem_q.p_sigma[f_entries != q_entries]))
    pr_mis, tv = misalignment(problem_p, problem_q, criterion)
    rhs = train_err + 2.0 * tv + pr_mis
    return lhs, rhs, lhs <= rhs + 1e-12


def cor1_bound(pr_bad: float, epsilon: float, delta: float, n: int) -> float:
    """Sample-count bound 2 log(|F|/delta) / ((1-2 Pr(bad))^2 eps^2).

    |F| is the class of boolean functions on n-1 bits, so
    log |F| = 2^(n-1) log 2.  Returns inf when pr_bad >= 1/2 (vacuous).
    """
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if pr_bad >= 0.5:
        return math.inf
    log_f = 2 ** (n - 1) * math.log(2.0)
    return 2.0 * (log_f + math.log(1.0 / delta)) / (
        (1.0 - 2.0 * pr_bad) ** 2 * epsilon**2
    )


def class_priors(
    problem: Problem, baseline: DecoderTable, mld: DecoderTable
) -> tuple[float, float]:
    """(Pr(z=0), Pr(z=1)) for z(sigma) = 1{baseline == mld} over the syndrome law.

    Uses the canonical entries of both tables (a stochastic baseline must be
    determinized first, since z needs a fixed map).
    """
    if isinstance(problem, RepetitionProblem):
        disagree = baseline.entries != mld.entries
    else:
        disagree = problem.table_classes(baseline) != problem.table_classes(mld)
    pr0 = float(math.fsum(problem.p_sigma[disagree]))
    pr1 = float(math.fsum(problem.p_sigma[~disagree]))
    return pr0, pr1
