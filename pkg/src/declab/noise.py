"""Exact product error distributions and knob scaling.

Two families are supported: a two-block biased bitflip model on classical
bits (the first n/2 bits flip with probability p, the rest with alpha*p) and
an independent non-identical depolarizing model on qubits (qubit i suffers
X, Y, or Z with probability p_i/3 each).

Knob scaling multiplies every rate by a common factor and refuses, rather
than clips, rates that leave the valid range: a silently clipped model would
change the distribution's shape without warning.  Bitflip rates may exceed
1/2 after scaling (the scaled model is still a product distribution; only
minimum-weight decoding assumptions break down there), but must stay below 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .pauli import popcount


@dataclass(frozen=True)
class BiasedBitflipModel:
    """Two-block bitflip model p_E[p, alpha] on an even number of bits.

    Bits 0..n/2-1 flip independently with probability p, bits n/2..n-1 with
    probability alpha*p.
    """

    n: int
    p: float
    alpha: float

    def __post_init__(self) -> None:
        if self.n % 2 or self.n <= 0:
            raise ValueError("biased bitflip model needs an even, positive n")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if not (0.0 < self.p < 1.0):
            raise ValueError("p must lie in (0, 1)")

    @property
    def half(self) -> int:
        return self.n // 2

    @property
    def rates(self) -> np.ndarray:
        h = self.half
        return np.array([self.p] * h + [self.alpha * self.p] * h)

    def prob(self, bits: int) -> float:
        return float(self.prob_array(np.array([bits], dtype=np.int64))[0])

    def prob_array(self, errors: np.ndarray) -> np.ndarray:
        h = self.half
        low = popcount(errors & ((1 << h) - 1))
        high = popcount(errors >> h)
        p, q = self.p, self.alpha * self.p
        return (
            p**low * (1.0 - p) ** (h - low) * q**high * (1.0 - q) ** (h - high)
        )

    def block_prob(self, k: int, j: int) -> float:
        """Probability of one specific error with k p-flips and j alpha*p-flips."""
        h, p, q = self.half, self.p, self.alpha * self.p
        return p**k * (1 - p) ** (h - k) * q**j * (1 - q) ** (h - j)

    def scaled(self, beta: float) -> "BiasedBitflipModel":
        return scale_knob(self, beta)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        flips = rng.random((count, self.n)) < self.rates[None, :]
        return (flips << np.arange(self.n, dtype=np.int64)).sum(axis=1)

    def weight_distribution(self) -> np.ndarray:
        """Exact mass per weight, by two-block binomial convolution."""
        h = self.half
        low = _binomial_pmf(h, self.p)
        high = _binomial_pmf(h, self.alpha * self.p)
        return np.convolve(low, high)

    def to_json(self) -> str:
        return json.dumps(
            {"kind": "biased_bitflip", "n": self.n, "p": self.p, "alpha": self.alpha}
        )


@dataclass(frozen=True)
class DepolarizingModel:
    """Independent depolarizing noise with per-qubit rates p_i in (0, 3/4)."""

    n: int
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.rates) != self.n:
            raise ValueError("need one rate per qubit")
        if any(not (0.0 < r < 0.75) for r in self.rates):
            raise ValueError("depolarizing rates must lie in (0, 3/4)")

    def prob(self, x: int, z: int) -> float:
        out = 1.0
        for i, r in enumerate(self.rates):
            out *= r / 3.0 if ((x >> i) | (z >> i)) & 1 else 1.0 - r
        return out

    def prob_arrays(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        out = np.ones(len(x))
        nz = x | z
        for i, r in enumerate(self.rates):
            hit = ((nz >> i) & 1).astype(bool)
            out *= np.where(hit, r / 3.0, 1.0 - r)
        return out

    def scaled(self, beta: float) -> "DepolarizingModel":
        return scale_knob(self, beta)

    def sample(
        self, count: int, rng: np.random.Generator
    ) -> tuple[np.ndarray, np.ndarray]:
        """Sample count errors; returns (x, z) mask arrays."""
        rates = np.array(self.rates)
        hit = rng.random((count, self.n)) < rates[None, :]
        which = rng.integers(0, 3, size=(count, self.n))  # 0:X 1:Y 2:Z
        shifts = np.arange(self.n, dtype=np.int64)
        x = ((hit & (which <= 1)) << shifts).sum(axis=1)
        z = ((hit & (which >= 1)) << shifts).sum(axis=1)
        return x, z

    def weight_distribution(self) -> np.ndarray:
        """Exact mass per weight: convolution of per-qubit (1-p_i, p_i)."""
        dist = np.array([1.0])
        for r in self.rates:
            dist = np.convolve(dist, np.array([1.0 - r, r]))
        return dist

    def to_json(self) -> str:
        return json.dumps(
            {"kind": "depolarizing", "n": self.n, "rates": list(self.rates)}
        )


ErrorModel = BiasedBitflipModel | DepolarizingModel


def model_from_json(payload: str) -> ErrorModel:
    data = json.loads(payload)
    if data["kind"] == "biased_bitflip":
        return BiasedBitflipModel(data["n"], data["p"], data["alpha"])
    if data["kind"] == "depolarizing":
        return DepolarizingModel(data["n"], tuple(data["rates"]))
    raise ValueError(f"unknown model kind {data['kind']!r}")


def scale_knob(model: ErrorModel, beta: float) -> ErrorModel:
    """Return the model with every rate multiplied by beta (beta=1 is identity).

    Refuses scaled rates outside the valid range instead of clipping.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if isinstance(model, BiasedBitflipModel):
        if beta * model.p >= 1.0:
            raise ValueError(f"scaled flip rate {beta * model.p} >= 1")
        return BiasedBitflipModel(model.n, beta * model.p, model.alpha)
    if isinstance(model, DepolarizingModel):
        scaled = tuple(beta * r for r in model.rates)
        if any(r >= 0.75 for r in scaled):
            raise ValueError(f"scaled depolarizing rate {max(scaled)} >= 3/4")
        return DepolarizingModel(model.n, scaled)
    raise TypeError(f"unsupported model type {type(model)!r}")


def sample_rates(
    n: int, p: float, sigma2: float, rng: np.random.Generator
) -> tuple[float, ...]:
    """n Gaussian rate draws with mean p and variance sigma2, resampled into (0, 3/4).

    Resampling (rather than clipping) avoids probability atoms at the
    boundaries; with sigma2=0 every rate is exactly p.
    """
    if not (0.0 < p < 0.75):
        raise ValueError("mean rate must lie in (0, 3/4)")
    if sigma2 == 0.0:
        return (p,) * n
    std = math.sqrt(sigma2)
    rates = []
    while len(rates) < n:
        draw = rng.normal(p, std)
        if 0.0 < draw < 0.75:
            rates.append(float(draw))
    return tuple(rates)


def sample_error(model: ErrorModel, rng: np.random.Generator):
    """Draw a single error: an int for bitflip models, an (x, z) pair otherwise."""
    if isinstance(model, BiasedBitflipModel):
        return int(model.sample(1, rng)[0])
    x, z = model.sample(1, rng)
    return int(x[0]), int(z[0])


def _binomial_pmf(m: int, p: float) -> np.ndarray:
    return np.array([math.comb(m, k) * p**k * (1 - p) ** (m - k) for k in range(m + 1)])


def max_rate(model: ErrorModel) -> float:
    return model.p if isinstance(model, BiasedBitflipModel) else max(model.rates)


def tail_bound(model: ErrorModel, t: float) -> dict[str, float]:
    """Upper bounds on Pr(weight >= t) for an iid model at the maximum rate.

    Returns a Bernstein-style and a Hoeffding-style bound, each clamped to 1
    below the regime where the exponential form applies, so that both dominate
    the exact tail for every t in [0, n].
    """
    n, p = model.n, max_rate(model)
    mean = n * p
    u = t - mean
    if u <= 0:
        bernstein = 1.0
    else:
        var = n * p * (1 - p)
        bernstein = math.exp(-(u**2) / (2.0 * (var + u / 3.0)))
    hoeffding = 1.0 if u <= 0 else math.exp(-2.0 * u**2 / n)
    return {"bernstein": min(1.0, bernstein), "hoeffding": min(1.0, hoeffding)}


def prior_gap_bound(n: int, p: float) -> float:
    """exp(-(n/2)(1-2p)^2): Hoeffding bound on Pr(weight >= n/2) at rate p."""
    return math.exp(-(n / 2.0) * (1.0 - 2.0 * p) ** 2)
