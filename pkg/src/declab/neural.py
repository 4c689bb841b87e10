"""From-scratch feedforward decoder with virtual (weighted-histogram) training.

The network maps syndrome bits to either per-bit error probabilities
(repetition head: independent sigmoids, thresholded to a raw bitstring label
at decode time) or a softmax over logical classes (degenerate head).  All
gradients are analytic; optimization is plain Adam.  Training weights come
from sparse batch histograms -- count/m for sampled data, exact example
probabilities in infinite-data mode -- and validation is always the exact
logical error probability against the true model, with the reported decoder
taken at the best validation epoch.

Scalar losses are reduced with math.fsum so a histogram batch and the plain
averaged loss over the same draws agree bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .decoders import DecoderTable, Problem, RepetitionProblem
from .noise import scale_knob
from . import datasets as ds


@dataclass(frozen=True)
class FnnArchitecture:
    input_dim: int
    hidden: tuple[int, ...]
    out_dim: int
    head: str  # "sigmoid_bits" | "softmax"
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if len(self.hidden) < 1 or any(w <= 0 for w in self.hidden):
            raise ValueError("need at least one hidden layer of positive width")
        if self.head not in ("sigmoid_bits", "softmax"):
            raise ValueError(f"unknown head {self.head!r}")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")


def arch_for_problem(
    problem: Problem, hidden: tuple[int, ...], dropout: float = 0.0
) -> FnnArchitecture:
    if isinstance(problem, RepetitionProblem):
        return FnnArchitecture(problem.n - 1, hidden, problem.n, "sigmoid_bits", dropout)
    return FnnArchitecture(
        problem.code.r, hidden, problem.num_classes, "softmax", dropout
    )


Params = list[tuple[np.ndarray, np.ndarray]]


def init_params(arch: FnnArchitecture, rng: np.random.Generator) -> Params:
    """He-style init: zero-mean normals with variance 2/fan_in, zero biases."""
    dims = [arch.input_dim, *arch.hidden, arch.out_dim]
    params: Params = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        w = rng.normal(0.0, math.sqrt(2.0 / d_in), size=(d_in, d_out))
        params.append((w, np.zeros(d_out)))
    return params


def copy_params(params: Params) -> Params:
    return [(w.copy(), b.copy()) for w, b in params]


def _forward(params, x, dropout=0.0, rng=None):
    """Forward pass returning logits and per-layer caches for backprop."""
    h = x
    caches = []
    for w, b in params[:-1]:
        pre = h @ w + b
        act = np.maximum(pre, 0.0)
        mask = None
        if dropout > 0.0 and rng is not None:
            mask = (rng.random(act.shape) >= dropout) / (1.0 - dropout)
            act = act * mask
        caches.append((h, pre, mask))
        h = act
    w, b = params[-1]
    return h @ w + b, caches, h


def forward(params: Params, x: np.ndarray, head: str) -> np.ndarray:
    """Output probabilities: per-bit sigmoids or per-class softmax rows."""
    logits, _, _ = _forward(params, x)
    if head == "sigmoid_bits":
        return 1.0 / (1.0 + np.exp(-logits))
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def per_example_losses(
    params: Params, x: np.ndarray, y: np.ndarray, head: str, loss: str = "ce"
) -> np.ndarray:
    """Loss of each example row; "ce" is the training loss, "brier" quadratic."""
    logits, _, _ = _forward(params, x)
    if head == "sigmoid_bits":
        if loss == "ce":
            return (np.logaddexp(0.0, logits) - y * logits).mean(axis=1)
        probs = 1.0 / (1.0 + np.exp(-logits))
        return ((probs - y) ** 2).mean(axis=1)
    lse = np.log(np.exp(logits - logits.max(axis=1, keepdims=True)).sum(axis=1))
    lse = lse + logits.max(axis=1)
    picked = logits[np.arange(len(logits)), y]
    if loss == "ce":
        return lse - picked
    probs = np.exp(logits - lse[:, None])
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(probs)), y] = 1.0
    return ((probs - onehot) ** 2).sum(axis=1)


@dataclass
class VirtualBatch:
    """Weighted batch over unique examples.

    ``weights`` sum to 1.  For sampled batches ``counts``/``m`` hold the raw
    histogram, enabling bit-exact equivalence with the plain averaged loss.
    """

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    counts: np.ndarray | None = None
    m: int | None = None


def syndrome_inputs(num_syndromes: int, m_bits: int) -> np.ndarray:
    sigmas = np.arange(num_syndromes)
    return ((sigmas[:, None] >> np.arange(m_bits)[None, :]) & 1).astype(float)


def batch_from_histogram(
    hist: dict[tuple[int, int], float],
    problem: Problem,
    counts_total: int | None = None,
) -> VirtualBatch:
    """Build a VirtualBatch from a sparse {(sigma, label): weight} map."""
    items = sorted(hist.items())
    sigmas = np.array([s for (s, _), _ in items], dtype=np.int64)
    labels = np.array([l for (_, l), _ in items], dtype=np.int64)
    weights = np.array([v for _, v in items])
    m_bits = _input_bits(problem)
    x = ((sigmas[:, None] >> np.arange(m_bits)[None, :]) & 1).astype(float)
    if isinstance(problem, RepetitionProblem):
        y = ((labels[:, None] >> np.arange(problem.n)[None, :]) & 1).astype(float)
    else:
        y = labels
    counts = None
    m = None
    if counts_total is not None:
        counts = np.rint(weights * counts_total).astype(np.int64)
        m = counts_total
        weights = weights / weights.sum()
    return VirtualBatch(x, y, weights, counts, m)


def weighted_loss(params: Params, batch: VirtualBatch, head: str, loss: str = "ce") -> float:
    """Virtual training loss: sum of per-example losses times batch weights.

    With integer counts the reduction is fsum over the expanded multiset
    divided by m, exactly the plain averaged loss over the same draws.
    """
    if abs(float(batch.weights.sum()) - 1.0) > 1e-9:
        raise ValueError("batch weights must sum to 1")
    losses = per_example_losses(params, batch.x, batch.y, head, loss)
    if batch.counts is not None and batch.m:
        return math.fsum(np.repeat(losses, batch.counts)) / batch.m
    return math.fsum(losses * batch.weights)


def plain_sequence_loss(
    params: Params,
    batch: VirtualBatch,
    sequence: list[int],
    head: str,
    loss: str = "ce",
) -> float:
    """Ordinary averaged loss over a draw sequence of unique-example indices."""
    losses = per_example_losses(params, batch.x, batch.y, head, loss)
    return math.fsum(losses[i] for i in sequence) / len(sequence)


def gradients(
    params: Params,
    batch: VirtualBatch,
    head: str,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Analytic gradient of the weighted training loss (optionally with dropout)."""
    logits, caches, h_last = _forward(params, batch.x, dropout, rng)
    w = batch.weights
    if head == "sigmoid_bits":
        probs = 1.0 / (1.0 + np.exp(-logits))
        losses = (np.logaddexp(0.0, logits) - batch.y * logits).mean(axis=1)
        d_logits = (probs - batch.y) / logits.shape[1] * w[:, None]
    else:
        mx = logits.max(axis=1, keepdims=True)
        lse = np.log(np.exp(logits - mx).sum(axis=1, keepdims=True)) + mx
        probs = np.exp(logits - lse)
        losses = (lse[:, 0] - logits[np.arange(len(logits)), batch.y])
        d_logits = probs.copy()
        d_logits[np.arange(len(probs)), batch.y] -= 1.0
        d_logits *= w[:, None]
    total = float(np.dot(w, losses))
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params)  # type: ignore
    grads[-1] = (h_last.T @ d_logits, d_logits.sum(axis=0))
    delta = d_logits @ params[-1][0].T
    for layer in range(len(params) - 2, -1, -1):
        h_in, pre, mask = caches[layer]
        if mask is not None:
            delta = delta * mask
        delta = delta * (pre > 0)
        grads[layer] = (h_in.T @ delta, delta.sum(axis=0))
        if layer:
            delta = delta @ params[layer][0].T
    return total, grads


@dataclass
class AdamState:
    m: list[tuple[np.ndarray, np.ndarray]]
    v: list[tuple[np.ndarray, np.ndarray]]
    t: int = 0


def adam_init(params: Params) -> AdamState:
    zeros = lambda: [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    return AdamState(zeros(), zeros())


def adam_step(
    params: Params,
    grads: list[tuple[np.ndarray, np.ndarray]],
    state: AdamState,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Params:
    """Standard Adam update with bias correction; mutates state, returns params."""
    state.t += 1
    t = state.t
    out: Params = []
    for i, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
        mw, mb = state.m[i]
        vw, vb = state.v[i]
        mw = beta1 * mw + (1 - beta1) * gw
        mb = beta1 * mb + (1 - beta1) * gb
        vw = beta2 * vw + (1 - beta2) * gw**2
        vb = beta2 * vb + (1 - beta2) * gb**2
        state.m[i] = (mw, mb)
        state.v[i] = (vw, vb)
        c1 = 1 - beta1**t
        c2 = 1 - beta2**t
        w = w - learning_rate * (mw / c1) / (np.sqrt(vw / c2) + eps)
        b = b - learning_rate * (mb / c1) / (np.sqrt(vb / c2) + eps)
        out.append((w, b))
    return out


# ---------------------------------------------------------------------------
# Decoding tables from trained networks
# ---------------------------------------------------------------------------


def decoder_table(params: Params, arch: FnnArchitecture, problem: Problem) -> DecoderTable:
    """Evaluate the network on every syndrome and emit an explicit table.

    The repetition head thresholds each output bit at 0.5 and the resulting
    bitstring is the emitted label as-is.  No coset projection is applied:
    snapping outputs onto the two syndrome-consistent candidates would hand
    the network the decoding rule for every syndrome it never trained on,
    which is exactly the knowledge a data-driven decoder is supposed to earn
    from data (a label off the coset simply always fails).
    """
    x = syndrome_inputs(problem.num_syndromes, arch.input_dim)
    probs = forward(params, x, arch.head)
    if arch.head == "softmax":
        entries = np.argmax(probs, axis=1).astype(np.int64)
        return DecoderTable(
            "logical_class", problem.n, problem.num_syndromes, entries, name="fnn"
        )
    bits = (probs > 0.5).astype(np.int64)
    entries = (bits << np.arange(problem.n)[None, :]).sum(axis=1)
    return DecoderTable(
        "classical_error", problem.n, problem.num_syndromes, entries, name="fnn"
    )


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    learning_rate: float = 3e-3
    batch_size: int = 100
    max_epochs: int = 400
    eval_every: int = 10
    early_stop_patience: int = 10**9  # evaluations without improvement
    knob_beta: float = 1.0
    mode: str = "sampled"  # sampled | exact | uniform_good
    n_train: int = 2000
    seed: int = 0


@dataclass
class TrainedDecoder:
    arch: FnnArchitecture
    params: Params
    best_epoch: int
    best_validation_lep: float
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    config: TrainConfig | None = None

    def to_table(self, problem: Problem) -> DecoderTable:
        return decoder_table(self.params, self.arch, problem)

    def to_json(self) -> str:
        return json.dumps(
            {
                "arch": {
                    "input_dim": self.arch.input_dim,
                    "hidden": list(self.arch.hidden),
                    "out_dim": self.arch.out_dim,
                    "head": self.arch.head,
                    "dropout": self.arch.dropout,
                },
                "params": [
                    {"w": w.ravel().tolist(), "b": b.tolist()} for w, b in self.params
                ],
                "best_epoch": self.best_epoch,
                "best_validation_lep": self.best_validation_lep,
                "trace": self.trace,
            }
        )

    @classmethod
    def from_json(cls, payload: str) -> "TrainedDecoder":
        data = json.loads(payload)
        arch = FnnArchitecture(
            data["arch"]["input_dim"],
            tuple(data["arch"]["hidden"]),
            data["arch"]["out_dim"],
            data["arch"]["head"],
            data["arch"]["dropout"],
        )
        dims = [arch.input_dim, *arch.hidden, arch.out_dim]
        params = [
            (
                np.array(layer["w"]).reshape(d_in, d_out),
                np.array(layer["b"]),
            )
            for layer, d_in, d_out in zip(data["params"], dims[:-1], dims[1:])
        ]
        return cls(
            arch,
            params,
            data["best_epoch"],
            data["best_validation_lep"],
            [tuple(entry) for entry in data["trace"]],
        )


def _input_bits(problem: Problem) -> int:
    return problem.n - 1 if isinstance(problem, RepetitionProblem) else problem.code.r


def _label_kind(problem: Problem) -> str:
    return (
        "classical_error" if isinstance(problem, RepetitionProblem) else "logical_class"
    )


def _validation_criterion(problem: Problem) -> str:
    return "nondegenerate" if isinstance(problem, RepetitionProblem) else "degenerate"


def _training_histogram(problem: Problem, config: TrainConfig, rng, train_model=None):
    """Unique-example table plus per-draw ids (sampled) or exact weights."""
    if train_model is None and config.mode != "uniform_good":
        train_model = scale_knob(problem.model, config.knob_beta)
    if config.mode == "sampled":
        if isinstance(problem, RepetitionProblem):
            errors = train_model.sample(config.n_train, rng)
            sigmas = (errors ^ (errors >> 1)) & (problem.num_syndromes - 1)
            labels = errors
        else:
            x, z = train_model.sample(config.n_train, rng)
            idx = (z << problem.n) | x
            sigmas = problem.sigma[idx]
            labels = problem.cls[idx]
        pairs = sigmas * (1 << (problem.n + 1)) + labels  # unique (sigma,label) key
        uniq, ids = np.unique(pairs, return_inverse=True)
        u_sigmas = uniq >> (problem.n + 1)
        u_labels = uniq & ((1 << (problem.n + 1)) - 1)
        return u_sigmas, u_labels, ids, None
    if config.mode == "exact":
        if isinstance(problem, RepetitionProblem):
            u_sigmas = problem.sigma
            u_labels = problem.errors
            weights = train_model.prob_array(problem.errors)
        else:
            scaled_p = train_model.prob_arrays(problem.x, problem.z)
            joint = np.bincount(
                problem.sigma * problem.num_classes + problem.cls,
                weights=scaled_p,
                minlength=problem.num_syndromes * problem.num_classes,
            )
            grid = np.arange(problem.num_syndromes * problem.num_classes)
            u_sigmas = grid // problem.num_classes
            u_labels = grid % problem.num_classes
            weights = joint
        return u_sigmas, u_labels, None, weights
    if config.mode == "uniform_good":
        mld = (
            problem.mld_table()
            if isinstance(problem, RepetitionProblem)
            else problem.mld_degenerate()
        )
        dist = ds.uniform_good_distribution(problem, mld)
        items = sorted(dist.entries.items())
        u_sigmas = np.array([s for (s, _), _ in items], dtype=np.int64)
        u_labels = np.array([l for (_, l), _ in items], dtype=np.int64)
        weights = np.array([v for _, v in items])
        return u_sigmas, u_labels, None, weights
    raise ValueError(f"unknown training mode {config.mode!r}")


def _batch_arrays(problem: Problem, arch, u_sigmas, u_labels):
    x = ((u_sigmas[:, None] >> np.arange(arch.input_dim)[None, :]) & 1).astype(float)
    if arch.head == "sigmoid_bits":
        y = ((u_labels[:, None] >> np.arange(problem.n)[None, :]) & 1).astype(float)
    else:
        y = u_labels
    return x, y


def train(
    problem: Problem,
    arch: FnnArchitecture,
    config: TrainConfig,
    train_model=None,
) -> TrainedDecoder:
    """Train one decoder on the knob-scaled distribution, validating exactly.

    Validation computes the exact logical error probability of the thresholded
    network against the *true* model every ``eval_every`` epochs; the returned
    parameters are those of the best validation epoch (early stopping).
    ``train_model`` overrides the default scale_knob(problem.model, knob_beta)
    training distribution.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    u_sigmas, u_labels, ids, weights = _training_histogram(
        problem, config, rng, train_model
    )
    x, y = _batch_arrays(problem, arch, u_sigmas, u_labels)
    criterion = _validation_criterion(problem)

    params = init_params(arch, rng)
    state = adam_init(params)
    best_params = copy_params(params)
    best_epoch = 0
    best_val = problem.lep(decoder_table(params, arch, problem), criterion).lep
    trace: list[tuple[int, float, float]] = [(0, math.nan, best_val)]
    evals_since_best = 0
    last_loss = math.nan

    for epoch in range(1, config.max_epochs + 1):
        if ids is not None:
            perm = rng.permutation(len(ids))
            for start in range(0, len(ids), config.batch_size):
                chunk = ids[perm[start : start + config.batch_size]]
                counts = np.bincount(chunk, minlength=len(u_sigmas))
                w = counts / len(chunk)
                batch = VirtualBatch(x, y, w, counts, len(chunk))
                last_loss, grads = gradients(params, batch, arch.head, arch.dropout, rng)
                params = adam_step(params, grads, state, config.learning_rate)
        else:
            batch = VirtualBatch(x, y, weights / weights.sum())
            last_loss, grads = gradients(params, batch, arch.head, arch.dropout, rng)
            params = adam_step(params, grads, state, config.learning_rate)

        if epoch % config.eval_every == 0 or epoch == config.max_epochs:
            val = problem.lep(decoder_table(params, arch, problem), criterion).lep
            trace.append((epoch, last_loss, val))
            if val < best_val:
                best_val = val
                best_params = copy_params(params)
                best_epoch = epoch
                evals_since_best = 0
            else:
                evals_since_best += 1
                if evals_since_best >= config.early_stop_patience:
                    break

    return TrainedDecoder(arch, best_params, best_epoch, best_val, trace, config)


# ---------------------------------------------------------------------------
# Random hyperparameter search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchSpace:
    """Pruned FNN ranges: lr log-uniform, discrete depth/width/dropout choices."""

    lr_low: float = 3e-4
    lr_high: float = 1e-2
    n_layers: tuple[int, ...] = (2, 3, 4)
    widths: tuple[int, ...] = (32, 64)
    dropouts: tuple[float, ...] = (0.05, 0.10, 0.15)


def sample_hyperparameters(space: SearchSpace, rng: np.random.Generator) -> dict:
    lr = math.exp(rng.uniform(math.log(space.lr_low), math.log(space.lr_high)))
    return {
        "learning_rate": float(lr),
        "n_layers": int(rng.choice(space.n_layers)),
        "width": int(rng.choice(space.widths)),
        "dropout": float(rng.choice(space.dropouts)),
    }


def derive_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Stable per-run seed stream from (master, key...) integers."""
    return np.random.SeedSequence([int(master_seed), *[int(k) for k in keys]])


def random_search(
    problem: Problem,
    space: SearchSpace,
    runs: int,
    base_config: TrainConfig,
    master_seed: int,
    train_model=None,
) -> tuple[list[tuple[dict, TrainedDecoder]], dict]:
    """K independent train() calls with sampled hyperparameters, plus summary."""
    results = []
    for run_id in range(runs):
        seed_seq = derive_seed(master_seed, int(round(base_config.knob_beta * 1e6)), run_id)
        rng = np.random.default_rng(seed_seq)
        hp = sample_hyperparameters(space, rng)
        arch = arch_for_problem(
            problem, (hp["width"],) * hp["n_layers"], hp["dropout"]
        )
        config = replace(
            base_config,
            learning_rate=hp["learning_rate"],
            seed=int(seed_seq.generate_state(1)[0]),
        )
        results.append((hp, train(problem, arch, config, train_model)))
    leps = np.array([t.best_validation_lep for _, t in results])
    summary = {
        "runs": runs,
        "best_lep": float(leps.min()),
        "median_lep": float(np.median(leps)),
        "q25_lep": float(np.percentile(leps, 25)),
        "q75_lep": float(np.percentile(leps, 75)),
    }
    return results, summary
