"""Stabilizer code definitions, syndromes, and the logical/stabilizer/pure-error
decomposition of Pauli errors, plus the classical repetition code.

Generator sets for the built-in codes are static tables of standard published
generators.  Their correctness (commutation relations, distance 3) is enforced
by the test suite rather than trusted.  Destabilizers are derived once per
code by Gaussian elimination over GF(2) and cached on the code object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .pauli import (
    ClassicalError,
    PauliOperator,
    Syndrome,
    commutes,
    parity,
    pauli_mul,
    symplectic_parity_arrays,
)

CODE_NAMES = ("five_qubit", "steane", "surface_d3")

LOGICAL_CLASS_NAMES = ("I", "X", "Z", "Y")


@dataclass(frozen=True)
class LogicalClass:
    """Index in [0, 2^2k) encoding exponents of the logical generators.

    For k=1 with generators (X, Z): 0 -> I, 1 -> X, 2 -> Z, 3 -> Y.
    """

    index: int

    @property
    def name(self) -> str:
        return LOGICAL_CLASS_NAMES[self.index] if self.index < 4 else str(self.index)


def _solve_gf2(rows: list[int], ncols: int, targets: list[int]) -> list[int]:
    """Solve row_j . h = target_bit_j (mod 2) for each target bit-vector.

    ``rows`` are bit masks over ``ncols`` columns and must be independent.
    ``targets`` are r-bit integers (bit j = desired parity against row j).
    Returns one solution per target, supported on the pivot columns only.
    """
    r = len(rows)
    reduced = list(rows)
    combo = [1 << j for j in range(r)]  # tracks combinations of original rows
    pivots: list[int] = []
    for t in range(r):
        pivot = -1
        for c in range(ncols):
            if c in pivots:
                continue
            if (reduced[t] >> c) & 1:
                pivot = c
                break
        if pivot < 0:
            raise ValueError("dependent generator set")
        pivots.append(pivot)
        for u in range(r):
            if u != t and (reduced[u] >> pivot) & 1:
                reduced[u] ^= reduced[t]
                combo[u] ^= combo[t]
    solutions = []
    for target in targets:
        h = 0
        for t in range(r):
            if parity(combo[t] & target):
                h |= 1 << pivots[t]
        solutions.append(h)
    return solutions


@dataclass(frozen=True)
class StabilizerCode:
    """[[n, k, d]] stabilizer code given by generator tables.

    Syndrome bit i is the anticommutation indicator against
    ``stabilizer_gens[i]``.  ``logical_gens`` is (X, Z, ...) with 2k entries;
    ``destabilizer_gens[i]`` anticommutes with generator i only.
    """

    name: str
    n: int
    k: int
    stabilizer_gens: tuple[PauliOperator, ...]
    logical_gens: tuple[PauliOperator, ...]
    destabilizer_gens: tuple[PauliOperator, ...] = field(default=())

    @property
    def r(self) -> int:
        return self.n - self.k

    def with_destabilizers(self) -> "StabilizerCode":
        if self.destabilizer_gens:
            return self
        rows = [(g.z) | (g.x << self.n) for g in self.stabilizer_gens]
        sols = _solve_gf2(rows, 2 * self.n, [1 << i for i in range(self.r)])
        mask = (1 << self.n) - 1
        destabs = tuple(
            PauliOperator(self.n, h & mask, h >> self.n) for h in sols
        )
        return StabilizerCode(
            self.name, self.n, self.k, self.stabilizer_gens, self.logical_gens, destabs
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "n": self.n,
                "k": self.k,
                "stabilizers": [g.to_string() for g in self.stabilizer_gens],
                "logicals": [g.to_string() for g in self.logical_gens],
                "destabilizers": [g.to_string() for g in self.destabilizer_gens],
            },
            indent=2,
        )


_CODE_TABLES = {
    # [[5,1,3]] five-qubit code, standard cyclic generators.
    "five_qubit": (
        5,
        ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"],
        ["XXXXX", "ZZZZZ"],
    ),
    # [[7,1,3]] Steane code from the (7,4,3) Hamming parity checks.
    "steane": (
        7,
        ["XIXIXIX", "IXXIIXX", "IIIXXXX", "ZIZIZIZ", "IZZIIZZ", "IIIZZZZ"],
        ["XXXXXXX", "ZZZZZZZ"],
    ),
    # [[9,1,3]] rotated surface code on a 3x3 grid (row-major qubit order):
    # bulk plaquettes (0,1,3,4)/(4,5,7,8) X-type and (1,2,4,5)/(3,4,6,7) Z-type,
    # plus boundary pairs.
    "surface_d3": (
        9,
        [
            "XXIXXIIII",
            "IIIIXXIXX",
            "IIXIIXIII",
            "IIIXIIXII",
            "IZZIZZIII",
            "IIIZZIZZI",
            "ZZIIIIIII",
            "IIIIIIIZZ",
        ],
        ["XXXIIIIII", "ZIIZIIZII"],
    ),
}


@lru_cache(maxsize=None)
def build_code(name: str) -> StabilizerCode:
    """Construct one of the built-in [[n,1,3]] codes with cached destabilizers."""
    if name not in _CODE_TABLES:
        raise ValueError(f"unknown code {name!r}; choose from {CODE_NAMES}")
    n, stabs, logicals = _CODE_TABLES[name]
    code = StabilizerCode(
        name=name,
        n=n,
        k=1,
        stabilizer_gens=tuple(PauliOperator.from_string(s) for s in stabs),
        logical_gens=tuple(PauliOperator.from_string(s) for s in logicals),
    )
    return code.with_destabilizers()


def syndrome(code: StabilizerCode, e: PauliOperator) -> Syndrome:
    """Anticommutation pattern of e against the stabilizer generators."""
    if e.n != code.n:
        raise ValueError(f"dimension mismatch: {e.n} != {code.n}")
    bits = 0
    for i, g in enumerate(code.stabilizer_gens):
        if not commutes(e, g):
            bits |= 1 << i
    return Syndrome(code.r, bits)


def pure_error(code: StabilizerCode, sigma: Syndrome | int) -> PauliOperator:
    """Canonical pure error t_sigma: product of destabilizers picked by sigma."""
    bits = int(sigma)
    t = PauliOperator(code.n, 0, 0)
    for i, h in enumerate(code.destabilizer_gens):
        if (bits >> i) & 1:
            t = pauli_mul(t, h)
    return t


def logical_class_of(code: StabilizerCode, e: PauliOperator) -> LogicalClass:
    """Logical class of e, read off after stripping the pure-error part."""
    u = pauli_mul(e, pure_error(code, syndrome(code, e)))
    lx, lz = code.logical_gens[0], code.logical_gens[1]
    a = 0 if commutes(u, lz) else 1  # exponent of logical X
    b = 0 if commutes(u, lx) else 1  # exponent of logical Z
    return LogicalClass(a | (b << 1))


def decompose(
    code: StabilizerCode, e: PauliOperator
) -> tuple[LogicalClass, int, PauliOperator]:
    """Split e = l * s * t into (logical class, stabilizer index, pure error)."""
    if e.n != code.n:
        raise ValueError(f"dimension mismatch: {e.n} != {code.n}")
    sig = syndrome(code, e)
    t = pure_error(code, sig)
    cls = logical_class_of(code, e)
    ell = logical_representative(code, cls)
    s = pauli_mul(pauli_mul(e, t), ell)  # all factors self-inverse mod phase
    rows = [(g.x) | (g.z << code.n) for g in code.stabilizer_gens]
    target_vec = (s.x) | (s.z << code.n)
    index = _stabilizer_index(rows, 2 * code.n, target_vec)
    return cls, index, t


def logical_representative(code: StabilizerCode, cls: LogicalClass) -> PauliOperator:
    """Fixed coset representative: product of logical generators by exponent."""
    ell = PauliOperator(code.n, 0, 0)
    if cls.index & 1:
        ell = pauli_mul(ell, code.logical_gens[0])
    if cls.index & 2:
        ell = pauli_mul(ell, code.logical_gens[1])
    return ell


def recompose(
    code: StabilizerCode, cls: LogicalClass, stab_index: int, t: PauliOperator
) -> PauliOperator:
    """Inverse of decompose: l * s * t."""
    s = PauliOperator(code.n, 0, 0)
    for i, g in enumerate(code.stabilizer_gens):
        if (stab_index >> i) & 1:
            s = pauli_mul(s, g)
    return pauli_mul(pauli_mul(logical_representative(code, cls), s), t)


def _stabilizer_index(rows: list[int], ncols: int, target: int) -> int:
    """Exponent vector expressing ``target`` in the span of ``rows`` (GF(2))."""
    r = len(rows)
    reduced = list(rows)
    combo = [1 << j for j in range(r)]
    vec = target
    vec_combo = 0
    used: list[int] = []
    for t in range(r):
        pivot = -1
        for c in range(ncols):
            if c in used:
                continue
            if (reduced[t] >> c) & 1:
                pivot = c
                break
        if pivot < 0:
            raise ValueError("dependent generator set")
        used.append(pivot)
        for u in range(r):
            if u != t and (reduced[u] >> pivot) & 1:
                reduced[u] ^= reduced[t]
                combo[u] ^= combo[t]
        if (vec >> pivot) & 1:
            vec ^= reduced[t]
            vec_combo ^= combo[t]
    if vec != 0:
        raise ValueError("target not in stabilizer span")
    return vec_combo


# ---------------------------------------------------------------------------
# Classical repetition code
# ---------------------------------------------------------------------------


def repetition_syndrome(e: ClassicalError) -> Syndrome:
    """Adjacent-parity syndrome: bit i = e_i xor e_{i+1}."""
    bits = (e.bits ^ (e.bits >> 1)) & ((1 << (e.n - 1)) - 1)
    return Syndrome(e.n - 1, bits)


def repetition_syndrome_array(errors: np.ndarray, n: int) -> np.ndarray:
    return (errors ^ (errors >> 1)) & ((1 << (n - 1)) - 1)


def repetition_candidates(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Both coset errors for every (n-1)-bit syndrome.

    Returns (e0, e1) arrays indexed by syndrome; e0 has bit 0 clear and
    e1 = e0 xor 1^n is its bitwise complement.
    """
    sigmas = np.arange(2 ** (n - 1), dtype=np.int64)
    e0 = np.zeros_like(sigmas)
    cur = np.zeros_like(sigmas)
    for i in range(n - 1):
        cur = cur ^ ((sigmas >> i) & 1)
        e0 |= cur << (i + 1)
    return e0, e0 ^ ((1 << n) - 1)


def syndrome_array(code: StabilizerCode, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized syndromes for arrays of symplectic masks."""
    sig = np.zeros_like(x)
    for i, g in enumerate(code.stabilizer_gens):
        sig |= symplectic_parity_arrays(x, z, g.x, g.z) << i
    return sig


def logical_class_array(
    code: StabilizerCode, x: np.ndarray, z: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    """Vectorized logical class of every error given its syndrome."""
    tx = np.zeros(2**code.r, dtype=np.int64)
    tz = np.zeros(2**code.r, dtype=np.int64)
    for s in range(2**code.r):
        t = pure_error(code, s)
        tx[s], tz[s] = t.x, t.z
    ux, uz = x ^ tx[sigma], z ^ tz[sigma]
    lx, lz = code.logical_gens[0], code.logical_gens[1]
    x_exp = symplectic_parity_arrays(ux, uz, lz.x, lz.z)  # anticommutes with logical Z
    z_exp = symplectic_parity_arrays(ux, uz, lx.x, lx.z)  # anticommutes with logical X
    return x_exp | (z_exp << 1)
