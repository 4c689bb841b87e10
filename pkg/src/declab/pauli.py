"""Symplectic Pauli arithmetic and classical bitstring errors.

Bit conventions used throughout the package:

* (Qu)bit ``i`` lives at integer bit ``1 << i``.
* An n-qubit Pauli mod phase is a pair of n-bit masks ``(x, z)``; qubit i
  carries X iff bit i of ``x`` is set, Z iff bit i of ``z`` is set, Y iff
  both are set.
* The canonical index of a Pauli is ``(z << n) | x``.  Enumerating indices
  in ascending order yields I, X, Z, Y on a single qubit, and this order is
  the tie-breaking order everywhere downstream.
* Classical n-bit errors are plain integers enumerated in ascending order.
* Pauli strings such as ``"XZZXI"`` list qubit 0 first (leftmost char).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

PAULI_ENUM_LIMIT = 12
CLASSICAL_ENUM_LIMIT = 30

_CHAR_TO_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_XZ_TO_CHAR = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def popcount(values: np.ndarray) -> np.ndarray:
    """Per-element population count for an integer array."""
    return np.bitwise_count(values.astype(np.uint64)).astype(np.int64)


def parity(value: int) -> int:
    return bin(value).count("1") & 1


@dataclass(frozen=True)
class PauliOperator:
    """n-qubit Pauli operator mod phase in symplectic (x, z) form."""

    n: int
    x: int
    z: int

    def __post_init__(self) -> None:
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError(f"x/z masks exceed {self.n} qubits")

    @property
    def weight(self) -> int:
        return bin(self.x | self.z).count("1")

    @property
    def index(self) -> int:
        """Canonical enumeration index (z << n) | x."""
        return (self.z << self.n) | self.x

    @classmethod
    def from_index(cls, n: int, index: int) -> "PauliOperator":
        mask = (1 << n) - 1
        return cls(n, index & mask, index >> n)

    @classmethod
    def from_string(cls, s: str) -> "PauliOperator":
        x = z = 0
        for i, ch in enumerate(s.upper()):
            try:
                xb, zb = _CHAR_TO_XZ[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r}") from None
            x |= xb << i
            z |= zb << i
        return cls(len(s), x, z)

    def to_string(self) -> str:
        return "".join(
            _XZ_TO_CHAR[((self.x >> i) & 1, (self.z >> i) & 1)] for i in range(self.n)
        )

    def __str__(self) -> str:
        return self.to_string()


def pauli_mul(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Phase-free product: componentwise XOR of the symplectic masks."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} != {b.n}")
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z)


def commutes(a: PauliOperator, b: PauliOperator) -> bool:
    """True iff the symplectic inner product a.x·b.z + a.z·b.x vanishes mod 2."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} != {b.n}")
    return parity((a.x & b.z) ^ (a.z & b.x)) == 0


@dataclass(frozen=True)
class ClassicalError:
    """Classical bitflip error on n bits."""

    n: int
    bits: int

    def __post_init__(self) -> None:
        if self.bits & ~((1 << self.n) - 1):
            raise ValueError(f"bits exceed {self.n} positions")

    @property
    def weight(self) -> int:
        return bin(self.bits).count("1")

    def to_string(self) -> str:
        return format(self.bits, f"0{self.n}b")


@dataclass(frozen=True)
class Syndrome:
    """m-bit syndrome; bit i pairs with stabilizer generator i."""

    m: int
    bits: int

    def __int__(self) -> int:
        return self.bits

    def to_string(self) -> str:
        return format(self.bits, f"0{self.m}b")


def enumerate_errors(n: int, kind: str) -> Iterator[PauliOperator | ClassicalError]:
    """Yield every error of the given kind exactly once, in canonical order.

    Pauli order is ascending (z << n) | x; classical order is ascending bits.
    Resource guards: n <= 12 (pauli), n <= 30 (classical).
    """
    if kind == "pauli":
        if n > PAULI_ENUM_LIMIT:
            raise ValueError(f"pauli enumeration limited to n <= {PAULI_ENUM_LIMIT}")
        mask = (1 << n) - 1
        for idx in range(4**n):
            yield PauliOperator(n, idx & mask, idx >> n)
    elif kind == "classical":
        if n > CLASSICAL_ENUM_LIMIT:
            raise ValueError(
                f"classical enumeration limited to n <= {CLASSICAL_ENUM_LIMIT}"
            )
        for bits in range(2**n):
            yield ClassicalError(n, bits)
    else:
        raise ValueError(f"unknown error kind {kind!r}")


def pauli_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    """x/z mask arrays for all 4**n Paulis in canonical order."""
    if n > PAULI_ENUM_LIMIT:
        raise ValueError(f"pauli enumeration limited to n <= {PAULI_ENUM_LIMIT}")
    idx = np.arange(4**n, dtype=np.int64)
    return idx & ((1 << n) - 1), idx >> n


def symplectic_parity_arrays(
    x: np.ndarray, z: np.ndarray, gx: int, gz: int
) -> np.ndarray:
    """Vectorized anticommutation indicator of (x, z) arrays against one Pauli."""
    return (popcount((x & gz) ^ (z & gx)) & 1).astype(np.int64)
