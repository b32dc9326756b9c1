"""CSS quantum polar codes and the X-noise predicates built on them.

A code pairs two classical polar codes on the same transform E: the
Z-basis code with information set A_Z and the X-basis code with
information set A_X. It is CSS exactly when no row is frozen in both
bases. Logical data sits on Λ = A_X ∩ A_Z.

For X-type noise e:

- the syndrome is (eE) on A_Z^c,
- X stabilizers C_X^⊥ are spans of rows A_X^c of E,
- the error class is (eE) on Λ, packed into an int with bit k holding the
  k-th logical row in ascending order.

Z-type noise is handled by `mirror`: the transpose E^T equals E with
rows and columns reversed, so Z machinery on a code is X machinery on the
index-reversed code with the two bases swapped.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
import numpy.typing as npt

from qpolar.polar_core import (
    BitBlock,
    ClassicalPolarCode,
    ConstructionError,
    ConstructionKind,
    ConstructionSpec,
    as_bit_block,
    polar_transform,
    rank_rows,
    row_weight,
)

log = logging.getLogger("qpolar.css")

type ErrorClassLabel = int


class CSSViolationError(ValueError):
    """Frozen sets overlap, or the code carries no logical qubit."""


class SyndromeMismatchError(RuntimeError):
    """A correction does not reproduce the observed syndrome (decoder fault)."""


@dataclass(frozen=True)
class QuantumPolarCode:
    n: int
    info_x: tuple[int, ...]
    info_z: tuple[int, ...]
    construction: ConstructionSpec

    def __post_init__(self) -> None:
        size = 1 << self.n
        for name in ("info_x", "info_z"):
            rows = tuple(sorted(getattr(self, name)))
            if len(set(rows)) != len(rows):
                raise ConstructionError(f"{name} has duplicate rows")
            if rows and not (rows[0] >= 0 and rows[-1] < size):
                raise ConstructionError(f"{name} leaves range 0..{size - 1}")
            object.__setattr__(self, name, rows)
        if not self.logical:
            raise CSSViolationError(
                "A_X ∩ A_Z is empty: the code has no logical qubit"
            )

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K_X(self) -> int:
        return len(self.info_x)

    @property
    def K_Z(self) -> int:
        return len(self.info_z)

    @property
    def K(self) -> int:
        return len(self.logical)

    @cached_property
    def frozen_x(self) -> tuple[int, ...]:
        return _complement(self.info_x, self.N)

    @cached_property
    def frozen_z(self) -> tuple[int, ...]:
        return _complement(self.info_z, self.N)

    @cached_property
    def logical(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.info_x) & set(self.info_z)))

    @cached_property
    def z_code(self) -> ClassicalPolarCode:
        """Classical code that X-noise syndrome decoding runs on."""
        return ClassicalPolarCode(self.n, self.info_z, (), self.construction)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "K_X": self.K_X,
            "K_Z": self.K_Z,
            "construction": self.construction.to_dict(),
            "frozen_x": list(self.frozen_x),
            "frozen_z": list(self.frozen_z),
            "logical": list(self.logical),
        }


def _complement(rows: Iterable[int], size: int) -> tuple[int, ...]:
    taken = set(rows)
    return tuple(i for i in range(size) if i not in taken)


# --- Construction ----------------------------------------------------------


def symmetric_dimensions(n: int, k: int) -> tuple[int, int]:
    """K_X = K_Z = (N + K) / 2."""
    size = 1 << n
    if not 1 <= k <= size or (size + k) % 2:
        raise ConstructionError(
            f"symmetric split needs 1 <= K <= N and N + K even, got N={size}, K={k}"
        )
    half = (size + k) // 2
    return half, half


def q1_dimensions(n: int, info_index: int) -> tuple[int, int]:
    """(K_X, K_Z) of the Q1 code whose logical row is `info_index`."""
    size = 1 << n
    if not 0 <= info_index < size:
        raise ConstructionError(
            f"Q1 info index {info_index!r} out of range 0..{size - 1}"
        )
    return info_index + 1, size - info_index


def build_qpc(n: int, k_x: int, k_z: int, spec: ConstructionSpec) -> QuantumPolarCode:
    """PW/HPW/RM: A_Z = top-K_Z rows, A_X^c = top-(N-K_X) rows.

    Q1 with info index i: Z freezes rows 0..i-1, X freezes rows i+1..N-1.
    """
    if n < 1:
        raise ConstructionError(f"log-blocklength must be >= 1, got {n!r}")
    size = 1 << n
    if not (0 < k_x <= size and 0 < k_z <= size):
        raise ConstructionError(f"K_X={k_x!r}, K_Z={k_z!r} must lie in 1..{size}")
    if k_x + k_z <= size:
        raise ConstructionError(
            f"K_X + K_Z = {k_x + k_z} must exceed N = {size} to encode a logical qubit"
        )
    if spec.kind is ConstructionKind.Q1:
        assert spec.q1_info_index is not None
        i = spec.q1_info_index
        if (k_x, k_z) != q1_dimensions(n, i):
            raise ConstructionError(
                f"Q1 code with info index {i} has (K_X, K_Z) = {q1_dimensions(n, i)}, "
                f"got ({k_x}, {k_z})"
            )
        info_x: Sequence[int] = range(0, i + 1)
        info_z: Sequence[int] = range(i, size)
    else:
        order = rank_rows(n, spec)
        info_z = order[:k_z]
        info_x = order[size - k_x :]
    qpc = QuantumPolarCode(n, tuple(info_x), tuple(info_z), spec)
    if not verify_css(qpc):
        raise CSSViolationError(
            f"{spec.kind} construction produced overlapping frozen sets at N={size}"
        )
    log.debug(
        "built %s code N=%d K_X=%d K_Z=%d logical=%s",
        spec.kind,
        size,
        k_x,
        k_z,
        qpc.logical,
    )
    return qpc


def from_sets(
    n: int,
    info_x: Iterable[int],
    info_z: Iterable[int],
    spec: ConstructionSpec,
    *,
    check: bool = True,
) -> QuantumPolarCode:
    """Code from explicit information sets; `check` enforces CSS."""
    qpc = QuantumPolarCode(n, tuple(info_x), tuple(info_z), spec)
    if check and not verify_css(qpc):
        shared = sorted(set(qpc.frozen_x) & set(qpc.frozen_z))
        raise CSSViolationError(f"rows {shared} are frozen in both bases")
    return qpc


def mirror(qpc: QuantumPolarCode) -> QuantumPolarCode:
    """The code whose X machinery is `qpc`'s Z machinery."""
    last = qpc.N - 1
    spec = qpc.construction
    if spec.kind is ConstructionKind.Q1:
        assert spec.q1_info_index is not None
        spec = ConstructionSpec.q1(last - spec.q1_info_index)
    return QuantumPolarCode(
        qpc.n,
        tuple(last - i for i in qpc.info_z),
        tuple(last - i for i in qpc.info_x),
        spec,
    )


def verify_css(qpc: QuantumPolarCode) -> bool:
    return not set(qpc.frozen_x) & set(qpc.frozen_z)


def z_basis_code(qpc: QuantumPolarCode) -> ClassicalPolarCode:
    """The Z-side classical code, shared with `qpc.z_code` (built once per code)."""
    return qpc.z_code


def row_weight_bounds(qpc: QuantumPolarCode) -> tuple[int, int]:
    """Lightest logical row on each side: (min 2^wt(i), min 2^(n - wt(i))) over Λ."""
    x_bound = min(row_weight(i) for i in qpc.logical)
    z_bound = min(1 << (qpc.n - i.bit_count()) for i in qpc.logical)
    return x_bound, z_bound


# --- Predicates ------------------------------------------------------------


def x_syndrome(qpc: QuantumPolarCode, e: npt.ArrayLike) -> BitBlock:
    """(eE) on A_Z^c; a 2-D input gives one syndrome per row."""
    return polar_transform(as_bit_block(e, qpc.N))[..., list(qpc.frozen_z)]


def class_label_bits(qpc: QuantumPolarCode, e: npt.ArrayLike) -> BitBlock:
    """(eE) on Λ, ascending."""
    return polar_transform(as_bit_block(e, qpc.N))[..., list(qpc.logical)]


def pack_labels(bits: npt.NDArray[np.uint8]) -> list[ErrorClassLabel]:
    """Pack rows of label bits into ints, bit k from column k."""
    rows = np.atleast_2d(bits)
    width = rows.shape[1]
    if width < 63:
        weights = np.left_shift(np.int64(1), np.arange(width, dtype=np.int64))
        return [int(v) for v in rows.astype(np.int64) @ weights]
    return [sum(int(b) << k for k, b in enumerate(row)) for row in rows]


def class_label(qpc: QuantumPolarCode, e: npt.ArrayLike) -> ErrorClassLabel:
    return pack_labels(class_label_bits(qpc, as_bit_block(e, qpc.N)).reshape(1, -1))[0]


def class_labels(qpc: QuantumPolarCode, errors: npt.ArrayLike) -> list[ErrorClassLabel]:
    """Labels for every row of a 2-D batch of errors."""
    return pack_labels(class_label_bits(qpc, errors))


def is_x_stabilizer(qpc: QuantumPolarCode, e: npt.ArrayLike) -> bool:
    """e ∈ C_X^⊥, i.e. eE is supported on A_X^c."""
    ee = polar_transform(as_bit_block(e, qpc.N))
    return not ee[list(qpc.info_x)].any()


def logical_x_error(
    qpc: QuantumPolarCode, noise: npt.ArrayLike, correction: npt.ArrayLike
) -> bool:
    """True iff noise and correction differ by a nontrivial logical operator."""
    actual = as_bit_block(noise, qpc.N)
    guess = as_bit_block(correction, qpc.N)
    if not np.array_equal(x_syndrome(qpc, actual), x_syndrome(qpc, guess)):
        raise SyndromeMismatchError(
            "correction does not reproduce the observed syndrome"
        )
    return class_label(qpc, actual ^ guess) != 0
