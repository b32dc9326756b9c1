"""Binary polar transform and reliability-ordered code construction.

Rows of E = F^{⊗n}, F = [[1, 0], [1, 1]], are indexed 0..N-1 from the top
with no bit-reversal anywhere. A row's reliability score comes from one of
three constructions:

- PW: the β-expansion of its index, Σ_j B_j β^j for bin(i) = B_{n-1}..B_0.
- HPW: a non-negative combination Σ_a c_a · bin(i)_{β_a} with c_1 = 1.
- RM: wt(bin(i)) + i/N, i.e. HPW with β_1 = 1, β_2 = 2, c_2 = 1/N.

Q1 codes use positional freezing instead of scores (rows 0..i-1 frozen in
the Z basis). Rows are ranked by (score, index) descending, so exact score
ties go to the larger index.
"""

from __future__ import annotations

import enum
import functools
import logging
import math
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any

import numpy as np
import numpy.typing as npt

log = logging.getLogger("qpolar.polar_core")

type BitBlock = npt.NDArray[np.uint8]

BETA_QUARTER_ROOT: float = 2.0**0.25
BETA_MAX: float = 2.0
HPW_DEFAULT_TERMS: tuple[tuple[float, float], ...] = (
    (1.0, BETA_QUARTER_ROOT),
    (0.25, 2.0 ** (1.0 / 16.0)),
)

_BETA_TOKEN = re.compile(
    r"""
    ^\s*2\s*\^\s*\(\s*1\s*/\s*4\s*\)\s*      # 2^(1/4)
    (?:(?P<sign>[+-])\s*(?P<offset>\d+(?:\.\d*)?|\.\d+))?  # optional offset
    \s*$
    """,
    re.VERBOSE,
)


class ConstructionError(ValueError):
    """Invalid construction parameters or malformed bit block."""


class ConstructionKind(enum.StrEnum):
    PW = "PW"
    HPW = "HPW"
    RM = "RM"
    Q1 = "Q1"


# --- Construction specs ---------------------------------------------------


def clamp_beta(beta: float) -> float:
    """Clamp β > 2 to 2; β beyond 2 orders rows exactly as β = 2 does."""
    if not math.isfinite(beta) or beta <= 0.0:
        raise ConstructionError(f"beta must be a positive real, got {beta!r}")
    if beta > BETA_MAX:
        log.warning("beta=%r exceeds 2; using beta=2 (same row order)", beta)
        return BETA_MAX
    return beta


def parse_beta(token: str) -> float:
    """Parse `1.17`, `2^(1/4)` or `2^(1/4)-0.02` into a clamped β."""
    match = _BETA_TOKEN.match(token)
    if match:
        beta = BETA_QUARTER_ROOT
        if match["offset"] is not None:
            offset = float(match["offset"])
            beta = beta - offset if match["sign"] == "-" else beta + offset
        return clamp_beta(beta)
    try:
        beta = float(token)
    except ValueError as exc:
        raise ConstructionError(
            f"beta {token!r} is neither a decimal nor of the form 2^(1/4)[±offset]"
        ) from exc
    return clamp_beta(beta)


def _real(where: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConstructionError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _hpw_terms(raw: Any) -> list[tuple[float, float]]:
    if not isinstance(raw, list | tuple):
        raise ConstructionError(f"hpw_terms: expected a list of [c, beta], got {raw!r}")
    terms = []
    for term in raw:
        if not isinstance(term, list | tuple) or len(term) != 2:
            raise ConstructionError(f"hpw_terms: {term!r} is not a [c, beta] pair")
        terms.append((_real("hpw_terms", term[0]), _real("hpw_terms", term[1])))
    return terms


@dataclass(frozen=True)
class ConstructionSpec:
    """Which reliability ordering (or positional rule) builds a code.

    Use the `pw`, `hpw`, `rm` and `q1` factories; they fill in defaults.
    """

    kind: ConstructionKind
    beta: float | None = None
    hpw_terms: tuple[tuple[float, float], ...] = ()
    q1_info_index: int | None = None

    def __post_init__(self) -> None:
        match self.kind:
            case ConstructionKind.PW:
                if self.beta is None or not 1.0 <= self.beta <= BETA_MAX:
                    raise ConstructionError(
                        f"PW construction needs beta in [1, 2], got {self.beta!r}"
                    )
            case ConstructionKind.HPW:
                if not self.hpw_terms:
                    raise ConstructionError("HPW construction needs at least one term")
                if self.hpw_terms[0][0] != 1.0:
                    raise ConstructionError(
                        "HPW leading coefficient must be 1, "
                        f"got {self.hpw_terms[0][0]!r}"
                    )
                for c, b in self.hpw_terms:
                    if c < 0.0 or not 1.0 <= b <= BETA_MAX:
                        raise ConstructionError(
                            f"HPW term (c={c!r}, beta={b!r}) needs c >= 0 "
                            "and beta in [1, 2]"
                        )
            case ConstructionKind.Q1:
                if self.q1_info_index is None or self.q1_info_index < 0:
                    raise ConstructionError(
                        "Q1 construction needs a non-negative q1_info_index, "
                        f"got {self.q1_info_index!r}"
                    )
            case ConstructionKind.RM:
                pass

    @classmethod
    def pw(cls, beta: float = BETA_QUARTER_ROOT) -> ConstructionSpec:
        return cls(ConstructionKind.PW, beta=clamp_beta(beta))

    @classmethod
    def hpw(
        cls, terms: Sequence[tuple[float, float]] = HPW_DEFAULT_TERMS
    ) -> ConstructionSpec:
        return cls(
            ConstructionKind.HPW,
            hpw_terms=tuple((float(c), float(b)) for c, b in terms),
        )

    @classmethod
    def rm(cls) -> ConstructionSpec:
        return cls(ConstructionKind.RM)

    @classmethod
    def q1(cls, info_index: int) -> ConstructionSpec:
        return cls(ConstructionKind.Q1, q1_info_index=info_index)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ConstructionSpec:
        """Inverse of `to_dict`; also accepts a lower-case kind."""
        try:
            kind = ConstructionKind(str(data["kind"]).upper())
        except (KeyError, ValueError) as exc:
            raise ConstructionError(
                "construction kind must be one of "
                f"{', '.join(k.value for k in ConstructionKind)}, "
                f"got {data.get('kind')!r}"
            ) from exc
        match kind:
            case ConstructionKind.PW:
                beta = data.get("beta", BETA_QUARTER_ROOT)
                if isinstance(beta, str):
                    return cls.pw(parse_beta(beta))
                return cls.pw(_real("beta", beta))
            case ConstructionKind.HPW:
                return cls.hpw(_hpw_terms(data.get("hpw_terms", HPW_DEFAULT_TERMS)))
            case ConstructionKind.RM:
                return cls.rm()
            case ConstructionKind.Q1:
                index = data.get("q1_info_index")
                if isinstance(index, bool) or not isinstance(index, int):
                    raise ConstructionError(
                        f"Q1 construction needs an integer q1_info_index, got {index!r}"
                    )
                return cls.q1(index)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value}
        match self.kind:
            case ConstructionKind.PW:
                out["beta"] = self.beta
            case ConstructionKind.HPW:
                out["hpw_terms"] = [list(t) for t in self.hpw_terms]
            case ConstructionKind.Q1:
                out["q1_info_index"] = self.q1_info_index
        return out


# --- Scores and ranking ---------------------------------------------------


def _check_row(i: int, n: int) -> None:
    if n < 1:
        raise ConstructionError(f"log-blocklength must be >= 1, got {n!r}")
    if not 0 <= i < (1 << n):
        raise ConstructionError(f"row index {i!r} out of range for N={1 << n}")


def beta_expansion(i: int, n: int, beta: float) -> float:
    """bin(i)_β = Σ_j B_j β^j over the n bits of i."""
    _check_row(i, n)
    if beta <= 0.0:
        raise ConstructionError(f"beta must be positive, got {beta!r}")
    return math.fsum(beta**j for j in range(n) if (i >> j) & 1)


def construction_score(i: int, n: int, spec: ConstructionSpec) -> float:
    match spec.kind:
        case ConstructionKind.PW:
            assert spec.beta is not None
            return beta_expansion(i, n, spec.beta)
        case ConstructionKind.HPW:
            return math.fsum(c * beta_expansion(i, n, b) for c, b in spec.hpw_terms)
        case ConstructionKind.RM:
            _check_row(i, n)
            return i.bit_count() + i / (1 << n)
        case ConstructionKind.Q1:
            raise ConstructionError(
                "Q1 codes freeze rows by position; they have no reliability score"
            )


@functools.lru_cache(maxsize=64)
def rank_rows(n: int, spec: ConstructionSpec) -> tuple[int, ...]:
    """All rows ordered by (score, index) descending."""
    scores = [construction_score(i, n, spec) for i in range(1 << n)]
    return tuple(sorted(range(1 << n), key=lambda i: (scores[i], i), reverse=True))


def row_weight(i: int) -> int:
    """Hamming weight of row i of E, 2^wt(bin(i))."""
    return 1 << i.bit_count()


# --- Transform ------------------------------------------------------------


def as_bit_block(bits: npt.ArrayLike, length: int | None = None) -> BitBlock:
    """Copy `bits` into a uint8 array and check it is binary (and sized)."""
    block = np.array(bits, dtype=np.uint8, copy=True)
    if block.ndim == 0:
        raise ConstructionError("bit block must be at least one-dimensional")
    if block.size and block.max() > 1:
        raise ConstructionError("bit block symbols must be 0 or 1")
    if length is not None and block.shape[-1] != length:
        raise ConstructionError(
            f"bit block has length {block.shape[-1]}, expected {length}"
        )
    return block


def polar_transform(u: npt.ArrayLike) -> BitBlock:
    """Return uE over GF(2) via the in-place butterfly.

    Works on the last axis, so a 2-D array transforms every row. E is its
    own inverse: polar_transform(polar_transform(u)) == u.
    """
    x = as_bit_block(u)
    size = x.shape[-1]
    if size < 2 or size & (size - 1):
        raise ConstructionError(f"block length {size} is not a power of two >= 2")
    lead = x.shape[:-1]
    half = 1
    while half < size:
        view = x.reshape(*lead, size // (2 * half), 2, half)
        view[..., 0, :] ^= view[..., 1, :]
        half *= 2
    return x


# --- Classical codes ------------------------------------------------------


@dataclass(frozen=True)
class ClassicalPolarCode:
    """A polar code: information set A, frozen set A^c and frozen values.

    `frozen_values` is indexed by the ascending frozen set; empty means all
    zero.
    """

    n: int
    info_set: tuple[int, ...]
    frozen_values: tuple[int, ...] = ()
    construction: ConstructionSpec | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConstructionError(f"log-blocklength must be >= 1, got {self.n!r}")
        info = tuple(sorted(self.info_set))
        if len(set(info)) != len(info):
            raise ConstructionError("information set has duplicate rows")
        if info and not (0 <= info[0] and info[-1] < self.N):
            raise ConstructionError(f"information set leaves range 0..{self.N - 1}")
        object.__setattr__(self, "info_set", info)
        if self.frozen_values:
            if len(self.frozen_values) != self.N - len(info):
                raise ConstructionError(
                    f"{len(self.frozen_values)} frozen values given for "
                    f"{self.N - len(info)} frozen rows"
                )
            if any(v not in (0, 1) for v in self.frozen_values):
                raise ConstructionError("frozen values must be 0 or 1")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return len(self.info_set)

    @cached_property
    def frozen_set(self) -> tuple[int, ...]:
        info = set(self.info_set)
        return tuple(i for i in range(self.N) if i not in info)

    @cached_property
    def frozen_mask(self) -> npt.NDArray[np.bool_]:
        mask = np.ones(self.N, dtype=bool)
        mask[list(self.info_set)] = False
        return mask

    def frozen_vector(self) -> BitBlock:
        """Length-N input vector holding the frozen values, zero on A."""
        u = np.zeros(self.N, dtype=np.uint8)
        if self.frozen_values:
            u[list(self.frozen_set)] = self.frozen_values
        return u

    def with_frozen_values(self, values: Iterable[int]) -> ClassicalPolarCode:
        return replace(self, frozen_values=tuple(int(v) for v in values))

    def encode(self, info_bits: npt.ArrayLike) -> BitBlock:
        """c = uE with u_A = info_bits and u_{A^c} = frozen values."""
        bits = as_bit_block(info_bits, self.K)
        u = self.frozen_vector()
        u[list(self.info_set)] = bits
        return polar_transform(u)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"n": self.n, "K": self.K}
        if self.construction is not None:
            out["construction"] = self.construction.to_dict()
        out["info_set"] = list(self.info_set)
        out["frozen_set"] = list(self.frozen_set)
        return out


def build_classical_code(
    n: int,
    K: int,
    spec: ConstructionSpec,
    frozen_values: Sequence[int] | None = None,
) -> ClassicalPolarCode:
    """Top-K rows of `rank_rows` as the information set.

    A Q1 spec yields the Z-basis constituent: rows 0..i-1 frozen, so K must
    equal N - i.
    """
    if n < 1:
        raise ConstructionError(f"log-blocklength must be >= 1, got {n!r}")
    size = 1 << n
    if not 0 <= K <= size:
        raise ConstructionError(f"K={K!r} out of range 0..{size}")
    if spec.kind is ConstructionKind.Q1:
        assert spec.q1_info_index is not None
        if K != size - spec.q1_info_index:
            raise ConstructionError(
                f"Q1 code with info index {spec.q1_info_index} "
                f"has K={size - spec.q1_info_index}, got K={K}"
            )
        info: Iterable[int] = range(spec.q1_info_index, size)
    else:
        info = rank_rows(n, spec)[:K]
    return ClassicalPolarCode(
        n,
        tuple(info),
        tuple(frozen_values) if frozen_values is not None else (),
        spec,
    )
