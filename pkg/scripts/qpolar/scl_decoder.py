"""LLR-domain successive-cancellation (list) decoding.

Codeword mode decodes channel LLRs against the code's frozen values.
Syndrome mode feeds the all-zero word under BSC(p) LLRs with the frozen
values replaced by the observed syndrome; every completed "codeword" is
then a noise estimate n̂ with (n̂E)_{A^c} = s.

All surviving paths live side by side in 2-D arrays, one row per path, in
lexicographic order of their decision prefixes. A row's position is its
path id. Pruning sorts candidates by (metric desc, path id, fork bit).
Survivors keep row pointers into per-depth storage instead of copies; a
layer is gathered only when a node at that depth is read, and decisions
are recovered by walking the fork history back from the final list.

Node layout for a leaf i at depth n: at depth d the node covering u[i]
is i >> (n - d); its LLRs live in `alpha[d]` (width N >> d) and the
re-encoded codeword of its completed left sibling in `beta[d]`.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from qpolar.config import DecoderSettings, default_settings
from qpolar.polar_core import (
    BitBlock,
    ClassicalPolarCode,
    as_bit_block,
    polar_transform,
)

log = logging.getLogger("qpolar.scl")

type FloatArray = npt.NDArray[np.float64]


class DecoderInputError(ValueError):
    """Bad channel input, syndrome, flip probability or list size."""


# --- Channel front-end and kernels ----------------------------------------


def bsc_llr(y_bit: npt.ArrayLike, p: float) -> FloatArray | float:
    """(1 - 2y) · ln((1 - p) / p) for a BSC(p) output bit (or array)."""
    if not 0.0 < p < 1.0:
        raise DecoderInputError(f"flip probability must lie in (0, 1), got {p!r}")
    y = np.asarray(y_bit, dtype=np.float64)
    llr = (1.0 - 2.0 * y) * np.log((1.0 - p) / p)
    return float(llr) if llr.ndim == 0 else llr


def check_node(a: npt.ArrayLike, b: npt.ArrayLike) -> FloatArray:
    """Exact f(a, b) = 2 atanh(tanh(a/2) tanh(b/2)) in overflow-free form."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (
        np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
        + np.log1p(np.exp(-np.abs(a + b)))
        - np.log1p(np.exp(-np.abs(a - b)))
    )


def check_node_min_sum(a: npt.ArrayLike, b: npt.ArrayLike) -> FloatArray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def bit_node(a: npt.ArrayLike, b: npt.ArrayLike, u: npt.ArrayLike) -> FloatArray:
    """g(a, b, û) = b + (1 - 2û) · a."""
    u = np.asarray(u, dtype=np.float64)
    return np.asarray(b, dtype=np.float64) + (1.0 - 2.0 * u) * np.asarray(a)


def llr_kernels(
    a: npt.ArrayLike, b: npt.ArrayLike, u: npt.ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Both combines at once: (f(a, b), g(a, b, û))."""
    return check_node(a, b), bit_node(a, b, u)


def pm_update(
    metric: npt.ArrayLike, decision_llr: npt.ArrayLike, u: npt.ArrayLike
) -> FloatArray:
    """metric + ln Pr[û | prefix, y] = metric - ln(1 + exp(-(1 - 2û) · llr))."""
    signed = (1.0 - 2.0 * np.asarray(u, dtype=np.float64)) * np.asarray(decision_llr)
    return np.asarray(metric, dtype=np.float64) - np.logaddexp(0.0, -signed)


# --- Results ---------------------------------------------------------------


class DecodeEntry(NamedTuple):
    u: BitBlock
    codeword: BitBlock
    metric: float


@dataclass(frozen=True, eq=False)
class DecodeList:
    """Completed paths sorted by (metric desc, path id asc).

    Row k of `u`, `codewords` and `metrics` is the k-th entry. `path_ids`
    holds each entry's lexicographic rank among the final survivors.
    `trace` (when requested) lists the surviving metrics after every
    information-bit stage.
    """

    u: BitBlock
    codewords: BitBlock
    metrics: FloatArray
    path_ids: npt.NDArray[np.intp]
    list_size: int
    trace: tuple[tuple[float, ...], ...] | None = None

    def __len__(self) -> int:
        return int(self.metrics.shape[0])

    def __getitem__(self, k: int) -> DecodeEntry:
        return DecodeEntry(self.u[k], self.codewords[k], float(self.metrics[k]))

    def __iter__(self) -> Iterator[DecodeEntry]:
        return (self[k] for k in range(len(self)))

    @property
    def top(self) -> DecodeEntry:
        return self[0]

    def trace_json(self) -> str:
        if self.trace is None:
            raise DecoderInputError("decode was run without trace=True")
        return json.dumps(
            {"list_size": self.list_size, "stages": [list(s) for s in self.trace]}
        )


# --- Decoder ---------------------------------------------------------------


class _Lattice:
    """One storage array per depth plus a row pointer per path.

    Forking a path list moves pointers only; a layer's rows are gathered
    when a node at that depth is read, so copies cost no more than the
    combine that consumes them.
    """

    def __init__(
        self, seeded: list[np.ndarray], dtype: type, n: int, size: int
    ) -> None:
        self._store = [np.zeros((1, size >> d), dtype=dtype) for d in range(n + 1)]
        self._store[: len(seeded)] = seeded
        self._ptr = [np.zeros(1, dtype=np.intp) for _ in range(n + 1)]

    def rows(self, d: int) -> np.ndarray:
        store = self._store[d]
        # a single shared row broadcasts
        return store if store.shape[0] == 1 else store[self._ptr[d]]

    def write(self, d: int, layer: np.ndarray, paths: int) -> None:
        self._store[d] = layer
        if layer.shape[0] == 1:
            self._ptr[d] = np.zeros(paths, dtype=np.intp)
        else:
            self._ptr[d] = np.arange(paths)

    def fork(self, parents: npt.NDArray[np.intp]) -> None:
        self._ptr = [ptr[parents] for ptr in self._ptr]


class SCLDecoder:
    """SCL decoder bound to one code and list size.

    Holds no per-call state, so one instance may serve many decodes.
    """

    def __init__(
        self,
        code: ClassicalPolarCode,
        list_size: int,
        settings: DecoderSettings | None = None,
    ) -> None:
        if list_size < 1:
            raise DecoderInputError(f"list size must be >= 1, got {list_size!r}")
        self.code = code
        self.list_size = list_size
        self.settings = settings if settings is not None else default_settings().decoder
        self._check = check_node_min_sum if self.settings.min_sum else check_node

    def decode(self, llrs: npt.ArrayLike, *, trace: bool = False) -> DecodeList:
        """Codeword-mode decode of channel LLRs."""
        channel = np.array(llrs, dtype=np.float64)
        if channel.shape != (self.code.N,):
            raise DecoderInputError(
                f"expected {self.code.N} channel LLRs, got shape {channel.shape}"
            )
        if np.isnan(channel).any():
            raise DecoderInputError("channel LLRs contain NaN")
        cap = self.settings.llr_saturation
        np.clip(channel, -cap, cap, out=channel)
        return self._run(channel, self.code.frozen_vector(), trace)

    def decode_syndrome(
        self, syndrome: npt.ArrayLike, p: float, *, trace: bool = False
    ) -> DecodeList:
        """Syndrome-mode decode; entries carry noise estimates."""
        syn = np.asarray(syndrome)
        expected = self.code.N - self.code.K
        if syn.shape != (expected,):
            raise DecoderInputError(
                f"syndrome must have {expected} bits (one per frozen row), "
                f"got shape {syn.shape}"
            )
        decoder = SCLDecoder(
            self.code.with_frozen_values(syn.tolist()), self.list_size, self.settings
        )
        zero_word = np.full(self.code.N, bsc_llr(0, p), dtype=np.float64)
        return decoder.decode(zero_word, trace=trace)

    def _run(
        self, channel: FloatArray, frozen_u: BitBlock, trace: bool
    ) -> DecodeList:
        n, size, cap = self.code.n, self.code.N, self.list_size
        frozen_mask = self.code.frozen_mask
        alpha = _Lattice([channel.reshape(1, size)], np.float64, n, size)
        beta = _Lattice([], np.uint8, n, size)
        history: list[tuple[npt.NDArray[np.intp] | None, BitBlock | int]] = []
        metrics = np.zeros(1)
        stages: list[tuple[float, ...]] | None = [] if trace else None

        for i in range(size):
            if i == 0:
                start, g_depth = 1, 0
            else:
                # depth at which leaf i leaves the left subtree of leaf i-1
                start = g_depth = n - ((i ^ (i - 1)).bit_length() - 1)
            paths = metrics.shape[0]
            for d in range(start, n + 1):
                half = size >> d
                parent = alpha.rows(d - 1)
                left, right = parent[:, :half], parent[:, half:]
                if d == g_depth:
                    alpha.write(d, bit_node(left, right, beta.rows(d)), paths)
                else:
                    alpha.write(d, self._check(left, right), paths)
            leaf = alpha.rows(n)[:, 0]

            if frozen_mask[i]:
                bit = int(frozen_u[i])
                metrics = pm_update(metrics, leaf, bit)
                history.append((None, bit))
                bits = np.full(paths, bit, dtype=np.uint8)
            else:
                m0, m1 = np.broadcast_arrays(
                    pm_update(metrics, leaf, 0), pm_update(metrics, leaf, 1)
                )
                candidates = np.stack((m0, m1), axis=1).ravel()
                if 2 * paths <= cap:
                    keep = np.arange(2 * paths)
                else:
                    # lexsort: last key is primary
                    order = np.lexsort((np.arange(2 * paths), -candidates))
                    keep = np.sort(order[:cap])
                parents = keep >> 1
                bits = (keep & 1).astype(np.uint8)
                metrics = candidates[keep]
                history.append((parents, bits))
                alpha.fork(parents)
                beta.fork(parents)
                if stages is not None:
                    stages.append(tuple(float(m) for m in metrics))

            partial = bits.reshape(-1, 1)
            d, node = n, i
            while d > 0 and node & 1:
                partial = np.concatenate((beta.rows(d) ^ partial, partial), axis=1)
                d -= 1
                node >>= 1
            beta.write(d, partial, metrics.shape[0])

        survivors = metrics.shape[0]
        u = np.zeros((survivors, size), dtype=np.uint8)
        lineage = np.arange(survivors)
        for i in range(size - 1, -1, -1):
            parents, decided = history[i]
            u[:, i] = decided if parents is None else decided[lineage]
            if parents is not None:
                lineage = parents[lineage]
        codewords = np.broadcast_to(beta.rows(0), u.shape).copy()
        ranks = np.arange(survivors)
        order = np.lexsort((ranks, -metrics))
        log.debug(
            "decoded N=%d K=%d L=%d: %d path(s), top metric %.6g",
            size,
            self.code.K,
            cap,
            order.size,
            metrics[order[0]],
        )
        return DecodeList(
            u=u[order],
            codewords=codewords[order],
            metrics=metrics[order],
            path_ids=ranks[order],
            list_size=cap,
            trace=tuple(stages) if stages is not None else None,
        )


# --- Module-level entry points --------------------------------------------


def classical_syndrome(code: ClassicalPolarCode, y: npt.ArrayLike) -> BitBlock:
    """s = (yE)_{A^c}."""
    return polar_transform(as_bit_block(y, code.N))[..., list(code.frozen_set)]


def sc_decode(
    code: ClassicalPolarCode,
    llrs: npt.ArrayLike,
    settings: DecoderSettings | None = None,
) -> DecodeEntry:
    """(û, ĉ, metric) of successive cancellation, i.e. SCL with L = 1."""
    return SCLDecoder(code, 1, settings).decode(llrs).top


def scl_decode_codeword(
    code: ClassicalPolarCode,
    llrs: npt.ArrayLike,
    list_size: int,
    settings: DecoderSettings | None = None,
    *,
    trace: bool = False,
) -> DecodeList:
    return SCLDecoder(code, list_size, settings).decode(llrs, trace=trace)


def scl_decode_syndrome(
    code: ClassicalPolarCode,
    syndrome: npt.ArrayLike,
    p: float,
    list_size: int,
    settings: DecoderSettings | None = None,
    *,
    trace: bool = False,
) -> DecodeList:
    return SCLDecoder(code, list_size, settings).decode_syndrome(
        syndrome, p, trace=trace
    )
