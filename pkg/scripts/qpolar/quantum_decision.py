"""Decision stages over syndrome-decoded candidate lists.

Every stage works on a set of syndrome-consistent noise candidates:

- SCL-E: the minimum-weight candidate. Equal-weight candidates from
  different classes are settled by a draw from the trial's tie stream.
- SCL-C: the class with the largest list-approximated coset probability
  log Σ_w N(w) q^w with q = p / (1 - p). The min-weight choice is always
  computed first from the same stream, and a score tie that includes its
  class resolves to it.
- MWD / MLD: the same two rules over every error consistent with the
  syndrome, enumerated through the butterfly. Only feasible at small N.

Candidates are deduplicated with `np.unique`, which also sorts them
lexicographically. The correction for a chosen class is its lightest
candidate, the lexicographically first on equal weight, so a decision
does not depend on the order the list arrived in.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from qpolar.config import default_settings
from qpolar.polar_core import BitBlock, as_bit_block, polar_transform
from qpolar.quantum_css import (
    ErrorClassLabel,
    QuantumPolarCode,
    SyndromeMismatchError,
    class_labels,
    x_syndrome,
)
from qpolar.scl_decoder import DecodeList

log = logging.getLogger("qpolar.decision")

type Histogram = Mapping[int, int]


class DecisionError(ValueError):
    """Empty candidate list, unsupported p, or enumeration too large."""


@dataclass(frozen=True, eq=False)
class Decision:
    chosen_label: ErrorClassLabel
    correction: BitBlock
    per_class_score: dict[ErrorClassLabel, float]
    tie_broken: bool

    def to_dict(self, syndrome: npt.ArrayLike) -> dict[str, Any]:
        return {
            "syndrome": [int(b) for b in np.asarray(syndrome).ravel()],
            "chosen_label": self.chosen_label,
            "correction_weight": int(self.correction.sum()),
            "per_class_score": {
                str(k): v for k, v in sorted(self.per_class_score.items())
            },
            "tie_broken": self.tie_broken,
        }


@dataclass(frozen=True, eq=False)
class Candidates:
    """Deduplicated, lexicographically sorted noise candidates."""

    noise: BitBlock
    weights: npt.NDArray[np.int64]
    labels: list[ErrorClassLabel]

    def histograms(self) -> dict[ErrorClassLabel, dict[int, int]]:
        counts = Counter(zip(self.labels, self.weights.tolist(), strict=True))
        out: dict[ErrorClassLabel, dict[int, int]] = {}
        for (label, weight), count in sorted(counts.items()):
            out.setdefault(label, {})[weight] = count
        return out

    def lightest_in(self, label: ErrorClassLabel) -> int:
        members = np.flatnonzero(np.asarray(self.labels) == label)
        # argmin keeps the first (lexicographically smallest) on ties
        return int(members[np.argmin(self.weights[members])])


def prepare_candidates(qpc: QuantumPolarCode, noise: npt.ArrayLike) -> Candidates:
    rows = as_bit_block(noise, qpc.N)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise DecisionError("candidate list is empty")
    unique = np.unique(rows, axis=0)
    if unique.shape[0] != rows.shape[0]:
        log.debug("dropped %d duplicate candidate(s)", rows.shape[0] - unique.shape[0])
    syndromes = x_syndrome(qpc, unique)
    if not (syndromes == syndromes[0]).all():
        raise SyndromeMismatchError("candidates disagree on the syndrome")
    return Candidates(
        noise=unique,
        weights=unique.sum(axis=1, dtype=np.int64),
        labels=class_labels(qpc, unique),
    )


def _draw(options: Sequence[ErrorClassLabel], rng: np.random.Generator | None) -> int:
    if rng is None:
        return options[0]
    return options[int(rng.integers(len(options)))]


# --- Scores ----------------------------------------------------------------


def coset_score(histogram: Histogram, p: float) -> float:
    """log Σ_w N(w) q^w, q = p / (1 - p); -inf for an empty histogram."""
    if not 0.0 < p < 0.5:
        raise DecisionError(f"coset score needs 0 < p < 0.5, got {p!r}")
    if any(c < 0 for c in histogram.values()):
        raise DecisionError("histogram counts must be non-negative")
    log_q = math.log(p / (1.0 - p))
    terms = [math.log(c) + w * log_q for w, c in sorted(histogram.items()) if c > 0]
    if not terms:
        return -math.inf
    return float(np.logaddexp.reduce(np.array(terms)))


# --- Decision rules --------------------------------------------------------


def decide_min_weight(
    cands: Candidates, rng: np.random.Generator | None = None
) -> Decision:
    w_min = int(cands.weights.min())
    at_min = np.flatnonzero(cands.weights == w_min)
    classes = sorted({cands.labels[k] for k in at_min})
    tie = len(classes) > 1
    chosen = _draw(classes, rng) if tie else classes[0]
    lightest: dict[ErrorClassLabel, float] = {}
    for label, weight in zip(cands.labels, cands.weights.tolist(), strict=True):
        lightest[label] = max(lightest.get(label, -math.inf), -float(weight))
    return Decision(
        chosen_label=chosen,
        correction=cands.noise[cands.lightest_in(chosen)].copy(),
        per_class_score=lightest,
        tie_broken=tie,
    )


def decide_coset(
    cands: Candidates, p: float, rng: np.random.Generator | None = None
) -> Decision:
    scores = {label: coset_score(h, p) for label, h in cands.histograms().items()}
    reference = decide_min_weight(cands, rng)
    best = max(scores.values())
    tied = sorted(label for label, s in scores.items() if s == best)
    if len(tied) == 1:
        chosen, tie = tied[0], False
    elif reference.chosen_label in tied:
        chosen, tie = reference.chosen_label, True
    else:
        chosen, tie = _draw(tied, rng), True
    return Decision(
        chosen_label=chosen,
        correction=cands.noise[cands.lightest_in(chosen)].copy(),
        per_class_score=scores,
        tie_broken=tie,
    )


def scl_frame_decide(qpc: QuantumPolarCode, decode_list: DecodeList) -> Decision:
    """Plain SCL output: the top-metric entry, no class reasoning."""
    if len(decode_list) == 0:
        raise DecisionError("candidate list is empty")
    top = decode_list.top.codeword
    label = class_labels(qpc, top.reshape(1, -1))[0]
    return Decision(label, top.copy(), {label: decode_list.top.metric}, False)


def scl_e_decide(
    qpc: QuantumPolarCode,
    decode_list: DecodeList,
    rng: np.random.Generator | None = None,
) -> Decision:
    return decide_min_weight(prepare_candidates(qpc, decode_list.codewords), rng)


def scl_c_decide(
    qpc: QuantumPolarCode,
    decode_list: DecodeList,
    p: float,
    rng: np.random.Generator | None = None,
) -> Decision:
    return decide_coset(prepare_candidates(qpc, decode_list.codewords), p, rng)


# --- Exhaustive oracles ----------------------------------------------------


def enumerate_coset(
    qpc: QuantumPolarCode, syndrome: npt.ArrayLike, max_n: int | None = None
) -> BitBlock:
    """All 2^K_Z errors whose syndrome is `syndrome`, one per row."""
    limit = max_n if max_n is not None else default_settings().analysis.exhaustive_max_n
    if qpc.N > limit:
        raise DecisionError(
            f"exhaustive enumeration is limited to N <= {limit}, got N={qpc.N}"
        )
    syn = np.asarray(syndrome)
    if syn.shape != (qpc.N - qpc.K_Z,):
        raise DecisionError(
            f"syndrome must have {qpc.N - qpc.K_Z} bits, got shape {syn.shape}"
        )
    count = 1 << qpc.K_Z
    u = np.zeros((count, qpc.N), dtype=np.uint8)
    u[:, list(qpc.frozen_z)] = as_bit_block(syn)
    shifts = np.arange(qpc.K_Z)
    u[:, list(qpc.info_z)] = (np.arange(count)[:, None] >> shifts) & 1
    return polar_transform(u)


def exact_mwd(
    qpc: QuantumPolarCode,
    syndrome: npt.ArrayLike,
    rng: np.random.Generator | None = None,
) -> Decision:
    cands = prepare_candidates(qpc, enumerate_coset(qpc, syndrome))
    return decide_min_weight(cands, rng)


def exact_mld(
    qpc: QuantumPolarCode,
    syndrome: npt.ArrayLike,
    p: float,
    rng: np.random.Generator | None = None,
) -> Decision:
    cands = prepare_candidates(qpc, enumerate_coset(qpc, syndrome))
    return decide_coset(cands, p, rng)
