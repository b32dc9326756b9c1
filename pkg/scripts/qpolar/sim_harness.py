"""Seeded Monte Carlo estimation of logical error rates.

Every trial draws its randomness from generators keyed on
(master_seed, p_index, trial_index, stream), so a trial's outcome does not
depend on which worker ran it or in what order. Trials are grouped into
fixed chunks; chunk tallies are summed in chunk order, which keeps
results identical across thread counts, early stopping included.

Streams: X noise, Z noise, X tie draws, Z tie draws, and the random
logical codewords used in codeword mode. Tie draws come from a fresh
generator per decision stage, so SCL-E and SCL-C see the same draws.
"""

from __future__ import annotations

import csv
import enum
import functools
import json
import logging
import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Any, NamedTuple

import numpy as np

from qpolar.config import Settings, default_settings
from qpolar.polar_core import BitBlock
from qpolar.quantum_css import (
    QuantumPolarCode,
    class_labels,
    logical_x_error,
    mirror,
    x_syndrome,
    z_basis_code,
)
from qpolar.quantum_decision import (
    Decision,
    exact_mld,
    exact_mwd,
    scl_c_decide,
    scl_e_decide,
    scl_frame_decide,
)
from qpolar.scl_decoder import DecodeList, SCLDecoder, bsc_llr

log = logging.getLogger("qpolar.sim")

RESULTS_HEADER: tuple[str, ...] = (
    "N",
    "K",
    "Kx",
    "Kz",
    "construction",
    "beta",
    "decoder",
    "L",
    "p",
    "trials",
    "logical_errors",
    "P_L",
    "stderr",
    "seed",
)


class SimulationError(ValueError):
    """Invalid simulation job."""


class DecoderKind(enum.StrEnum):
    SC = "SC"
    SCL_FRAME = "SCL_frame"
    SCL_E = "SCL_E"
    SCL_C = "SCL_C"
    MWD = "MWD"
    MLD = "MLD"


class ErrorType(enum.StrEnum):
    X = "X"
    Z = "Z"
    BOTH = "both"


class ChannelMode(enum.StrEnum):
    SYNDROME = "syndrome"
    CODEWORD = "codeword"


class Stream(enum.IntEnum):
    X_NOISE = 0
    Z_NOISE = 1
    X_TIES = 2
    Z_TIES = 3
    X_CODEWORD = 4
    Z_CODEWORD = 5


_LIST_DECODERS = frozenset(
    {DecoderKind.SCL_FRAME, DecoderKind.SCL_E, DecoderKind.SCL_C}
)
_EXHAUSTIVE_DECODERS = frozenset({DecoderKind.MWD, DecoderKind.MLD})


@dataclass(frozen=True)
class SimJob:
    """One code, several decoders, a grid of flip probabilities.

    `trials=None` applies the escalation rule from the settings: a pilot
    of `simulation.trials`, topped up to `simulation.trials_low_rate` when
    any decoder's estimate falls below `simulation.low_rate_threshold`.
    """

    qpc: QuantumPolarCode
    decoders: tuple[DecoderKind, ...]
    list_size: int
    p_grid: tuple[float, ...]
    trials: int | None
    master_seed: int
    error_type: ErrorType = ErrorType.X
    threads: int = 1
    early_stop_errors: int | None = None
    channel_mode: ChannelMode = ChannelMode.SYNDROME

    def __post_init__(self) -> None:
        if not self.decoders:
            raise SimulationError("at least one decoder is required")
        if len(set(self.decoders)) != len(self.decoders):
            raise SimulationError(f"duplicate decoders in {list(self.decoders)}")
        if self.list_size < 1:
            raise SimulationError(f"list size must be >= 1, got {self.list_size!r}")
        if not self.p_grid:
            raise SimulationError("p_grid is empty")
        bad = [p for p in self.p_grid if not 0.0 < p < 0.5]
        if bad:
            raise SimulationError(f"flip probabilities must lie in (0, 0.5), got {bad}")
        if self.trials is not None and self.trials < 1:
            raise SimulationError(f"trials must be >= 1, got {self.trials!r}")
        if not 0 <= self.master_seed < 2**64:
            raise SimulationError(
                f"seed must be a 64-bit unsigned int, got {self.master_seed!r}"
            )
        if self.threads < 1:
            raise SimulationError(f"threads must be >= 1, got {self.threads!r}")
        if self.early_stop_errors is not None and self.early_stop_errors < 1:
            raise SimulationError(
                f"early_stop_errors must be >= 1, got {self.early_stop_errors!r}"
            )


class TrialOutcome(NamedTuple):
    frame_error: bool
    logical_error: bool


@dataclass(frozen=True)
class Tally:
    """Counts over a run of trials; `add` is associative and commutative."""

    trials: int = 0
    frame: dict[DecoderKind, int] = field(default_factory=dict)
    logical: dict[DecoderKind, int] = field(default_factory=dict)

    def add(self, other: Tally) -> Tally:
        keys = set(self.frame) | set(other.frame)
        return Tally(
            trials=self.trials + other.trials,
            frame={k: self.frame.get(k, 0) + other.frame.get(k, 0) for k in keys},
            logical={k: self.logical.get(k, 0) + other.logical.get(k, 0) for k in keys},
        )

    def rate(self, kind: DecoderKind) -> float:
        return self.logical.get(kind, 0) / self.trials if self.trials else 0.0


@dataclass(frozen=True)
class SimPoint:
    p: float
    decoder: DecoderKind
    list_size: int
    trials: int
    logical_errors: int
    frame_errors: int
    seed: int

    @property
    def estimate(self) -> float:
        return self.logical_errors / self.trials

    @property
    def stderr(self) -> float:
        rate = self.estimate
        return math.sqrt(rate * (1.0 - rate) / self.trials)

    @property
    def frame_rate(self) -> float:
        return self.frame_errors / self.trials


# --- Randomness ------------------------------------------------------------


def trial_rng(
    master_seed: int, p_index: int, trial_index: int, stream: Stream
) -> np.random.Generator:
    """Counter-based generator for one (trial, stream)."""
    key = np.random.SeedSequence([master_seed, p_index, trial_index, int(stream)])
    return np.random.Generator(np.random.Philox(key))


def sample_bsc(size: int, p: float, rng: np.random.Generator) -> BitBlock:
    """i.i.d. Bernoulli(p) flips."""
    if not 0.0 <= p <= 1.0:
        raise SimulationError(f"flip probability must lie in [0, 1], got {p!r}")
    return (rng.random(size) < p).astype(np.uint8)


def combined_rate(p_x: float, p_z: float) -> float:
    """Probability of an X or a Z logical error, 1 - (1 - P_X)(1 - P_Z)."""
    for value in (p_x, p_z):
        if not 0.0 <= value <= 1.0:
            raise SimulationError(f"rates must lie in [0, 1], got {value!r}")
    return 1.0 - (1.0 - p_x) * (1.0 - p_z)


# --- One trial -------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _mirrored(qpc: QuantumPolarCode) -> QuantumPolarCode:
    return mirror(qpc)


def _noise_estimates(
    qpc: QuantumPolarCode,
    noise: BitBlock,
    syndrome: BitBlock,
    p: float,
    list_size: int,
    mode: ChannelMode,
    received: BitBlock | None,
    settings: Settings,
) -> DecodeList:
    decoder = SCLDecoder(z_basis_code(qpc), list_size, settings.decoder)
    if mode is ChannelMode.SYNDROME:
        return decoder.decode_syndrome(syndrome, p)
    assert received is not None
    decoded = decoder.decode(bsc_llr(received, p))
    return replace(decoded, codewords=decoded.codewords ^ received)


def _side_decisions(
    qpc: QuantumPolarCode,
    job: SimJob,
    p_index: int,
    trial_index: int,
    noise: BitBlock,
    tie_stream: Stream,
    codeword_stream: Stream,
    settings: Settings,
) -> dict[DecoderKind, Decision]:
    p = job.p_grid[p_index]
    syndrome = x_syndrome(qpc, noise)
    received = None
    if job.channel_mode is ChannelMode.CODEWORD:
        rng = trial_rng(job.master_seed, p_index, trial_index, codeword_stream)
        info = rng.integers(0, 2, qpc.K_Z, dtype=np.uint8)
        received = z_basis_code(qpc).encode(info) ^ noise

    def estimates(size: int) -> DecodeList:
        return _noise_estimates(
            qpc, noise, syndrome, p, size, job.channel_mode, received, settings
        )

    def ties() -> np.random.Generator:
        return trial_rng(job.master_seed, p_index, trial_index, tie_stream)

    decode_list = None
    if _LIST_DECODERS & set(job.decoders):
        decode_list = estimates(job.list_size)
    decisions: dict[DecoderKind, Decision] = {}
    for kind in job.decoders:
        match kind:
            case DecoderKind.SC:
                shared = decode_list is not None and job.list_size == 1
                sc_list = decode_list if shared else estimates(1)
                decisions[kind] = scl_frame_decide(qpc, sc_list)
            case DecoderKind.SCL_FRAME:
                assert decode_list is not None
                decisions[kind] = scl_frame_decide(qpc, decode_list)
            case DecoderKind.SCL_E:
                assert decode_list is not None
                decisions[kind] = scl_e_decide(qpc, decode_list, ties())
            case DecoderKind.SCL_C:
                assert decode_list is not None
                decisions[kind] = scl_c_decide(qpc, decode_list, p, ties())
            case DecoderKind.MWD:
                decisions[kind] = exact_mwd(qpc, syndrome, ties())
            case DecoderKind.MLD:
                decisions[kind] = exact_mld(qpc, syndrome, p, ties())
    return decisions


def _sides(job: SimJob) -> Iterator[tuple[QuantumPolarCode, Stream, Stream, Stream]]:
    if job.error_type in (ErrorType.X, ErrorType.BOTH):
        yield job.qpc, Stream.X_NOISE, Stream.X_TIES, Stream.X_CODEWORD
    if job.error_type in (ErrorType.Z, ErrorType.BOTH):
        yield _mirrored(job.qpc), Stream.Z_NOISE, Stream.Z_TIES, Stream.Z_CODEWORD


def run_trial(
    job: SimJob,
    p_index: int,
    trial_index: int,
    settings: Settings | None = None,
) -> dict[DecoderKind, TrialOutcome]:
    """Sample, decode and score one trial for every requested decoder.

    In `both` mode a trial fails for a decoder when either side fails.
    """
    settings = settings if settings is not None else default_settings()
    p = job.p_grid[p_index]
    frame = dict.fromkeys(job.decoders, False)
    logical = dict.fromkeys(job.decoders, False)
    for qpc, noise_stream, tie_stream, codeword_stream in _sides(job):
        rng = trial_rng(job.master_seed, p_index, trial_index, noise_stream)
        noise = sample_bsc(qpc.N, p, rng)
        decisions = _side_decisions(
            qpc, job, p_index, trial_index, noise, tie_stream, codeword_stream, settings
        )
        for kind, decision in decisions.items():
            frame[kind] |= not np.array_equal(decision.correction, noise)
            logical[kind] |= logical_x_error(qpc, noise, decision.correction)
    return {kind: TrialOutcome(frame[kind], logical[kind]) for kind in job.decoders}


def trace_trials(
    job: SimJob,
    p_index: int,
    trial_indices: Iterable[int],
    settings: Settings | None = None,
) -> list[dict[str, Any]]:
    """Per-trial decision dumps, one record per (trial, side, decoder)."""
    settings = settings if settings is not None else default_settings()
    records: list[dict[str, Any]] = []
    for trial_index in trial_indices:
        for qpc, noise_stream, tie_stream, codeword_stream in _sides(job):
            rng = trial_rng(job.master_seed, p_index, trial_index, noise_stream)
            noise = sample_bsc(qpc.N, job.p_grid[p_index], rng)
            syndrome = x_syndrome(qpc, noise)
            decisions = _side_decisions(
                qpc,
                job,
                p_index,
                trial_index,
                noise,
                tie_stream,
                codeword_stream,
                settings,
            )
            side = "X" if noise_stream is Stream.X_NOISE else "Z"
            for kind, decision in decisions.items():
                record = {"trial": trial_index, "side": side, "decoder": kind.value}
                record |= decision.to_dict(syndrome)
                record["noise_label"] = class_labels(qpc, noise.reshape(1, -1))[0]
                records.append(record)
    return records


# --- Aggregation -----------------------------------------------------------


def _run_chunk(
    job: SimJob, p_index: int, start: int, stop: int, settings: Settings
) -> Tally:
    frame = dict.fromkeys(job.decoders, 0)
    logical = dict.fromkeys(job.decoders, 0)
    for trial_index in range(start, stop):
        for kind, outcome in run_trial(job, p_index, trial_index, settings).items():
            frame[kind] += outcome.frame_error
            logical[kind] += outcome.logical_error
    log.debug("p_index=%d trials %d..%d done", p_index, start, stop)
    return Tally(stop - start, frame, logical)


def _accumulate(
    job: SimJob,
    p_index: int,
    start: int,
    stop: int,
    settings: Settings,
    mapper: Callable[..., Iterable[Tally]],
) -> tuple[Tally, bool]:
    """Tally trials start..stop-1; the flag reports an early stop."""
    size = settings.simulation.chunk_size
    bounds = [(s, min(s + size, stop)) for s in range(start, stop, size)]
    # a wave of `threads` chunks at a time keeps early stopping deterministic
    wave = job.threads if job.early_stop_errors is not None else max(len(bounds), 1)
    tally = Tally(0, dict.fromkeys(job.decoders, 0), dict.fromkeys(job.decoders, 0))
    for first in range(0, len(bounds), wave):
        batch = bounds[first : first + wave]
        results = mapper(
            lambda b: _run_chunk(job, p_index, b[0], b[1], settings), batch
        )
        for chunk_tally in results:
            tally = tally.add(chunk_tally)
            target = job.early_stop_errors
            if target is not None and min(tally.logical.values()) >= target:
                log.warning(
                    "early stop at p_index=%d after %d trials", p_index, tally.trials
                )
                return tally, True
    return tally, False


def estimate(job: SimJob, settings: Settings | None = None) -> list[SimPoint]:
    """One SimPoint per (p, decoder), in p_grid then decoder order."""
    settings = settings if settings is not None else default_settings()
    if _EXHAUSTIVE_DECODERS & set(job.decoders):
        limit = settings.analysis.exhaustive_max_n
        if job.qpc.N > limit:
            raise SimulationError(
                f"MWD/MLD enumerate cosets and need N <= {limit}, got N={job.qpc.N}"
            )
    sim = settings.simulation
    points: list[SimPoint] = []
    with ThreadPoolExecutor(max_workers=job.threads) as pool:
        mapper = pool.map if job.threads > 1 else map
        for p_index, p in enumerate(job.p_grid):
            planned = job.trials if job.trials is not None else sim.trials
            tally, stopped = _accumulate(job, p_index, 0, planned, settings, mapper)
            escalate = (
                job.trials is None
                and not stopped
                and sim.trials_low_rate > planned
                and any(tally.rate(k) < sim.low_rate_threshold for k in job.decoders)
            )
            if escalate:
                log.info(
                    "p=%g below %g; extending to %d trials",
                    p,
                    sim.low_rate_threshold,
                    sim.trials_low_rate,
                )
                extra, _ = _accumulate(
                    job, p_index, planned, sim.trials_low_rate, settings, mapper
                )
                tally = tally.add(extra)
            for kind in job.decoders:
                points.append(
                    SimPoint(
                        p=p,
                        decoder=kind,
                        list_size=job.list_size,
                        trials=tally.trials,
                        logical_errors=tally.logical[kind],
                        frame_errors=tally.frame[kind],
                        seed=job.master_seed,
                    )
                )
            log.info(
                "N=%d p=%g trials=%d %s",
                job.qpc.N,
                p,
                tally.trials,
                " ".join(f"{k}={tally.rate(k):.4g}" for k in job.decoders),
            )
    return points


# --- Output ----------------------------------------------------------------


def _record(qpc: QuantumPolarCode, point: SimPoint) -> dict[str, Any]:
    beta = qpc.construction.beta
    return {
        "N": qpc.N,
        "K": qpc.K,
        "Kx": qpc.K_X,
        "Kz": qpc.K_Z,
        "construction": qpc.construction.kind.value,
        "beta": "" if beta is None else repr(beta),
        "decoder": point.decoder.value,
        "L": point.list_size,
        "p": repr(point.p),
        "trials": point.trials,
        "logical_errors": point.logical_errors,
        "P_L": repr(point.estimate),
        "stderr": repr(point.stderr),
        "seed": point.seed,
    }


def write_csv(qpc: QuantumPolarCode, points: Sequence[SimPoint], out: IO[str]) -> None:
    writer = csv.DictWriter(out, fieldnames=RESULTS_HEADER, lineterminator="\n")
    writer.writeheader()
    for point in points:
        writer.writerow(_record(qpc, point))


def write_json(qpc: QuantumPolarCode, points: Sequence[SimPoint], path: Path) -> None:
    records = []
    for point in points:
        record = _record(qpc, point)
        record |= {
            "p": point.p,
            "P_L": point.estimate,
            "stderr": point.stderr,
            "beta": qpc.construction.beta,
            "frame_errors": point.frame_errors,
        }
        records.append(record)
    path.write_text(json.dumps(records, indent=2) + "\n")
