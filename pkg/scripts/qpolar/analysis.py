"""Weight spectra, distance reports and construction scans.

A spectrum maps each error class to a histogram {weight: count} of the
syndrome-consistent errors seen in it. `weight_spectrum` builds one from a
large-list syndrome decode; `exhaustive_spectrum` from the full coset
enumeration (small N only). Spectra from a list are a lower bound on the
exhaustive one, so any distance found from them is an upper bound on the
true distance.
"""

from __future__ import annotations

import csv
import enum
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace
from typing import IO, Any

import numpy as np
import numpy.typing as npt

from qpolar.config import Settings, default_settings
from qpolar.polar_core import ConstructionSpec
from qpolar.quantum_css import (
    ErrorClassLabel,
    QuantumPolarCode,
    build_qpc,
    q1_dimensions,
    row_weight_bounds,
    symmetric_dimensions,
    z_basis_code,
)
from qpolar.quantum_decision import (
    DecisionError,
    coset_score,
    enumerate_coset,
    prepare_candidates,
)
from qpolar.scl_decoder import scl_decode_syndrome
from qpolar.sim_harness import (
    DecoderKind,
    ErrorType,
    SimJob,
    combined_rate,
    estimate,
)

log = logging.getLogger("qpolar.analysis")

SPECTRUM_HEADER: tuple[str, ...] = (
    "class_label",
    "weight",
    "count",
    "list_size",
    "syndrome_id",
    "seed",
)
DISTANCE_HEADER: tuple[str, ...] = (
    "N",
    "K",
    "Kx",
    "Kz",
    "construction",
    "beta",
    "logical",
    "row_weight_bound",
    "z_row_weight_bound",
    "search_min",
    "search_list_size",
    "exhaustive_min",
)
Q1_HEADER: tuple[str, ...] = ("i", "p", "P_L_X", "P_L_Z", "P_L", "trials", "seed")
BETA_HEADER: tuple[str, ...] = ("beta", "logical", "row_weight_bound", "P_L", "trials")
DOMINANCE_HEADER: tuple[str, ...] = (
    "syndrome_id",
    "class_a",
    "class_b",
    "w1",
    "w2",
    "first_order",
    "second_order",
    "dominates",
)


class Provenance(enum.StrEnum):
    FROM_LIST = "from_list"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class ClassSpectrum:
    """Per-class weight histograms for one syndrome (or merged over many)."""

    counts: Mapping[ErrorClassLabel, Mapping[int, int]]
    provenance: Provenance
    list_size: int | None = None

    def histogram(self, label: ErrorClassLabel) -> dict[int, int]:
        return dict(self.counts.get(label, {}))

    def w_min(self) -> int | None:
        """Lightest weight over every class; None for an empty spectrum."""
        weights = [w for h in self.counts.values() for w, c in h.items() if c > 0]
        return min(weights) if weights else None

    def total(self, label: ErrorClassLabel) -> int:
        return sum(self.counts.get(label, {}).values())

    def dominated_by(self, other: ClassSpectrum) -> bool:
        """Every count here is <= the matching count in `other`."""
        for label, hist in self.counts.items():
            theirs = other.counts.get(label, {})
            if any(c > theirs.get(w, 0) for w, c in hist.items()):
                return False
        return True

    def merge(self, other: ClassSpectrum) -> ClassSpectrum:
        """Sum the counts of two spectra with matching provenance."""
        if self.provenance is not other.provenance or self.list_size != other.list_size:
            raise ValueError(
                f"cannot merge a {self.provenance}(L={self.list_size}) spectrum with "
                f"a {other.provenance}(L={other.list_size}) one"
            )
        merged: dict[ErrorClassLabel, dict[int, int]] = {}
        for source in (self.counts, other.counts):
            for label, hist in source.items():
                target = merged.setdefault(label, {})
                for w, c in hist.items():
                    target[w] = target.get(w, 0) + c
        return ClassSpectrum(_sorted_counts(merged), self.provenance, self.list_size)

    def rows(self, syndrome_id: int, seed: int | None) -> list[dict[str, Any]]:
        return [
            {
                "class_label": label,
                "weight": w,
                "count": c,
                "list_size": "" if self.list_size is None else self.list_size,
                "syndrome_id": syndrome_id,
                "seed": "" if seed is None else seed,
            }
            for label, hist in sorted(self.counts.items())
            for w, c in sorted(hist.items())
        ]


def _sorted_counts(
    counts: Mapping[ErrorClassLabel, Mapping[int, int]],
) -> dict[ErrorClassLabel, dict[int, int]]:
    return {label: dict(sorted(h.items())) for label, h in sorted(counts.items())}


# --- Spectra ---------------------------------------------------------------


def weight_spectrum(
    qpc: QuantumPolarCode,
    syndrome: npt.ArrayLike,
    p: float | None = None,
    list_size: int | None = None,
    settings: Settings | None = None,
) -> ClassSpectrum:
    """Spectrum of the distinct noise estimates on an SCL syndrome decode.

    `p` only shapes the decoder LLRs; it defaults to `analysis.spectrum_p`.
    """
    settings = settings if settings is not None else default_settings()
    p = p if p is not None else settings.analysis.spectrum_p
    size = list_size if list_size is not None else settings.analysis.distance_list_size
    code = z_basis_code(qpc)
    decoded = scl_decode_syndrome(code, syndrome, p, size, settings.decoder)
    cands = prepare_candidates(qpc, decoded.codewords)
    return ClassSpectrum(cands.histograms(), Provenance.FROM_LIST, size)


def exhaustive_spectrum(
    qpc: QuantumPolarCode,
    syndrome: npt.ArrayLike,
    settings: Settings | None = None,
) -> ClassSpectrum:
    settings = settings if settings is not None else default_settings()
    coset = enumerate_coset(qpc, syndrome, settings.analysis.exhaustive_max_n)
    histograms = prepare_candidates(qpc, coset).histograms()
    return ClassSpectrum(histograms, Provenance.EXHAUSTIVE)


def random_syndromes(
    qpc: QuantumPolarCode, count: int, seed: int
) -> npt.NDArray[np.uint8]:
    """`count` uniform syndromes, one per row."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(count, qpc.N - qpc.K_Z), dtype=np.uint8)


# --- Distance --------------------------------------------------------------


@dataclass(frozen=True)
class DistanceReport:
    """Upper bounds on the X distance, plus a certified value at small N.

    `search_min` is None when the list held no nontrivial logical operator.
    """

    row_weight_bound: int
    z_row_weight_bound: int
    search_min: int | None
    search_list_size: int
    exhaustive_min: int | None = None

    @property
    def best_bound(self) -> int:
        bounds = [self.row_weight_bound]
        bounds += [b for b in (self.search_min, self.exhaustive_min) if b is not None]
        return min(bounds)

    def to_dict(self) -> dict[str, Any]:
        return {
            "row_weight_bound": self.row_weight_bound,
            "z_row_weight_bound": self.z_row_weight_bound,
            "search_min": self.search_min,
            "search_list_size": self.search_list_size,
            "exhaustive_min": self.exhaustive_min,
        }


def _lightest_logical(spectrum: ClassSpectrum) -> int | None:
    weights = [
        w
        for label, hist in spectrum.counts.items()
        if label != 0
        for w, c in hist.items()
        if c > 0
    ]
    return min(weights) if weights else None


def distance_report(
    qpc: QuantumPolarCode,
    list_size: int | None = None,
    p: float | None = None,
    *,
    exhaustive: bool = False,
    settings: Settings | None = None,
) -> DistanceReport:
    """Row-weight bounds plus the lightest logical operator on a zero-syndrome list."""
    settings = settings if settings is not None else default_settings()
    size = list_size if list_size is not None else settings.analysis.distance_list_size
    x_bound, z_bound = row_weight_bounds(qpc)
    zero = np.zeros(qpc.N - qpc.K_Z, dtype=np.uint8)
    search_min = _lightest_logical(weight_spectrum(qpc, zero, p, size, settings))
    exhaustive_min = None
    if exhaustive:
        exhaustive_min = _lightest_logical(exhaustive_spectrum(qpc, zero, settings))
    report = DistanceReport(x_bound, z_bound, search_min, size, exhaustive_min)
    log.info(
        "N=%d logical=%s row-weight bound %d, list search (L=%d) %s",
        qpc.N,
        qpc.logical,
        x_bound,
        size,
        search_min,
    )
    return report


# --- Dominance of the lightest weight ---------------------------------------


@dataclass(frozen=True)
class DominanceReport:
    """First- vs second-order spread between the two best-scoring classes.

    first_order = |N_a(w1) - N_b(w1)| and second_order =
    q^(w2 - w1) |N_a(w2) - N_b(w2)|, with w1 the lightest weight seen in
    either class and w2 the next one.
    """

    leading: tuple[ErrorClassLabel, ErrorClassLabel] | None
    w1: int | None
    w2: int | None
    first_order: float
    second_order: float

    @property
    def dominates(self) -> bool:
        return self.first_order > self.second_order


def first_order_dominance(spectrum: ClassSpectrum, p: float) -> DominanceReport:
    if not 0.0 < p < 0.5:
        raise DecisionError(f"dominance needs 0 < p < 0.5, got {p!r}")
    scored = sorted(
        spectrum.counts,
        key=lambda label: (-coset_score(spectrum.counts[label], p), label),
    )
    if len(scored) < 2:
        return DominanceReport(None, spectrum.w_min(), None, 0.0, 0.0)
    a, b = scored[0], scored[1]
    hist_a, hist_b = spectrum.histogram(a), spectrum.histogram(b)
    weights = sorted({w for w, c in (hist_a | hist_b).items() if c > 0})
    w1 = weights[0]
    first = float(abs(hist_a.get(w1, 0) - hist_b.get(w1, 0)))
    if len(weights) < 2:
        return DominanceReport((a, b), w1, None, first, 0.0)
    w2 = weights[1]
    q = p / (1.0 - p)
    second = q ** (w2 - w1) * abs(hist_a.get(w2, 0) - hist_b.get(w2, 0))
    return DominanceReport((a, b), w1, w2, first, second)


# --- Scans -----------------------------------------------------------------


@dataclass(frozen=True)
class Q1ScanRow:
    i: int
    p: float
    p_x: float
    p_z: float
    p_l: float
    trials: int
    seed: int


def q1_scan(
    n: int,
    p_grid: Sequence[float],
    trials: int,
    seed: int,
    candidates: Iterable[int] | None = None,
    *,
    threads: int = 1,
    settings: Settings | None = None,
) -> list[Q1ScanRow]:
    """SC logical rates of every Q1 code over the candidate info indices.

    Candidates default to 1..N-2. The Z rate comes from the mirrored code,
    so rates at i and N-1-i swap roles.
    """
    size = 1 << n
    indices = list(candidates) if candidates is not None else list(range(1, size - 1))
    bad = [i for i in indices if not 0 < i < size - 1]
    if bad:
        raise ValueError(f"Q1 candidate indices must lie in 1..{size - 2}, got {bad}")
    rows: list[Q1ScanRow] = []
    for i in indices:
        k_x, k_z = q1_dimensions(n, i)
        qpc = build_qpc(n, k_x, k_z, ConstructionSpec.q1(i))
        job = SimJob(
            qpc,
            (DecoderKind.SC,),
            1,
            tuple(p_grid),
            trials,
            seed,
            ErrorType.X,
            threads,
        )
        x_points = estimate(job, settings)
        z_points = estimate(replace(job, error_type=ErrorType.Z), settings)
        for xp, zp in zip(x_points, z_points, strict=True):
            rows.append(
                Q1ScanRow(
                    i,
                    xp.p,
                    xp.estimate,
                    zp.estimate,
                    combined_rate(xp.estimate, zp.estimate),
                    xp.trials,
                    seed,
                )
            )
        log.info("Q1 i=%d scanned over %d p value(s)", i, len(job.p_grid))
    return rows


@dataclass(frozen=True)
class BetaScanRow:
    beta: float | None
    logical: tuple[int, ...]
    row_weight_bound: int
    p_l: float | None = None
    trials: int | None = None


def beta_scan(
    n: int,
    k: int,
    betas: Iterable[float],
    *,
    list_size: int | None = None,
    p: float | None = None,
    trials: int | None = None,
    seed: int | None = None,
    threads: int = 1,
    settings: Settings | None = None,
) -> list[BetaScanRow]:
    """Λ and row-weight bound of the symmetric PW code for each β.

    With `list_size`, `p`, `trials` and `seed` all given, each row also
    carries an SCL-E logical X rate at that operating point.
    """
    simulate = None not in (list_size, p, trials, seed)
    k_x, k_z = symmetric_dimensions(n, k)
    rows: list[BetaScanRow] = []
    for beta in betas:
        qpc = build_qpc(n, k_x, k_z, ConstructionSpec.pw(beta))
        bound, _ = row_weight_bounds(qpc)
        rate = None
        if simulate:
            assert list_size is not None and p is not None and seed is not None
            job = SimJob(
                qpc,
                (DecoderKind.SCL_E,),
                list_size,
                (p,),
                trials,
                seed,
                threads=threads,
            )
            rate = estimate(job, settings)[0].estimate
        log.info("beta=%.6f logical=%s bound=%d", beta, qpc.logical, bound)
        rows.append(
            BetaScanRow(
                qpc.construction.beta,
                qpc.logical,
                bound,
                rate,
                trials if simulate else None,
            )
        )
    return rows


# --- Writers ---------------------------------------------------------------


def _writer(out: IO[str], header: Sequence[str]) -> csv.DictWriter[str]:
    writer = csv.DictWriter(out, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    return writer


def write_spectrum_csv(
    spectra: Sequence[ClassSpectrum], out: IO[str], seed: int | None = None
) -> None:
    """One block of rows per spectrum; `syndrome_id` is its position."""
    writer = _writer(out, SPECTRUM_HEADER)
    for syndrome_id, spectrum in enumerate(spectra):
        writer.writerows(spectrum.rows(syndrome_id, seed))


def write_dominance_csv(
    spectra: Sequence[ClassSpectrum], p: float, out: IO[str]
) -> None:
    """One dominance row per spectrum, classes ranked by coset score at p."""
    writer = _writer(out, DOMINANCE_HEADER)
    for syndrome_id, spectrum in enumerate(spectra):
        report = first_order_dominance(spectrum, p)
        a, b = report.leading if report.leading is not None else ("", "")
        writer.writerow(
            {
                "syndrome_id": syndrome_id,
                "class_a": a,
                "class_b": b,
                "w1": "" if report.w1 is None else report.w1,
                "w2": "" if report.w2 is None else report.w2,
                "first_order": report.first_order,
                "second_order": report.second_order,
                "dominates": int(report.dominates),
            }
        )


def write_distance_csv(
    qpc: QuantumPolarCode, report: DistanceReport, out: IO[str]
) -> None:
    beta = qpc.construction.beta
    record = {
        "N": qpc.N,
        "K": qpc.K,
        "Kx": qpc.K_X,
        "Kz": qpc.K_Z,
        "construction": qpc.construction.kind.value,
        "beta": "" if beta is None else repr(beta),
        "logical": " ".join(str(i) for i in qpc.logical),
    }
    record |= {k: "" if v is None else v for k, v in report.to_dict().items()}
    _writer(out, DISTANCE_HEADER).writerow(record)


def write_q1_csv(rows: Sequence[Q1ScanRow], out: IO[str]) -> None:
    writer = _writer(out, Q1_HEADER)
    for row in rows:
        writer.writerow(
            {
                "i": row.i,
                "p": repr(row.p),
                "P_L_X": repr(row.p_x),
                "P_L_Z": repr(row.p_z),
                "P_L": repr(row.p_l),
                "trials": row.trials,
                "seed": row.seed,
            }
        )


def write_beta_csv(rows: Sequence[BetaScanRow], out: IO[str]) -> None:
    writer = _writer(out, BETA_HEADER)
    for row in rows:
        writer.writerow(
            {
                "beta": "" if row.beta is None else repr(row.beta),
                "logical": " ".join(str(i) for i in row.logical),
                "row_weight_bound": row.row_weight_bound,
                "P_L": "" if row.p_l is None else repr(row.p_l),
                "trials": "" if row.trials is None else row.trials,
            }
        )

