"""Tests for qpolar.analysis.

Covers:
- Weight spectra from lists and from coset enumeration, and how they compare.
- Distance reports against row-weight bounds and exhaustive minima.
- First-order dominance, the Q1 scan and the β scan.
- CSV writers.
"""

from __future__ import annotations

import csv
import io

import numpy as np
import pytest
from conftest import all_words

from qpolar.analysis import (
    BETA_HEADER,
    DISTANCE_HEADER,
    Q1_HEADER,
    SPECTRUM_HEADER,
    ClassSpectrum,
    Provenance,
    beta_scan,
    distance_report,
    exhaustive_spectrum,
    first_order_dominance,
    q1_scan,
    random_syndromes,
    weight_spectrum,
    write_beta_csv,
    write_distance_csv,
    write_dominance_csv,
    write_q1_csv,
    write_spectrum_csv,
)
from qpolar.polar_core import BETA_QUARTER_ROOT, ConstructionSpec
from qpolar.quantum_css import build_qpc, symmetric_dimensions
from qpolar.quantum_decision import DecisionError


def _read(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(scope="module")
def pw32():
    return build_qpc(5, *symmetric_dimensions(5, 2), ConstructionSpec.pw())


class TestSpectrum:
    def test_zero_syndrome_has_the_empty_error(self, pw16):
        spectrum = exhaustive_spectrum(pw16, np.zeros(7, dtype=np.uint8))
        assert spectrum.histogram(0)[0] == 1
        assert spectrum.w_min() == 0
        assert spectrum.provenance is Provenance.EXHAUSTIVE
        assert spectrum.list_size is None

    def test_exhaustive_classes_have_equal_size(self, pw16, rng):
        spectrum = exhaustive_spectrum(pw16, rng.integers(0, 2, 7, dtype=np.uint8))
        assert len(spectrum.counts) == 4
        for label in spectrum.counts:
            assert spectrum.total(label) == 1 << (16 - pw16.K_X)

    def test_full_list_equals_exhaustive(self, pw16):
        for syndrome in all_words(7):
            listed = weight_spectrum(pw16, syndrome, list_size=512)
            exact = exhaustive_spectrum(pw16, syndrome)
            assert listed.counts == exact.counts
            assert listed.list_size == 512

    @pytest.mark.parametrize("list_size", [1, 8, 64])
    def test_small_lists_are_dominated(self, pw16, rng, list_size):
        for syndrome in rng.integers(0, 2, size=(10, 7), dtype=np.uint8):
            listed = weight_spectrum(pw16, syndrome, 0.1, list_size)
            assert listed.dominated_by(exhaustive_spectrum(pw16, syndrome))
            assert sum(listed.total(k) for k in listed.counts) <= list_size

    def test_default_list_size_comes_from_settings(self, pw16, settings):
        spectrum = weight_spectrum(pw16, np.zeros(7, dtype=np.uint8))
        assert spectrum.list_size == settings.analysis.distance_list_size

    def test_random_syndromes_are_seeded(self, pw16):
        first = random_syndromes(pw16, 5, 11)
        assert first.shape == (5, 7)
        assert np.array_equal(first, random_syndromes(pw16, 5, 11))

    @pytest.mark.slow
    def test_list_finds_the_lightest_weight_at_n32(self, pw32):
        syndromes = random_syndromes(pw32, 100, 5)
        hits = sum(
            weight_spectrum(pw32, s, 0.05, 1024).w_min()
            == exhaustive_spectrum(pw32, s).w_min()
            for s in syndromes
        )
        assert hits >= 95


class TestListGrowth:
    def test_lightest_weight_never_grows_with_the_list(self, pw64):
        for syndrome in random_syndromes(pw64, 20, 3):
            lightest = [
                weight_spectrum(pw64, syndrome, 0.05, size).w_min()
                for size in (1, 2, 4, 8, 16)
            ]
            assert lightest == sorted(lightest, reverse=True)

    @pytest.mark.parametrize("list_size", [64, 128, 256])
    def test_doubled_list_keeps_as_many_candidates(self, pw16, rng, list_size):
        for syndrome in rng.integers(0, 2, size=(10, 7), dtype=np.uint8):
            small = weight_spectrum(pw16, syndrome, 0.1, list_size)
            big = weight_spectrum(pw16, syndrome, 0.1, 2 * list_size)
            assert sum(small.total(k) for k in small.counts) == list_size
            assert sum(big.total(k) for k in big.counts) == 2 * list_size
            assert big.w_min() <= small.w_min()

    def test_half_list_is_dominated_by_the_full_list(self, pw16):
        for syndrome in all_words(7):
            small = weight_spectrum(pw16, syndrome, 0.1, 256)
            assert small.dominated_by(weight_spectrum(pw16, syndrome, 0.1, 512))


class TestClassSpectrum:
    def test_merge_adds_counts(self):
        a = ClassSpectrum({0: {2: 1}, 1: {3: 2}}, Provenance.FROM_LIST, 8)
        b = ClassSpectrum({1: {3: 1, 5: 4}}, Provenance.FROM_LIST, 8)
        merged = a.merge(b)
        assert merged.counts == {0: {2: 1}, 1: {3: 3, 5: 4}}
        assert merged.list_size == 8

    def test_merge_rejects_mixed_provenance(self):
        a = ClassSpectrum({0: {2: 1}}, Provenance.FROM_LIST, 8)
        b = ClassSpectrum({0: {2: 1}}, Provenance.EXHAUSTIVE)
        with pytest.raises(ValueError, match="cannot merge"):
            a.merge(b)

    def test_merge_rejects_mixed_list_sizes(self):
        a = ClassSpectrum({0: {2: 1}}, Provenance.FROM_LIST, 8)
        b = ClassSpectrum({0: {2: 1}}, Provenance.FROM_LIST, 16)
        with pytest.raises(ValueError, match="cannot merge"):
            a.merge(b)

    def test_empty(self):
        spectrum = ClassSpectrum({}, Provenance.FROM_LIST, 4)
        assert spectrum.w_min() is None
        assert spectrum.total(3) == 0
        assert spectrum.histogram(3) == {}

    def test_dominance_is_per_entry(self):
        small = ClassSpectrum({0: {2: 1}}, Provenance.FROM_LIST, 4)
        large = ClassSpectrum({0: {2: 1, 4: 2}}, Provenance.EXHAUSTIVE)
        assert small.dominated_by(large)
        assert not large.dominated_by(small)

    def test_rows(self):
        spectrum = ClassSpectrum({1: {4: 2}, 0: {3: 1}}, Provenance.EXHAUSTIVE)
        rows = spectrum.rows(syndrome_id=2, seed=None)
        assert [(r["class_label"], r["weight"], r["count"]) for r in rows] == [
            (0, 3, 1),
            (1, 4, 2),
        ]
        assert rows[0]["list_size"] == ""
        assert rows[0]["seed"] == ""


class TestDistance:
    def test_n16_full_search_and_exhaustive(self, pw16):
        report = distance_report(pw16, 512, exhaustive=True)
        assert report.row_weight_bound == 4
        assert report.search_min == 4
        assert report.exhaustive_min == 4
        assert report.best_bound == 4

    def test_n32_exhaustive_is_below_every_bound(self, pw32):
        report = distance_report(pw32, 256, exhaustive=True)
        assert report.exhaustive_min is not None
        assert report.exhaustive_min <= report.row_weight_bound
        assert report.search_min is None or report.exhaustive_min <= report.search_min
        assert report.best_bound == report.exhaustive_min

    def test_n64_list_search_reaches_the_row_bound(self, pw64):
        report = distance_report(pw64, 4096)
        assert report.row_weight_bound == 8
        assert report.search_min == 8
        assert report.exhaustive_min is None

    def test_exhaustive_is_limited(self, pw64):
        with pytest.raises(DecisionError, match="N <= 32"):
            distance_report(pw64, 4, exhaustive=True)

    def test_to_dict(self, pw16):
        data = distance_report(pw16, 16).to_dict()
        assert set(data) == {
            "row_weight_bound",
            "z_row_weight_bound",
            "search_min",
            "search_list_size",
            "exhaustive_min",
        }
        assert data["search_list_size"] == 16


class TestDominance:
    def test_leading_pair(self):
        spectrum = ClassSpectrum(
            {0: {5: 2, 7: 46}, 1: {5: 4, 7: 60}, 2: {9: 1}}, Provenance.FROM_LIST, 64
        )
        report = first_order_dominance(spectrum, 0.1)
        assert report.leading == (1, 0)
        assert (report.w1, report.w2) == (5, 7)
        assert report.first_order == 2.0
        assert report.second_order == pytest.approx(14 / 81)
        assert report.dominates

    def test_second_order_wins_when_lightest_counts_agree(self):
        spectrum = ClassSpectrum(
            {0: {3: 1, 5: 10}, 1: {3: 1, 5: 2}}, Provenance.FROM_LIST, 64
        )
        report = first_order_dominance(spectrum, 0.2)
        assert report.first_order == 0.0
        assert report.second_order == pytest.approx(8 / 16)
        assert not report.dominates

    def test_single_class(self):
        spectrum = ClassSpectrum({0: {2: 3}}, Provenance.FROM_LIST, 4)
        report = first_order_dominance(spectrum, 0.1)
        assert report.leading is None
        assert report.w1 == 2
        assert not report.dominates

    def test_rejects_p(self):
        spectrum = ClassSpectrum({0: {2: 3}}, Provenance.FROM_LIST, 4)
        with pytest.raises(DecisionError, match="0 < p < 0.5"):
            first_order_dominance(spectrum, 0.5)


class TestQ1Scan:
    def test_shape(self):
        rows = q1_scan(3, [0.05, 0.1], 30, seed=3)
        assert [(r.i, r.p) for r in rows] == [
            (i, p) for i in range(1, 7) for p in (0.05, 0.1)
        ]
        for row in rows:
            assert row.trials == 30
            assert row.seed == 3
            assert row.p_l == pytest.approx(1 - (1 - row.p_x) * (1 - row.p_z))

    def test_vanishing_noise(self):
        rows = q1_scan(3, [1e-7], 20, seed=9, candidates=[2, 5])
        assert [r.p_l for r in rows] == [0.0, 0.0]

    def test_is_seeded(self):
        first = q1_scan(3, [0.1], 40, seed=4, candidates=[3])
        assert first == q1_scan(3, [0.1], 40, seed=4, candidates=[3], threads=2)

    @pytest.mark.parametrize("i", [0, 7])
    def test_rejects_edge_indices(self, i):
        with pytest.raises(ValueError, match=r"1\.\.6"):
            q1_scan(3, [0.1], 10, seed=1, candidates=[i])


class TestBetaScan:
    def test_high_rate_distances(self):
        rows = beta_scan(
            10, 42, [BETA_QUARTER_ROOT - 0.12, BETA_QUARTER_ROOT - 0.02]
        )
        assert [r.row_weight_bound for r in rows] == [32, 16]
        assert all(r.p_l is None and r.trials is None for r in rows)
        assert all(len(r.logical) == 42 for r in rows)

    def test_with_simulation(self):
        rows = beta_scan(
            4, 2, [BETA_QUARTER_ROOT], list_size=4, p=0.1, trials=20, seed=1
        )
        assert rows[0].trials == 20
        assert rows[0].p_l is not None and 0.0 <= rows[0].p_l <= 1.0
        assert rows[0].beta == BETA_QUARTER_ROOT

    def test_partial_simulation_flags_skip_simulation(self):
        rows = beta_scan(4, 2, [1.5], list_size=4, p=0.1)
        assert rows[0].p_l is None


class TestWriters:
    def test_spectrum_csv(self, pw16):
        spectra = [
            exhaustive_spectrum(pw16, s) for s in random_syndromes(pw16, 2, seed=8)
        ]
        out = io.StringIO()
        write_spectrum_csv(spectra, out, seed=8)
        assert out.getvalue().splitlines()[0] == ",".join(SPECTRUM_HEADER)
        rows = _read(out.getvalue())
        assert {r["syndrome_id"] for r in rows} == {"0", "1"}
        assert sum(int(r["count"]) for r in rows) == 2 * 512
        assert {r["seed"] for r in rows} == {"8"}

    def test_distance_csv(self, pw16):
        out = io.StringIO()
        write_distance_csv(pw16, distance_report(pw16, 64), out)
        assert out.getvalue().splitlines()[0] == ",".join(DISTANCE_HEADER)
        (row,) = _read(out.getvalue())
        assert row["N"] == "16"
        assert row["construction"] == "PW"
        assert row["logical"] == "6 9"
        assert row["row_weight_bound"] == "4"
        assert row["exhaustive_min"] == ""
        assert float(row["beta"]) == BETA_QUARTER_ROOT

    def test_q1_csv(self):
        out = io.StringIO()
        write_q1_csv(q1_scan(2, [0.1], 5, seed=2), out)
        assert out.getvalue().splitlines()[0] == ",".join(Q1_HEADER)
        rows = _read(out.getvalue())
        assert [r["i"] for r in rows] == ["1", "2"]

    def test_beta_csv_leaves_blanks(self):
        out = io.StringIO()
        write_beta_csv(beta_scan(4, 2, [1.2]), out)
        assert out.getvalue().splitlines()[0] == ",".join(BETA_HEADER)
        (row,) = _read(out.getvalue())
        assert row["P_L"] == ""
        assert row["trials"] == ""
        assert float(row["beta"]) == 1.2

    def test_dominance_csv(self):
        spectra = [
            ClassSpectrum(
                {0: {5: 2, 7: 46}, 1: {5: 4, 7: 60}, 2: {9: 1}},
                Provenance.FROM_LIST,
                64,
            ),
            ClassSpectrum({0: {2: 3}}, Provenance.FROM_LIST, 64),
        ]
        out = io.StringIO()
        write_dominance_csv(spectra, 0.1, out)
        assert out.getvalue().splitlines()[0] == (
            "syndrome_id,class_a,class_b,w1,w2,first_order,second_order,dominates"
        )
        first, single = _read(out.getvalue())
        assert (first["class_a"], first["class_b"]) == ("1", "0")
        assert (first["w1"], first["w2"], first["dominates"]) == ("5", "7", "1")
        assert float(first["first_order"]) == 2.0
        assert single["syndrome_id"] == "1"
        assert (single["class_a"], single["w1"], single["w2"]) == ("", "2", "")
        assert single["dominates"] == "0"
