"""Reference-value checks for constructions and logical error rates.

Construction checks are fast. Error-rate spot checks decode 10^4 trials per
point and are marked slow; run them with `pytest -m slow`.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import DISTANCES, LOGICAL_ROWS, spec_for

from qpolar.analysis import random_syndromes
from qpolar.polar_core import BETA_QUARTER_ROOT, ConstructionSpec
from qpolar.quantum_css import (
    build_qpc,
    row_weight_bounds,
    symmetric_dimensions,
    verify_css,
)
from qpolar.quantum_decision import exact_mld, scl_c_decide
from qpolar.scl_decoder import scl_decode_syndrome
from qpolar.sim_harness import DecoderKind, SimJob, SimPoint, estimate

SPOT_TRIALS = 10_000
SEED = 20240917


def _symmetric(n: int, k: int, spec: ConstructionSpec):
    return build_qpc(n, *symmetric_dimensions(n, k), spec)


def _assert_near(point: SimPoint, target: float, sigmas: float = 4.0) -> None:
    tolerance = sigmas * math.sqrt(target * (1.0 - target) / point.trials)
    assert abs(point.estimate - target) <= tolerance, (
        f"{point.decoder} at p={point.p}: {point.estimate:.5f} vs {target} "
        f"(tolerance {tolerance:.5f})"
    )


def _rates(qpc, decoders, list_size: int, p: float) -> dict[DecoderKind, SimPoint]:
    job = SimJob(
        qpc,
        tuple(decoders),
        list_size,
        (p,),
        SPOT_TRIALS,
        SEED,
        threads=4,
    )
    return {point.decoder: point for point in estimate(job)}


class TestReferenceCodes:
    @pytest.mark.parametrize("n", sorted(LOGICAL_ROWS))
    @pytest.mark.parametrize("kind", ["pw", "hpw", "rm"])
    def test_logical_rows(self, n, kind):
        qpc = _symmetric(n, 2, spec_for(kind))
        assert qpc.logical == LOGICAL_ROWS[n][kind]

    @pytest.mark.parametrize("n", sorted(DISTANCES))
    def test_pw_distance_column(self, n):
        x_bound, _ = row_weight_bounds(_symmetric(n, 2, ConstructionSpec.pw()))
        assert x_bound == DISTANCES[n]


class TestCSSSweep:
    @pytest.mark.parametrize("n", range(4, 12))
    @pytest.mark.parametrize("kind", ["pw", "hpw", "rm"])
    def test_every_even_k(self, n, kind):
        spec = spec_for(kind)
        for k in range(2, min(64, (1 << n) // 4) + 1, 2):
            assert verify_css(_symmetric(n, k, spec)), (n, k, kind)


class TestHighRate:
    @pytest.mark.parametrize(("offset", "distance"), [(-0.12, 32), (-0.02, 16)])
    def test_lowered_beta_distances(self, offset, distance):
        qpc = _symmetric(10, 42, ConstructionSpec.pw(BETA_QUARTER_ROOT + offset))
        assert row_weight_bounds(qpc)[0] == distance


@pytest.mark.slow
class TestErrorRates:
    def test_n64_list4(self):
        qpc = _symmetric(6, 2, ConstructionSpec.pw())
        rates = _rates(qpc, [DecoderKind.SCL_E], 4, 0.1)
        _assert_near(rates[DecoderKind.SCL_E], 0.275)

    def test_n512_list16(self):
        qpc = _symmetric(9, 2, ConstructionSpec.pw())
        rates = _rates(qpc, [DecoderKind.SCL_E, DecoderKind.SCL_C], 16, 0.08)
        _assert_near(rates[DecoderKind.SCL_E], 0.0458)
        _assert_near(rates[DecoderKind.SCL_C], 0.0417)

    def test_n512_list64_coset_rule_helps(self):
        qpc = _symmetric(9, 2, ConstructionSpec.pw())
        rates = _rates(qpc, [DecoderKind.SCL_E, DecoderKind.SCL_C], 64, 0.1)
        _assert_near(rates[DecoderKind.SCL_E], 0.2299)
        _assert_near(rates[DecoderKind.SCL_C], 0.2053)
        assert rates[DecoderKind.SCL_C].estimate < rates[DecoderKind.SCL_E].estimate

    def test_n2048_list32(self):
        qpc = _symmetric(11, 2, ConstructionSpec.pw())
        rates = _rates(qpc, [DecoderKind.SCL_E], 32, 0.08)
        _assert_near(rates[DecoderKind.SCL_E], 0.00363)

    def test_n1024_k32(self):
        qpc = _symmetric(10, 32, ConstructionSpec.pw())
        rates = _rates(qpc, [DecoderKind.SCL_E], 16, 0.05)
        _assert_near(rates[DecoderKind.SCL_E], 0.00537)


@pytest.mark.slow
def test_full_list_coset_rule_is_mld_at_n32():
    qpc = _symmetric(5, 2, ConstructionSpec.pw())
    full = 1 << qpc.K_Z
    for syndrome in random_syndromes(qpc, 200, SEED):
        decoded = scl_decode_syndrome(qpc.z_code, syndrome, 0.1, full)
        listed = scl_c_decide(qpc, decoded, 0.1)
        exact = exact_mld(qpc, syndrome, 0.1)
        assert listed.chosen_label == exact.chosen_label
        assert np.array_equal(listed.correction, exact.correction)
