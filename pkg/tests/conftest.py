"""Shared pytest fixtures.

Puts scripts/ on sys.path so `import qpolar` works from a plain checkout,
and holds the reference values several test modules parametrize over.
"""

from __future__ import annotations

import itertools
import sys
from pathlib import Path

import numpy as np
import pytest

_REPO_ROOT = Path(__file__).resolve().parent.parent
_SCRIPTS = _REPO_ROOT / "scripts"

sys.path.insert(0, str(_SCRIPTS))

from qpolar.config import Settings, default_settings  # noqa: E402
from qpolar.polar_core import ConstructionSpec  # noqa: E402
from qpolar.quantum_css import QuantumPolarCode, build_qpc  # noqa: E402


@pytest.fixture(scope="session")
def settings() -> Settings:
    return default_settings()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def pw16() -> QuantumPolarCode:
    """The (16, 9, 9) PW code: N=16, K_X = K_Z = 9, two logical qubits."""
    return build_qpc(4, 9, 9, ConstructionSpec.pw())


@pytest.fixture(scope="session")
def pw64() -> QuantumPolarCode:
    return build_qpc(6, 33, 33, ConstructionSpec.pw())


# ---------------------------------------------------------------------------
# Shared constants: importable at collection time for @pytest.mark.parametrize
# ---------------------------------------------------------------------------

REPO_ROOT: Path = _REPO_ROOT

# n -> logical rows of the K=2 symmetric code, per construction, and the
# distance (lightest logical row weight).
LOGICAL_ROWS: dict[int, dict[str, tuple[int, int]]] = {
    6: {"pw": (26, 37), "hpw": (26, 37), "rm": (28, 35)},
    7: {"pw": (43, 84), "hpw": (29, 98), "rm": (15, 112)},
    8: {"pw": (92, 163), "hpw": (92, 163), "rm": (120, 135)},
    9: {"pw": (179, 332), "hpw": (118, 393), "rm": (31, 480)},
    10: {"pw": (364, 659), "hpw": (364, 659), "rm": (496, 527)},
    11: {"pw": (723, 1324), "hpw": (375, 1672), "rm": (63, 1984)},
}
DISTANCES: dict[int, int] = {6: 8, 7: 8, 8: 16, 9: 16, 10: 32, 11: 32}


def spec_for(kind: str) -> ConstructionSpec:
    return {
        "pw": ConstructionSpec.pw,
        "hpw": ConstructionSpec.hpw,
        "rm": ConstructionSpec.rm,
    }[kind]()


def all_words(n_bits: int) -> np.ndarray:
    """Every binary word of length n_bits, one per row."""
    return np.array(list(itertools.product((0, 1), repeat=n_bits)), dtype=np.uint8)


def bsc_log_likelihood(word: np.ndarray, received: np.ndarray, p: float) -> float:
    """ln Pr[received | word] on BSC(p)."""
    flips = int(np.count_nonzero(word ^ received))
    return flips * np.log(p) + (word.size - flips) * np.log1p(-p)
