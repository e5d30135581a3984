from __future__ import annotations

import numpy as np
import pytest

from levy_extrema.factorization import FrequencyGrid
from levy_extrema.levy_core import (
    Exponential,
    Geometric,
    Kou,
    LevyModel,
    MixedGamma,
    SechExponential,
    StableTails,
)

BM = LevyModel(0.0, 1.0)
KOU = LevyModel(0.0, 1.0, Kou(1.0, 0.5, 2.0, 2.0))
KOU_SKEW = LevyModel(0.2, 0.5, Kou(2.0, 0.3, 3.0, 1.5))
MIXED_POS = LevyModel(-0.3, 0.8, MixedGamma((1.5, 3.0), ((0.4, 0.2), (0.5,)), "positive"))
MIXED_NEG = LevyModel(0.5, 0.0, MixedGamma((1.0, 2.0), ((0.5, 0.3), (0.4,)), "negative"))
SECH = LevyModel(0.0, 0.0, SechExponential(0.3))
STABLE_15 = LevyModel(0.0, 0.0, StableTails(0.5, 0.3, 1.5))
STABLE_07 = LevyModel(0.0, 0.0, StableTails(0.5, 0.3, 0.7))
DEGENERATE = LevyModel()

# every built-in family with a killing time
BUILTIN_CASES = {
    "degenerate": (DEGENERATE, Exponential(1.0)),
    "bm": (BM, Exponential(1.0)),
    "bm-drift": (LevyModel(0.4, 1.0), Exponential(0.5)),
    "kou": (KOU, Exponential(0.5)),
    "kou-skew": (KOU_SKEW, Exponential(1.0)),
    "mixed-pos": (MIXED_POS, Exponential(1.0)),
    "mixed-neg": (MIXED_NEG, Exponential(1.0)),
    "sech": (SECH, Exponential(1.0)),
    "stable-1.5": (STABLE_15, Exponential(1.0)),
    "stable-0.7": (STABLE_07, Exponential(1.0)),
    "bm-geometric": (LevyModel(0.1, 1.0), Geometric(0.5)),
    "kou-geometric": (LevyModel(0.0, 0.5, Kou(1.0, 0.3, 2.0, 3.0)), Geometric(0.7)),
}


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid()


def sqrt2_plus(w):
    """Closed-form Phi_+ for BM(0, 1) killed at rate 1: roots of w^2 + 2 are +-i sqrt 2."""
    r = np.sqrt(2.0)
    return r / (r - 1j * np.asarray(w))


def sqrt2_minus(w):
    r = np.sqrt(2.0)
    return r / (r + 1j * np.asarray(w))
