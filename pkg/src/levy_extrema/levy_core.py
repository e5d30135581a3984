"""Levy models, characteristic exponents, killing times and the symbol g.

Sign convention: ``E[exp(i w X_t)] = exp(t * psi(w))``, so ``Re psi <= 0`` on
the real line.  The sech and stable exponents are quoted in the literature in
the opposite convention (``exp(-t psi)``); they are negated here so that every
family shares one convention and ``q / (q - psi)`` is the characteristic
function of ``X`` at an exponential time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    BranchJumpTooLarge,
    DenominatorVanishes,
    ModelError,
    NonAnalytic,
    VanishingSample,
)

_EPS = np.finfo(float).eps


# --------------------------------------------------------------------------- #
# Jump measures
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class NoJumps:
    """Pure diffusion, nu = 0."""

    def exponent(self, w):
        return np.zeros_like(np.asarray(w, dtype=complex))

    @property
    def strip_halfwidth(self) -> float:
        return math.inf

    @property
    def intensity(self) -> float:
        return 0.0

    def rational_terms(self):
        return []


@dataclass(frozen=True)
class MixedGamma:
    """One-sided mixed-gamma jump density.

    ``nu(dx) = sum_k sum_j c_kj a_k^j |x|^(j-1) / (j-1)! exp(-a_k |x|) dx`` on
    the side given by ``side``.  ``weights[k][j-1]`` is ``c_kj``; the weights
    sum to the jump intensity.
    """

    rates: tuple[float, ...]
    weights: tuple[tuple[float, ...], ...]
    side: str = "positive"

    def __post_init__(self):
        rates = tuple(float(a) for a in self.rates)
        weights = tuple(tuple(float(c) for c in row) for row in self.weights)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "weights", weights)
        if self.side not in ("positive", "negative"):
            raise ModelError(f"side must be 'positive' or 'negative', got {self.side!r}")
        if not rates:
            raise ModelError("mixed gamma needs at least one rate")
        if len(weights) != len(rates):
            raise ModelError("weights must have one row per rate")
        if any(a <= 0.0 or not math.isfinite(a) for a in rates):
            raise ModelError("mixed gamma rates must be positive and finite")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ModelError("mixed gamma rates must be strictly increasing")
        for row in weights:
            if not row or any(c <= 0.0 or not math.isfinite(c) for c in row):
                raise ModelError("mixed gamma weights must be positive")

    @property
    def intensity(self) -> float:
        return float(sum(sum(row) for row in self.weights))

    @property
    def strip_halfwidth(self) -> float:
        return self.rates[0]

    def rational_terms(self):
        """(coef, rate, power, sign) with jump cf term coef*(rate/(rate - sign*i*w))**power."""
        sign = 1 if self.side == "positive" else -1
        return [
            (c, a, j + 1, sign)
            for a, row in zip(self.rates, self.weights)
            for j, c in enumerate(row)
        ]

    def exponent(self, w):
        return _rational_exponent(self.rational_terms(), w)


@dataclass(frozen=True)
class Kou:
    """Double-exponential jumps: rate ``lam``, up-probability ``p``."""

    lam: float
    p: float
    eta_plus: float
    eta_minus: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ModelError("Kou intensity lam must be > 0")
        if not 0.0 <= self.p <= 1.0:
            raise ModelError("Kou p must lie in [0, 1]")
        for name in ("eta_plus", "eta_minus"):
            if not getattr(self, name) > 0.0:
                raise ModelError(f"Kou {name} must be > 0")

    @property
    def intensity(self) -> float:
        return float(self.lam)

    @property
    def strip_halfwidth(self) -> float:
        return float(min(self.eta_plus, self.eta_minus))

    def rational_terms(self):
        terms = []
        if self.p > 0.0:
            terms.append((self.lam * self.p, self.eta_plus, 1, 1))
        if self.p < 1.0:
            terms.append((self.lam * (1.0 - self.p), self.eta_minus, 1, -1))
        return terms

    def exponent(self, w):
        return _rational_exponent(self.rational_terms(), w)


@dataclass(frozen=True)
class StableTails:
    """Power-law jumps ``c1 x^(-1-alpha)`` (x > 0) and ``c2 |x|^(-1-alpha)`` (x < 0).

    The exponent keeps the repeated ``(c1 + c2)`` factor of the closed form
    quoted for this family, i.e. the scale is ``(c1 + c2)**2`` rather than the
    usual ``Gamma(-alpha) cos(pi alpha / 2) (c1 + c2)``.  ``eta_shift`` enters
    with the quoted sign, so the drift of X is ``-eta_shift``.
    """

    c1: float
    c2: float
    alpha: float
    eta_shift: float = 0.0

    def __post_init__(self):
        if self.c1 < 0.0 or self.c2 < 0.0 or self.c1 + self.c2 <= 0.0:
            raise ModelError("stable tails need c1, c2 >= 0 with c1 + c2 > 0")
        if not (0.0 < self.alpha < 2.0) or self.alpha == 1.0:
            raise ModelError("stable alpha must lie in (0, 1) or (1, 2)")

    @property
    def intensity(self) -> float:
        return math.inf

    @property
    def strip_halfwidth(self) -> float:
        return 0.0

    @property
    def scale(self) -> float:
        """``c`` in ``psi = -c |w|^alpha (1 - i beta sgn(w) tan(pi alpha/2))``."""
        return (self.c1 + self.c2) ** 2

    @property
    def skew(self) -> float:
        return (self.c1 - self.c2) / (self.c1 + self.c2)

    def rational_terms(self):
        return None

    def exponent(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w.imag != 0.0):
            raise NonAnalytic("stable exponent is only defined on the real line")
        x = w.real
        s = self.c1 + self.c2
        tan = math.tan(math.pi * self.alpha / 2.0)
        printed = s * np.abs(x) ** self.alpha * (s - 1j * (self.c1 - self.c2) * np.sign(x) * tan)
        return -(printed + 1j * x * self.eta_shift)


@dataclass(frozen=True)
class SechExponential:
    """Compound Poisson jumps with ``nu(dx) = exp(alpha x) sech(x) dx``."""

    alpha: float

    def __post_init__(self):
        if not -1.0 < self.alpha < 1.0:
            raise ModelError("sech alpha must lie in (-1, 1)")

    @property
    def intensity(self) -> float:
        return math.pi / math.cos(math.pi * self.alpha / 2.0)

    @property
    def strip_halfwidth(self) -> float:
        return 1.0 - abs(self.alpha)

    def rational_terms(self):
        return None

    def exponent(self, w):
        w = np.asarray(w, dtype=complex)
        a = self.alpha
        return np.pi / np.cosh(np.pi * (w - 1j * a) / 2.0) - np.pi / np.cos(np.pi * a / 2.0)


JumpMeasure = Union[NoJumps, MixedGamma, Kou, StableTails, SechExponential]


def _rational_exponent(terms, w):
    w = np.asarray(w, dtype=complex)
    out = np.zeros_like(w)
    for c, a, j, s in terms:
        out += c * ((a / (a - s * 1j * w)) ** j - 1.0)
    return out


# --------------------------------------------------------------------------- #
# Model, killing time, exponent
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class LevyModel:
    """Levy triple: drift, Gaussian volatility, jump measure.

    The drift enters as ``i mu w`` without a truncation compensator, so for
    finite-activity jumps ``mu`` is the drift between jumps.
    """

    mu: float = 0.0
    sigma: float = 0.0
    jumps: JumpMeasure = field(default_factory=NoJumps)

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ModelError("mu must be finite")
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ModelError("sigma must be a finite nonnegative number")

    @property
    def is_degenerate(self) -> bool:
        return self.mu == 0.0 and self.sigma == 0.0 and isinstance(self.jumps, NoJumps)


@dataclass(frozen=True)
class Exponential:
    """Killing at an independent Exp(q) time."""

    q: float

    def __post_init__(self):
        if not (self.q > 0.0 and math.isfinite(self.q)):
            raise ModelError("exponential killing rate q must be > 0")


@dataclass(frozen=True)
class Geometric:
    """Killing at a geometric number of unit steps, P(tau = k) = (1 - q) q^k, k >= 0."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ModelError("geometric killing parameter q must lie in (0, 1)")


KillingTime = Union[Exponential, Geometric]


@dataclass(frozen=True)
class CharExponent:
    """Evaluable characteristic exponent of a model.

    Complex arguments are accepted strictly inside the horizontal strip
    ``|Im w| < strip_halfwidth``.
    """

    model: LevyModel
    strip_halfwidth: float

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        if self.strip_halfwidth < math.inf and np.any(w.imag != 0.0):
            if np.any(np.abs(w.imag) >= self.strip_halfwidth):
                raise NonAnalytic(
                    f"|Im w| must stay below the strip half-width {self.strip_halfwidth}"
                )
        m = self.model
        return 1j * m.mu * w - 0.5 * m.sigma**2 * w**2 + m.jumps.exponent(w)


def char_exponent(model: LevyModel) -> CharExponent:
    return CharExponent(model, float(model.jumps.strip_halfwidth))


def _check_denominator(den, scale):
    if np.any(np.abs(den) <= 64 * _EPS * scale):
        raise DenominatorVanishes("killed characteristic function has a real pole")


def rhs_g(model: LevyModel, kill: KillingTime, w):
    """Characteristic function of X at the killing time.

    Exponential(q): ``q / (q - psi)``.  Geometric(q): ``(1 - q) / (1 - q e^psi)``.
    Both equal 1 at ``w = 0``.
    """
    psi = char_exponent(model)(w)
    if isinstance(kill, Exponential):
        den = kill.q - psi
        _check_denominator(den, kill.q)
        return kill.q / den
    if isinstance(kill, Geometric):
        den = 1.0 - kill.q * np.exp(psi)
        _check_denominator(den, 1.0)
        return (1.0 - kill.q) / den
    raise ModelError(f"unknown killing time {kill!r}")


def phase_increments(samples, tol: float = 1e-300):
    """Principal-branch phase steps between consecutive samples."""
    z = np.asarray(samples, dtype=complex)
    if np.any(np.abs(z) <= tol):
        raise VanishingSample("sampled function vanishes on the grid")
    return np.angle(z[1:] / z[:-1])


def winding_number(g_samples, max_step: float = math.pi / 2) -> int:
    """Net number of counterclockwise turns of ``g`` as w runs from -Omega to +Omega."""
    d = phase_increments(g_samples)
    if d.size and np.max(np.abs(d)) > max_step:
        raise BranchJumpTooLarge(
            f"phase step {np.max(np.abs(d)):.3f} exceeds {max_step:.3f}; refine the grid"
        )
    return int(round(float(np.sum(d)) / (2.0 * math.pi)))
