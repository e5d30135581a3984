"""Numerical Wiener-Hopf factorization through Cauchy/Hilbert integrals.

Conventions
-----------
* Cauchy integral: ``phi_s(lam) = 1/(2 pi i) int s(x) / (x - lam) dx``.
* Hilbert transform: ``H_s(w) = 1/pi PV int s(x) / (x - w) dx``, so that the
  boundary values of the Cauchy integral are ``+-s/2 + H_s/(2i)``.
* Factors: ``Phi_+ = sqrt(g) exp(i/2 (H(0) - H(w)))`` is analytic in the
  upper half-plane and is the characteristic function of the supremum;
  ``Phi_-`` is its mirror image for the infimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import hyp2f1, spence

from .errors import (
    BranchJumpTooLarge,
    BranchUnwrapFailure,
    NonzeroIndex,
    TailDivergence,
)
from .levy_core import phase_increments, winding_number

MAX_POINTS = 2**20


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric uniform grid ``w_j = -Omega + j h``, ``j = 0..n_points``.

    ``n_points`` counts intervals, so there are ``n_points + 1`` nodes and
    ``w = 0`` is the middle node.
    """

    halfwidth: float = 200.0
    n_points: int = 2**14

    def __post_init__(self):
        n = int(self.n_points)
        if n < 256 or n & (n - 1):
            raise ValueError("n_points must be a power of two >= 256")
        if self.halfwidth < 10.0:
            raise ValueError("grid half-width must be >= 10")
        if 2.0 * self.halfwidth / n > 0.1 + 1e-12:
            raise ValueError("grid spacing must be <= 0.1; raise n_points")
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "halfwidth", float(self.halfwidth))

    @property
    def spacing(self) -> float:
        return 2.0 * self.halfwidth / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.halfwidth, self.halfwidth, self.n_points + 1)

    @property
    def center(self) -> int:
        return self.n_points // 2

    def weights(self) -> np.ndarray:
        w = np.full(self.n_points + 1, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def interior(self, fraction: float = 2.0 / 3.0) -> np.ndarray:
        return np.abs(self.nodes) <= fraction * self.halfwidth + 1e-12

    @classmethod
    def _unchecked(cls, halfwidth: float, n_points: int) -> "FrequencyGrid":
        obj = object.__new__(cls)
        object.__setattr__(obj, "halfwidth", float(halfwidth))
        object.__setattr__(obj, "n_points", int(n_points))
        return obj

    def refined(self) -> "FrequencyGrid":
        if 2 * self.n_points > MAX_POINTS:
            raise ValueError("grid refinement cap reached")
        return FrequencyGrid(self.halfwidth, 2 * self.n_points)


@dataclass(frozen=True)
class FactorPair:
    """Sampled boundary values of the two Wiener-Hopf factors."""

    grid: FrequencyGrid
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    method: str
    g: np.ndarray | None = None
    error_estimate: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    def residual(self, g=None) -> np.ndarray:
        g = self.g if g is None else g
        return np.abs(self.phi_plus * self.phi_minus - g)

    def max_residual(self, fraction: float = 2.0 / 3.0) -> float:
        return float(np.max(self.residual()[self.grid.interior(fraction)]))

    def hermitian_defect(self) -> float:
        p, m = self.phi_plus, self.phi_minus
        return float(max(np.max(np.abs(p - p[::-1].conj())), np.max(np.abs(m - m[::-1].conj()))))

    def max_modulus(self) -> float:
        return float(max(np.max(np.abs(self.phi_plus)), np.max(np.abs(self.phi_minus))))


# --------------------------------------------------------------------------- #
# Singular integrals on the grid
# --------------------------------------------------------------------------- #

def _odd_kernel_sum(a: np.ndarray, h: float) -> np.ndarray:
    """``sum_{k != j} a_k / (x_k - x_j)`` for every node j, by FFT convolution."""
    n = a.size - 1
    m = np.arange(-n, n + 1)
    kernel = np.zeros(2 * n + 1)
    kernel[m != 0] = 1.0 / (m[m != 0] * h)
    if np.iscomplexobj(a):
        out = fftconvolve(a.real, kernel) + 1j * fftconvolve(a.imag, kernel)
    else:
        out = fftconvolve(a, kernel)
    return -out[n:2 * n + 1]


def _extrapolate_ends(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    v[0] = 3.0 * v[1] - 3.0 * v[2] + v[3]
    v[-1] = 3.0 * v[-2] - 3.0 * v[-3] + v[-4]
    return v


def _pv_grid(f: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """``PV int_{-Omega}^{Omega} f(x) / (x - w_j) dx`` at every interior node.

    Singularity subtraction: the smooth quotient ``(f - f_j)/(x - w_j)`` is
    integrated by the trapezoid rule (its value at the node is ``f'(w_j)``)
    and ``f_j PV int dx/(x - w_j)`` is added in closed form.  End nodes are
    extrapolated.
    """
    h = grid.spacing
    x = grid.nodes
    w = grid.weights()
    om = grid.halfwidth
    s = _odd_kernel_sum(w * f, h)
    t = _odd_kernel_sum(w, h)
    fp = np.gradient(f, h, edge_order=2)
    out = np.empty_like(s)
    inner = slice(1, -1)
    log_term = np.log((om - x[inner]) / (om + x[inner]))
    out[inner] = s[inner] - f[inner] * t[inner] + w[inner] * fp[inner] + f[inner] * log_term
    return _extrapolate_ends(out)


def _power_tail(r, p):
    """``int_1^inf t^(-p) / (t - r) dt`` for the unit-normalised tail model."""
    return hyp2f1(1.0, p, p + 1.0, r) / p


def hilbert_transform(samples, grid: FrequencyGrid, tail_exponent: float | None = None) -> np.ndarray:
    """Hilbert transform ``1/pi PV int s(x)/(x - w) dx`` on the grid nodes.

    Beyond the grid ``s`` is taken to be zero, or, if ``tail_exponent`` p is
    given, ``s(+-Omega) (Omega/|x|)^p`` on each side (integrated exactly).
    """
    s = np.asarray(samples)
    out = _pv_grid(s, grid)
    if tail_exponent is not None:
        p = float(tail_exponent)
        if p <= 0.0:
            raise TailDivergence("tail exponent must be positive")
        r = grid.nodes[1:-1] / grid.halfwidth
        tail = s[-1] * _power_tail(r, p) - s[0] * _power_tail(-r, p)
        out = out.copy()
        out[1:-1] = out[1:-1] + tail
        out = _extrapolate_ends(out)
    return out / math.pi


def plemelj_integral(samples, grid: FrequencyGrid, lam, tail_exponent: float | None = None):
    """Cauchy integral ``1/(2 pi i) int s(x)/(x - lam) dx`` for lam off the real line.

    The near-singular part of the kernel is removed around the node closest
    to ``Re lam`` (value and slope of s subtracted, integrated analytically),
    which keeps the quadrature accurate as ``Im lam -> 0``.
    """
    s = np.asarray(samples, dtype=complex)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    if np.any(lam_arr.imag == 0.0):
        raise ValueError("lam must be off the real line")
    if tail_exponent is not None and tail_exponent <= 0.0:
        raise TailDivergence("tail exponent must be positive")
    x = grid.nodes
    h = grid.spacing
    om = grid.halfwidth
    w = grid.weights()
    ds = np.gradient(s, h, edge_order=2)
    out = np.empty(lam_arr.shape, dtype=complex)
    for idx, lm in enumerate(lam_arr):
        j0 = int(np.clip(round((lm.real + om) / h), 0, grid.n_points))
        x0, s0, d0 = x[j0], s[j0], ds[j0]
        rem = np.sum(w * (s - s0 - d0 * (x - x0)) / (x - lm))
        i0 = np.log(om - lm) - np.log(-om - lm)
        i1 = 2.0 * om + (lm - x0) * i0
        total = rem + s0 * i0 + d0 * i1
        if tail_exponent is not None:
            p = float(tail_exponent)
            total += s[-1] * _power_tail(lm / om, p) - s[0] * _power_tail(-lm / om, p)
        out[idx] = total / (2j * math.pi)
    return out[0] if np.ndim(lam) == 0 else out.reshape(np.shape(lam))


def resolvent_check(samples, grid: FrequencyGrid, lam, mu, tail_exponent: float | None = None) -> float:
    """``|phi_f(lam) - phi_f(mu) - (lam - mu) phi_{f/(x - lam)}(mu)|``."""
    lam = complex(lam)
    mu = complex(mu)
    if lam == mu:
        return 0.0
    f = np.asarray(samples, dtype=complex)
    if not np.any(f):
        return 0.0
    lhs = plemelj_integral(f, grid, lam, tail_exponent) - plemelj_integral(f, grid, mu, tail_exponent)
    shifted_tail = None if tail_exponent is None else tail_exponent + 1.0
    rhs = (lam - mu) * plemelj_integral(f / (grid.nodes - lam), grid, mu, shifted_tail)
    return float(abs(lhs - rhs))


# --------------------------------------------------------------------------- #
# Factorization by the Hilbert transform of ln g
# --------------------------------------------------------------------------- #

def continuous_log(g_samples, grid: FrequencyGrid, max_step: float = math.pi / 2) -> np.ndarray:
    """Branch of ``ln g`` continuous along the grid with ``ln g(0) = 0``."""
    g = np.asarray(g_samples, dtype=complex)
    try:
        d = phase_increments(g)
    except Exception as exc:
        raise BranchUnwrapFailure(str(exc)) from exc
    if np.max(np.abs(d)) > max_step:
        raise BranchUnwrapFailure(
            f"phase step {np.max(np.abs(d)):.3f} exceeds {max_step:.3f}"
        )
    phase = np.concatenate([[0.0], np.cumsum(d)])
    phase -= phase[grid.center]
    return np.log(np.abs(g)) + 1j * phase


def _fit_log_tail(values, y):
    """Least-squares ``c0 + c1 ln y + c2 / y`` through the outer samples."""
    design = np.column_stack([np.ones_like(y), np.log(y), 1.0 / y]).astype(complex)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return coef


def _log_tail_integral(coef, w, om):
    """``int_Omega^inf (c0 + c1 ln x + c2/x) (1/(x - w) - 1/x) dx`` for |w| < Omega."""
    c0, c1, c2 = coef
    r = np.asarray(w, dtype=float) / om
    l1 = np.log1p(-r)
    small = np.abs(r) < 1e-4
    safe = np.where(small, 1.0, r)
    t2 = np.where(small, r / 2.0 + r**2 / 3.0 + r**3 / 4.0, -l1 / safe - 1.0) / om
    return -c0 * l1 + c1 * (-math.log(om) * l1 + spence(1.0 - r)) + c2 * t2


def hilbert_log_difference(log_g, grid: FrequencyGrid, tail_fraction: float = 0.1) -> np.ndarray:
    """``H_{ln g}(w) - H_{ln g}(0)`` as one absolutely convergent integral.

    ``(1/pi) int ln g(x) [1/(x - w) - 1/x] dx = (w/pi) PV int (ln g(x)/x)/(x - w) dx``.
    ln g/x is regular at 0 because ln g(0) = 0.  Beyond the grid ln g is
    extrapolated by the fitted model ``c0 + c1 ln|x| + c2/|x|`` per side.
    """
    L = np.asarray(log_g, dtype=complex)
    x = grid.nodes
    c = grid.center
    h = grid.spacing
    om = grid.halfwidth
    f = np.empty_like(L)
    nz = np.arange(x.size) != c
    f[nz] = L[nz] / x[nz]
    f[c] = (L[c + 1] - L[c - 1]) / (2.0 * h)
    d = x * _pv_grid(f, grid)

    right = x >= (1.0 - tail_fraction) * om
    left = x <= -(1.0 - tail_fraction) * om
    c_right = _fit_log_tail(L[right], x[right])
    c_left = _fit_log_tail(L[left], -x[left])
    inner = slice(1, -1)
    d[inner] += _log_tail_integral(c_right, x[inner], om) - _log_tail_integral(c_left, -x[inner], om)
    d = _extrapolate_ends(d)
    d[c] = 0.0
    return d / math.pi


def _hilbert_factors(L, grid):
    diff = hilbert_log_difference(L, grid)
    return np.exp(0.5 * L - 0.5j * diff), np.exp(0.5 * L + 0.5j * diff)


def factorize_hilbert(g_samples, grid: FrequencyGrid) -> FactorPair:
    """Factor sampled ``g`` with ``g(0) = 1`` into ``Phi_+ Phi_-``.

    The returned ``error_estimate`` is the interior sup-difference against
    the same computation on the grid with every other node dropped.
    """
    g = np.asarray(g_samples, dtype=complex)
    if g.shape != (grid.n_points + 1,):
        raise ValueError("g_samples must have one value per grid node")
    if abs(g[grid.center] - 1.0) > 1e-10:
        raise ValueError("g(0) must equal 1")
    try:
        index = winding_number(g)
    except BranchJumpTooLarge as exc:
        raise BranchUnwrapFailure(str(exc)) from exc
    if index != 0:
        raise NonzeroIndex(f"g has winding number {index}")
    L = continuous_log(g, grid)
    phi_plus, phi_minus = _hilbert_factors(L, grid)

    coarse = FrequencyGrid._unchecked(grid.halfwidth, grid.n_points // 2)
    cp, _ = _hilbert_factors(L[::2], coarse)
    mask = coarse.interior()
    err = float(np.max(np.abs(cp - phi_plus[::2])[mask]))
    return FactorPair(grid, phi_plus, phi_minus, "hilbert", g=g, error_estimate=err,
                      info={"winding_number": index})
