"""Distribution functions of the extrema from sampled characteristic functions.

The cdf uses the Gil-Pelaez formula

    F(x) = 1/2 - (1/pi) int_0^inf Im(exp(-i w x) Phi(w)) / w dw,

integrated by Simpson's rule on ``[0, Omega]``.  Beyond ``Omega`` the factor
is replaced by the fit ``a0 + a1/w + a2/w^2`` and the remaining integrals are
exponential integrals, so no taper is needed.  ``a0`` is also the atom of the
law at zero (the limit of ``Phi`` at infinity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import isotonic_regression
from scipy.special import exp1

from .errors import GridTooCoarse
from .factorization import FactorPair, FrequencyGrid

SIDES = ("nonnegative", "nonpositive")
MAX_PHASE_STEP = 0.5


@dataclass(frozen=True)
class DistributionTable:
    """Tabulated law of ``M_q`` (nonnegative side) or ``I_q`` (nonpositive side).

    ``x`` is increasing and contains 0.  ``cdf`` is right-continuous at the
    tabulated points, so ``cdf[x == 0]`` is the atom for ``M_q`` and 1 for
    ``I_q``.  ``density`` is the absolutely continuous part.
    """

    side: str
    x: np.ndarray
    cdf: np.ndarray
    atom_at_zero: float
    density: np.ndarray | None = None
    projection_correction: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("abscissae must be strictly increasing")

    def cdf_at(self, t):
        """Piecewise-linear cdf, 0 left of the support and 1 right of it."""
        t = np.asarray(t, dtype=float)
        if self.side == "nonnegative":
            out = np.interp(t, self.x, self.cdf, left=0.0, right=1.0)
            return np.where(t < 0.0, 0.0, out)
        # interpolate towards the left limit 1 - atom so the atom is not smeared
        f = self.cdf.copy()
        f[-1] = 1.0 - self.atom_at_zero
        out = np.interp(t, self.x, f, left=0.0)
        return np.where(t >= 0.0, 1.0, out)

    def cdf_left(self, t):
        """Left limit ``P(Y < t)``; differs from :meth:`cdf_at` only at the atom."""
        t = np.asarray(t, dtype=float)
        out = self.cdf_at(t)
        zero = t == 0.0
        if self.side == "nonnegative":
            return np.where(zero, 0.0, out)
        return np.where(zero, 1.0 - self.atom_at_zero, out)

    def characteristic_function(self, w):
        """``E exp(i w Y)`` of the tabulated law (Stieltjes sum at interval midpoints)."""
        w = np.asarray(w, dtype=float)
        x, f = self.x, self.cdf.copy()
        out = self.atom_at_zero + 0j
        if self.side == "nonnegative":
            # mass beyond the last abscissa is placed there
            out = out + (1.0 - f[-1]) * np.exp(1j * w * x[-1])
        else:
            # mass below the first abscissa is placed there; f(0-) = 1 - atom
            out = out + f[0] * np.exp(1j * w * x[0])
            f[-1] = 1.0 - self.atom_at_zero
        mid = 0.5 * (x[1:] + x[:-1])
        return out + np.exp(1j * np.multiply.outer(w, mid)) @ np.diff(f)


def _tail_fit(w, phi):
    """Least-squares ``phi ~ a0 + a1/w + a2/w^2`` on the given nodes."""
    A = np.stack([np.ones_like(w), 1.0 / w, 1.0 / w**2], axis=1).astype(complex)
    coef, *_ = np.linalg.lstsq(A, phi, rcond=None)
    return coef


def _expn_upto(n_max: int, z):
    """``[E_1(z), ..., E_n_max(z)]`` by the upward recurrence (fine for |z| of order >= 1)."""
    out = [exp1(z)]
    ez = np.exp(-z)
    for k in range(1, n_max):
        out.append((ez - z * out[-1]) / k)
    return out


def _gil_pelaez(phi_half, w_half, coef, x):
    """``P(Y <= x)`` for ``x > 0`` and the continuous density, from ``Phi`` on ``[0, Omega]``."""
    om = w_half[-1]
    a0, a1, a2 = coef
    kern = np.exp(-1j * np.outer(x, w_half))
    body = kern * phi_half
    # Im(.)/w is smooth at w = 0; extrapolate its value there
    integrand = np.empty(body.shape)
    integrand[:, 1:] = body[:, 1:].imag / w_half[1:]
    integrand[:, 0] = 3 * integrand[:, 1] - 3 * integrand[:, 2] + integrand[:, 3]
    main = simpson(integrand, x=w_half, axis=1)
    e1, e2, e3 = _expn_upto(3, 1j * om * x)
    tail = (a0 * e1 + a1 * e2 / om + a2 * e3 / om**2).imag
    cdf = 0.5 - (main + tail) / math.pi

    dens_body = (kern * (phi_half - a0)).real
    dmain = simpson(dens_body, x=w_half, axis=1)
    dtail = (a1 * e1 + a2 * e2 / om).real
    density = (dmain + dtail) / math.pi
    return cdf, density


def _positive_law(phi_half, w_half, y, tail_fraction):
    """cdf and density of a law on [0, inf) at ``y > 0``, plus its atom at 0."""
    om = w_half[-1]
    sel = w_half >= (1.0 - tail_fraction) * om
    coef = _tail_fit(w_half[sel], phi_half[sel])
    atom = float(np.clip(coef[0].real, 0.0, 1.0))
    cdf = np.empty(y.size)
    dens = np.empty(y.size)
    for start in range(0, y.size, 256):
        sl = slice(start, start + 256)
        cdf[sl], dens[sl] = _gil_pelaez(phi_half, w_half, coef, y[sl])
    return cdf, dens, atom


def invert_to_distribution(phi, grid: FrequencyGrid, side: str = "nonnegative", x_grid=None,
                           tail_fraction: float = 0.2) -> DistributionTable:
    """Invert one Wiener-Hopf factor into a :class:`DistributionTable`.

    Parameters
    ----------
    phi : array_like
        ``Phi_+`` (for ``side='nonnegative'``) or ``Phi_-`` (``'nonpositive'``)
        sampled on ``grid``.
    x_grid : array_like, optional
        Abscissae on the support side (0 is added if absent).  Defaults to
        401 points on ``[0, 10]`` (or ``[-10, 0]``).
    tail_fraction : float
        Outer fraction of ``[0, Omega]`` used for the tail fit.

    Raises
    ------
    GridTooCoarse
        If ``max|x| * h`` exceeds 0.5, i.e. the kernel phase is under-resolved.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (grid.n_points + 1,):
        raise ValueError("phi must have one value per grid node")
    sign = 1.0 if side == "nonnegative" else -1.0
    if x_grid is None:
        x_grid = sign * np.linspace(0.0, 10.0, 401)
    x = np.unique(np.append(np.asarray(x_grid, dtype=float), 0.0))
    if np.any(sign * x < 0.0):
        raise ValueError(f"abscissae must lie on the {side} half-line")
    if np.max(np.abs(x)) * grid.spacing > MAX_PHASE_STEP:
        raise GridTooCoarse(
            f"max|x| * h = {np.max(np.abs(x)) * grid.spacing:.3f} > {MAX_PHASE_STEP}; "
            "refine the frequency grid or shorten the x range"
        )
    c = grid.center
    w_half = grid.nodes[c:]
    # the law of sign * Y lives on [0, inf); its cf on w >= 0 is Phi(sign * w)
    phi_half = phi[c:] if sign > 0 else phi[c::-1]
    y = sign * x
    pos = y > 0
    g_cdf, g_dens, atom = _positive_law(phi_half, w_half, y[pos], tail_fraction)

    raw = np.empty(x.size)
    dens = np.zeros(x.size)
    if sign > 0:
        raw[pos] = g_cdf
        raw[~pos] = atom
        dens[pos] = g_dens
    else:
        # P(I <= x) = 1 - P(-I < -x) = 1 - G(-x) away from the atom
        raw[pos] = 1.0 - g_cdf
        raw[~pos] = 1.0
        dens[pos] = g_dens
    iso = isotonic_regression(raw).x
    cdf = np.clip(iso, 0.0, 1.0)
    correction = float(np.max(np.abs(cdf - raw)))
    return DistributionTable(side, x, cdf, atom, density=dens, projection_correction=correction,
                             info={"tail_fraction": tail_fraction})


def invert_pair(pair: FactorPair, x_max: float = 10.0, n_x: int = 401):
    """Distribution tables of ``M_q`` and ``I_q`` from a factor pair."""
    xs = np.linspace(0.0, x_max, n_x)
    sup = invert_to_distribution(pair.phi_plus, pair.grid, "nonnegative", xs)
    inf = invert_to_distribution(pair.phi_minus, pair.grid, "nonpositive", -xs[::-1])
    return sup, inf


def _mollifier(w, beta, side):
    s = 1.0 if side == "nonnegative" else -1.0
    return (beta / (beta - s * 1j * w)) ** 4


def sidedness_leakage(phi, grid: FrequencyGrid, side: str = "nonnegative",
                      x_extent: float = 20.0, taper: float = 0.2) -> float:
    """Absolute mass of the inverse transform of ``phi`` on the wrong half-line.

    ``phi`` is first multiplied by the cf of a Gamma(4, Omega/20) law carried
    by the correct half-line (this turns atoms into smooth densities without
    moving mass across 0) and tapered by a raised cosine over the outer
    ``taper`` fraction of the grid.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    w = grid.nodes
    om = grid.halfwidth
    a = np.abs(w) / om
    t = np.ones_like(w)
    s = a > 1.0 - taper
    t[s] = 0.5 * (1.0 + np.cos(np.pi * (a[s] - (1.0 - taper)) / taper))
    vals = grid.weights() * t * np.asarray(phi, dtype=complex) * _mollifier(w, om / 20.0, side)
    dx = math.pi / (2.0 * om)
    k = np.arange(1, int(x_extent / dx) + 1) * dx
    xs = -k if side == "nonnegative" else k
    total = 0.0
    for start in range(0, xs.size, 512):
        blk = xs[start:start + 512]
        p = (np.exp(-1j * np.outer(blk, w)) @ vals).real / (2.0 * math.pi)
        total += float(np.sum(np.abs(p))) * dx
    return total


def round_trip_error(table: DistributionTable, phi, grid: FrequencyGrid, fraction: float = 0.25,
                     n_fine: int = 20001) -> float:
    """Sup over ``|w| <= fraction * Omega`` of the cf of ``table`` minus ``phi``.

    The table is re-evaluated on a fine abscissa grid through linear
    interpolation before summing.
    """
    sel = np.abs(grid.nodes) <= fraction * grid.halfwidth
    w = grid.nodes[sel]
    lo, hi = table.x[0], table.x[-1]
    xf = np.linspace(lo, hi, n_fine)
    fine = DistributionTable(table.side, xf, table.cdf_at(xf), table.atom_at_zero)
    cf = np.concatenate([fine.characteristic_function(blk) for blk in np.array_split(w, max(1, w.size // 256))])
    return float(np.max(np.abs(cf - np.asarray(phi)[sel])))
