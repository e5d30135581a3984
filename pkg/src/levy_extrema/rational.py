"""Factorization by inspection for rational symbols, and rational approximation.

A rational ``g`` is split by sending every zero and pole in the lower
half-plane to ``Phi_+`` (so ``Phi_+`` is analytic and zero-free in the upper
half-plane) and the rest to ``Phi_-``.  Non-rational symbols are first
replaced by a Pade approximant about the origin.  The sech compound Poisson
model has an explicit infinite-product factorization, also provided here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import zeta

from .errors import (
    ApproximationTooCoarse,
    ContourThroughRoot,
    IndexMismatch,
    ModelError,
    NonAnalytic,
    RealAxisSingularity,
    SpuriousRealPole,
)
from .factorization import FactorPair, FrequencyGrid
from .levy_core import Exponential, LevyModel, char_exponent, rhs_g

CLEARANCE = 1e-9


# --------------------------------------------------------------------------- #
# Rational functions in factored form
# --------------------------------------------------------------------------- #

def _cancel(zeros, poles, tol):
    """Drop zero/pole pairs closer than ``tol`` (multiplicity-aware)."""
    zeros = [[complex(z), int(m)] for z, m in zeros if m > 0]
    poles = [[complex(p), int(m)] for p, m in poles if m > 0]
    for zp in zeros:
        for pp in poles:
            if zp[1] and pp[1] and abs(zp[0] - pp[0]) <= tol * max(1.0, abs(zp[0])):
                k = min(zp[1], pp[1])
                zp[1] -= k
                pp[1] -= k
    return (tuple((z, m) for z, m in zeros if m), tuple((p, m) for p, m in poles if m))


def _group_roots(roots, tol=1e-7):
    """Merge numerically coincident roots into (location, multiplicity)."""
    out: list[list] = []
    for r in sorted(np.asarray(roots, dtype=complex), key=lambda z: (z.imag, z.real)):
        for item in out:
            if abs(item[0] - r) <= tol * max(1.0, abs(r)):
                k = item[1]
                item[0] = (item[0] * k + r) / (k + 1)
                item[1] = k + 1
                break
        else:
            out.append([complex(r), 1])
    return [(z, m) for z, m in out]


@dataclass(frozen=True)
class RationalFunction:
    """``scale * prod (w - z)^m / prod (w - p)^m``."""

    scale: complex
    zeros: tuple = ()
    poles: tuple = ()

    def __post_init__(self):
        zeros, poles = _cancel(self.zeros, self.poles, 1e-12)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "scale", complex(self.scale))

    @classmethod
    def from_polynomials(cls, num, den, root_tol: float = 1e-7) -> "RationalFunction":
        """From ascending coefficient arrays of numerator and denominator."""
        num = np.trim_zeros(np.asarray(num, dtype=complex), "b")
        den = np.trim_zeros(np.asarray(den, dtype=complex), "b")
        if den.size == 0:
            raise ValueError("denominator is identically zero")
        if num.size == 0:
            return cls(0.0)
        num, den = Polynomial(num), Polynomial(den)
        scale = num.coef[-1] / den.coef[-1]
        zeros = _group_roots(num.roots(), root_tol) if num.degree() > 0 else []
        poles = _group_roots(den.roots(), root_tol) if den.degree() > 0 else []
        return cls(scale, tuple(zeros), tuple(poles))

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        out = np.full(w.shape, self.scale, dtype=complex)
        for z, m in self.zeros:
            out *= (w - z) ** m
        for p, m in self.poles:
            out /= (w - p) ** m
        return out

    def value_at_zero(self) -> complex:
        v = self.scale
        for z, m in self.zeros:
            v *= (-z) ** m
        for p, m in self.poles:
            v /= (-p) ** m
        return v

    def normalized(self) -> "RationalFunction":
        """Same zeros and poles, rescaled to equal 1 at the origin."""
        return RationalFunction(self.scale / self.value_at_zero(), self.zeros, self.poles)

    def multiplicities(self, which: str) -> tuple[int, int]:
        """(zero count, pole count) strictly inside the upper or lower half-plane."""
        sel = (lambda z: z.imag > 0) if which == "upper" else (lambda z: z.imag < 0)
        return (sum(m for z, m in self.zeros if sel(z)), sum(m for p, m in self.poles if sel(p)))


@dataclass(frozen=True)
class HalfPlaneSplit:
    """``g = g_plus * g_minus``; ``g_plus`` is analytic and zero-free in the upper half-plane."""

    g_plus: RationalFunction
    g_minus: RationalFunction


def carlemann_split(g: RationalFunction, clearance: float = CLEARANCE) -> HalfPlaneSplit:
    """Split a rational symbol with ``g(0) = 1`` by the half-plane of its zeros and poles."""
    for loc, _ in g.zeros + g.poles:
        if abs(loc.imag) <= clearance:
            raise RealAxisSingularity(f"zero/pole {loc} lies within {clearance} of the real line")
    if abs(g.value_at_zero() - 1.0) > 1e-8:
        raise ValueError("carlemann_split needs g(0) = 1")
    zu, pu = g.multiplicities("upper")
    zl, pl = g.multiplicities("lower")
    # arg g changes by pi * total along the real line; |total| = 1 only comes
    # from a degree mismatch (g -> 0 like 1/w), a true index needs |total| >= 2
    total = zu - zl - pu + pl
    if abs(total) > 1:
        raise IndexMismatch(
            f"zeros/poles upper=({zu},{pu}) lower=({zl},{pl}) give index {total / 2:g}"
        )
    lower = lambda items: tuple((z, m) for z, m in items if z.imag < 0)
    upper = lambda items: tuple((z, m) for z, m in items if z.imag > 0)
    g_plus = RationalFunction(1.0, lower(g.zeros), lower(g.poles)).normalized()
    g_minus = RationalFunction(1.0, upper(g.zeros), upper(g.poles)).normalized()
    return HalfPlaneSplit(g_plus, g_minus)


def rational_symbol(model: LevyModel, kill) -> RationalFunction | None:
    """``q / (q - psi)`` as a rational function, or None if it is not rational."""
    terms = model.jumps.rational_terms()
    if terms is None or not isinstance(kill, Exponential):
        return None
    q = kill.q
    # common denominator: highest power of each distinct (rate, side) factor
    powers: dict[tuple[float, int], int] = {}
    for _, a, j, s in terms:
        powers[(a, s)] = max(powers.get((a, s), 0), j)
    lin = {key: Polynomial([key[0], -1j * key[1]]) for key in powers}
    den = Polynomial([1.0 + 0j])
    for key, j in powers.items():
        den = den * lin[key] ** j
    gauss = Polynomial([0.0, 1j * model.mu, -0.5 * model.sigma**2])
    psi_den = gauss * den
    for c, a, j, s in terms:
        rest = Polynomial([1.0 + 0j])
        for key, jj in powers.items():
            rest = rest * lin[key] ** (jj - (j if key == (a, s) else 0))
        psi_den = psi_den + c * (a**j * rest - den)
    return RationalFunction.from_polynomials((q * den).coef, (q * den - psi_den).coef)


def split_to_pair(split: HalfPlaneSplit, grid: FrequencyGrid, method: str, g=None,
                  error_estimate: float = 0.0, info=None) -> FactorPair:
    x = grid.nodes
    return FactorPair(grid, split.g_plus(x), split.g_minus(x), method, g=g,
                      error_estimate=error_estimate, info=info or {})


def carlemann_factorize(model: LevyModel, kill, grid: FrequencyGrid) -> FactorPair:
    sym = rational_symbol(model, kill)
    if sym is None:
        raise ModelError("symbol is not rational for this model/killing time")
    split = carlemann_split(sym.normalized())
    g = rhs_g(model, kill, grid.nodes)
    return split_to_pair(split, grid, "carlemann", g=g,
                         info={"zeros": len(sym.zeros), "poles": len(sym.poles)})


# --------------------------------------------------------------------------- #
# Roots by the argument principle
# --------------------------------------------------------------------------- #

def _boundary(box, n):
    x0, x1, y0, y1 = box
    t = np.linspace(0.0, 1.0, n, endpoint=False)
    return np.concatenate([
        x0 + (x1 - x0) * t + 1j * y0,
        x1 + 1j * (y0 + (y1 - y0) * t),
        x1 - (x1 - x0) * t + 1j * y1,
        x0 + 1j * (y1 - (y1 - y0) * t),
    ])


def _evaluate(f, z):
    try:
        return np.asarray(f(z), dtype=complex)
    except NonAnalytic:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise NonAnalytic(str(exc)) from exc


def argument_count(f, box, n0: int = 64, max_n: int = 2**15) -> int:
    """Zeros minus poles of ``f`` inside ``box = (x0, x1, y0, y1)``."""
    n = n0
    while True:
        z = _boundary(box, n)
        v = _evaluate(f, z)
        if np.any(~np.isfinite(v)) or np.min(np.abs(v)) <= 1e-12 * float(np.max(np.abs(v))):
            raise ContourThroughRoot(f"f vanishes on the boundary of {box}")
        d = np.angle(np.roll(v, -1) / v)
        if np.max(np.abs(d)) <= math.pi / 4:
            return int(round(float(np.sum(d)) / (2.0 * math.pi)))
        if n >= max_n:
            raise ContourThroughRoot(f"boundary phase unresolved on {box}")
        n *= 2


def _polish(f, z, m, tol):
    for _ in range(60):
        hstep = 1e-6 * max(1.0, abs(z))
        fz = complex(_evaluate(f, z))
        dz = (complex(_evaluate(f, z + hstep)) - complex(_evaluate(f, z - hstep))) / (2.0 * hstep)
        if dz == 0.0 or not cmath.isfinite(dz):
            break
        step = m * fz / dz
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            break
    return z


def _inside(z, box, margin=0.0):
    x0, x1, y0, y1 = box
    return x0 - margin <= z.real <= x1 + margin and y0 - margin <= z.imag <= y1 + margin


def _search(f, box, count, min_size, tol, depth=0):
    if count == 0:
        return []
    x0, x1, y0, y1 = box
    size = max(x1 - x0, y1 - y0)
    centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    if count == 1 or size <= min_size:
        z = _polish(f, centre, count, tol)
        if _inside(z, box, 1e-9 * max(1.0, size)) or size <= min_size:
            return [(z, count)]
    else:
        # a cluster may be one multiple root: try it before subdividing
        z = _polish(f, centre, count, tol)
        r = 1e-3 * size
        if _inside(z, box):
            try:
                if argument_count(f, (z.real - r, z.real + r, z.imag - r, z.imag + r)) == count:
                    return [(z, count)]
            except ContourThroughRoot:
                pass
    if depth > 60:
        raise ContourThroughRoot("subdivision did not isolate the roots")
    for shift in (0.0137, -0.0291, 0.0453, -0.0619):
        xm = 0.5 * (x0 + x1) + shift * (x1 - x0)
        ym = 0.5 * (y0 + y1) + shift * (y1 - y0)
        quads = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        try:
            counts = [argument_count(f, qb) for qb in quads]
        except ContourThroughRoot:
            continue
        if sum(counts) != count:
            continue
        out = []
        for qb, c in zip(quads, counts):
            out.extend(_search(f, qb, c, min_size, tol, depth + 1))
        return out
    raise ContourThroughRoot(f"could not subdivide {box} without crossing a root")


def find_halfplane_roots(f, which: str, search_box, tol: float = 1e-12, min_size: float = 1e-7):
    """All roots of analytic ``f`` in ``search_box`` intersected with a half-plane.

    Returns ``[(root, multiplicity), ...]`` sorted by distance to the real
    line; the multiplicities sum to the argument-principle count of the box.
    """
    x0, x1, y0, y1 = map(float, search_box)
    if which == "lower":
        y1 = min(y1, 0.0)
    elif which == "upper":
        y0 = max(y0, 0.0)
    else:
        raise ValueError("which must be 'upper' or 'lower'")
    if not (x1 > x0 and y1 > y0):
        raise ValueError("search box does not meet the requested half-plane")
    box = (x0, x1, y0, y1)
    total = argument_count(f, box)
    if total < 0:
        raise ValueError("f has more poles than zeros in the box; not analytic there")
    roots = _search(f, box, total, min_size, tol)
    if sum(m for _, m in roots) != total:
        raise ContourThroughRoot("root multiplicities do not match the contour count")
    return sorted(roots, key=lambda r: (abs(r[0].imag), r[0].real))


def strip_roots(model: LevyModel, q: float, which: str = "lower", start_width: float = 4.0,
                max_width: float = 1024.0):
    """Roots of ``q - psi`` in the half-strip of analyticity on one side of the real line.

    The box width doubles until the root count is the same for two
    consecutive expansions.
    """
    psi = char_exponent(model)
    height = psi.strip_halfwidth
    f = lambda z: q - psi(z)
    eps = 1e-9
    history = []
    width = start_width
    while True:
        depth = (0.99 * height if math.isfinite(height) else width)
        box = (-width, width, -depth, -eps) if which == "lower" else (-width, width, eps, depth)
        history.append(argument_count(f, box))
        if len(history) >= 3 and history[-1] == history[-2] == history[-3]:
            return find_halfplane_roots(f, which, box)
        if width >= max_width:
            raise ContourThroughRoot("root count did not stabilise")
        width *= 2.0


# --------------------------------------------------------------------------- #
# Pade approximation
# --------------------------------------------------------------------------- #

def taylor_coefficients(func, count: int, radius: float, n_nodes: int = 512) -> np.ndarray:
    """Taylor coefficients at 0 by the trapezoid rule on the circle ``|w| = radius``."""
    return _circle_fft(func, radius, n_nodes)[0][:count] / radius ** np.arange(count)


def _circle_fft(func, radius, n_nodes):
    t = np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    c = np.fft.fft(_evaluate(func, radius * t)) / n_nodes
    # c[-k] carries the w^-k Laurent coefficient; it vanishes iff no pole is enclosed
    laurent = float(np.max(np.abs(c[n_nodes // 2:])))
    return c, laurent / max(float(np.max(np.abs(c[: n_nodes // 2]))), 1e-300)


def analytic_taylor(func, count: int, radius: float, rtol: float = 1e-8, min_radius: float = 1e-3):
    """Taylor coefficients with an automatic radius inside the disc of analyticity.

    A pole inside the circle shows up as negative-power (Laurent) content,
    so the radius is halved until that content is negligible and two radii
    agree on the leading ``count`` coefficients.
    """
    r = radius
    prev = None
    while r >= min_radius:
        c, laurent = _circle_fft(func, r, 512)
        cur = c[:count] / r ** np.arange(count)
        if laurent > 1e-10:
            prev = None
        elif prev is not None:
            scale = np.abs(cur) * r ** np.arange(count)
            if np.all(np.abs(cur - prev) * r ** np.arange(count) <= rtol * max(1.0, scale.max())):
                return prev
            prev = cur
        else:
            prev = cur
        r *= 0.5
    raise NonAnalytic("no disc of analyticity found around the origin")


def pade_coefficients(c, m: int, n: int, tol: float = 1e-13):
    """``[m/n]`` Pade approximant from Taylor coefficients ``c[0..m+n]``.

    Solves the Toeplitz system for the denominator through an SVD, lowering
    the degrees while the system is rank deficient (this removes most
    spurious zero/pole pairs).  Returns ascending (numerator, denominator)
    coefficients with ``den[0] = 1``.
    """
    c = np.asarray(c, dtype=complex)
    if c.size < m + n + 1:
        raise ValueError("need m + n + 1 Taylor coefficients")
    c = c[: m + n + 1]
    ts = tol * np.linalg.norm(c)
    if np.linalg.norm(c[: m + 1]) <= ts:
        return np.zeros(1, complex), np.ones(1, complex)
    col = np.concatenate([c, np.zeros(n + 1, complex)])
    while True:
        if n == 0:
            b = np.ones(1, complex)
            break
        z = np.array([[col[i - j] if i - j >= 0 else 0.0 for j in range(n + 1)]
                      for i in range(m + n + 1)])
        cmat = z[m + 1: m + n + 1, :]
        sv = np.linalg.svd(cmat, compute_uv=False)
        rank = int(np.sum(sv > ts))
        if rank < n:
            m -= n - rank
            n = rank
            if m < 0:
                m, n = 0, max(n + m, 0)
            continue
        _, _, vh = np.linalg.svd(cmat)
        b = vh[-1].conj()
        break
    zmat = np.array([[col[i - j] if i - j >= 0 else 0.0 for j in range(n + 1)]
                     for i in range(m + 1)])
    a = zmat @ b
    lead = np.argmax(np.abs(b) > tol)
    b = b[lead:]
    a = a[lead:] if lead else a
    a, b = a / b[0], b / b[0]
    return np.trim_zeros(a, "b") if np.any(a) else np.zeros(1, complex), b


def _convergence_radius(c) -> float:
    """Root-test estimate of the radius of convergence from the coefficient tail."""
    k = np.arange(c.size)
    keep = (k >= max(1, c.size // 4)) & (np.abs(c) > 1e-300)
    if np.count_nonzero(keep) < 2:
        return 1.0
    slope = np.polyfit(k[keep], np.log(np.abs(c[keep])), 1)[0]
    return float(np.clip(np.exp(-slope), 1e-3, 1e3))


@dataclass(frozen=True)
class PadeResult:
    approximant: RationalFunction
    order: tuple[int, int]
    sup_error: float


def pade_approximant(taylor, order, validate, window, doublet_tol: float = 1e-6,
                     clearance: float = CLEARANCE) -> PadeResult:
    """Build, clean and validate the ``[m/n]`` approximant on ``|w| <= window``.

    ``validate`` is a callable giving the true symbol on real points.
    """
    m, n = order
    if m > n:
        raise ValueError("order must satisfy m <= n")
    c = np.asarray(taylor, dtype=complex)[: m + n + 1]
    # work in w / s with s ~ radius of convergence so the coefficients are O(1)
    s = _convergence_radius(c)
    num, den = pade_coefficients(c * s ** np.arange(c.size), m, n, tol=1e-14)
    num = num / s ** np.arange(num.size)
    den = den / s ** np.arange(den.size)
    raw = RationalFunction.from_polynomials(num, den)
    zeros, poles = _cancel(raw.zeros, raw.poles, doublet_tol)
    approx = RationalFunction(raw.scale, zeros, poles).normalized()
    for p, _ in approx.poles:
        if abs(p.imag) <= clearance:
            raise SpuriousRealPole(f"Pade [{m}/{n}] has a pole at {p}; change the order")
    w = np.linspace(-window, window, 2001)
    err = float(np.max(np.abs(approx(w) - validate(w))))
    return PadeResult(approx, (m, n), err)


def pade_factorize(g, order, grid: FrequencyGrid, *, taylor=None, window: float = 5.0,
                   max_error: float = 1e-3, radius: float = 0.5) -> FactorPair:
    """Factor a non-rational symbol through its Pade approximant about 0.

    ``g`` is a callable, analytic near the origin.  ``order`` is ``(m, n)``
    or ``None`` for diagonal orders 4, 8, 16, 32 until ``max_error`` is met.
    """
    orders = [tuple(order)] if order is not None else [(k, k) for k in (4, 8, 16, 32)]
    need = max(a + b for a, b in orders) + 1
    if taylor is None:
        taylor = analytic_taylor(g, need, radius)
    best = None
    for od in orders:
        try:
            res = pade_approximant(taylor, od, g, window)
        except SpuriousRealPole:
            if order is not None:
                raise
            continue
        if best is None or res.sup_error < best.sup_error:
            best = res
        if res.sup_error <= max_error:
            break
    if best is None:
        raise SpuriousRealPole("every tried Pade order produced a real pole")
    if best.sup_error > max_error:
        raise ApproximationTooCoarse(
            f"Pade sup error {best.sup_error:.2e} on |w|<={window} exceeds {max_error:.2e}"
        )
    split = carlemann_split(best.approximant)
    return split_to_pair(split, grid, "pade", g=g(grid.nodes), error_estimate=best.sup_error,
                         info={"order": list(best.order), "window": window})


# --------------------------------------------------------------------------- #
# Infinite-product factors for the sech compound Poisson model
# --------------------------------------------------------------------------- #

def kuznetsov_eta(alpha: float, q: float) -> float:
    if not -1.0 < alpha < 1.0:
        raise ModelError("alpha must lie in (-1, 1)")
    if not q > 0.0:
        raise ModelError("q must be > 0")
    return 2.0 / math.pi * math.acos(math.pi / (q + math.pi / math.cos(alpha * math.pi / 2.0)))


def kuznetsov_product(alpha: float, q: float, lam, n_terms: int = 10_000,
                      tail_correction: bool = True, chunk: int = 256):
    """Truncated products ``(rho_plus, rho_minus)`` for ``nu(dx) = e^{alpha x} sech(x) dx``.

    Grouped in fours, the log of the n-th factor is
    ``+-2 i lam (eta-1)(eta-3) / (4n -+ alpha)^3 + O(n^-4)``; with
    ``tail_correction`` that leading term is summed over ``n >= n_terms``
    exactly (Hurwitz zeta), leaving an ``O(n_terms^-3)`` error.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    eta = kuznetsov_eta(alpha, q)
    lam = np.asarray(lam, dtype=complex)
    flat = lam.reshape(-1)
    z = 1j * flat
    rp = np.ones(flat.shape, complex)
    rm = np.ones(flat.shape, complex)
    for start in range(0, n_terms, chunk):
        n = 4.0 * np.arange(start, min(n_terms, start + chunk))[:, None]
        rp *= np.prod((1 - z / (n + 1 - alpha)) * (1 - z / (n + 3 - alpha))
                      / ((1 - z / (n + eta - alpha)) * (1 - z / (n + 4 - eta - alpha))), axis=0)
        rm *= np.prod((1 + z / (n + 1 + alpha)) * (1 + z / (n + 3 + alpha))
                      / ((1 + z / (n + eta + alpha)) * (1 + z / (n + 4 - eta + alpha))), axis=0)
    if tail_correction:
        k = 2.0 * (eta - 1.0) * (eta - 3.0) / 64.0
        rp *= np.exp(k * z * zeta(3.0, n_terms - alpha / 4.0))
        rm *= np.exp(-k * z * zeta(3.0, n_terms + alpha / 4.0))
    return rp.reshape(lam.shape), rm.reshape(lam.shape)


def kuznetsov_factorize(alpha: float, q: float, grid: FrequencyGrid, n_terms: int = 10_000) -> FactorPair:
    from .levy_core import SechExponential

    x = grid.nodes
    c = grid.center
    # on the real line rho(-w) = conj(rho(w)); evaluate w >= 0 only
    hp, hm = kuznetsov_product(alpha, q, x[c:], n_terms)
    rp = np.concatenate([np.conj(hp[:0:-1]), hp])
    rm = np.concatenate([np.conj(hm[:0:-1]), hm])
    g = rhs_g(LevyModel(0.0, 0.0, SechExponential(alpha)), Exponential(q), x)
    # next-order tail term, O(|w|^2 / n_terms^3), as the error indicator
    err = float(np.max(np.abs(x[grid.interior()]))) ** 2 / n_terms**3
    return FactorPair(grid, rp, rm, "product-formula", g=g, error_estimate=err,
                      info={"n_terms": n_terms, "eta": kuznetsov_eta(alpha, q)})
