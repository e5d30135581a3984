"""Method dispatch: one entry point that factors a model's symbol on a grid."""

from __future__ import annotations

import numpy as np

from .errors import BranchUnwrapFailure, ModelError
from .factorization import FactorPair, FrequencyGrid, MAX_POINTS, factorize_hilbert
from .levy_core import Exponential, LevyModel, SechExponential, rhs_g
from .rational import carlemann_factorize, kuznetsov_factorize, pade_factorize, rational_symbol

METHODS = ("auto", "hilbert", "carlemann", "pade", "kuznetsov-product")


def _hilbert_refining(model, kill, grid: FrequencyGrid) -> FactorPair:
    """Hilbert method, doubling the grid while the phase of g is under-resolved."""
    while True:
        try:
            return factorize_hilbert(rhs_g(model, kill, grid.nodes), grid)
        except BranchUnwrapFailure:
            if 2 * grid.n_points > MAX_POINTS:
                raise
            grid = grid.refined()


def factorize_model(model: LevyModel, kill, grid: FrequencyGrid | None = None,
                    method: str = "auto", *, pade_order=None, pade_max_error: float = 1e-3,
                    n_terms: int = 10_000) -> FactorPair:
    """Wiener-Hopf factors of ``g`` for ``model`` killed at ``kill``.

    ``auto`` uses exact inspection when ``g`` is rational, otherwise the
    Hilbert method, falling back to Pade if no continuous branch of
    ``ln g`` can be tracked.  The Hilbert path may return a pair on a finer
    grid than requested.
    """
    grid = grid or FrequencyGrid()
    if method not in METHODS:
        raise ModelError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    gfun = lambda w: rhs_g(model, kill, w)

    if method == "carlemann":
        return carlemann_factorize(model, kill, grid)
    if method == "hilbert":
        return _hilbert_refining(model, kill, grid)
    if method == "pade":
        return pade_factorize(gfun, pade_order, grid, max_error=pade_max_error)
    if method == "kuznetsov-product":
        jumps = model.jumps
        if not (isinstance(jumps, SechExponential) and isinstance(kill, Exponential)
                and model.mu == 0.0 and model.sigma == 0.0):
            raise ModelError("the product formula needs a pure sech model with exponential killing")
        return kuznetsov_factorize(jumps.alpha, kill.q, grid, n_terms)

    # auto
    if rational_symbol(model, kill) is not None:
        return carlemann_factorize(model, kill, grid)
    try:
        return _hilbert_refining(model, kill, grid)
    except BranchUnwrapFailure:
        return pade_factorize(gfun, pade_order, grid, max_error=pade_max_error)


def cross_check(a: FactorPair, b: FactorPair, window: float = 5.0) -> float:
    """Sup-distance of the ``Phi_+`` and ``Phi_-`` samples of two pairs on ``|w| <= window``."""
    xa, xb = a.grid.nodes, b.grid.nodes
    pa = np.interp(xb, xa, a.phi_plus.real) + 1j * np.interp(xb, xa, a.phi_plus.imag)
    ma = np.interp(xb, xa, a.phi_minus.real) + 1j * np.interp(xb, xa, a.phi_minus.imag)
    sel = np.abs(xb) <= window
    return float(max(np.max(np.abs(pa - b.phi_plus)[sel]), np.max(np.abs(ma - b.phi_minus)[sel])))
