"""Monte Carlo extrema of killed Levy paths, used as ground truth.

Paths are simulated in fixed-size blocks.  Block ``b`` draws from its own
Philox stream keyed by ``(seed, b)``, so the output does not depend on how
many worker threads run the blocks.

Exponential killing discretizes ``[0, tau]`` with step ``dt``.  The Gaussian
part between grid points is a Brownian bridge whose maximum and minimum are
sampled exactly (``brownian_bridge=True``); jumps are moved to the end of the
step that contains them.  Geometric killing stops after ``tau`` unit-time
steps, ``P(tau = k) = (1 - q) q^k``; its extrema are those of the unit-time
skeleton, which is the walk whose ladder factors solve the geometric
problem.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import levy_stable

from .errors import UnsimulableModel
from .levy_core import (
    Exponential,
    Geometric,
    Kou,
    LevyModel,
    MixedGamma,
    NoJumps,
    SechExponential,
    StableTails,
)

CSV_VERSION = "levy-extrema-samples/1"


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings; ``seed`` has no default on purpose."""

    n_paths: int
    seed: int
    dt: float = 1e-3
    jump_truncation: float = 0.0
    brownian_bridge: bool = True
    block_size: int = 4096
    n_workers: int = 1

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ValueError("n_paths must be a positive integer")
        if not (0.0 < self.dt <= 1.0):
            raise ValueError("dt must lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.jump_truncation < 0.0:
            raise ValueError("jump_truncation must be >= 0")
        if self.block_size < 1 or self.n_workers < 1:
            raise ValueError("block_size and n_workers must be >= 1")


@dataclass(frozen=True)
class ExtremaSample:
    """Per-path supremum, infimum and terminal value at the killing time."""

    sup: np.ndarray
    inf: np.ndarray
    terminal: np.ndarray

    @property
    def n_paths(self) -> int:
        return int(self.sup.size)

    def ordering_violations(self) -> int:
        """Number of paths breaking ``I <= min(0, X) <= max(0, X) <= M``."""
        bad = (self.inf > 0) | (self.sup < 0) | (self.terminal < self.inf) | (self.terminal > self.sup)
        return int(np.count_nonzero(bad))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# {CSV_VERSION}\n")
            fh.write("M,I,X_tau\n")
            for row in zip(self.sup, self.inf, self.terminal):
                fh.write("%.17g,%.17g,%.17g\n" % row)


# --------------------------------------------------------------------------- #
# Jump sizes
# --------------------------------------------------------------------------- #

def _sech_jumps(rng, alpha, n):
    """Rejection from the asymmetric Laplace envelope 2 exp(alpha x - |x|)."""
    out = np.empty(0)
    p_right = (1.0 + alpha) / 2.0  # = (1/(1-a)) / (1/(1-a) + 1/(1+a))
    while out.size < n:
        m = 2 * (n - out.size) + 16
        right = rng.random(m) < p_right
        e = rng.standard_exponential(m)
        x = np.where(right, e / (1.0 - alpha), -e / (1.0 + alpha))
        keep = rng.random(m) * (1.0 + np.exp(-2.0 * np.abs(x))) < 1.0
        out = np.concatenate([out, x[keep]])
    return out[:n]


def jump_sizes(jumps, rng, n: int) -> np.ndarray:
    """``n`` draws from the normalized jump law of a finite-activity measure."""
    if n == 0:
        return np.zeros(0)
    if isinstance(jumps, Kou):
        up = rng.random(n) < jumps.p
        e = rng.standard_exponential(n)
        return np.where(up, e / jumps.eta_plus, -e / jumps.eta_minus)
    if isinstance(jumps, MixedGamma):
        terms = jumps.rational_terms()
        prob = np.array([c for c, *_ in terms]) / jumps.intensity
        pick = rng.choice(len(terms), size=n, p=prob)
        shape = np.array([j for _, _, j, _ in terms], dtype=float)[pick]
        rate = np.array([a for _, a, _, _ in terms])[pick]
        return terms[0][3] * rng.gamma(shape, 1.0 / rate)
    if isinstance(jumps, SechExponential):
        return _sech_jumps(rng, jumps.alpha, n)
    raise UnsimulableModel(f"no jump sampler for {type(jumps).__name__}")


def _stable_increments(jumps: StableTails, rng, lengths):
    a = jumps.alpha
    scale = (jumps.scale * lengths) ** (1.0 / a)
    z = levy_stable.rvs(a, jumps.skew, size=lengths.size, random_state=rng)
    return scale * z - jumps.eta_shift * lengths


# --------------------------------------------------------------------------- #
# Path blocks
# --------------------------------------------------------------------------- #

def _segment_increments(model: LevyModel, rng, lengths, horizon):
    """Diffusive and jump parts of each step of the concatenated paths."""
    jumps = model.jumps
    n_steps = lengths.size
    diff = model.mu * lengths
    if model.sigma > 0.0:
        diff = diff + model.sigma * np.sqrt(lengths) * rng.standard_normal(n_steps)
    jump = np.zeros(n_steps)
    if isinstance(jumps, StableTails):
        diff = diff + _stable_increments(jumps, rng, lengths)
    elif not isinstance(jumps, NoJumps):
        counts = rng.poisson(jumps.intensity * horizon)
        total = int(counts.sum())
        path = np.repeat(np.arange(horizon.size), counts)
        t = rng.random(total) * horizon[path]
        return diff, jump, (path, t, jump_sizes(jumps, rng, total))
    return diff, jump, None


def _bridge_extremes(a, b, var, rng, brownian_bridge):
    if not brownian_bridge or var is None:
        return np.maximum(a, b), np.minimum(a, b)
    # max of a bridge from a to b: (a + b + sqrt((b - a)^2 + 2 var E)) / 2, E ~ Exp(1)
    d2 = np.square(b - a)
    s = a + b
    r = rng.standard_exponential(a.size)
    r *= 2.0 * var
    r += d2
    hi = np.sqrt(r, out=r)
    hi += s
    hi *= 0.5
    r = rng.standard_exponential(a.size)
    r *= 2.0 * var
    r += d2
    lo = np.sqrt(r, out=r)
    np.subtract(s, lo, out=lo)
    lo *= 0.5
    return hi, lo


def _simulate_block(model: LevyModel, kill, cfg: SimConfig, block: int, n: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(cfg.seed), spawn_key=(block,))))
    if isinstance(kill, Exponential):
        horizon = rng.standard_exponential(n) / kill.q
        dt = cfg.dt
        n_steps = np.maximum(np.ceil(horizon / dt).astype(np.int64), 1)
    elif isinstance(kill, Geometric):
        n_steps = rng.geometric(1.0 - kill.q, size=n) - 1
        horizon = n_steps.astype(float)
        dt = 1.0
    else:
        raise UnsimulableModel(f"unknown killing time {kill!r}")

    total = int(n_steps.sum())
    sup = np.zeros(n)
    inf = np.zeros(n)
    term = np.zeros(n)
    if total == 0:
        return sup, inf, term
    live = n_steps > 0
    owner = np.repeat(np.arange(n), n_steps)
    starts = np.concatenate([[0], np.cumsum(n_steps)[:-1]])
    k = np.arange(total) - starts[owner]
    lengths = np.minimum(dt, horizon[owner] - k * dt)
    if isinstance(kill, Exponential):
        lengths = np.maximum(lengths, 0.0)

    diff, jump, events = _segment_increments(model, rng, lengths, horizon)
    if events is not None:
        path, t, size = events
        step = np.minimum((t / dt).astype(np.int64), n_steps[path] - 1)
        np.add.at(jump, starts[path] + step, size)

    inc = diff + jump
    csum = np.cumsum(inc)
    base = np.concatenate([[0.0], csum])[starts[owner]]
    end = csum - base                     # X after step k (jumps included)
    begin = np.empty_like(end)            # X before step k; exact 0 at path starts
    begin[1:] = end[:-1]
    begin[starts[live]] = 0.0
    mid = begin + diff                    # X just before the jump at the step end
    if isinstance(kill, Geometric):
        hi = lo = end                     # skeleton: integer times only
    else:
        var = model.sigma**2 * lengths if model.sigma > 0.0 else None
        hi, lo = _bridge_extremes(begin, mid, var, rng, cfg.brownian_bridge)
        hi = np.maximum(hi, end)
        lo = np.minimum(lo, end)

    idx = starts[live]
    sup[live] = np.maximum(np.maximum.reduceat(hi, idx), 0.0)
    inf[live] = np.minimum(np.minimum.reduceat(lo, idx), 0.0)
    term[live] = end[idx + n_steps[live] - 1]
    return sup, inf, term


def simulate_extrema(model: LevyModel, kill, cfg: SimConfig) -> ExtremaSample:
    """Simulate ``n_paths`` killed paths and return their extrema.

    Raises
    ------
    UnsimulableModel
        For jump families without a sampler.
    """
    if not isinstance(model.jumps, (NoJumps, Kou, MixedGamma, SechExponential, StableTails)):
        raise UnsimulableModel(f"cannot simulate {type(model.jumps).__name__}")
    n = int(cfg.n_paths)
    sizes = [min(cfg.block_size, n - s) for s in range(0, n, cfg.block_size)]
    work = lambda b: _simulate_block(model, kill, cfg, b, sizes[b])
    if cfg.n_workers > 1:
        with ThreadPoolExecutor(cfg.n_workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(b) for b in range(len(sizes))]
    sup, inf, term = (np.concatenate(p) for p in zip(*parts))
    return ExtremaSample(sup, inf, term)


# --------------------------------------------------------------------------- #
# Empirical transforms and distances
# --------------------------------------------------------------------------- #

def empirical_cf(samples, w) -> np.ndarray:
    """``mean(exp(i w x_k))`` at the frequencies ``w`` (array or FrequencyGrid)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    w = np.asarray(getattr(w, "nodes", w), dtype=float)
    flat = w.reshape(-1)
    out = np.empty(flat.size, dtype=complex)
    for s in range(0, flat.size, 64):
        blk = flat[s:s + 64]
        out[s:s + 64] = np.exp(1j * np.outer(blk, x)).mean(axis=1)
    return out.reshape(w.shape)


def ks_distance(samples, cdf, cdf_left=None) -> float:
    """Kolmogorov-Smirnov distance between the sample and a cdf.

    ``cdf_left(t)`` gives the left limit; it matters where the law has atoms.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    u, counts = np.unique(x, return_counts=True)
    right = np.cumsum(counts) / x.size
    left = right - counts / x.size
    f = np.asarray(cdf(u), dtype=float)
    fl = f if cdf_left is None else np.asarray(cdf_left(u), dtype=float)
    return float(max(np.max(np.abs(right - f)), np.max(np.abs(left - fl))))


def product_deviation(sample: ExtremaSample, w) -> float:
    """``sup |cf_M cf_I - cf_X|`` over ``w`` (the independence identity)."""
    w = np.asarray(w, dtype=float)
    return float(np.max(np.abs(empirical_cf(sample.sup, w) * empirical_cf(sample.inf, w)
                               - empirical_cf(sample.terminal, w))))


def bias_allowance(model: LevyModel, dt: float) -> float:
    """Documented discretization allowance for comparisons with a dt-grid oracle.

    Without a Gaussian part the extrema are only seen at grid points, an
    ``O(sqrt(dt))`` effect for infinite variation and ``O(dt)`` otherwise; jump
    times are rounded to the grid, another ``O(dt)``.
    """
    if isinstance(model.jumps, StableTails) and model.jumps.alpha > 1.0:
        return 5.0 * math.sqrt(dt)
    return 5.0 * dt
