"""Run configuration: a YAML document plus command-line overrides.

Every validation error names the offending field path, e.g.
``model.jumps.eta_plus: Kou eta_plus must be > 0``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .factorization import FrequencyGrid
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
from .mc_oracle import SimConfig
from .solver import METHODS

_JUMP_FIELDS = {
    "none": (NoJumps, ()),
    "kou": (Kou, ("lam", "p", "eta_plus", "eta_minus")),
    "mixed_gamma": (MixedGamma, ("rates", "weights", "side")),
    "stable": (StableTails, ("c1", "c2", "alpha", "eta_shift")),
    "sech": (SechExponential, ("alpha",)),
}
_OPTIONAL = {"side", "eta_shift"}

DEFAULT_TOLERANCES = {
    "residual": None,        # report only; None = no check
    "ks": 0.02,
    "product": None,         # None = 5/sqrt(n_paths) + discretization allowance
    "cross_check": 1e-2,
}


@dataclass(frozen=True)
class InversionSettings:
    x_max: float = 10.0
    n_x: int = 401
    plots: bool = True


@dataclass(frozen=True)
class RunConfig:
    model: LevyModel
    kill: object
    grid: FrequencyGrid
    method: str = "auto"
    inversion: InversionSettings = field(default_factory=InversionSettings)
    mc: SimConfig | None = None
    output: Path = Path("out")
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    n_terms: int = 10_000
    pade_order: tuple | None = None
    pade_max_error: float = 1e-3
    verify_window: float = 5.0
    export_samples: bool = False


def _mapping(obj, path):
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(obj).__name__}")
    return obj


def _unknown(d, allowed, path):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown field")


def _number(d, key, path, default=None, kind=float):
    if key not in d or d[key] is None:
        if default is None:
            raise ConfigError(f"{path}.{key}: required field is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    if kind is int:
        if float(v) != int(v):
            raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
        return int(v)
    if not math.isfinite(float(v)):
        raise ConfigError(f"{path}.{key}: must be finite")
    return float(v)


def _build(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_jumps(d, path="model.jumps"):
    d = _mapping(d, path)
    kind = d.get("type", "none")
    if kind not in _JUMP_FIELDS:
        raise ConfigError(f"{path}.type: unknown jump family {kind!r}; "
                          f"choose from {', '.join(_JUMP_FIELDS)}")
    cls, names = _JUMP_FIELDS[kind]
    _unknown(d, ("type",) + names, path)
    kwargs = {}
    for name in names:
        if name == "side":
            if "side" in d:
                kwargs["side"] = d["side"]
        elif name in ("rates", "weights"):
            if name not in d:
                raise ConfigError(f"{path}.{name}: required field is missing")
            kwargs[name] = d[name]
        elif name in _OPTIONAL:
            kwargs[name] = _number(d, name, path, 0.0)
        else:
            kwargs[name] = _number(d, name, path)
    if kind == "mixed_gamma":
        try:
            kwargs["rates"] = tuple(float(a) for a in kwargs["rates"])
            kwargs["weights"] = tuple(tuple(float(c) for c in row) for row in kwargs["weights"])
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.weights: expected a list of lists of numbers") from None
    # report the first named field the constructor complains about
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        hits = [n for n in names if re.search(rf"\b{n}\b", msg)]
        hit = max(hits, key=len) if hits else None
        raise ConfigError(f"{path}.{hit}: {msg}" if hit else f"{path}: {msg}") from None


def parse_model(d, path="model") -> LevyModel:
    d = _mapping(d, path)
    _unknown(d, ("mu", "sigma", "jumps"), path)
    mu = _number(d, "mu", path, 0.0)
    sigma = _number(d, "sigma", path, 0.0)
    if sigma < 0:
        raise ConfigError(f"{path}.sigma: must be >= 0")
    return _build(path, LevyModel, mu, sigma, parse_jumps(d.get("jumps"), f"{path}.jumps"))


def parse_kill(d, path="kill"):
    d = _mapping(d, path)
    _unknown(d, ("type", "q"), path)
    kind = d.get("type", "exponential")
    q = _number(d, "q", path)
    if kind == "exponential":
        return _build(f"{path}.q", Exponential, q)
    if kind == "geometric":
        return _build(f"{path}.q", Geometric, q)
    raise ConfigError(f"{path}.type: expected 'exponential' or 'geometric', got {kind!r}")


def parse_grid(d, path="grid") -> FrequencyGrid:
    d = _mapping(d, path)
    _unknown(d, ("omega", "n_points"), path)
    om = _number(d, "omega", path, 200.0)
    n = _number(d, "n_points", path, 2**14, int)
    return _build(path, FrequencyGrid, om, n)


def parse_mc(d, path="mc") -> SimConfig | None:
    if d is None:
        return None
    d = _mapping(d, path)
    _unknown(d, ("n_paths", "dt", "seed", "jump_truncation", "brownian_bridge", "n_workers",
                 "block_size", "export_samples"), path)
    if "seed" not in d or d["seed"] is None:
        raise ConfigError(f"{path}.seed: a seed is required for Monte Carlo runs")
    seed = _number(d, "seed", path, kind=int)
    if not 0 <= seed < 2**64:
        raise ConfigError(f"{path}.seed: must be an unsigned 64-bit integer")
    kwargs = dict(
        n_paths=_number(d, "n_paths", path, 100_000, int),
        seed=seed,
        dt=_number(d, "dt", path, 1e-3),
        jump_truncation=_number(d, "jump_truncation", path, 0.0),
        brownian_bridge=bool(d.get("brownian_bridge", True)),
        n_workers=_number(d, "n_workers", path, 1, int),
        block_size=_number(d, "block_size", path, 4096, int),
    )
    return _build(path, SimConfig, **kwargs)


def parse_config(doc: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a config mapping; ``overrides`` (from flags) win over the document."""
    doc = _mapping(doc, "config")
    _unknown(doc, ("model", "kill", "grid", "method", "inversion", "mc", "output", "tolerances",
                   "kuznetsov", "pade", "verify"), "config")
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}

    grid_doc = dict(_mapping(doc.get("grid"), "grid"))
    if "omega" in ov:
        grid_doc["omega"] = ov["omega"]
    if "n_points" in ov:
        grid_doc["n_points"] = ov["n_points"]

    mc_doc = doc.get("mc")
    if any(k in ov for k in ("seed", "n_paths", "dt", "n_workers")):
        mc_doc = dict(_mapping(mc_doc, "mc"))
        for k in ("seed", "n_paths", "dt", "n_workers"):
            if k in ov:
                mc_doc[k] = ov[k]

    method = ov.get("method", doc.get("method", "auto"))
    if method not in METHODS:
        raise ConfigError(f"method: unknown method {method!r}; choose from {', '.join(METHODS)}")

    inv = _mapping(doc.get("inversion"), "inversion")
    _unknown(inv, ("x_max", "n_x", "plots"), "inversion")
    x_max = _number(inv, "x_max", "inversion", 10.0)
    n_x = _number(inv, "n_x", "inversion", 401, int)
    if x_max <= 0 or n_x < 2:
        raise ConfigError("inversion.x_max: need x_max > 0 and n_x >= 2")

    tol = dict(DEFAULT_TOLERANCES)
    tdoc = _mapping(doc.get("tolerances"), "tolerances")
    _unknown(tdoc, tuple(DEFAULT_TOLERANCES), "tolerances")
    for k in tdoc:
        tol[k] = None if tdoc[k] is None else _number(tdoc, k, "tolerances")

    kz = _mapping(doc.get("kuznetsov"), "kuznetsov")
    _unknown(kz, ("n_terms",), "kuznetsov")
    n_terms = _number(kz, "n_terms", "kuznetsov", 10_000, int)
    if n_terms < 1:
        raise ConfigError("kuznetsov.n_terms: must be >= 1")

    pd = _mapping(doc.get("pade"), "pade")
    _unknown(pd, ("order", "max_error"), "pade")
    order = pd.get("order")
    if order is not None:
        if (not isinstance(order, (list, tuple)) or len(order) != 2
                or not all(isinstance(v, int) and v >= 0 for v in order) or order[0] > order[1]):
            raise ConfigError("pade.order: expected [m, n] with 0 <= m <= n")
        order = tuple(order)

    vf = _mapping(doc.get("verify"), "verify")
    _unknown(vf, ("window",), "verify")

    mc_map = mc_doc if isinstance(mc_doc, dict) else None
    return RunConfig(
        model=parse_model(doc.get("model")),
        kill=parse_kill(doc.get("kill")),
        grid=parse_grid(grid_doc),
        method=method,
        inversion=InversionSettings(x_max, n_x, bool(inv.get("plots", True))),
        mc=parse_mc(mc_doc),
        output=Path(ov.get("out", doc.get("output", "out"))),
        tolerances=tol,
        n_terms=n_terms,
        pade_order=order,
        pade_max_error=_number(pd, "max_error", "pade", 1e-3),
        verify_window=_number(vf, "window", "verify", 5.0),
        export_samples=bool(mc_map.get("export_samples", False)) if mc_map else False,
    )


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: invalid YAML: {exc}") from None
    return parse_config(doc or {}, overrides)
