"""Experiment configuration: a small ``key = value`` grammar with ``[section]`` headers.

Grammar::

    # comment
    [experiment]
    experiment = sharpness
    setting = real, n = 3, k = 1     # several pairs may share a line
    [quadrature]
    budget = 200000

Keys belong to fixed sections; inside a section only its keys are accepted,
before the first header any known key is. List values are space separated.
Environment variables ``MONGELAB_<KEY>`` override file values.
"""

from __future__ import annotations

import os
import dataclasses
from dataclasses import asdict, dataclass, fields

from mongelab.errors import ConfigError

EXPERIMENTS = ("pogorelov-solve", "annulus-profile", "growth-fit", "dichotomy", "sections",
               "orlicz", "sharpness", "verify-all")
TIERS = ("smoke", "full")

SECTIONS = {
    "experiment": ("experiment", "setting", "n", "k", "p", "multipliers", "family", "rho", "f0",
                   "df0", "heights", "eps", "corpus_size", "gauge_m", "gauge_s", "field"),
    "quadrature": ("budget", "shells", "r_outer", "J", "workers", "seed", "r_min"),
    "output": ("out", "tier"),
    "metadata": ("norm_budget",),
}
KEY_SECTION = {k: s for s, keys in SECTIONS.items() for k in keys}


def _floats(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


CONVERTERS = {
    "n": int, "k": int, "p": float, "rho": float, "f0": float, "df0": float,
    "multipliers": _floats, "heights": _floats, "eps": _floats, "corpus_size": int,
    "gauge_m": float, "gauge_s": float, "budget": int, "shells": int, "r_outer": float,
    "J": int, "workers": int, "seed": int, "r_min": float, "norm_budget": float,
}


@dataclass
class ExperimentConfig:
    experiment: str = ""
    setting: str = "real"
    n: int = 3
    k: int = 1
    p: float | None = None
    multipliers: tuple = (0.9, 1.0)
    family: str = ""
    rho: float = 0.5
    f0: float = 1.0
    df0: float = 0.0
    heights: tuple = (1e-3, 1e-2, 1e-1)
    eps: tuple = (0.05, 0.1)
    corpus_size: int = 200
    gauge_m: float = 3.0
    gauge_s: float = 1.0
    field: str = "example"
    budget: int = 200_000
    shells: int = 64
    r_outer: float | None = None
    J: int = 8
    workers: int = 1
    seed: int = 0
    r_min: float = 1e-5
    out: str = "mongelab-out"
    tier: str = "full"
    norm_budget: float | None = None  # C_0, recorded only
    provenance: dict = dataclasses.field(default_factory=dict)

    def resolved(self) -> dict:
        d = asdict(self)
        d["multipliers"] = list(self.multipliers)
        d["heights"] = list(self.heights)
        d["eps"] = list(self.eps)
        return d


def _convert(key, raw, line):
    conv = CONVERTERS.get(key, str)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}", line) from exc


def _split_pairs(text: str, line: int) -> list:
    pairs = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            # a bare token continues the previous list value ("eps = 0.05, 0.1")
            if pairs and pairs[-1][0] in ("multipliers", "heights", "eps"):
                pairs[-1] = (pairs[-1][0], pairs[-1][1] + " " + chunk)
                continue
            raise ConfigError(f"expected 'key = value', got {chunk!r}", line)
        key, _, val = chunk.partition("=")
        key, val = key.strip(), val.strip()
        if not key or not val:
            raise ConfigError(f"empty key or value in {chunk!r}", line)
        pairs.append((key, val))
    return pairs


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check module preconditions; raises naming the violated one."""
    prov = cfg.provenance

    def fail(msg, key):
        src = prov.get(key)
        raise ConfigError(msg, src[1] if src and src[0] == "file" else None)

    if cfg.setting not in ("real", "complex"):
        fail(f"setting must be real or complex, got {cfg.setting!r}", "setting")
    if cfg.n < 1 or cfg.k < 0:
        fail("dimensions must be positive", "n")
    if cfg.setting == "real" and not (0 < cfg.k and 2 * cfg.k < cfg.n):
        fail(f"k < n/2 violated (real setting needs 0 < k < n/2; n={cfg.n}, k={cfg.k})", "k")
    if cfg.setting == "complex" and not 0 < cfg.k < cfg.n:
        fail(f"k < n violated (complex setting needs 0 < k < n; n={cfg.n}, k={cfg.k})", "k")
    if cfg.experiment == "pogorelov-solve" and cfg.n < 3:
        fail("n >= 3 violated (the profile equation needs n >= 3)", "n")
    if cfg.p is not None and cfg.p <= 0:
        fail("p > 0 violated", "p")
    if cfg.budget < 1000:
        fail("budget >= 1000 violated", "budget")
    if cfg.J < 1:
        fail("J >= 1 violated", "J")
    if cfg.rho <= 0 or cfg.f0 <= 0:
        fail("rho > 0 and f0 > 0 required", "rho")
    if any(m <= 0 for m in cfg.multipliers):
        fail("multipliers must be positive", "multipliers")
    if any(h <= 0 for h in cfg.heights):
        fail("heights must be positive", "heights")
    if any(not 0 < e < 1 for e in cfg.eps):
        fail("eps must lie in (0, 1)", "eps")
    if cfg.tier not in TIERS:
        fail(f"unknown tier {cfg.tier!r} (choose smoke or full)", "tier")
    if cfg.workers < 1:
        fail("workers >= 1 violated", "workers")
    if not cfg.experiment:
        raise ConfigError("missing experiment")
    if cfg.experiment not in EXPERIMENTS:
        fail(f"unknown experiment {cfg.experiment!r}", "experiment")
    return cfg


def parse_config(text: str, source: str = "<text>", env: dict | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Parse, apply environment and explicit overrides, fill defaults and validate."""
    cfg = ExperimentConfig()
    names = {f.name for f in fields(ExperimentConfig)} - {"provenance"}
    section = None
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        for key, val in _split_pairs(line, lineno):
            if key not in names:
                raise ConfigError(f"unknown key {key!r}", lineno)
            if section is not None and KEY_SECTION[key] != section:
                raise ConfigError(f"key {key!r} belongs in [{KEY_SECTION[key]}], not [{section}]",
                                  lineno)
            if key in seen:
                raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno)
            seen[key] = lineno
            setattr(cfg, key, _convert(key, val, lineno))
            cfg.provenance[key] = ("file", lineno, source)
    env = os.environ if env is None else env
    for key in sorted(names):
        var = "MONGELAB_" + key.upper()
        if var in env:
            setattr(cfg, key, _convert(key, env[var], None))
            cfg.provenance[key] = ("env", var, None)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in names:
            raise ConfigError(f"unknown override {key!r}")
        setattr(cfg, key, val)
        cfg.provenance[key] = ("cli", key, None)
    return validate(cfg)
