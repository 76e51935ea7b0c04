"""Flat ``key = value`` experiment configuration.

One key per line, ``#`` starts a comment. Recognized keys::

    regularizer   l1 | nuclear                    (default l1)
    n, m, k       dimensions (l1)                 (340, 140, 10)
    d, r          side and rank (nuclear; n = d*d)
    lambda_grid   auto | interior:<count> | log:<lo>:<hi>:<count> | list:<a>,<b>,...
    noise         ';'-separated: gaussian:<sigma> | student_t:<nu>:<scale>
                  | uniform:<a> | fixed:<csv path>
    trials        trials per (noise, lambda) cell (1)
    t_policy      prob:<p> | fixed:<t> | frac:<f>  (prob:0.05)
    seed          master seed (0)
    workers       worker processes; LASSOGEOM_THREADS caps it
    output_csv    path of the trial CSV
    out_dir       directory for figure outputs
    delta_samples Monte Carlo samples when delta has no closed form (20000)
    max_iter      solver iteration cap (200000)
    prove_t, prove_lambda, prove_scenarios, prove_samples, prove_noise_norm
                  settings of the proof-ingredient checks
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from ..bounds import t_for_failure_probability
from ..model import NoiseSpec

__all__ = ["ExperimentConfig", "parse_config", "load_config", "parse_noise", "resolve_t",
           "resolve_lambda_grid", "worker_count"]


@dataclass
class ExperimentConfig:
    regularizer: str = "l1"
    n: int = 340
    m: int = 140
    k: int = 10
    d: int = 0
    r: int = 0
    lambda_grid: str = "auto"
    noise: str = "gaussian:0.1"
    trials: int = 1
    t_policy: str = "prob:0.05"
    seed: int = 0
    workers: int = 1
    output_csv: Optional[str] = None
    out_dir: Optional[str] = None
    delta_samples: int = 20_000
    max_iter: int = 200_000
    prove_t: float = 4.0
    prove_lambda: str = "best"
    prove_scenarios: int = 10_000
    prove_samples: int = 100_000
    prove_noise_norm: float = 1.0
    base_dir: str = field(default=".", repr=False)

    def __post_init__(self):
        if self.regularizer not in ("l1", "nuclear"):
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if self.regularizer == "nuclear":
            if self.d < 1 or not 1 <= self.r <= self.d:
                raise ValueError("nuclear configs need 1 <= r <= d")
            self.n = self.d * self.d
        elif not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= k <= n")
        if self.m < 2:
            raise ValueError("need m >= 2")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.noise_specs():
            raise ValueError("at least one noise spec is required")

    def path(self, p: str) -> str:
        """Resolve ``p`` relative to the config file's directory."""
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def noise_specs(self) -> list:
        return [parse_noise(s, self.m, self.base_dir)
                for s in self.noise.split(";") if s.strip()]

    def describe(self) -> str:
        keys = ("regularizer", "n", "m", "k", "d", "r", "lambda_grid", "noise", "trials",
                "t_policy", "seed")
        return " ".join(f"{k}={getattr(self, k)}" for k in keys)


def parse_noise(text: str, m: int, base_dir: str = ".") -> NoiseSpec:
    parts = [p.strip() for p in text.strip().split(":")]
    fam = parts[0]
    if fam == "gaussian" and len(parts) == 2:
        return NoiseSpec.gaussian(float(parts[1]))
    if fam == "student_t" and len(parts) in (2, 3):
        return NoiseSpec.student_t(float(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0)
    if fam == "uniform" and len(parts) == 2:
        return NoiseSpec.uniform(float(parts[1]))
    if fam == "fixed" and len(parts) == 2:
        path = parts[1] if os.path.isabs(parts[1]) else os.path.join(base_dir, parts[1])
        vec = np.loadtxt(path, delimiter=",", ndmin=1)
        if vec.size != m:
            raise ValueError(f"fixed noise file has {vec.size} entries, expected m={m}")
        return NoiseSpec.fixed(vec)
    raise ValueError(f"cannot parse noise spec {text!r}")


_INT_KEYS = {f.name for f in fields(ExperimentConfig) if f.type in ("int", int)}
_FLOAT_KEYS = {f.name for f in fields(ExperimentConfig) if f.type in ("float", float)}


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            kw[key] = int(val)
        elif key in _FLOAT_KEYS:
            kw[key] = float(val)
        else:
            kw[key] = val
    return ExperimentConfig(base_dir=base_dir, **kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=str(path.parent))


def resolve_t(policy: str, slack: float) -> float:
    """Turn a t policy into a value; ``slack = sqrt(m-1) - sqrt(delta)``.

    ``frac:<f>`` depends on the lambda at hand through ``slack``.
    """
    kind, _, arg = policy.partition(":")
    if kind == "prob":
        return t_for_failure_probability(float(arg or 0.05))
    if kind == "fixed":
        return float(arg)
    if kind == "frac":
        f = float(arg)
        if not 0 < f < 1:
            raise ValueError("frac t policy needs 0 < f < 1")
        return f * slack if slack > 0 else math.nan
    raise ValueError(f"unknown t policy {policy!r}")


def resolve_lambda_grid(spec: str, calib) -> np.ndarray:
    """Lambda values for a sweep given a :class:`CalibrationReport`.

    ``auto``: 40 log-spaced points on ``[0.5 lam_min, 1.2 lam_max]``
    (``lam_best / 2`` stands in for a missing ``lam_min``).
    ``interior:<c>``: ``c`` equispaced points strictly inside the range.
    """
    kind, _, arg = spec.partition(":")
    if kind in ("auto", "interior") and not calib.feasible:
        raise ValueError("m is too small: the bound is vacuous for every lambda")
    lo = calib.lam_min if calib.lam_min is not None else calib.lam_best / 2
    if kind == "auto":
        return np.geomspace(0.5 * lo, 1.2 * calib.lam_max, 40)
    if kind == "interior":
        c = int(arg)
        lo_i = calib.lam_min if calib.lam_min is not None else 0.0
        return lo_i + (calib.lam_max - lo_i) * np.arange(1, c + 1) / (c + 1)
    if kind == "log":
        a, b, c = arg.split(":")
        return np.geomspace(float(a), float(b), int(c))
    if kind == "list":
        return np.array([float(v) for v in arg.split(",") if v.strip()])
    raise ValueError(f"unknown lambda grid {spec!r}")


def worker_count(requested: Optional[int] = None) -> int:
    """Requested workers, capped by LASSOGEOM_THREADS when that is set."""
    w = max(1, int(requested or 1))
    cap = os.environ.get("LASSOGEOM_THREADS")
    if cap:
        w = min(w, max(1, int(cap)))
    return w
