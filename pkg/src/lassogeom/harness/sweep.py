"""Seeded lambda x noise x trial sweeps of the l2-lasso against its bound."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..geometry import calibrate, delta_l1_closed_form, delta_monte_carlo
from ..model import SeedSpec, generate_instance, generate_lowrank_signal, generate_sparse_signal
from ..proofcheck import end_to_end_bound_check
from ..records import CSV_COLUMNS, SCHEMA_VERSION, TrialRecord
from ..regularizers import L1, Nuclear
from ..solvers import SolveConfig
from .config import ExperimentConfig, resolve_lambda_grid, resolve_t, worker_count

__all__ = ["SweepPlan", "plan_sweep", "run_sweep", "write_csv", "read_csv", "make_regularizer",
           "reference_geometry"]

# stream reserved for the reference signal used to estimate delta by Monte Carlo
_REFERENCE_STREAM = 2**40


def make_regularizer(cfg: ExperimentConfig):
    return L1(cfg.n) if cfg.regularizer == "l1" else Nuclear(cfg.d)


def _make_signal(cfg, seed: SeedSpec):
    if cfg.regularizer == "l1":
        return generate_sparse_signal(cfg.n, cfg.k, seed)
    return generate_lowrank_signal(cfg.d, cfg.r, seed)


def reference_geometry(cfg: ExperimentConfig):
    """Geometry of a representative x0.

    delta depends on x0 only through k (l1) or r (nuclear), so any draw
    serves.
    """
    sig = _make_signal(cfg, SeedSpec(cfg.seed, (_REFERENCE_STREAM,)))
    return make_regularizer(cfg).geometry(sig)


def delta_on_grid(cfg: ExperimentConfig, lams) -> np.ndarray:
    lams = np.asarray(lams, dtype=float)
    if cfg.regularizer == "l1":
        return np.atleast_1d(delta_l1_closed_form(cfg.n, cfg.k, lams))
    est, _ = delta_monte_carlo(reference_geometry(cfg), lams, cfg.delta_samples,
                               SeedSpec(cfg.seed, (_REFERENCE_STREAM, 1)))
    return np.asarray(est)


def calibration(cfg: ExperimentConfig):
    method = "closed_form" if cfg.regularizer == "l1" else "monte_carlo"
    return calibrate(reference_geometry(cfg), cfg.m, method=method,
                     samples=cfg.delta_samples, seed=SeedSpec(cfg.seed, (_REFERENCE_STREAM, 1)))


@dataclass
class SweepPlan:
    lams: np.ndarray
    deltas: np.ndarray
    ts: np.ndarray
    calib: object


def plan_sweep(cfg: ExperimentConfig) -> SweepPlan:
    calib = calibration(cfg)
    lams = resolve_lambda_grid(cfg.lambda_grid, calib)
    if calib.feasible and not any(calib.contains(l) for l in lams):
        warnings.warn("no lambda of the grid lies where the bound is meaningful")
    deltas = delta_on_grid(cfg, lams)
    slack = math.sqrt(cfg.m - 1) - np.sqrt(deltas)
    ts = np.array([resolve_t(cfg.t_policy, s) for s in slack])
    return SweepPlan(lams, deltas, ts, calib)


def _run_group(job):
    """All lambdas for one (noise, trial) instance; runs in a worker."""
    cfg, noise, stream, first_id, lams, deltas, ts = job
    base = SeedSpec(cfg.seed, (stream,))
    signal = _make_signal(cfg, base.child(0))
    inst = generate_instance(signal, cfg.m, noise, base.child(1))
    f = make_regularizer(cfg)
    scfg = SolveConfig(max_iter=cfg.max_iter, raise_on_failure=False)
    out = []
    for j, (lam, dl, t) in enumerate(zip(lams, deltas, ts)):
        out.append(end_to_end_bound_check(inst, f, float(lam), float(t), scfg, delta=float(dl),
                                          seed=base, trial_id=first_id + j, noise=noise))
    return out


def run_sweep(cfg: ExperimentConfig, workers=None, plan: SweepPlan = None) -> list:
    """One :class:`TrialRecord` per (noise, trial, lambda), ordered by trial id.

    Instance ``(noise i, trial j)`` draws from stream ``i * trials + j`` of
    the master seed and is solved at every lambda of the grid, so the
    output does not depend on the number of workers.
    """
    plan = plan or plan_sweep(cfg)
    noises = cfg.noise_specs()
    nl = len(plan.lams)
    jobs = []
    for i, noise in enumerate(noises):
        for j in range(cfg.trials):
            stream = i * cfg.trials + j
            jobs.append((cfg, noise, stream, stream * nl, plan.lams, plan.deltas, plan.ts))
    w = worker_count(workers if workers is not None else cfg.workers)
    if w > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(w) as ex:
            groups = list(ex.map(_run_group, jobs))
    else:
        groups = [_run_group(job) for job in jobs]
    records = [rec for grp in groups for rec in grp]
    records.sort(key=lambda r: r.trial_id)
    return records


def write_csv(records, path, cfg: ExperimentConfig = None) -> None:
    header = f"# {SCHEMA_VERSION}"
    if cfg is not None:
        header += " " + cfg.describe()
    lines = [header, ",".join(CSV_COLUMNS)] + [r.csv_row() for r in records]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _parse_cell(col, text):
    if col in ("trial_id", "seed", "iterations"):
        return int(text)
    if col in ("violated", "degenerate", "converged"):
        return text == "1"
    if col in ("noise_family", "noise_param"):
        return text
    return float(text)


def read_csv(path) -> list:
    """Inverse of :func:`write_csv`."""
    records = []
    with open(path, encoding="utf-8") as fh:
        rows = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    cols = rows[0].split(",")
    if tuple(cols) != CSV_COLUMNS:
        raise ValueError(f"unexpected columns {cols}")
    for row in rows[1:]:
        vals = {c: _parse_cell(c, v) for c, v in zip(cols, row.split(","))}
        vals["lam"] = vals.pop("lambda")
        records.append(TrialRecord(**vals))
    return records
