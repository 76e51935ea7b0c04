"""Pass/fail table of the proof-ingredient checks for one configuration."""

from __future__ import annotations

import math

import numpy as np

from ..bounds import gamma_m
from ..geometry import OutOfRangeError
from ..model import SeedSpec, generate_instance
from ..proofcheck import (concentration_tails, condition_frequencies, end_to_end_bound_check,
                          comparison_monte_carlo)
from ..solvers import SolveConfig, error_objective, l2_lasso_objective
from .config import ExperimentConfig
from .sweep import _make_signal, calibration, delta_on_grid, make_regularizer, reference_geometry

__all__ = ["run_proof_checks"]

_PROOF_STREAM = 2**41


def _row(check, holds, margin, detail=""):
    return {"check": check, "holds": bool(holds), "margin": float(margin), "detail": detail}


def _gamma_rows(m_max):
    ms = np.arange(2, m_max + 1)
    g = gamma_m(ms)
    upper = float(np.min(np.sqrt(ms) - g))
    lower = float(np.min(g * g - np.sqrt(ms) * np.sqrt(ms - 1)))
    return [_row("gamma_le_sqrt_m", upper >= 0, upper, f"m in [2; {m_max}]"),
            _row("gamma_sq_gt_sqrt_m_m1", lower > 0, lower, f"m in [2; {m_max}]")]


def run_proof_checks(cfg: ExperimentConfig) -> list:
    """Checks at ``lambda = prove_lambda`` and ``t = prove_t``.

    Margins are signed so that a nonnegative value means the check holds
    (strictly positive where the inequality is strict).
    """
    geom = reference_geometry(cfg)
    if cfg.prove_lambda == "best":
        lam = calibration(cfg).lam_best
    else:
        lam = float(cfg.prove_lambda)
    delta = float(delta_on_grid(cfg, [lam])[0])
    t, m = cfg.prove_t, cfg.m
    base = SeedSpec(cfg.seed, (_PROOF_STREAM,))
    direction = base.child(0).generator().standard_normal(m)
    zbar = cfg.prove_noise_norm * direction / np.linalg.norm(direction)
    rows = _gamma_rows(max(m, 10_000))
    tag = f"lambda={lam!r} t={t!r} delta={delta!r}"

    freq = condition_frequencies(geom, lam, t, m, zbar, cfg.prove_samples, base.child(1), delta)
    for i, name in enumerate(("event_norm_g", "event_dist_h", "event_g_zbar", "events_joint")):
        f, se, lb = (float(freq[key][i]) for key in ("frequency", "stderr", "lower_bound"))
        margin = f - (lb - 3 * se)
        rows.append(_row(name, margin >= 0, margin, f"freq={f!r} bound={lb!r} stderr={se!r}"))

    tails = concentration_tails(geom, lam, m, cfg.prove_samples, base.child(2))
    worst = min(r["bound"] + 3 * r["stderr"] - r["frequency"] for r in tails["rows"])
    rows.append(_row("lipschitz_tails", worst >= 0, worst,
                     f"jensen_gap={tails['jensen_gap']!r}"))

    try:
        lem = comparison_monte_carlo(geom, lam, t, m, zbar, cfg.prove_scenarios, base.child(3), delta)
    except OutOfRangeError as exc:
        rows.append(_row("phi_and_L_exceed_zbar", False, math.nan, f"t inadmissible: {exc}"))
        rows.append(_row("threshold_inequality", False, math.nan, f"t inadmissible: {exc}"))
    else:
        mm = min(lem["min_L_margin"], lem["phi_margin"])
        rows.append(_row("phi_and_L_exceed_zbar", lem["failures"] == 0 and lem["conforming"] > 0, mm,
                         f"conforming={lem['conforming']} failures={lem['failures']} {tag}"))
        rows.append(_row("threshold_inequality", lem["threshold_margin"] > 0,
                         lem["threshold_margin"], f"ell={lem['ell']!r}"))

    # error-vector identities and one end-to-end solve
    noise = cfg.noise_specs()[0]
    inst = generate_instance(_make_signal(cfg, base.child(4)), m, noise, base.child(5))
    f = make_regularizer(cfg)
    rng = base.child(6).generator()
    w = rng.standard_normal(cfg.n)
    mu = lam / math.sqrt(m)
    gap = abs(l2_lasso_objective(inst, f, lam, inst.x0 + w)
              - (error_objective(inst, f, lam, w) + mu * f.value(inst.x0)))
    rows.append(_row("error_form_identity", gap <= 1e-9, 1e-9 - gap, f"gap={float(gap)!r}"))
    zero_gap = abs(error_objective(inst, f, lam, np.zeros(cfg.n)) - np.linalg.norm(inst.z))
    rows.append(_row("zero_error_value", zero_gap == 0.0, 0.0 - zero_gap,
                     f"gap={float(zero_gap)!r}"))

    rec = end_to_end_bound_check(inst, f, lam, t, SolveConfig(max_iter=cfg.max_iter,
                                                               raise_on_failure=False),
                                 delta=delta, seed=base.child(7), noise=noise)
    if rec.bound_valid:
        rows.append(_row("end_to_end_bound", not rec.violated and rec.converged,
                         rec.bound_l_t - rec.err, f"err={rec.err!r} bound={rec.bound_l_t!r}"))
        rows.append(_row("sphere_probe", rec.probe_margin > 0, rec.probe_margin))
    else:
        rows.append(_row("end_to_end_bound", False, math.nan, "t inadmissible for this lambda"))
    return rows
