"""Per-trial result rows and their CSV encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["TrialRecord", "CSV_COLUMNS", "SCHEMA_VERSION", "format_value"]

SCHEMA_VERSION = "lassogeom-trials/1"
CSV_COLUMNS = ("trial_id", "seed", "lambda", "noise_family", "noise_param", "z_norm", "err",
               "err_normalized", "bound_l_t", "t", "sharp_est", "violated", "degenerate",
               "iterations", "converged")


def format_value(v) -> str:
    """Locale-independent, round-trippable text for one CSV cell."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class TrialRecord:
    """One solve of the l2-lasso compared with its error bound.

    ``bound_l_t`` is NaN when ``t`` is not admissible for this lambda, and
    ``violated`` is then False: there is no bound to violate. ``seed`` is
    the stream index of the instance under the sweep's master seed.
    """

    trial_id: int
    seed: int
    lam: float
    noise_family: str
    noise_param: str
    z_norm: float
    err: float
    err_normalized: float
    bound_l_t: float
    t: float
    sharp_est: float
    violated: bool
    degenerate: bool
    iterations: int
    converged: bool
    probe_margin: float = math.nan

    @property
    def bound_valid(self) -> bool:
        return not math.isnan(self.bound_l_t)

    def csv_row(self) -> str:
        vals = (self.trial_id, self.seed, self.lam, self.noise_family, self.noise_param,
                self.z_norm, self.err, self.err_normalized, self.bound_l_t, self.t,
                self.sharp_est, self.violated, self.degenerate, self.iterations, self.converged)
        return ",".join(format_value(v) for v in vals)
