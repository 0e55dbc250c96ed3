"""Error-in-variables estimators: OLS, third-moment (3M) and divide-and-conquer (DC).

Thin wrappers over the C++ library. Failures raise ``eivdc.Error`` whose
``kind`` attribute names the error category (e.g. ``"divisibility"``).
"""

import json

import numpy as np

from . import _core
from ._core import Error, dc_bootstrap_ci, dc_estimate, geary_3m, ols

__all__ = [
    "Error",
    "dc_bootstrap_ci",
    "dc_estimate",
    "estimate",
    "geary_3m",
    "ols",
    "run_mc",
    "simulate",
]


def _dgp_options(options):
    return {key: ",".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v)
            for key, v in options.items()}


def simulate(replication=0, **dgp):
    """Simulated panel as a dict of numpy arrays: firm, year, y, x, z.

    Keyword arguments are DGP keys (n, periods, beta, gamma, tau_sq, seed, ...).
    """
    out = _core.simulate(_dgp_options(dgp), replication)
    return {key: np.asarray(value) for key, value in out.items()}


def estimate(firm, year, y, x, z=None, control_names=(), **options):
    """Runs one method on a firm-year panel and returns the report as a dict.

    ``z`` is an (n, k) array of controls or None. Options mirror the CLI:
    method ("ols", "3m", "dc"), blocks_per_year, fe, te, alpha,
    bootstrap_draws, partition_mode, seed, threads.
    """
    if z is not None:
        z = np.asarray(z, dtype=float)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
    report = _core.estimate(
        np.asarray(firm, dtype=np.int64).tolist(),
        np.asarray(year, dtype=int).tolist(),
        np.asarray(y, dtype=float),
        np.asarray(x, dtype=float),
        z,
        list(control_names),
        **options,
    )
    return json.loads(report)


def _parse_method(text):
    name, _, blocks = text.partition(":")
    return name, int(blocks) if blocks else 1


def run_mc(methods=("ols", "3m", "dc"), specs=(1,), reps=500, alpha=0.05, bootstrap_draws=399,
           partition_mode="random", seed=0, threads=0, **dgp):
    """Monte Carlo study; returns the summary as a dict.

    ``methods`` entries are "ols", "3m", "dc" or "dc:K" (K blocks per year).
    Remaining keyword arguments are DGP keys.
    """
    summary = _core.run_mc(
        _dgp_options(dgp),
        [_parse_method(m) for m in methods],
        list(specs),
        reps,
        alpha,
        bootstrap_draws,
        partition_mode,
        seed,
        threads,
    )
    return json.loads(summary)
