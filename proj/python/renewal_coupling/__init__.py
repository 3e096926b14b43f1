"""Coupling-epoch bounds for renewal processes.

Configs and reports are plain dicts with the same layout as the CLI's TOML
configs and JSON reports.
"""

import json
from pathlib import Path

from . import _core
from ._core import ConfigError, DivergenceError, DomainError

__all__ = [
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "check_report",
    "compute_bounds",
    "coupling_params",
    "load_config",
    "overlap",
    "parse_toml",
    "run_experiment",
    "s_ell",
    "simulate_tau",
]


def _dump(value):
    return json.dumps(value, allow_nan=False)


def parse_toml(text):
    """Parse a TOML config into a dict (no validation)."""
    return json.loads(_core.toml_to_json(text))


def load_config(path):
    """Read and validate a .toml or .json config; returns it with defaults filled in."""
    return json.loads(_core.load_config(str(Path(path))))


def compute_bounds(config):
    """Bound report for a config dict, as written to bounds.json."""
    return json.loads(_core.compute_bounds(_dump(config)))


def run_experiment(config):
    """Bounds, simulation and verdicts.

    Returns a dict with keys bounds, sim, tv_curve_csv and passed.
    """
    bounds, sim, csv, passed = _core.run_experiment(_dump(config))
    return {"bounds": json.loads(bounds), "sim": json.loads(sim), "tv_curve_csv": csv, "passed": passed}


def check_report(kind, report):
    """Problems found in a report; empty when it is consistent."""
    text = report if isinstance(report, str) else _dump(report)
    return _core.check_report(kind, text)


def overlap(first, second):
    """Integral of min(f1, f2) for two law specs such as {"family": "exponential", "params": {"rate": 1}}."""
    return _core.overlap(_dump(first), _dump(second))


def s_ell(q, ell):
    return _core.s_ell(q, ell)


def coupling_params(law, theta):
    """R, p0, kappa_theta, pi and q for a law spec at threshold theta."""
    return json.loads(_core.coupling_params(_dump(law), theta))


def simulate_tau(law, b, b_prime, theta, replicas, seed):
    """Coupling epochs of `replicas` independent coupled runs."""
    return _core.simulate_tau(_dump(law), b, b_prime, theta, replicas, seed)
