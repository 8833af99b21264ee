"""Risk-averse TD learning: oracles, learners and the experiment harness."""

import json as _json
import os as _os

try:
    from . import _riskd
except ImportError:  # in-tree build: module sits in the CMake build directory
    import _riskd

InvalidInput = _riskd.InvalidInput
NumericalError = _riskd.NumericalError
evaluate = _riskd.evaluate
stationary_distribution = _riskd.stationary_distribution


def solve(P, c, alpha, phi, kind="expectation", parameter=0.0, lam=0.0, force=False):
    """Projected fixed point; single-step when lam == 0, multistep otherwise."""
    return _json.loads(_riskd.solve(P, c, alpha, phi, kind, parameter, lam, force))


def distortion(kind, parameter, P, alpha):
    return _json.loads(_riskd.distortion(kind, parameter, P, alpha))


def check_schedule(a, b, p, horizon):
    return _json.loads(_riskd.check_schedule(a, b, p, horizon))


def run(config, base_dir=".", seed=None, parallel=1):
    """Run an experiment config (dict, JSON text or file path).

    Returns (summary dict, {table name: CSV text}, number of failed replications).
    """
    if isinstance(config, dict):
        text = _json.dumps(config)
    elif _os.path.exists(str(config)):
        with open(config) as fh:
            text = fh.read()
        base_dir = _os.path.dirname(_os.path.abspath(config))
    else:
        text = str(config)
    summary, tables, errors = _riskd.run(text, str(base_dir), seed, parallel)
    return _json.loads(summary), dict(tables), errors
