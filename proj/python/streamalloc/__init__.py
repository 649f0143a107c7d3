"""Python access to the streamalloc core.

Rates and capacities are exact fractions; pass ``fractions.Fraction`` or ints.
"""

from fractions import Fraction

from . import _core
from ._core import ConfigError, RESULTS_HEADER, RESULTS_SCHEMA, max_matching

__all__ = [
    "ConfigError",
    "RESULTS_HEADER",
    "RESULTS_SCHEMA",
    "allocate_channels",
    "brute_force_alpha",
    "conc_min",
    "max_matching",
    "noback_solve",
    "run_experiment",
    "select_users",
    "subset_sum",
]


def _pair(x):
    f = Fraction(x)
    return (f.numerator, f.denominator)


def _solution(d):
    d = dict(d)
    d["alpha"] = [Fraction(a, b) for a, b in d["alpha"]]
    return d


def conc_min(z, Z, capacity, theta=0.5, linear=False):
    """Optimal rates for users with p_i = z[i] / Z sharing `capacity` channels."""
    return _solution(_core.conc_min(list(z), Z, _pair(capacity), theta, linear))


def brute_force_alpha(z, Z, capacity, theta=0.5, linear=False):
    """Exhaustive reference for conc_min; at most 12 users."""
    return _solution(_core.brute_force_alpha(list(z), Z, _pair(capacity), theta, linear))


def subset_sum(z, Z, capacity):
    chosen, (num, den) = _core.subset_sum(list(z), Z, _pair(capacity))
    return chosen, Fraction(num, den)


def select_users(alpha, m, seed=0):
    """One draw of m slots; None marks a vacant slot."""
    slots = _core.select_users([_pair(a) for a in alpha], m, seed)
    return [None if s < 0 else s for s in slots]


def allocate_channels(alpha, on, seed=0):
    """`on[i][j]` says whether channel j is usable by user i this epoch."""
    d = dict(_core.allocate_channels([_pair(a) for a in alpha], [list(map(bool, r)) for r in on], seed))
    d["channel_user"] = [None if u < 0 else u for u in d["channel_user"]]
    return d


def noback_solve(weights, supports, capacity):
    """Rates for linear costs when each p_i is uniform on supports[i] = (a_i, b_i)."""
    return dict(_core.noback_solve(list(weights), [tuple(s) for s in supports], _pair(capacity)))


def run_experiment(kind, config="", jobs=1):
    """Runs an experiment from `key = value` config text; returns (rows, csv_text)."""
    rows, csv = _core.run_experiment(kind, config, jobs)
    return [dict(r) for r in rows], csv
