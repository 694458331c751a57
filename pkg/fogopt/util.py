# -*- coding: utf-8 -*-

""" Environment configuration, logging setup and shared projection helpers """

__all__ = [
    "FOGOPT_ENV_VARS",
    "LOG_LEVELS",
    "configure_logging",
    "resolve_seed",
    "simplex_threshold",
    "project_rows_simplex",
]

import logging
import os

import numpy as np

from fogopt.exceptions import InvalidParameterError

LOGGER = logging.getLogger(__name__)

FOGOPT_ENV_VARS = {
    "log_level": "FOGOPT_LOG",
    "seed": "FOGOPT_SEED",
}

LOG_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def configure_logging(level=None):
    """ Configures the root logger for command line use.

        Parameters:
         - level - one of 'error', 'info', 'debug'. Falls back to the
           FOGOPT_LOG environment variable, then to 'error'.
    """
    name = level or os.getenv(FOGOPT_ENV_VARS["log_level"]) or "error"
    name = name.strip().lower()
    if name not in LOG_LEVELS:
        LOGGER.warning("Unknown log level %r in %s, using 'error'",
                       name, FOGOPT_ENV_VARS["log_level"])
        name = "error"
    logging.basicConfig(
        level=LOG_LEVELS[name],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger("fogopt").setLevel(LOG_LEVELS[name])
    return LOG_LEVELS[name]


def resolve_seed(seed=None):
    """ Returns `seed`, or FOGOPT_SEED from the environment, or 0 """
    if seed is not None:
        return int(seed)
    env_val = os.getenv(FOGOPT_ENV_VARS["seed"])
    if env_val is None or env_val == "":
        return 0
    try:
        return int(env_val)
    except ValueError:
        raise InvalidParameterError(FOGOPT_ENV_VARS["seed"], env_val)


def simplex_threshold(values, radius, mask=None):
    """ Row-wise threshold t_j such that sum_i max(values_ji - t_j, 0) == radius_j.

        Only entries where `mask` is true take part. Every row must keep at
        least one allowed entry and a positive radius.

        Parameters:
         - values - (m, n) array
         - radius - length-m array of positive row totals
         - mask - optional (m, n) boolean array
    """
    v = np.asarray(values, dtype=float)
    if mask is not None:
        v = np.where(mask, v, -np.inf)
    radius = np.asarray(radius, dtype=float)
    n = v.shape[1]
    # sort each row in decreasing order
    u = -np.sort(-v, axis=1)
    with np.errstate(invalid="ignore"):
        cssv = np.cumsum(u, axis=1)
        cond = u * np.arange(1, n + 1) > (cssv - radius[:, None])
    # index of the last entry that stays positive
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    rows = np.arange(v.shape[0])
    return (cssv[rows, rho] - radius) / (rho + 1.0)


def project_rows_simplex(values, radius, mask=None):
    """ Euclidean projection of every row onto {x >= 0, sum(x) = radius_j},
        with entries outside `mask` forced to zero.
    """
    v = np.asarray(values, dtype=float)
    theta = simplex_threshold(v, radius, mask)
    out = np.maximum(v - theta[:, None], 0.0)
    if mask is not None:
        out = np.where(mask, out, 0.0)
    return out
