# -*- coding: utf-8 -*-

__all__ = ["TraceRecord", "SolveTrace", "TRACE_FIELDS"]

import collections
import csv
import json
import logging
import math
import time

from fogopt.exceptions import ConvergenceError, InvalidParameterError

logger = logging.getLogger(__name__)

TRACE_FIELDS = ("iter", "objective", "primal_residual", "dual_residual", "dual_norm", "ms")

TraceRecord = collections.namedtuple("TraceRecord", TRACE_FIELDS)


class SolveTrace(object):
    """
    Per-iteration history of an iterative solve plus the message
    transcript of a protocol run.

    Wall-clock times are only kept when `timing` is true, so that two runs
    of the same solve produce identical traces.
    """

    def __init__(self, algorithm, units=None, timing=False):
        """
        Parameters:
             * algorithm: name of the solver that produced the trace
             * units: mapping of column name to unit, written as the
                      first row of the CSV export
             * timing: record cumulative wall time in milliseconds
        """
        self.algorithm = algorithm
        self.units = dict(units or {})
        self.timing = timing
        self.records = []
        self.transcript = []
        self.converged_at = None
        self.final_state = None
        self._started = time.perf_counter()

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        if not isinstance(other, SolveTrace):
            return NotImplemented
        return (self.algorithm == other.algorithm
                and self.records == other.records
                and self.converged_at == other.converged_at)

    __hash__ = None

    @property
    def iterations(self):
        return self.records[-1].iter if self.records else 0

    @property
    def last(self):
        return self.records[-1] if self.records else None

    def column(self, name):
        return [getattr(r, name) for r in self.records]

    def record(self, iteration, objective, primal_residual, dual_residual, dual_norm):
        if self.records and iteration <= self.records[-1].iter:
            raise InvalidParameterError(
                "iter", iteration, "trace iterations must be strictly increasing")
        values = (objective, primal_residual, dual_residual, dual_norm)
        if not all(math.isfinite(v) for v in values):
            logger.error("%s produced non-finite values at iteration %d: %s",
                         self.algorithm, iteration, values)
            raise ConvergenceError(
                "{0} diverged at iteration {1}".format(self.algorithm, iteration),
                trace=self, iterations=iteration)
        ms = None
        if self.timing:
            ms = (time.perf_counter() - self._started) * 1000.0
        rec = TraceRecord(iteration, float(objective), float(primal_residual),
                          float(dual_residual), float(dual_norm), ms)
        self.records.append(rec)
        return rec

    def units_comment(self):
        units = ", ".join("{0}={1}".format(k, v) for k, v in self.units.items())
        return "# units: " + units

    def write_csv(self, fileobj):
        fileobj.write(self.units_comment() + "\n")
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        for rec in self.records:
            row = [rec.iter] + [repr(v) for v in rec[1:5]]
            row.append("" if rec.ms is None else "{0:.3f}".format(rec.ms))
            writer.writerow(row)

    def save_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as f:
            self.write_csv(f)
        logger.info("trace written to %s", path)

    def save_transcript(self, path):
        """ Writes the message log as JSON lines """
        with open(path, "w", encoding="utf-8") as f:
            for message in self.transcript:
                f.write(json.dumps(message.to_dict(), sort_keys=True) + "\n")
        logger.info("transcript of %d messages written to %s", len(self.transcript), path)
