"""Complexity accounting and run traces.

Four counters are tracked while a solver runs: inner iterations,
stages, projections, and stochastic-gradient evaluations (plus
communication rounds for federated runs).  A trace is the time series
of those counters paired with the suboptimality and feasibility
residual of the current feasible output.

Counting rules
--------------
* one projection event per schedule hit (a joint (u, x) projection of
  the accelerated solver is still one event);
* one projection event per stage boundary, covering the anchor
  projection together with the snapshot and stage-init projections;
* gradient evaluations: ``batch`` per plain step, ``2 * batch`` per
  variance-reduced inner step, and N per stage anchor;
* diagnostic evaluations made only for trace rows are never counted.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import MonotonicityViolation

CSV_HEADER = ("run_id", "variant", "stage", "iter", "projections", "gradients",
              "comm_rounds", "suboptimality", "feasibility", "wall_ns")


@dataclass
class ComplexityCounters:
    """Monotone counters for one solver run."""

    iterations_T: int = 0
    stages_S: int = 0
    projections_P: int = 0
    gradients_G: int = 0
    comm_rounds: int = 0

    def as_tuple(self):
        return (self.iterations_T, self.stages_S, self.projections_P,
                self.gradients_G, self.comm_rounds)


@dataclass
class ComparisonRow:
    """Counters at the first trace row reaching an eps-suboptimal value."""

    label: str
    eps: float
    projections_to_eps: int
    gradients_to_eps: int
    iterations_to_eps: int
    comm_rounds_to_eps: int
    reached: bool


class RunTrace:
    """Append-only per-run time series with monotone counter enforcement."""

    def __init__(self, run_id="run", variant=""):
        self.run_id = run_id
        self.variant = variant
        self.stage = []
        self.iter = []
        self.projections = []
        self.gradients = []
        self.comm_rounds = []
        self.suboptimality = []
        self.feasibility = []
        self.wall_ns = []
        self.restart = []          # restart index per row (0 outside restarts)
        self.extras = {}

    def __len__(self):
        return len(self.iter)

    def record(self, counters, suboptimality, feasibility, wall_ns=0, restart=0):
        """Append one row; counters must not decrease between rows."""
        if len(self.iter) > 0:
            last = (self.iter[-1], self.stage[-1], self.projections[-1],
                    self.gradients[-1], self.comm_rounds[-1])
            new = (counters.iterations_T, counters.stages_S, counters.projections_P,
                   counters.gradients_G, counters.comm_rounds)
            if any(n < l for n, l in zip(new, last)):
                raise MonotonicityViolation(
                    f"counters decreased: {last} -> {new} (solver accounting bug)"
                )
        self.stage.append(counters.stages_S)
        self.iter.append(counters.iterations_T)
        self.projections.append(counters.projections_P)
        self.gradients.append(counters.gradients_G)
        self.comm_rounds.append(counters.comm_rounds)
        self.suboptimality.append(float(suboptimality))
        self.feasibility.append(float(feasibility))
        self.wall_ns.append(int(wall_ns))
        self.restart.append(int(restart))
        return len(self.iter) - 1

    # -- serialization ------------------------------------------------------

    def write_csv(self, path_or_buf):
        """Emit the pinned 10-column CSV schema (restart index stays in memory)."""
        def _write(handle):
            writer = csv.writer(handle)
            writer.writerow(CSV_HEADER)
            for i in range(len(self.iter)):
                writer.writerow([
                    self.run_id, self.variant, self.stage[i], self.iter[i],
                    self.projections[i], self.gradients[i], self.comm_rounds[i],
                    repr(self.suboptimality[i]), repr(self.feasibility[i]),
                    self.wall_ns[i],
                ])

        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w", newline="") as handle:
                _write(handle)
        else:
            _write(path_or_buf)

    @classmethod
    def read_csv(cls, path_or_buf):
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, newline="") as handle:
                return cls._read(handle)
        return cls._read(path_or_buf)

    @classmethod
    def _read(cls, handle):
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ValueError("empty trace file") from None
        if header != CSV_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        trace = None
        for row in reader:
            if trace is None:
                trace = cls(run_id=row[0], variant=row[1])
            trace.stage.append(int(row[2]))
            trace.iter.append(int(row[3]))
            trace.projections.append(int(row[4]))
            trace.gradients.append(int(row[5]))
            trace.comm_rounds.append(int(row[6]))
            trace.suboptimality.append(float(row[7]))
            trace.feasibility.append(float(row[8]))
            trace.wall_ns.append(int(row[9]))
            trace.restart.append(0)
        return trace if trace is not None else cls()

    def to_csv_string(self):
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def record(trace, counters, suboptimality, feasibility, wall_ns=0, restart=0):
    """Functional alias for :meth:`RunTrace.record`."""
    return trace.record(counters, suboptimality, feasibility, wall_ns, restart)


def complexity_to_eps(trace, eps):
    """Counters at the first row with suboptimality <= eps."""
    sub = np.asarray(trace.suboptimality)
    hits = np.flatnonzero(np.nan_to_num(sub, nan=np.inf) <= eps)
    if hits.size == 0:
        return ComparisonRow(trace.run_id, eps, trace.projections[-1] if len(trace) else 0,
                             trace.gradients[-1] if len(trace) else 0,
                             trace.iter[-1] if len(trace) else 0,
                             trace.comm_rounds[-1] if len(trace) else 0,
                             reached=False)
    i = int(hits[0])
    return ComparisonRow(trace.run_id, eps, trace.projections[i], trace.gradients[i],
                         trace.iter[i], trace.comm_rounds[i], reached=True)
