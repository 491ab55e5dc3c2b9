"""Run statistics, hooks and the Allen-Cahn diagnostics."""

from __future__ import annotations

import math
import threading
import time as _time
from dataclasses import dataclass

import numpy as np

RUN_LEVEL = -1  # step index for entries that belong to the whole run


@dataclass(frozen=True, order=True)
class StatEntry:
    step: int
    time: float
    level: int
    iteration: int
    key: str
    value: float


class StatsStore:
    """Append-only, thread-safe log of :class:`StatEntry` records."""

    def __init__(self, entries=()):
        self._entries = list(entries)
        self._lock = threading.Lock()

    def record(self, entry: StatEntry | None = None, **fields):
        if entry is None:
            entry = StatEntry(**fields)
        with self._lock:
            self._entries.append(entry)

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self.sorted())

    def sorted(self) -> list[StatEntry]:
        with self._lock:
            return sorted(self._entries)

    def filter(self, key=None, level=None, step=None) -> list[StatEntry]:
        out = [e for e in self.sorted()
               if (key is None or e.key == key)
               and (level is None or e.level == level)
               and (step is None or e.step == step)]
        return sorted(out, key=lambda e: (e.time, e.iteration, e.step, e.level))

    def keys(self) -> set[str]:
        return {e.key for e in self._entries}


class Hooks:
    """No-op base class. Hooks read solver state and write statistics only."""

    def pre_run(self, controller, stats, t0): ...

    def pre_step(self, step, stats): ...

    def pre_iteration(self, step, stats): ...

    def post_sweep(self, step, level, stats): ...

    def post_iteration(self, step, stats): ...

    def post_step(self, step, stats): ...

    def post_run(self, controller, stats, t_end): ...


class DefaultHooks(Hooks):
    """Residuals per iteration, iteration counts, solver work and wall-clock times."""

    def __init__(self):
        self._t_run = None
        self._t_step = {}
        self._counts = {}

    def pre_run(self, controller, stats, t0):
        self._t_run = _time.perf_counter()

    def pre_step(self, step, stats):
        self._t_step[step.index] = _time.perf_counter()
        self._counts[step.index] = _solver_counts(step)

    def post_iteration(self, step, stats):
        stats.record(step=step.index, time=step.time, level=0, iteration=step.iteration,
                     key="residual", value=step.fine.values.residual)

    def post_step(self, step, stats):
        it = step.iteration
        rec = lambda key, value: stats.record(step=step.index, time=step.time, level=0,
                                              iteration=it, key=key, value=float(value))
        rec("niter", it)
        rec("block", getattr(step, "block", 0))
        rec("final_residual", step.fine.values.residual)
        before = self._counts.pop(step.index, {})
        for k, v in _solver_counts(step).items():
            rec(f"{k}_iters", v - before.get(k, 0))
        start = self._t_step.pop(step.index, None)
        if start is not None:
            rec("timing_step", _time.perf_counter() - start)

    def post_run(self, controller, stats, t_end):
        if self._t_run is not None:
            stats.record(step=RUN_LEVEL, time=t_end, level=0, iteration=0, key="timing_run",
                         value=_time.perf_counter() - self._t_run)


def _solver_counts(step):
    total = {"newton": 0, "linear": 0}
    for lvl in step.levels:
        for k in total:
            total[k] += lvl.problem.counts.get(k, 0)
    return total


TIMING_KEYS = ("timing_step", "timing_run")


class AllenCahnHooks(DefaultHooks):
    """Adds radius and interface width of the shrinking circle after every step."""

    def pre_run(self, controller, stats, t0):
        super().pre_run(controller, stats, t0)
        self._u_start = getattr(controller, "u_start", None)
        if self._u_start is not None:
            prob = controller.problem_template
            self._record(stats, RUN_LEVEL, t0, self._u_start, prob)

    def post_step(self, step, stats):
        super().post_step(step, stats)
        self._record(stats, step.index, step.time + step.dt, step.fine.uend, step.fine.problem)

    def _record(self, stats, index, t, u, prob):
        r = compute_radius(u, prob.nvars, prob.dx)
        w = compute_interface_width(u, prob.nvars, prob.dx, prob.eps)
        exact = math.sqrt(max(prob.radius**2 - 2.0 * t, 0.0))
        for key, value in (("radius", r), ("radius_exact", exact), ("interface_width", w)):
            stats.record(step=index, time=t, level=0, iteration=0, key=key, value=value)


def compute_radius(u, nvars, dx) -> float:
    """Radius of the disc with the same area as the region where ``u > 0``."""
    area = dx**2 * np.count_nonzero(np.asarray(u) > 0.0)
    return math.sqrt(area / math.pi)


WIDTH_DELTA = 0.014


def compute_interface_width(u, nvars, dx, eps, delta=WIDTH_DELTA) -> float:
    """Interface width per crossing of the horizontal centre line, in units of ``eps``.

    Counts centre-line cells with ``|u| < 1 - delta`` and halves the result
    for the two crossings. Returns 0 when the line has no sign change.
    """
    grid = np.asarray(u).reshape(nvars, nvars)
    line = grid[:, nvars // 2]
    if not (np.any(line > 0) and np.any(line < 0)):
        return 0.0
    cells = np.count_nonzero(np.abs(line) < 1.0 - delta)
    return dx * cells / 2.0 / eps
