"""Block controller for SDC, MLSDC and PFASST.

One controller covers all three methods: a single level and a single step
is SDC, several levels make it MLSDC, several steps per block make it PFASST.
An iteration follows the multigrid view: block-Jacobi fine sweeps on every
active step, restriction with FAS correction, a serial coarse pass along the
block, then interpolation of the coarse correction.

Each step runs as a generator that yields stage markers and forward-only
messages. The emulated executor advances all steps stage by stage in one
thread; the threaded executor gives every step its own worker and blocking
queues. Both execute the same per-step arithmetic.
"""

from __future__ import annotations

import enum
import logging
import math
import queue
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .faults import FaultConfig, recover_step, wipe_step
from .hierarchy import Level, LevelParams, StageTag, Step, coarse_correction, restrict_step
from .stats import DefaultHooks, Hooks, StatsStore
from .sweeper import Sweeper, SweeperConfig

log = logging.getLogger(__name__)


class Predictor(str, enum.Enum):
    SPREAD = "spread"
    COARSE_STAGGERED = "coarse-staggered"


class ExecMode(str, enum.Enum):
    EMULATED = "emulated"
    THREADED = "threaded"


class ControllerError(RuntimeError):
    pass


@dataclass
class ControllerConfig:
    num_procs: int = 1
    maxiter: int = 20
    predictor: Predictor = Predictor.SPREAD
    mode: ExecMode = ExecMode.EMULATED
    logger_level: int = logging.WARNING

    def __post_init__(self):
        self.predictor = Predictor(self.predictor)
        self.mode = ExecMode(self.mode)
        if self.num_procs < 1 or self.maxiter < 1:
            raise ValueError("num_procs and maxiter must be at least 1")


@dataclass
class LevelSpec:
    """Recipe for one level: fresh problem instances come from ``make_problem``."""

    make_problem: Callable
    sweeper: SweeperConfig
    params: LevelParams


@dataclass
class BlockSchedule:
    steps: list
    index: int
    t_start: float
    u0: object

    @property
    def active(self):
        return [S for S in self.steps if not S.done]


# messages between consecutive steps
@dataclass(frozen=True)
class _Stage:
    tag: StageTag


@dataclass(frozen=True)
class _Send:
    tag: tuple
    payload: object


@dataclass(frozen=True)
class _Recv:
    tag: tuple


@dataclass
class _Link:
    """Forward channel from one step to its successor."""

    buf: deque = field(default_factory=deque)
    q: queue.Queue = field(default_factory=queue.Queue)


class Controller:
    def __init__(self, levels: list[LevelSpec], config: ControllerConfig | None = None,
                 hooks: Hooks | None = None, faults: FaultConfig | None = None,
                 fault_schedule: set | None = None):
        if not levels:
            raise ControllerError("need at least one level")
        self.specs = levels
        self.config = config or ControllerConfig()
        self.hooks = hooks or DefaultHooks()
        self.faults = faults
        self.fault_schedule = fault_schedule or set()
        if self.fault_schedule and self.config.mode is not ExecMode.EMULATED:
            raise ControllerError("fault injection needs neighbour access, run it emulated")
        log.setLevel(self.config.logger_level)
        dts = {spec.params.dt for spec in levels}
        if len(dts) != 1:
            raise ControllerError("all levels of a step share one step size")
        self.dt = dts.pop()
        self.problem_template = levels[0].make_problem()
        self.steps = [self._build_step(i) for i in range(self.config.num_procs)]
        if len(levels) > 1 and self.config.num_procs > 1:
            for lvl in self.steps[0].levels:
                if lvl.sweeper.coll.nodes[-1] != 1.0:
                    raise ControllerError("PFASST needs the right interval end as last node")

    @property
    def nlevels(self):
        return len(self.specs)

    def _build_step(self, slot):
        levels = []
        for i, spec in enumerate(self.specs):
            prob = spec.make_problem()
            levels.append(Level(i, prob, Sweeper(spec.sweeper, prob.layout), spec.params))
        return Step(index=slot, slot=slot, time=0.0, levels=levels)

    def describe(self) -> str:
        """Human-readable overview of the object hierarchy."""
        lines = [f"Controller {type(self).__name__} ({self.config.mode.value}, "
                 f"num_procs={self.config.num_procs}, maxiter={self.config.maxiter}, "
                 f"predictor={self.config.predictor.value})"]
        S = self.steps[0]
        lines.append("  Step")
        for lvl in S.levels:
            lines.append(f"    Level {lvl.index}: dt={lvl.dt} restol={lvl.params.restol} "
                         f"nsweeps={lvl.params.nsweeps}")
            lines.append(f"      Problem {lvl.problem.describe()}")
            cfg = lvl.sweeper.cfg
            lines.append(f"      Sweeper {lvl.sweeper.mode.value}, {cfg.node_kind.value} "
                         f"M={cfg.num_nodes}, QI={cfg.qdelta_implicit.value}")
        for i, tr in enumerate(S.transfers):
            kind = "identity" if tr.space.identity else f"{tr.space.fine.boundary.value} injection/linear"
            lines.append(f"    Transfer {i}->{i + 1}: space {kind}")
        return "\n".join(lines)

    # -- driver -----------------------------------------------------------

    def run(self, u0, t0: float, t_end: float):
        """Integrate from ``t0`` to ``t_end``; returns ``(u_end, stats)``."""
        span = t_end - t0
        nsteps = int(round(span / self.dt))
        if nsteps < 1 or abs(nsteps * self.dt - span) > 1e-10 * max(1.0, abs(t_end)):
            raise ControllerError(f"[{t0}, {t_end}] is not a multiple of dt={self.dt}")
        L = self.config.num_procs
        stats = StatsStore()
        self.u_start = u0
        self.hooks.pre_run(self, stats, t0)
        u = u0.copy()
        for b in range(math.ceil(nsteps / L)):
            first = b * L
            active = self.steps[: min(L, nsteps - first)]
            for slot, S in enumerate(active):
                S.index = first + slot
                S.block = b
                S.set_time(t0 + (first + slot) * self.dt)
                S.iteration = 0
                S.done = False
                S.stage = StageTag.PREDICT
            block = BlockSchedule(active, b, active[0].time, u)
            self.run_block(block, stats)
            u = active[-1].fine.uend.copy()
            log.info("block %d done at t=%.6g after %d iterations", b, active[-1].time + self.dt,
                     max(S.iteration for S in active))
        self.hooks.post_run(self, stats, t_end)
        return u, stats

    def run_block(self, block: BlockSchedule, stats: StatsStore):
        links = [_Link() for _ in block.steps[:-1]]
        programs = []
        for S in block.steps:
            pred_link = links[S.slot - 1] if S.slot > 0 else None
            succ_link = links[S.slot] if S.slot < len(links) else None
            programs.append((S, self._program(S, block, stats), pred_link, succ_link))
        if self.config.mode is ExecMode.EMULATED:
            self._run_emulated(block, programs)
        else:
            self._run_threaded(programs)

    # -- executors ----------------------------------------------------------

    def _run_emulated(self, block, programs):
        alive = list(programs)
        # advance every program to its first stage marker
        for item in alive:
            self._advance(item, emulated=True)
        alive = [p for p in alive if not p[0].done or p[0].stage is not StageTag.DONE]
        while alive:
            stage = alive[0][0].stage
            if stage is StageTag.FINE_SWEEP and self.fault_schedule:
                self._inject_faults(block, [p[0] for p in alive])
            for item in alive:
                self._advance(item, emulated=True)
            alive = [p for p in alive if p[0].stage is not StageTag.DONE]

    def _advance(self, item, emulated):
        """Resume one step program up to its next stage marker."""
        S, prog, pred_link, succ_link = item
        reply = None
        while True:
            try:
                req = prog.send(reply)
            except StopIteration:
                S.stage = StageTag.DONE
                return
            reply = None
            if isinstance(req, _Stage):
                S.stage = req.tag
                return
            if isinstance(req, _Send):
                if emulated:
                    succ_link.buf.append((req.tag, req.payload))
                else:
                    succ_link.q.put((req.tag, req.payload))
            else:
                if emulated:
                    if not pred_link.buf:
                        raise ControllerError(f"step {S.index} waits for {req.tag} out of order")
                    tag, reply = pred_link.buf.popleft()
                else:
                    tag, reply = self._blocking_get(pred_link.q, S)
                if tag != req.tag:
                    raise ControllerError(f"step {S.index} expected {req.tag}, received {tag}")

    def _blocking_get(self, q, S):
        while True:
            if self._abort.is_set():
                raise ControllerError(f"step {S.index} aborted after failure of another step")
            try:
                return q.get(timeout=0.05)
            except queue.Empty:
                continue

    def _run_threaded(self, programs):
        self._abort = threading.Event()
        errors = []

        def worker(item):
            try:
                while item[0].stage is not StageTag.DONE:
                    self._advance(item, emulated=False)
            except BaseException as exc:  # re-raised in the caller
                errors.append((item[0].slot, exc))
                self._abort.set()

        threads = [threading.Thread(target=worker, args=(item,), name=f"step-{item[0].slot}")
                   for item in programs]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if errors:
            errors.sort(key=lambda e: e[0])
            raise errors[0][1]

    # -- faults ---------------------------------------------------------------

    def _inject_faults(self, block, alive):
        upcoming = alive[0].iteration + 1
        hit = [S for S in alive if (block.index, S.slot, upcoming) in self.fault_schedule]
        if not hit:
            return
        lost = {S.slot for S in hit}
        for S in hit:
            wipe_step(S)
        for S in hit:
            left = block.u0 if S.slot == 0 else block.steps[S.slot - 1].fine.uend
            right = None
            if S.slot + 1 < len(block.steps) and S.slot + 1 not in lost:
                right = block.steps[S.slot + 1]
            sweeps = self.faults.coarse_correction_sweeps if self.faults else 0
            recover_step(S, left, right, sweeps)
            lost.discard(S.slot)
            self._stats.record(step=S.index, time=S.time, level=0, iteration=upcoming,
                               key="fault", value=1.0)
            log.info("fault in block %d step %d before iteration %d", block.index, S.slot, upcoming)

    # -- per-step program -------------------------------------------------------

    def _program(self, S: Step, block: BlockSchedule, stats: StatsStore):
        self._stats = stats
        cfg = self.config
        hooks = self.hooks
        nlev = self.nlevels
        has_pred = S.slot > 0
        has_succ = S.slot < len(block.steps) - 1
        fine = S.fine
        restol = fine.params.restol

        hooks.pre_step(S, stats)
        yield from self._predict(S, block, has_pred, has_succ)

        yield _Stage(StageTag.CONVERGENCE_CHECK)
        pred_done = not has_pred
        if has_pred:
            pred_end, pred_done = yield _Recv(("fine", 0))
            fine.set_u0(pred_end)
        S.done = self._converged(S, fine.residual(), restol, pred_done)
        if has_succ:
            yield _Send(("fine", 0), (fine.uend.copy(), S.done))

        while not S.done:
            yield _Stage(StageTag.FINE_SWEEP)
            S.iteration += 1
            k = S.iteration
            hooks.pre_iteration(S, stats)
            fine.sweep()
            hooks.post_sweep(S, fine, stats)
            if nlev > 1:
                yield _Stage(StageTag.DOWN)
                for l in range(1, nlev - 1):
                    restrict_step(S, l)
                    lvl = S.levels[l]
                    if has_succ:
                        yield _Send(("level", l, k), lvl.uend.copy())
                    if has_pred and not pred_done:
                        u0_l = yield _Recv(("level", l, k))
                    else:
                        u0_l = S.restrict_chain(fine.values.u[0], l)
                    lvl.set_u0(u0_l)
                    lvl.sweep()
                    hooks.post_sweep(S, lvl, stats)
                restrict_step(S, nlev - 1)

                yield _Stage(StageTag.COARSE_SWEEP)
                coarse = S.levels[-1]
                if has_pred and not pred_done:
                    u0_c = yield _Recv(("coarse", k))
                else:
                    u0_c = S.restrict_chain(fine.values.u[0], nlev - 1)
                coarse.set_u0(u0_c)
                coarse.sweep()
                hooks.post_sweep(S, coarse, stats)
                if has_succ:
                    yield _Send(("coarse", k), coarse.uend.copy())

                yield _Stage(StageTag.UP)
                for l in range(nlev - 1, 0, -1):
                    coarse_correction(S, l)

            yield _Stage(StageTag.CONVERGENCE_CHECK)
            if has_pred and not pred_done:
                pred_end, pred_done = yield _Recv(("fine", k))
                fine.set_u0(pred_end)
            res = fine.residual()
            hooks.post_iteration(S, stats)
            S.done = self._converged(S, res, restol, pred_done)
            if has_succ:
                yield _Send(("fine", k), (fine.uend.copy(), S.done))

        hooks.post_step(S, stats)
        yield _Stage(StageTag.DONE)

    def _converged(self, S, res, restol, pred_done):
        return (res < restol and pred_done) or S.iteration >= self.config.maxiter

    def _predict(self, S, block, has_pred, has_succ):
        yield _Stage(StageTag.PREDICT)
        for lvl in S.levels:
            lvl.spread(S.restrict_chain(block.u0, lvl.index))
        nlev = self.nlevels
        if self.config.predictor is not Predictor.COARSE_STAGGERED or nlev == 1:
            return
        for l in range(1, nlev):
            restrict_step(S, l)
        coarse = S.levels[-1]
        u0_c = S.restrict_chain(block.u0, nlev - 1)
        for p in range(S.slot + 1):
            if has_pred and p > 0:
                u0_c = yield _Recv(("predict", p - 1))
            coarse.set_u0(u0_c)
            coarse.sweep()
            if has_succ:
                yield _Send(("predict", p), coarse.uend.copy())
        for l in range(nlev - 1, 0, -1):
            coarse_correction(S, l)
