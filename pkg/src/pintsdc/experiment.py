"""Run descriptions end to end and write the CSV outputs."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import Description, dump_config
from .controller import Controller, ControllerError
from .faults import fault_schedule
from .kernel import SolverError
from .stats import RUN_LEVEL, TIMING_KEYS, AllenCahnHooks, DefaultHooks, StatsStore
from .sweeper import SweepError

log = logging.getLogger(__name__)

STATS_FIELDS = ("step", "time", "level", "iteration", "key", "value")
EXIT_OK, EXIT_ABORT = 0, 2


def fmt(x) -> str:
    """Full double precision, locale independent."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_stats(path, entries):
    write_csv(path, STATS_FIELDS,
              ([e.step, e.time, e.level, e.iteration, e.key, e.value] for e in entries))


def read_stats(path) -> StatsStore:
    store = StatsStore()
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            store.record(step=int(row["step"]), time=float(row["time"]), level=int(row["level"]),
                         iteration=int(row["iteration"]), key=row["key"], value=float(row["value"]))
    return store


def load_run_stats(directory) -> StatsStore:
    """Stats of one run directory, timings merged back in when present."""
    directory = Path(directory)
    store = read_stats(directory / "stats.csv")
    timings = directory / "timings.csv"
    if timings.exists():
        for e in read_stats(timings).sorted():
            store.record(e)
    return store


@dataclass
class RunResult:
    name: str
    u_end: object
    stats: StatsStore
    controller: Controller
    final_error: float | None

    def iterations(self):
        return [int(e.value) for e in self.stats.filter("niter")]

    def converged(self, restol) -> bool:
        return all(e.value < restol for e in self.stats.filter("final_residual"))


def hooks_for(desc: Description):
    return AllenCahnHooks() if desc.problem_class == "allen_cahn2d" else DefaultHooks()


def build_controller(desc: Description, num_procs=None, mode=None, hooks=None, faults=None,
                     schedule=None) -> Controller:
    cfg = desc.controller_config(num_procs=num_procs, mode=mode)
    return Controller(desc.level_specs(), cfg, hooks=hooks or hooks_for(desc), faults=faults,
                      fault_schedule=schedule)


def run_description(desc: Description, name="", **overrides) -> RunResult:
    ctrl = build_controller(desc, **overrides)
    prob = ctrl.problem_template
    u_end, stats = ctrl.run(prob.u_init(desc.t0), desc.t0, desc.t_end)
    err = None
    if prob.has_exact:
        err = float(np.max(np.abs(np.asarray(u_end) - np.asarray(prob.exact(desc.t_end)))))
    return RunResult(name, u_end, stats, ctrl, err)


def reference_iterations(stats: StatsStore, num_procs: int) -> dict:
    """``(block, slot) -> iterations`` of a finished run."""
    blocks = {e.step: int(e.value) for e in stats.filter("block")}
    return {(blocks[e.step], e.step - blocks[e.step] * num_procs): int(e.value)
            for e in stats.filter("niter")}


def block_max_iterations(stats: StatsStore) -> dict:
    blocks = {e.step: int(e.value) for e in stats.filter("block")}
    out = {}
    for e in stats.filter("niter"):
        b = blocks[e.step]
        out[b] = max(out.get(b, 0), int(e.value))
    return out


@dataclass
class FaultStudy:
    reference: RunResult
    faulty: RunResult
    schedule: set
    k_add: dict


def run_fault_study(desc: Description, num_procs=None, seed=None) -> FaultStudy:
    """Fault-free reference run followed by the same run with injected faults."""
    fc = desc.fault_config()
    if fc is None:
        raise ValueError("description has no [faults] section")
    if seed is not None:
        fc = replace(fc, rng_seed=seed)
    ref = run_description(desc, "reference", num_procs=num_procs, mode="emulated")
    L = ref.controller.config.num_procs
    nblocks = max(block_max_iterations(ref.stats)) + 1
    maxiter = ref.controller.config.maxiter
    schedule = fault_schedule(fc.pattern(nblocks, L, maxiter), reference_iterations(ref.stats, L))
    faulty = run_description(desc, "faults", num_procs=num_procs, mode="emulated", faults=fc,
                             schedule=schedule)
    ref_max, bad_max = block_max_iterations(ref.stats), block_max_iterations(faulty.stats)
    k_add = {b: bad_max[b] - ref_max[b] for b in sorted(ref_max)}
    return FaultStudy(ref, faulty, schedule, k_add)


# -- output -------------------------------------------------------------------

def _restol(desc):
    r = desc.tree["level"]["restol"]
    return r[0] if isinstance(r, list) else r


def write_run(result: RunResult, desc: Description, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    entries = result.stats.sorted()
    plain = [e for e in entries if e.key not in TIMING_KEYS]
    write_stats(out / "stats.csv", plain)
    write_stats(out / "timings.csv", [e for e in entries if e.key in TIMING_KEYS])
    write_csv(out / "residuals.csv", ("step", "time", "level", "iteration", "residual"),
              ([e.step, e.time, e.level, e.iteration, e.value]
               for e in result.stats.filter("residual")))
    write_diagnostics(result, desc, out / "diagnostics.csv")
    (out / "config.toml").write_text(dump_config(desc))


def write_diagnostics(result: RunResult, desc: Description, path):
    st = result.stats
    if desc.problem_class == "allen_cahn2d":
        radius = {e.time: e.value for e in st.filter("radius")}
        exact = {e.time: e.value for e in st.filter("radius_exact")}
        width = {e.time: e.value for e in st.filter("interface_width")}
        write_csv(path, ("time", "radius", "radius_exact", "interface_width"),
                  ([t, radius[t], exact[t], width[t]] for t in sorted(radius)))
    elif "faults" in desc.tree:
        write_csv(path, ("block", "step", "iteration", "residual", "fault"),
                  residual_block_rows(st, result.controller.config.num_procs))
    else:
        final = {e.step: e.value for e in st.filter("final_residual")}
        write_csv(path, ("step", "time", "niter", "final_residual"),
                  ([e.step, e.time, int(e.value), final[e.step]] for e in st.filter("niter")))


def residual_block_rows(stats: StatsStore, num_procs: int):
    blocks = {e.step: int(e.value) for e in stats.filter("block")}
    faults = {(e.step, e.iteration) for e in stats.filter("fault")}
    rows = []
    for e in stats.filter("residual"):
        b = blocks.get(e.step, e.step // num_procs)
        rows.append([b, e.step - b * num_procs, e.iteration, e.value, int((e.step, e.iteration) in faults)])
    return sorted(rows)


SUMMARY_FIELDS = ("variant", "nsteps", "total_iterations", "mean_iterations", "max_iterations",
                  "max_final_residual", "converged", "final_error")


def summary_row(result: RunResult, desc: Description):
    its = result.iterations()
    fin = max(e.value for e in result.stats.filter("final_residual"))
    err = "" if result.final_error is None else fmt(result.final_error)
    return [result.name, len(its), sum(its), float(np.mean(its)), max(its), fin,
            str(result.converged(_restol(desc))).lower(), err]


def run_experiment(desc: Description, out_dir, num_procs=None, mode=None, seed=None) -> int:
    """Execute every variant (or the fault study) and write all outputs.

    Returns the process exit code: solver aborts give a nonzero code,
    non-convergence within ``maxiter`` is reported but exits with 0.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(dump_config(desc))
    rows = []
    try:
        if "faults" in desc.tree:
            study = run_fault_study(desc, num_procs=num_procs, seed=seed)
            for res in (study.reference, study.faulty):
                write_run(res, desc, out / res.name)
                rows.append(summary_row(res, desc))
            write_csv(out / "fault_summary.csv", ("block", "k_add", "faults"),
                      ([b, k, sum(1 for f in study.schedule if f[0] == b)]
                       for b, k in study.k_add.items()))
            diff = float(np.max(np.abs(study.faulty.u_end - study.reference.u_end)))
            log.warning("fault study: %d faults, K_add per block %s, end-state difference %.3e",
                        len(study.schedule), study.k_add, diff)
        else:
            for name, variant in desc.expand_variants():
                res = run_description(variant, name or "run", num_procs=num_procs, mode=mode)
                write_run(res, variant, out / name if name else out)
                rows.append(summary_row(res, variant))
    except (SolverError, SweepError, ControllerError) as exc:
        log.error("run aborted: %s", exc)
        write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
        return EXIT_ABORT
    write_csv(out / "summary.csv", SUMMARY_FIELDS, rows)
    for row in rows:
        line = dict(zip(SUMMARY_FIELDS, row))
        if line["converged"] != "true":
            log.warning("%s did not reach restol within maxiter", line["variant"] or "run")
        print(", ".join(f"{k}={v if isinstance(v, str) else fmt(v)}" for k, v in line.items()))
    return EXIT_OK


def wall_seconds(stats: StatsStore) -> float:
    runs = [e.value for e in stats.filter("timing_run", step=RUN_LEVEL)]
    return runs[0] if runs else float("nan")

