"""Figure data as CSV plus a rendered PNG next to it."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .experiment import load_run_stats, residual_block_rows, wall_seconds, write_csv
from .stats import StatsStore, WIDTH_DELTA

KINDS = ("radius", "width", "residual_blocks", "iterations_timings")
WIDTH_REFERENCE = 7.0  # interface width in units of eps the tanh profile measures


class PlotError(ValueError):
    pass


def discover_runs(directory) -> dict[str, StatsStore]:
    """All run directories below ``directory`` keyed by variant name."""
    directory = Path(directory)
    runs = {}
    if (directory / "stats.csv").exists():
        runs[""] = load_run_stats(directory)
    for sub in sorted(p for p in directory.iterdir() if p.is_dir()):
        if (sub / "stats.csv").exists():
            runs[sub.name] = load_run_stats(sub)
    if not runs:
        raise PlotError(f"no stats.csv found in {directory}")
    return runs


def _series(stats, key):
    entries = stats.filter(key)
    return [e.time for e in entries], [e.value for e in entries]


def emit_plotdata(source, kind: str, out_dir=None, num_procs=None) -> list[Path]:
    """Write the data behind one figure type and render it.

    Args:
        source: run output directory, a single stats store or a mapping from
            variant name to stats store.
        kind: one of ``radius``, ``width``, ``residual_blocks`` or
            ``iterations_timings``.
        out_dir: destination; defaults to ``source`` when that is a directory.
        num_procs: steps per block, only needed for ``residual_blocks`` when
            the stats carry no block numbers.

    Returns:
        Paths of the CSV and PNG files written.
    """
    if kind not in KINDS:
        raise PlotError(f"unknown plot kind {kind!r}, choose from {KINDS}")
    if isinstance(source, (str, Path)):
        runs = discover_runs(source)
        out_dir = Path(out_dir or source)
    else:
        runs = {"": source} if isinstance(source, StatsStore) else dict(source)
        if out_dir is None:
            raise PlotError("out_dir is required when passing stats directly")
        out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path, png_path = out_dir / f"plot_{kind}.csv", out_dir / f"plot_{kind}.png"
    _EMITTERS[kind](runs, csv_path, png_path, num_procs)
    return [csv_path, png_path]


def _figure(**kw):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt, *plt.subplots(**{"figsize": (6.0, 4.0), **kw})


def _variant_columns(runs, key):
    names = [n for n, s in runs.items() if s.filter(key)]
    if not names:
        raise PlotError(f"no {key!r} statistics found")
    times, _ = _series(runs[names[0]], key)
    cols = {}
    for n in names:
        t, v = _series(runs[n], key)
        if not np.allclose(t, times):
            raise PlotError(f"variant {n!r} has different output times")
        cols[n] = v
    return times, cols


def _label(name, default):
    return name if name else default


def _emit_radius(runs, csv_path, png_path, _):
    times, cols = _variant_columns(runs, "radius")
    exact = _series(runs[next(iter(cols))], "radius_exact")[1]
    header = ["time"] + [_label(n, "radius") for n in cols] + ["radius_exact"]
    write_csv(csv_path, header, ([t, *(c[i] for c in cols.values()), exact[i]]
                                 for i, t in enumerate(times)))
    plt, fig, ax = _figure()
    for n, v in cols.items():
        ax.plot(times, v, label=_label(n, "computed"))
    ax.plot(times, exact, "k--", label="exact")
    ax.set_xlabel("time")
    ax.set_ylabel("radius")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def _emit_width(runs, csv_path, png_path, _):
    times, cols = _variant_columns(runs, "interface_width")
    header = ["time"] + [_label(n, "width") for n in cols] + ["reference"]
    write_csv(csv_path, header, ([t, *(c[i] for c in cols.values()), WIDTH_REFERENCE]
                                 for i, t in enumerate(times)))
    plt, fig, ax = _figure()
    for n, v in cols.items():
        ax.plot(times, v, label=_label(n, "computed"))
    ax.axhline(WIDTH_REFERENCE, color="k", ls="--", label=f"{WIDTH_REFERENCE:g} eps")
    ax.set_xlabel("time")
    ax.set_ylabel(f"interface width / eps (delta={WIDTH_DELTA})")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def _emit_residual_blocks(runs, csv_path, png_path, num_procs):
    # a fault study holds reference/ and faults/; show the faulty run
    name = "faults" if "faults" in runs else next(iter(runs))
    stats = runs[name]
    if num_procs is None:
        blocks = {e.step: int(e.value) for e in stats.filter("block")}
        if not blocks:
            raise PlotError("stats carry no block numbers, pass num_procs")
        per_block = {}
        for b in blocks.values():
            per_block[b] = per_block.get(b, 0) + 1
        num_procs = max(per_block.values())
    rows = residual_block_rows(stats, num_procs)
    write_csv(csv_path, ("block", "step", "iteration", "residual", "fault"), rows)
    nblocks = max(r[0] for r in rows) + 1
    plt, fig, axes = _figure(ncols=nblocks, figsize=(4.0 * nblocks, 3.5), squeeze=False)
    maxit = max(r[2] for r in rows)
    for b in range(nblocks):
        grid = np.full((num_procs, maxit), np.nan)
        for blk, slot, it, res, _f in rows:
            if blk == b:
                grid[slot, it - 1] = np.log10(max(res, 1e-300))
        ax = axes[0, b]
        im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis",
                       extent=(0.5, maxit + 0.5, -0.5, num_procs - 0.5))
        for blk, slot, it, _r, f in rows:
            if blk == b and f:
                ax.plot(it, slot, "r*", ms=9)
        ax.set_title(f"block {b}")
        ax.set_xlabel("iteration")
        ax.set_ylabel("step in block")
        fig.colorbar(im, ax=ax, label="log10 residual")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def _emit_iterations_timings(runs, csv_path, png_path, _):
    rows = []
    for name, stats in runs.items():
        its = [e.value for e in stats.filter("niter")]
        if its:
            rows.append([_label(name, "run"), float(np.mean(its)), wall_seconds(stats)])
    if not rows:
        raise PlotError("no iteration statistics found")
    write_csv(csv_path, ("variant", "mean_iterations", "wall_seconds"), rows)
    plt, fig, ax = _figure(figsize=(max(6.0, 0.9 * len(rows)), 4.0))
    x = np.arange(len(rows))
    ax.bar(x - 0.2, [r[2] for r in rows], 0.4, color="tab:blue", label="wall time")
    ax.set_ylabel("wall time [s]")
    ax2 = ax.twinx()
    ax2.bar(x + 0.2, [r[1] for r in rows], 0.4, color="tab:red", label="mean iterations")
    ax2.set_ylabel("mean iterations")
    ax.set_xticks(x, [r[0] for r in rows], rotation=45, ha="right", fontsize="small")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


_EMITTERS = {
    "radius": _emit_radius,
    "width": _emit_width,
    "residual_blocks": _emit_residual_blocks,
    "iterations_timings": _emit_iterations_timings,
}
