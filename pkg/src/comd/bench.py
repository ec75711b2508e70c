"""Benchmark harness: decomposition quality and wall time over a grid of
signals, solver configurations and window lengths.

A cell decomposes the trailing history buffer that precedes each selected
window position. Metric values are deterministic for a fixed corpus and
config; wall times are measured separately (one warm-up, then the median
of repeated runs on a monotonic clock) and are naturally run-to-run noisy.
"""
import csv
import json
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ComdError, InvalidInputError
from .metrics import accuracy, inject_noise
from .solver import SolverConfig, decompose
from .spectral import SampledSignal

DEFAULT_HISTORY = 256

ROW_COLUMNS = ("method", "window", "reports", "failures",
               "recon_median", "recon_p90", "orth_median", "orth_p90",
               "time_us_median", "time_us_p90")


@dataclass(frozen=True)
class BenchCell:
    """One (signal, config, window) measurement."""

    signal_index: int
    method: str
    window: int
    window_starts: Tuple[int, ...]
    reports: Tuple
    failures: Tuple           # (window start, message) pairs
    median_time_us: float


@dataclass(frozen=True)
class BenchResult:
    cells: Tuple[BenchCell, ...]
    rows: Tuple[dict, ...]


def _method_labels(configs: Sequence[SolverConfig]) -> list:
    kinds = [c.mode_kind.value for c in configs]
    labels = []
    for i, kind in enumerate(kinds):
        labels.append(kind if kinds.count(kind) == 1
                      else "%s#%d" % (kind, i))
    return labels


def _window_starts(n: int, window: int, history: int,
                   max_windows: int) -> list:
    """Window start offsets; each decomposition input is the history
    buffer samples[start-history : start]."""
    first = history
    last = n - window
    if last < first:
        # signal too short for history + window: one buffer from the start
        return [0]
    count = min(max_windows, last - first + 1)
    return sorted({int(s) for s in np.linspace(first, last, count)})


def _buffer(signal: SampledSignal, start: int, history: int) -> SampledSignal:
    if start == 0:
        stop = min(signal.n, history)
        return SampledSignal(signal.samples[:stop].copy(),
                             signal.sample_rate_hz)
    return SampledSignal(signal.samples[start - history:start].copy(),
                         signal.sample_rate_hz)


def _measure_cell(signal_index, signal, label, config, window, history,
                  max_windows):
    starts = _window_starts(signal.n, window, history, max_windows)
    reports = []
    failures = []
    timed_buffer = None
    for start in starts:
        buf = _buffer(signal, start, history)
        try:
            mode_set = decompose(buf, config)
        except ComdError as exc:
            failures.append((start, "%s: %s" % (type(exc).__name__, exc)))
            continue
        reports.append(mode_set.report)
        timed_buffer = buf
    return (BenchCell(signal_index=signal_index, method=label, window=window,
                      window_starts=tuple(starts), reports=tuple(reports),
                      failures=tuple(failures), median_time_us=math.nan),
            timed_buffer)


def _time_cell(buf: SampledSignal, config: SolverConfig,
               repetitions: int) -> float:
    decompose(buf, config)  # warm-up, excluded
    samples_us = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        decompose(buf, config)
        samples_us.append((time.perf_counter_ns() - t0) / 1000.0)
    return float(statistics.median(samples_us))


def _aggregate(cells, labels, window_grid) -> list:
    rows = []
    for label in labels:
        for window in window_grid:
            group = [c for c in cells
                     if c.method == label and c.window == window]
            recon = [r.recon_rel_error for c in group for r in c.reports]
            orth = [r.orth_residual for c in group for r in c.reports]
            times = [c.median_time_us for c in group
                     if not math.isnan(c.median_time_us)]
            row = {"method": label, "window": int(window),
                   "reports": len(recon),
                   "failures": sum(len(c.failures) for c in group)}
            for key, values in (("recon", recon), ("orth", orth)):
                row[key + "_median"] = (float(np.median(values))
                                        if values else math.nan)
                row[key + "_p90"] = (float(np.percentile(values, 90))
                                     if values else math.nan)
            row["time_us_median"] = (float(np.median(times))
                                     if times else math.nan)
            row["time_us_p90"] = (float(np.percentile(times, 90))
                                  if times else math.nan)
            rows.append(row)
    return rows


def bench_matrix(corpus: Sequence[SampledSignal],
                 configs: Sequence[SolverConfig],
                 window_grid: Sequence[int],
                 history: int = DEFAULT_HISTORY,
                 repetitions: Optional[int] = None,
                 max_windows: int = 4,
                 jobs: int = 1) -> BenchResult:
    """Decompose every (signal, config, window) cell and aggregate.

    repetitions=None picks 100 timing runs for windows up to 100 samples
    and 20 beyond that. max_windows caps how many slide positions per cell
    contribute report rows. Metric passes may fan out over `jobs` workers;
    the timing pass always runs serially after them.
    """
    corpus = list(corpus)
    configs = list(configs)
    window_grid = [int(w) for w in window_grid]
    if not corpus:
        raise InvalidInputError("empty corpus")
    if not configs or not window_grid:
        raise InvalidInputError("need at least one config and one window")
    if any(w < 1 for w in window_grid):
        raise InvalidInputError("window lengths must be >= 1")
    if history < 2:
        raise InvalidInputError("history must span at least 2 samples")
    labels = _method_labels(configs)

    tasks = []
    for ci, (label, config) in enumerate(zip(labels, configs)):
        for window in window_grid:
            for si, signal in enumerate(corpus):
                tasks.append((si, signal, label, config, window))

    def run(task):
        si, signal, label, config, window = task
        return _measure_cell(si, signal, label, config, window,
                             history, max_windows)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            measured = list(pool.map(run, tasks))
    else:
        measured = [run(t) for t in tasks]

    # timing cells run serially to keep the medians free of pool contention
    cells = []
    for (si, signal, label, config, window), (cell, buf) in zip(tasks, measured):
        if buf is not None:
            reps = repetitions
            if reps is None:
                reps = 100 if window <= 100 else 20
            timed = _time_cell(buf, config, reps)
            cell = BenchCell(signal_index=cell.signal_index,
                             method=cell.method, window=cell.window,
                             window_starts=cell.window_starts,
                             reports=cell.reports, failures=cell.failures,
                             median_time_us=timed)
        cells.append(cell)

    rows = _aggregate(cells, labels, window_grid)
    return BenchResult(cells=tuple(cells), rows=tuple(rows))


def snr_sweep(signal: SampledSignal, config: SolverConfig,
              snr_values: Sequence[float], seed: int = 0) -> list:
    """Decompose noisy copies of the signal at each SNR and score the
    reconstruction against the clean input."""
    rows = []
    for snr_db in snr_values:
        noisy = inject_noise(signal, float(snr_db), seed=seed)
        mode_set = decompose(noisy, config)
        total = mode_set.modes[0].samples.copy()
        for mode in mode_set.modes[1:]:
            total += mode.samples
        score = accuracy(SampledSignal(total, signal.sample_rate_hz), signal)
        rows.append({"snr_db": float(snr_db),
                     "accuracy_percent": score.percent,
                     "recon_rel_error": mode_set.report.recon_rel_error,
                     "orth_residual": mode_set.report.orth_residual})
    return rows


def write_bench_csv(path, result: BenchResult) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=ROW_COLUMNS)
        writer.writeheader()
        for row in result.rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v
                             for k, v in row.items()})


def write_bench_json(path, result: BenchResult) -> None:
    def cell_payload(cell):
        return {"signal_index": cell.signal_index, "method": cell.method,
                "window": cell.window,
                "window_starts": list(cell.window_starts),
                "reports": [r.to_dict() for r in cell.reports],
                "failures": [list(f) for f in cell.failures],
                "median_time_us": cell.median_time_us}

    payload = {"rows": [dict(r) for r in result.rows],
               "cells": [cell_payload(c) for c in result.cells]}
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, allow_nan=True)
        handle.write("\n")
