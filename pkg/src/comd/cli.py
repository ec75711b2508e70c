"""Command-line front end.

Subcommands: synth, decompose, gram, select-k, bench, snr-sweep,
export-for-predictor. Exit codes: 0 success, 1 usage error, 2 data or
format error, 3 convergence failure. All error text goes to stderr.
"""
import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

from .bench import bench_matrix, snr_sweep, write_bench_csv, write_bench_json
from .errors import (
    ComdError,
    ConvergenceError,
    DegenerateModesError,
    InvalidInputError,
    SchemaError,
    UsageError,
)
from .ortho import gram
from .signalio import (
    SynthRecipe,
    load_recipe,
    read_channels,
    read_modes,
    synthesize,
    write_channels,
    write_modes,
    write_report,
)
from .solver import SolverConfig, decompose, select_k_grid
from .spectral import SampledSignal

DEFAULT_SEED = 2024
DEFAULT_HISTORY = 256

METHOD_TO_KIND = {
    "vmd": "vmd_baseline",
    "comd-penalty": "comd_penalty_only",
    "comd": "comd_projected",
}

_CONFIG_FIELD_TYPES = {f.name: type(v)
                       for f, v in ((f, getattr(SolverConfig(), f.name))
                                    for f in fields(SolverConfig))}


def _eprint(message):
    print(message, file=sys.stderr)


def _formatter(prog):
    # fixed width keeps --help output identical across terminals
    return argparse.HelpFormatter(prog, width=79)


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise argparse.ArgumentTypeError("expected true or false, got %r" % text)


def parse_grid(text, kind):
    """Expand 'a..b[:step]' ranges and comma lists into a list of numbers."""
    values = []
    if not text or not text.strip():
        raise UsageError("empty grid expression")
    for item in text.split(","):
        item = item.strip()
        if ".." in item:
            span, _, step_text = item.partition(":")
            lo_text, _, hi_text = span.partition("..")
            try:
                lo = kind(lo_text)
                hi = kind(hi_text)
                step = kind(step_text) if step_text else kind(1)
            except ValueError:
                raise UsageError("bad range %r, expected a..b[:step]"
                                 % item) from None
            if step <= 0:
                raise UsageError("range step must be positive in %r" % item)
            if hi < lo:
                raise UsageError("descending range %r" % item)
            count = int((hi - lo) / step + 1e-9) + 1
            values.extend(kind(lo + i * step) for i in range(count))
        else:
            try:
                values.append(kind(item))
            except ValueError:
                raise UsageError("bad grid value %r" % item) from None
    return values


def _read_config_file(path):
    overrides = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError("cannot read config file %s: %s" % (path, exc))
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError("%s:%d: expected key = value" % (path, lineno))
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_FIELD_TYPES:
            raise UsageError("%s:%d: unknown config key %r"
                             % (path, lineno, key))
        target = _CONFIG_FIELD_TYPES[key]
        try:
            if target is bool:
                overrides[key] = _parse_bool(value)
            elif target is int:
                overrides[key] = int(value)
            elif target is float:
                overrides[key] = float(value)
            else:
                overrides[key] = value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError("%s:%d: %s" % (path, lineno, exc)) from None
    return overrides


SOLVER_FLAG_KEYS = ("k", "alpha", "beta", "tau_lambda", "tau_gamma", "tol",
                    "max_iters", "ns_every", "ns_tol", "ns_max_iters",
                    "omega_init", "sweep_order", "wiener_form",
                    "mirror_boundary", "reset_multipliers")


def _add_solver_flags(parser, with_method=True):
    g = parser.add_argument_group("solver options",
                                  "unset flags fall back to --config file "
                                  "entries, then built-in defaults")
    g.add_argument("--config", metavar="FILE",
                   help="key = value file of solver defaults; explicit "
                        "flags override file entries")
    g.add_argument("--k", type=int, help="number of modes")
    if with_method:
        g.add_argument("--method", choices=sorted(METHOD_TO_KIND),
                       help="decomposition variant (default comd)")
    g.add_argument("--alpha", type=float, help="bandwidth penalty weight")
    g.add_argument("--beta", type=float, help="orthogonality penalty weight")
    g.add_argument("--tau-lambda", type=float,
                   help="reconstruction dual ascent rate")
    g.add_argument("--tau-gamma", type=float,
                   help="orthogonality dual ascent rate")
    g.add_argument("--tol", type=float, help="sweep convergence tolerance")
    g.add_argument("--max-iters", type=int, help="sweep budget")
    g.add_argument("--ns-every", type=int,
                   help="project onto the orthogonal set every N sweeps")
    g.add_argument("--ns-tol", type=float,
                   help="projection off-diagonal tolerance")
    g.add_argument("--ns-max-iters", type=int, help="projection budget")
    g.add_argument("--omega-init",
                   choices=["uniform_spread", "spectral_peaks", "zeros"],
                   help="center frequency initialization")
    g.add_argument("--sweep-order", choices=["gauss_seidel", "jacobi"],
                   help="per-sweep mode update order")
    g.add_argument("--wiener-form", choices=["bandwidth", "classic"],
                   help="denominator convention of the mode update")
    g.add_argument("--mirror-boundary", type=_parse_bool, metavar="BOOL",
                   help="mirror-extend the signal before decomposing")
    g.add_argument("--reset-multipliers", type=_parse_bool, metavar="BOOL",
                   help="zero the dual variables after each projection")


def _build_config(args, with_method=True):
    data = {}
    if getattr(args, "config", None):
        data.update(_read_config_file(args.config))
    for key in SOLVER_FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if with_method and getattr(args, "method", None):
        data["mode_kind"] = METHOD_TO_KIND[args.method]
    try:
        return SolverConfig.from_dict({**SolverConfig().to_dict(), **data})
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc


def _load_channel(path, name, rate=None):
    channels, _ = read_channels(path, sample_rate_hz=rate)
    if name not in channels:
        raise SchemaError("%s: no channel %r; available: %s"
                          % (path, name, ", ".join(sorted(channels))))
    return channels[name]


def cmd_synth(args):
    recipe = load_recipe(args.recipe)
    if args.seed is not None:
        recipe = SynthRecipe.from_dict({**recipe.to_dict(),
                                        "seed": args.seed})
    mixture, parts = synthesize(recipe)
    channels = {"mixture": mixture}
    for i, part in enumerate(parts):
        channels["truth_%d" % (i + 1)] = part
    write_channels(args.out, channels)
    print("wrote %s: mixture + %d truth channels, %d samples"
          % (args.out, len(parts), mixture.n))
    return 0


def cmd_decompose(args):
    config = _build_config(args)
    signal = _load_channel(args.infile, args.channel, args.rate)
    mode_set = decompose(signal, config)
    write_modes(args.out, mode_set, config)
    if args.report:
        write_report(args.report, mode_set.report, config)
    report = mode_set.report
    print("k=%d recon_rel_error=%.3e orth_residual=%.3e sweeps=%d"
          % (mode_set.k, report.recon_rel_error, report.orth_residual,
             report.iterations))
    return 0


def cmd_gram(args):
    mode_set = read_modes(args.modes)
    matrix = gram(list(mode_set.modes))
    for row in matrix.entries:
        print(" ".join("% .12e" % v for v in row))
    print("orth_residual=%r" % matrix.normalized_offdiag())
    return 0


def cmd_select_k(args):
    config = _build_config(args)
    signal = _load_channel(args.infile, args.channel, args.rate)
    grid = parse_grid(args.k_grid, int)
    best_k, entries = select_k_grid(signal, grid, config)
    print("k score recon_rel_error orth_residual note")
    for entry in entries:
        if entry.error is None:
            print("%d %.6e %.6e %.6e -"
                  % (entry.k, entry.score, entry.report.recon_rel_error,
                     entry.report.orth_residual))
        else:
            print("%d - - - %s" % (entry.k, type(entry.error).__name__))
    print("selected_k=%d" % best_k)
    return 0


def cmd_bench(args):
    # flags are validated before any file is touched
    base = _build_config(args, with_method=False)
    configs = []
    for method in args.methods.split(","):
        method = method.strip()
        if method not in METHOD_TO_KIND:
            raise UsageError("unknown method %r, expected %s"
                             % (method, "/".join(sorted(METHOD_TO_KIND))))
        configs.append(SolverConfig.from_dict(
            {**base.to_dict(), "mode_kind": METHOD_TO_KIND[method]}))
    windows = parse_grid(args.windows, int)
    corpus_dir = Path(args.corpus)
    if not corpus_dir.is_dir():
        raise InvalidInputError("corpus path %s is not a directory"
                                % args.corpus)
    signals = []
    names = []
    for path in sorted(corpus_dir.glob("*.csv")):
        channels, _ = read_channels(path, sample_rate_hz=args.rate)
        for name, signal in channels.items():
            signals.append(signal)
            names.append("%s:%s" % (path.name, name))
    if not signals:
        raise InvalidInputError("empty corpus: no csv channels under %s"
                                % args.corpus)
    result = bench_matrix(signals, configs, windows, history=args.history,
                          repetitions=args.reps, max_windows=args.max_windows,
                          jobs=args.jobs)
    write_bench_csv(args.out, result)
    json_path = Path(args.out).with_suffix(".json")
    write_bench_json(json_path, result)
    for i, name in enumerate(names):
        print("signal %d: %s" % (i, name))
    print("wrote %s and %s" % (args.out, json_path))
    return 0


def cmd_snr_sweep(args):
    config = _build_config(args)
    signal = _load_channel(args.infile, args.channel, args.rate)
    snrs = parse_grid(args.snr, float)
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    rows = snr_sweep(signal, config, snrs, seed=seed)
    with open(args.out, "w", newline="") as handle:
        import csv as _csv
        writer = _csv.DictWriter(handle, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) for k, v in row.items()})
    print("wrote %s (%d rows)" % (args.out, len(rows)))
    return 0


def cmd_export_for_predictor(args):
    channels, rate = read_channels(args.infile, sample_rate_hz=args.rate)
    if args.channel:
        if args.channel not in channels:
            raise SchemaError("%s: no channel %r" % (args.infile, args.channel))
        channels = {args.channel: channels[args.channel]}
    config = _build_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    history = args.history
    window = args.window
    manifest = {"window": window, "history": history, "k": config.k,
                "sample_rate_hz": rate, "config": config.to_dict(),
                "channels": {}}
    for name, signal in channels.items():
        if signal.n < history:
            raise InvalidInputError(
                "channel %r spans %d samples, shorter than the %d-sample "
                "history buffer" % (name, signal.n, history))
        files = []
        for stop in range(history, signal.n + 1, window):
            buf = SampledSignal(signal.samples[stop - history:stop].copy(),
                                rate)
            mode_set = decompose(buf, config)
            filename = "%s_pos%05d.csv" % (name, stop)
            write_modes(out_dir / filename, mode_set, config)
            files.append(filename)
        manifest["channels"][name] = files
    with open(out_dir / "manifest.json", "w") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    total = sum(len(v) for v in manifest["channels"].values())
    print("wrote %d mode files + manifest to %s" % (total, out_dir))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="comd",
        formatter_class=_formatter,
        description="Orthogonal mode decomposition toolkit: synthesize test "
                    "signals, decompose channels, inspect orthogonality, "
                    "select K, benchmark, and export mode windows.")
    subs = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")

    p = subs.add_parser("synth", formatter_class=_formatter,
                        help="render a recipe JSON into a channels CSV",
                        description="Render a synthesis recipe into a CSV "
                                    "holding the mixture and one truth "
                                    "channel per component.")
    p.add_argument("--recipe", required=True, metavar="FILE",
                   help="recipe JSON file")
    p.add_argument("--out", required=True, metavar="CSV", help="output file")
    p.add_argument("--seed", type=int, default=None,
                   help="override the recipe seed (default: recipe value, "
                        "or 2024)")
    p.set_defaults(handler=cmd_synth)

    p = subs.add_parser("decompose", formatter_class=_formatter,
                        help="decompose one channel into modes",
                        description="Decompose one channel of a CSV into "
                                    "modes; write the mode CSV and "
                                    "optionally a report JSON.")
    p.add_argument("--in", dest="infile", required=True, metavar="CSV",
                   help="input channels CSV")
    p.add_argument("--channel", required=True, help="channel name to read")
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate fallback when the file has no metadata "
                        "(default 1000)")
    p.add_argument("--out", required=True, metavar="CSV",
                   help="mode CSV output")
    p.add_argument("--report", metavar="JSON",
                   help="also write a report JSON here")
    _add_solver_flags(p)
    p.add_argument("--seed", type=int, default=None,
                   help="unused; accepted for uniformity (default 2024)")
    p.set_defaults(handler=cmd_decompose)

    p = subs.add_parser("gram", formatter_class=_formatter,
                        help="print the Gram matrix of a mode file",
                        description="Print the time-domain Gram matrix of a "
                                    "mode CSV and its normalized "
                                    "off-diagonal residual.")
    p.add_argument("--modes", required=True, metavar="CSV",
                   help="mode CSV to inspect")
    p.set_defaults(handler=cmd_gram)

    p = subs.add_parser("select-k", formatter_class=_formatter,
                        help="grid-search the mode count",
                        description="Decompose at every K in the grid, "
                                    "print the per-K table and the "
                                    "selected K.")
    p.add_argument("--in", dest="infile", required=True, metavar="CSV",
                   help="input channels CSV")
    p.add_argument("--channel", required=True, help="channel name to read")
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate fallback (default 1000)")
    p.add_argument("--k-grid", required=True, metavar="GRID",
                   help="K values, e.g. 2..8 or 2,3,5")
    _add_solver_flags(p, with_method=True)
    p.set_defaults(handler=cmd_select_k)

    p = subs.add_parser("bench", formatter_class=_formatter,
                        help="benchmark methods over a corpus",
                        description="Run every (signal, method, window) "
                                    "cell over all *.csv channels in the "
                                    "corpus directory; write an aggregate "
                                    "CSV and a JSON summary next to it.")
    p.add_argument("--corpus", required=True, metavar="DIR",
                   help="directory of channels CSV files")
    p.add_argument("--windows", required=True, metavar="GRID",
                   help="window lengths, e.g. 1,5,10,25,50,100")
    p.add_argument("--methods", required=True,
                   help="comma list of vmd/comd-penalty/comd")
    p.add_argument("--out", required=True, metavar="CSV",
                   help="aggregate table output; a .json summary is "
                        "written alongside")
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate fallback (default 1000)")
    p.add_argument("--history", type=int, default=DEFAULT_HISTORY,
                   help="history buffer length per window (default 256)")
    p.add_argument("--reps", type=int, default=None,
                   help="timing repetitions per cell (default: 100 for "
                        "windows up to 100 samples, else 20)")
    p.add_argument("--max-windows", type=int, default=4,
                   help="slide positions recorded per cell (default 4)")
    p.add_argument("--jobs", type=int, default=os.cpu_count(),
                   help="metric workers; timing always runs serially "
                        "(default: all logical cores)")
    _add_solver_flags(p, with_method=False)
    p.set_defaults(handler=cmd_bench)

    p = subs.add_parser("snr-sweep", formatter_class=_formatter,
                        help="decompose noisy copies over an SNR grid",
                        description="Add seeded noise at each SNR, "
                                    "decompose, and tabulate accuracy "
                                    "against the clean channel.")
    p.add_argument("--in", dest="infile", required=True, metavar="CSV",
                   help="input channels CSV")
    p.add_argument("--channel", required=True, help="channel name to read")
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate fallback (default 1000)")
    p.add_argument("--snr", required=True, metavar="GRID",
                   help="SNR grid in dB, e.g. 0..30:5")
    p.add_argument("--out", required=True, metavar="CSV", help="output table")
    p.add_argument("--seed", type=int, default=None,
                   help="noise seed (default 2024)")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_snr_sweep)

    p = subs.add_parser("export-for-predictor", formatter_class=_formatter,
                        help="write per-window mode files",
                        description="Slide a window over each channel, "
                                    "decompose the history buffer ending "
                                    "at each position, and write one mode "
                                    "CSV per position plus a manifest.")
    p.add_argument("--in", dest="infile", required=True, metavar="CSV",
                   help="input channels CSV")
    p.add_argument("--channel", default=None,
                   help="restrict to one channel (default: all)")
    p.add_argument("--rate", type=float, default=None,
                   help="sample rate fallback (default 1000)")
    p.add_argument("--out-dir", required=True, metavar="DIR",
                   help="output directory")
    p.add_argument("--window", type=int, default=100,
                   help="stride between exported positions (default 100)")
    p.add_argument("--history", type=int, default=DEFAULT_HISTORY,
                   help="history buffer length (default 256)")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_export_for_predictor)

    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if not hasattr(args, "handler"):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.handler(args)
    except UsageError as exc:
        _eprint("error: %s" % exc)
        return 1
    except (ConvergenceError, DegenerateModesError) as exc:
        _eprint("error: %s" % exc)
        return 3
    except (ComdError, OSError) as exc:
        _eprint("error: %s" % exc)
        return 2


def console_main():
    sys.exit(run())


if __name__ == "__main__":
    console_main()
