"""Command-line entry point.

Subcommands: scan, fit, translate, generate, synthesize, compare, report.
Exit codes: 0 success, 1 model or fit failure, 2 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import report
from .config import load_inputs
from .errors import AmrProxyError, InputError, ModelError, PartialGeneration
from .generator import (
    INTERFACE,
    GeneratorSpec,
    command_line,
    generate,
    load_spec,
    spec_to_text,
)
from .model import DEFAULT_BOUNDS, DEFAULT_F, DEFAULT_RESOLUTION, fit_growth_grid, fit_loglinear
from .model import part_size_model, translate
from .oracle import load_profile, synthesize_run
from .scan import scan_plotfile_tree, to_csv, write_csv

log = logging.getLogger("amrproxy")

EXIT_OK, EXIT_MODEL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _write_text(path, text):
    with open(path, "w", newline="") as f:
        f.write(text)


def _read_text(path):
    try:
        with open(path) as f:
            return f.read()
    except FileNotFoundError:
        raise InputError(f"path not found: {path}") from None


def _emit(args, text):
    if not args.quiet:
        sys.stdout.write(text)


def _deck_ncells(args):
    if getattr(args, "deck", None):
        return load_inputs(args.deck).ncells
    return None


def cmd_scan(args):
    table = scan_plotfile_tree(args.root, include_metadata=not args.no_metadata)
    ncells = _deck_ncells(args)
    if args.by is not None:
        text = report.rows_to_csv(*report.aggregate_rows(table, args.by, ncells))
    else:
        text = to_csv(table)
    if args.csv:
        _write_text(args.csv, text)
    else:
        _emit(args, text)
    if args.series:
        _write_text(args.series, report.rows_to_csv(*report.series_rows(table, ncells)))
    if args.svg:
        # the chart is drawn from the aggregated CSV; default to the per-dump view
        view = text if args.by is not None else report.rows_to_csv(
            *report.aggregate_rows(table, "step", ncells))
        _write_text(args.svg, report.aggregate_svg(view))
    return EXIT_OK


def cmd_fit(args):
    observed = report.read_series(_read_text(args.series))
    nprocs = args.nprocs
    if args.loglinear:
        fit = fit_loglinear(observed)
    else:
        if args.base is not None:
            base = args.base
        elif args.deck:
            if nprocs is None:
                raise InputError("--deck needs --nprocs to size the base dump")
            cfg = load_inputs(args.deck)
            nx, ny = cfg.n_cell[0], cfg.ncells // cfg.n_cell[0]
            base = nprocs * part_size_model(nx, ny, nprocs, args.f)
        else:
            raise InputError("give --base BYTES, --deck with --nprocs, or --loglinear")
        fit = fit_growth_grid(observed, base, tuple(args.bounds), args.resolution)
    _emit(args, report.fit_text(fit, len(observed), nprocs))
    if args.csv or args.svg:
        text = report.rows_to_csv(*report.fit_rows(fit, observed))
        if args.csv:
            _write_text(args.csv, text)
        if args.svg:
            _write_text(args.svg, report.fit_svg(text))
    return EXIT_OK


def cmd_translate(args):
    cfg = load_inputs(args.deck, nprocs=args.nprocs)
    spec = translate(cfg, f=args.f, g=args.growth, compute_time=args.compute_time,
                     meta_size=args.meta_size, initial_dump=not args.no_initial_dump,
                     seed=args.seed, out_root=args.out or "")
    _emit(args, command_line(spec) + "\n")
    if args.spec:
        _write_text(args.spec, spec_to_text(spec))
    return EXIT_OK


_GEN_FLAGS = {
    "interface": "interface",
    "num_dumps": "num_dumps",
    "part_size": "part_size",
    "avg_num_parts": "avg_num_parts",
    "vars_per_part": "vars_per_part",
    "compute_time": "compute_time",
    "meta_size": "meta_size",
    "dataset_growth": "data_growth",
}


def _spec_from_args(args) -> GeneratorSpec:
    overrides = {field: getattr(args, flag) for flag, field in _GEN_FLAGS.items()
                 if getattr(args, flag) is not None}
    if args.parallel_file_mode is not None:
        mode, n = args.parallel_file_mode
        try:
            overrides["nprocs"] = int(n)
        except ValueError:
            raise InputError(f"--parallel_file_mode nprocs must be an integer, got {n!r}") from None
        overrides["parallel_file_mode"] = mode
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out:
        overrides["out_root"] = args.out

    if args.spec:
        return replace(load_spec(args.spec), **overrides)
    for needed in ("nprocs", "num_dumps", "part_size"):
        if needed not in overrides:
            raise InputError("without --spec, --parallel_file_mode MIF <n>, --num_dumps and "
                             "--part_size are required")
    return GeneratorSpec(**overrides)


def cmd_generate(args):
    spec = _spec_from_args(args)
    try:
        rep = generate(spec, force=args.force)
    except PartialGeneration as e:
        if args.manifest:
            with open(args.manifest, "w", newline="") as f:
                e.report.write_manifest(f)
        raise
    _emit(args, rep.summary())
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            rep.write_csv(f)
    if args.manifest:
        with open(args.manifest, "w", newline="") as f:
            rep.write_manifest(f)
    return EXIT_OK


def cmd_synthesize(args):
    profile = load_profile(args.profile)
    if args.seed is not None:
        profile = replace(profile, seed=args.seed)
    table = synthesize_run(profile, args.out, force=args.force)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            write_csv(table, f)
    _emit(args, f"files = {len(table)}\nbytes = {sum(r.bytes for r in table.records)}\n")
    return EXIT_OK


def cmd_compare(args):
    observed = report.read_series(_read_text(args.observed))
    spec = load_spec(args.spec)
    rep = report.compare(observed, report.modeled_per_dump(spec))
    text = rep.to_csv()
    if args.csv:
        _write_text(args.csv, text)
    if args.svg:
        _write_text(args.svg, report.compare_svg(text))
    summary = rep.summary()
    if args.window:
        lo, hi = args.window
        summary += (f"window = {lo} {hi}\n"
                    f"window_mean_abs_relative_error = {rep.mean_abs_error(lo, hi):.6g}\n")
    _emit(args, summary)
    return EXIT_OK


def cmd_report(args):
    svg_text = report.svg_for_csv(_read_text(args.table))
    if args.svg:
        _write_text(args.svg, svg_text)
    else:
        _emit(args, svg_text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--csv", metavar="PATH", help="write the tabular result here")
    common.add_argument("--svg", metavar="PATH", help="write a chart of the result here")
    common.add_argument("--seed", type=int, default=None, help="payload / jitter seed")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    p = _Parser(prog="amrproxy", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scan", parents=[common], help="tabulate a plotfile tree")
    s.add_argument("root")
    s.add_argument("--by", metavar="AXES", default=None,
                   help="comma-separated subset of step,level,task to aggregate over")
    s.add_argument("--no-metadata", action="store_true",
                   help="count only Cell_D data files")
    s.add_argument("--deck", help="input deck; adds cumulative base-level cells")
    s.add_argument("--series", metavar="PATH", help="also write per-dump totals")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("fit", parents=[common], help="calibrate the growth factor")
    s.add_argument("series", help="per-dump series CSV or size-table CSV")
    how = s.add_mutually_exclusive_group()
    how.add_argument("--base", type=float, help="dump-0 total bytes, held fixed")
    how.add_argument("--loglinear", action="store_true", help="least squares on log sizes")
    s.add_argument("--deck", help="derive --base from the deck's base mesh")
    s.add_argument("--nprocs", type=int)
    s.add_argument("--f", type=float, default=DEFAULT_F, help="size correction factor")
    s.add_argument("--bounds", type=float, nargs=2, default=list(DEFAULT_BOUNDS),
                   metavar=("LO", "HI"))
    s.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("translate", parents=[common], help="map a deck to generator arguments")
    s.add_argument("deck")
    s.add_argument("--nprocs", type=int, required=True)
    s.add_argument("--f", type=float, default=DEFAULT_F)
    s.add_argument("--growth", "--dataset_growth", dest="growth", type=float, default=1.0)
    s.add_argument("--compute_time", "--compute-time", dest="compute_time", type=float,
                   default=0.0)
    s.add_argument("--meta_size", "--meta-size", dest="meta_size", type=int, default=0)
    s.add_argument("--no-initial-dump", action="store_true",
                   help="count max_step/plot_int dumps, without the step-0 dump")
    s.add_argument("--spec", metavar="PATH", help="write the generator spec file")
    s.add_argument("--out", help="output directory recorded in the spec")
    s.set_defaults(func=cmd_translate, seed=0)

    s = sub.add_parser("generate", parents=[common], help="write the synthetic N-to-N tree")
    s.add_argument("--spec", metavar="PATH", help="spec file from translate")
    s.add_argument("--interface", choices=[INTERFACE])
    s.add_argument("--parallel_file_mode", nargs=2, metavar=("MODE", "NPROCS"))
    s.add_argument("--num_dumps", type=int)
    s.add_argument("--part_size", type=float)
    s.add_argument("--avg_num_parts", type=int)
    s.add_argument("--vars_per_part", type=int)
    s.add_argument("--compute_time", type=float)
    s.add_argument("--meta_size", type=int)
    s.add_argument("--dataset_growth", type=float)
    s.add_argument("--out")
    s.add_argument("--force", action="store_true", help="replace existing data/ and metadata/")
    s.add_argument("--manifest", metavar="PATH", help="write path,bytes for every file")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("synthesize", parents=[common], help="write an oracle plotfile tree")
    s.add_argument("profile")
    s.add_argument("--out", required=True)
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("compare", parents=[common], help="observed vs modeled cumulative output")
    s.add_argument("observed", help="per-dump series CSV or size-table CSV")
    s.add_argument("spec", help="generator spec file")
    s.add_argument("--window", type=int, nargs=2, metavar=("FIRST", "LAST"),
                   help="also report mean |relative error| over these dumps")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("report", parents=[common], help="redraw the chart for a CSV")
    s.add_argument("table", help="any CSV written by scan, fit or compare")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ModelError as e:
        print(f"amrproxy {args.command}: {e}", file=sys.stderr)
        return EXIT_MODEL
    except (InputError, OSError, ValueError) as e:
        print(f"amrproxy {args.command}: {e}", file=sys.stderr)
        return EXIT_INPUT
    except AmrProxyError as e:
        print(f"amrproxy {args.command}: {e}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
