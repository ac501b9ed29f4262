"""Command-line interface.

Every subcommand takes --graph with one of three source forms: a preset
cycle (c3 .. c99), a composition shorthand (c3+c3 joins cycles by merging
vertices, c3-c4-c3 joins them through unit bridging edges), or a path to a
JSON graph file.  Exit status is 0 on success, 1 on usage errors (unknown
preset, malformed file, bad ranges), and 2 on numerical failures
(unresolved singularities, truncation that cannot certify, poles).

Numbers are printed with 17 significant digits and files are written
atomically, so identical invocations produce bit-identical output.
"""

from __future__ import annotations

import argparse
import os
import re
import sys

import numpy as np

from .analysis import (
    atomic_write_text,
    detect_peaks,
    peaks_to_json,
    sweep_to_csv,
    sweep_transmission,
)
from .compose import compose_series, parse_series_shorthand
from .graphs import load_graph, make_cycle_graph, scale_lengths, validate_graph
from .solver import extract_rational_amplitude, scattering_or_limit
from .walks import (
    coefficients_via_power_iteration,
    taylor_coefficients,
    walk_stats_by_quadrature,
    walk_stats_to_tolerance,
)

_PRESET_RE = re.compile(r"[cC](\d+)\Z")
_COMPOSITION_RE = re.compile(r"[cC]\d+([+-][cC]\d+)+\Z")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def resolve_graph(source: str, length_scale: float = 1.0):
    """Turn a --graph argument into a QuantumGraph.

    Presets win over compositions, compositions over file paths; the error
    message spells out all three forms when nothing matches.
    """
    graph = None
    m = _PRESET_RE.fullmatch(source.strip())
    if m:
        n = int(m.group(1))
        if not 3 <= n <= 99:
            raise ValueError(f"--graph: unknown preset {source!r} (presets are c3..c99)")
        graph = make_cycle_graph(n)
    elif _COMPOSITION_RE.fullmatch(source.strip()):
        graph = compose_series(parse_series_shorthand(source))
    elif os.path.exists(source):
        graph = load_graph(source)
    else:
        raise ValueError(
            f"--graph: {source!r} is not a preset (c3..c99), a composition "
            "(like c3+c3 or c3-c4-c3), or an existing graph file"
        )
    if length_scale != 1.0:
        graph = scale_lengths(graph, length_scale)
    return graph


def _threads_from_env() -> int:
    raw = os.environ.get("QGRAPH_THREADS", "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"QGRAPH_THREADS: expected an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"QGRAPH_THREADS: must be >= 1, got {n}")
    return n


def _graph_of(args):
    if args.length_scale <= 0:
        raise ValueError(f"--length-scale: must be positive, got {args.length_scale}")
    return resolve_graph(args.graph, args.length_scale)


def cmd_transmit(args) -> str:
    graph = _graph_of(args)
    res = scattering_or_limit(graph, args.kl)
    row = (res.kl, res.t_global.real, res.t_global.imag, res.t2, res.r2)
    return "kl,re_t,im_t,t2,r2\n" + ",".join(_fmt(v) for v in row) + "\n"


def cmd_sweep(args) -> str:
    graph = _graph_of(args)
    sweep = sweep_transmission(
        graph, args.kl_min, args.kl_max, args.samples, threads=_threads_from_env()
    )
    if args.format == "csv":
        return sweep_to_csv(sweep)
    t2, r2 = sweep.t2, sweep.r2
    rows = [
        "  {" + f'"kl": {_fmt(sweep.kl[i])}, "re_t": {_fmt(sweep.t[i].real)}, '
        f'"im_t": {_fmt(sweep.t[i].imag)}, "t2": {_fmt(t2[i])}, '
        f'"r2": {_fmt(r2[i])}' + "}"
        for i in range(len(sweep.kl))
    ]
    return "[\n" + ",\n".join(rows) + "\n]\n"


def cmd_walk(args) -> str:
    graph = _graph_of(args)
    if args.method == "series":
        series = taylor_coefficients(
            extract_rational_amplitude(graph), args.max_order
        )
    else:
        series = coefficients_via_power_iteration(graph, args.max_order)
    c = series.coefficients
    lines = ["m,re_c,im_c,p"]
    for m in range(len(c)):
        lines.append(
            f"{m},{_fmt(c[m].real)},{_fmt(c[m].imag)},{_fmt(abs(c[m]) ** 2)}"
        )
    return "\n".join(lines) + "\n"


def cmd_hitting(args) -> str:
    graph = _graph_of(args)
    amp = extract_rational_amplitude(graph)
    stats = walk_stats_to_tolerance(amp, tolerance=args.tolerance)
    quad = walk_stats_by_quadrature(amp)
    return (
        f"h = {_fmt(stats.hitting_time)}\n"
        f"p_out = {_fmt(stats.p_out)}\n"
        f"h_quadrature = {_fmt(quad.hitting_time)}\n"
        f"p_out_quadrature = {_fmt(quad.p_out)}\n"
    )


def cmd_peaks(args) -> str:
    graph = _graph_of(args)
    if args.resolution <= 0:
        raise ValueError(f"--resolution: must be positive, got {args.resolution}")
    if not (0 < args.kl_min < args.kl_max):
        raise ValueError(
            f"--kl-min/--kl-max: need 0 < min < max, got {args.kl_min}, {args.kl_max}"
        )
    samples = int(round((args.kl_max - args.kl_min) / args.resolution)) + 1
    sweep = sweep_transmission(
        graph, args.kl_min, args.kl_max, samples, threads=_threads_from_env()
    )
    peaks = detect_peaks(sweep, min_height=args.min_height)
    if args.format == "json":
        return peaks_to_json(peaks)
    lines = ["center,height,fwhm,band_lo,band_hi"]
    for p in peaks:
        lines.append(
            ",".join(_fmt(v) for v in (p.center, p.height, p.width, *p.band))
        )
    return "\n".join(lines) + "\n"


def cmd_validate(args) -> str:
    graph = _graph_of(args)
    return str(validate_graph(graph)) + "\n"


def build_parser() -> _Parser:
    parser = _Parser(prog="qgraph", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--graph", required=True,
                       help="preset (c3..c99), composition (c3+c3, c3-c4-c3), or JSON file")
        p.add_argument("--length-scale", type=float, default=1.0,
                       help="multiply all edge lengths (default 1)")
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.set_defaults(handler=handler)
        return p

    p = add("transmit", cmd_transmit, "two-port amplitudes at one wavenumber")
    p.add_argument("--kl", type=float, required=True, help="dimensionless wavenumber")

    p = add("sweep", cmd_sweep, "transmission over a uniform kl grid")
    p.add_argument("--kl-min", type=float, required=True)
    p.add_argument("--kl-max", type=float, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = add("walk", cmd_walk, "walk coefficients c_m and step probabilities")
    p.add_argument("--max-order", type=int, default=200)
    p.add_argument("--method", choices=("series", "power"), default="series",
                   help="rational-series recurrence or bond-map power iteration")

    p = add("hitting", cmd_hitting, "exit probability and conditional hitting time")
    p.add_argument("--tolerance", type=float, default=1e-8)

    p = add("peaks", cmd_peaks, "full-transmission peaks inside suppression bands")
    p.add_argument("--resolution", type=float, default=1e-4,
                   help="sweep grid spacing used for peak hunting")
    p.add_argument("--kl-min", type=float, default=0.01)
    p.add_argument("--kl-max", type=float, default=2.0 * np.pi - 0.01)
    p.add_argument("--min-height", type=float, default=0.99)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    add("validate", cmd_validate, "check graph invariants and report violations")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.handler(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"qgraph: error: {exc}", file=sys.stderr)
        return 1
    except ArithmeticError as exc:
        print(f"qgraph: numerical failure: {exc}", file=sys.stderr)
        return 2
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
