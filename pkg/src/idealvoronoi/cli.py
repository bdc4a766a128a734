"""Command-line runner: sampling, harnesses, tessellation export and rendering.

Exit codes: 0 success, 1 harness failure, 2 usage error, 3 file I/O error.
"""
from __future__ import annotations

import argparse
import io
import math
import shlex
import sys

import numpy as np

from . import __version__
from . import hyperbolic as hyp
from .harness import TestReport, write_jsonl
from .ipvt import (
    BoxEvent,
    DEFAULT_MIXING_EVENT,
    convergence_experiment,
    format_ideal,
    ipvt_family,
    mixing_experiment,
    sample_ipvt,
)
from .measure import (
    BoundaryHeights,
    EuclideanBox,
    HyperbolicDisk,
    IntensityMeasure,
    SeedStream,
    format_configuration,
    sample_poisson,
)
from .process import (
    CensoredBoundaryError,
    IndependentMark,
    MeckeFunction,
    RIsolated,
    apply_thinning,
    fullness_verdict,
    mecke_two_sided,
    palm_inclusion_probability,
    renyi_recurrence,
)
from .render import render_disk
from .tessellation import DistanceFamily, adjacency_probe, assign, grid

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(kind=float):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value

    return parse


def _nonneg(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative: {text!r}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _add_space(p, required=True):
    p.add_argument("--space", choices=["euclidean", "hyperbolic", "heights"], required=required)
    p.add_argument("--box", default="1x1", help="euclidean side lengths, e.g. 1x1 or 10")
    p.add_argument("--radius", type=_positive(), default=3.0, help="hyperbolic disk radius")
    p.add_argument("--smax", type=float, default=0.0, help="height ceiling for the heights space")
    p.add_argument("--intensity", type=_positive(), default=1.0)


def _space(args):
    if args.space == "euclidean":
        try:
            sides = [float(v) for v in args.box.lower().split("x")]
        except ValueError:
            raise UsageError(f"bad --box {args.box!r}") from None
        if not sides or any(not v > 0 for v in sides):
            raise UsageError("--box sides must be positive")
        return EuclideanBox.from_sides(*sides)
    if args.space == "hyperbolic":
        return HyperbolicDisk(args.radius)
    return BoundaryHeights(args.smax)


def _region(args, window, reach=0.0, target=2.0):
    """Explicit ``--region``, or a central region of mass ``target`` inside
    the window eroded by ``reach``."""
    text = args.region
    volume = target / args.intensity
    if isinstance(window, EuclideanBox):
        if text:
            lo, hi = text.split(":")
            return EuclideanBox([float(v) for v in lo.split(",")], [float(v) for v in hi.split(",")])
        core = window.eroded(reach) if reach else window
        centre = (np.asarray(core.lower) + core.upper) / 2
        factor = min(1.0, (volume / core.canonical_mass()) ** (1.0 / core.dim))
        half = core.sides * factor / 2
        return EuclideanBox(centre - half, centre + half)
    if isinstance(window, HyperbolicDisk):
        if text:
            return HyperbolicDisk(float(text))
        radius = 2 * math.asinh(math.sqrt(volume / (4 * math.pi)))
        return HyperbolicDisk(min(radius, window.radius - reach))
    if text:
        lo, hi = (float(v) for v in text.split(","))
        return BoundaryHeights(hi, lo)
    top = math.exp(window.s_max)
    return BoundaryHeights(window.s_max, math.log(top - volume) if volume < top else -math.inf)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idealvoronoi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="Poisson sample on a window -> points file")
    _add_space(p)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mecke", help="Mecke two-sided and Renyi harnesses -> JSON lines")
    _add_space(p)
    p.add_argument("--family", choices=["indicator", "indicator-k", "isolated"], default="indicator")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--r", type=_nonneg, default=0.5)
    p.add_argument("--region", default=None, help="lo,..:hi,.. (box) | radius (disk) | s_min,s_max (heights)")
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--n", type=_positive(int), default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--z-threshold", type=_nonneg, default=3.0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("thin", help="apply a thinning, probe Palm inclusion, or classify fullness")
    _add_space(p)
    p.add_argument("--rule", choices=["r-isolated", "mark"], default="r-isolated")
    p.add_argument("--r", type=_nonneg, default=0.5)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--mode", choices=["apply", "palm", "verdict"], default="apply")
    p.add_argument("--x", type=_float_list, default=None, help="probe point for --mode palm")
    p.add_argument("--expect", choices=["empirically-full", "empirically-empty", "nontrivial"], default=None)
    p.add_argument("--expect-p", type=float, default=None)
    p.add_argument("--z-threshold", type=_nonneg, default=3.0)
    p.add_argument("--n", type=_positive(int), default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("voronoi", help="Voronoi assignment on a grid -> CSV (+ adjacency, SVG)")
    p.add_argument("--space", choices=["euclidean", "hyperbolic"], required=True)
    p.add_argument("--box", default="1x1")
    p.add_argument("--radius", type=_positive(), default=2.0)
    p.add_argument("--intensity", type=_positive(), default=10.0)
    p.add_argument("--grid-h", type=_positive(), default=0.05)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--adjacency-out", default=None)
    p.add_argument("--svg", default=None)

    p = sub.add_parser("ipvt", help="ideal Poisson Voronoi tessellation tools")
    isub = p.add_subparsers(dest="ipvt_command", required=True)
    q = isub.add_parser("sample")
    q.add_argument("--rvalid", type=_positive(), default=2.0)
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--out", required=True)
    q = isub.add_parser("converge")
    q.add_argument("--intensities", type=_float_list, default=[1e-1, 1e-2, 1e-3])
    q.add_argument("--rquery", type=_positive(), default=1.0)
    q.add_argument("--queries", type=_positive(int), default=64)
    q.add_argument("--floor", type=float, default=None, help="override the frozen regression floor")
    q.add_argument("--n", type=_positive(int), default=10_000)
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--out", default=None)
    q = isub.add_parser("mixing")
    q.add_argument("--L-list", dest="lengths", type=_float_list, default=[0.0, 5.0, 10.0, 20.0])
    q.add_argument("--box", type=_float_list, default=None, help="angle_lo,angle_hi,s_lo,s_hi")
    q.add_argument("--axis", type=float, default=math.pi / 2)
    q.add_argument("--n", type=_positive(int), default=10_000)
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--out", default=None)
    q = isub.add_parser("render")
    q.add_argument("--rvalid", type=_positive(), default=4.0)
    q.add_argument("--grid-h", type=_positive(), default=0.02)
    q.add_argument("--size", type=_positive(int), default=600)
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--out", required=True)
    return parser


def _header(argv) -> list[str]:
    seed = "none"
    for i, a in enumerate(argv):
        if a == "--seed" and i + 1 < len(argv):
            seed = argv[i + 1]
        elif a.startswith("--seed="):
            seed = a.split("=", 1)[1]
    return [f"command: idealvoronoi {shlex.join(argv)}", f"seed: {seed}", f"version: {__version__}"]


def _hash_header(argv) -> str:
    return "".join(f"# {line}\n" for line in _header(argv))


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _reports_text(argv, reports) -> str:
    buf = io.StringIO()
    buf.write(_hash_header(argv))
    write_jsonl(reports, buf)
    return buf.getvalue()


def _redecide(report: TestReport, threshold: float) -> TestReport:
    if report.z is None:
        return report
    zs = report.z.values() if isinstance(report.z, dict) else [report.z]
    report.decision = "pass" if all(abs(z) < threshold for z in zs) else "fail"
    return report


def _cmd_sample(args, argv):
    config = sample_poisson(IntensityMeasure(_space(args), args.intensity), SeedStream(args.seed))
    _emit(_hash_header(argv) + format_configuration(config), args.out)
    return EXIT_OK


def _cmd_mecke(args, argv):
    window = _space(args)
    measure = IntensityMeasure(window, args.intensity)
    reach = args.r if args.family == "isolated" else 0.0
    target = float(max(args.k, 1)) if args.family == "indicator-k" else 2.0
    region = _region(args, window, reach, target)
    f = MeckeFunction(args.family, region, k=args.k, r=args.r)
    seed = SeedStream(args.seed)
    reports = [
        _redecide(mecke_two_sided(measure, f, args.n, seed.child(0)), args.z_threshold),
        _redecide(renyi_recurrence(measure, region, args.k_max, args.n, seed.child(1)), args.z_threshold),
    ]
    _emit(_reports_text(argv, reports), args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _rule(args):
    return RIsolated(args.r) if args.rule == "r-isolated" else IndependentMark(args.p)


def _cmd_thin(args, argv):
    window = _space(args)
    measure = IntensityMeasure(window, args.intensity)
    rule = _rule(args)
    seed = SeedStream(args.seed)
    if args.mode == "apply":
        config = sample_poisson(measure, seed.child(0))
        thinned = apply_thinning(rule, config, mark_seed=seed.child(1))
        _emit(_hash_header(argv) + format_configuration(thinned), args.out)
        return EXIT_OK
    if args.mode == "palm":
        if args.x is not None:
            x = np.asarray(args.x)
        elif isinstance(window, EuclideanBox):
            x = (np.asarray(window.lower) + window.upper) / 2
        else:
            x = np.zeros(2)
        report = palm_inclusion_probability(rule, measure, x, args.n, seed, expected=args.expect_p)
        report = _redecide(report, args.z_threshold)
    else:
        report = fullness_verdict(rule, measure, args.n, seed, expect=args.expect)
    _emit(_reports_text(argv, [report]), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def _box_to_square(points, window):
    """Affine map of a 1-D or 2-D box into [-1, 1]^2 for drawing."""
    pts = np.asarray(points, dtype=float)
    span = float(window.sides.max())
    if pts.shape[1] == 1:
        pts = np.column_stack([pts[:, 0], np.zeros(len(pts))])
        lo = np.array([window.lower[0], -span / 2])
    else:
        lo = np.asarray(window.lower)
    return 2 * (pts - lo) / span - 1, 2 / span


def _cmd_voronoi(args, argv):
    window = _space(args)
    if isinstance(window, EuclideanBox) and window.dim > 2:
        raise UsageError("voronoi supports 1-D and 2-D boxes only")
    seed = SeedStream(args.seed)
    sites = sample_poisson(IntensityMeasure(window, args.intensity), seed)
    if len(sites) == 0:
        print("no sites were sampled; increase --intensity", file=sys.stderr)
        return EXIT_FAIL
    family = DistanceFamily(sites)
    pts, _, mask = grid(window, args.grid_h)
    pts = pts[mask.ravel()]
    result = assign(family, pts)
    _emit(_hash_header(argv) + result.to_csv(), args.out)
    if args.adjacency_out:
        pairs = sorted(adjacency_probe(family, window, args.grid_h))
        _emit(_hash_header(argv) + "i,j\n" + "".join(f"{i},{j}\n" for i, j in pairs), args.adjacency_out)
    if args.svg:
        shown, h = result, args.grid_h
        if isinstance(window, EuclideanBox):
            scaled, factor = _box_to_square(pts, window)
            shown = type(result)(scaled, result.winner, result.margin, result.margin_infinite)
            h = args.grid_h * factor
        _emit(render_disk(shown, h=h, header=_header(argv)), args.svg)
    return EXIT_OK


def _cmd_ipvt(args, argv):
    seed = SeedStream(args.seed)
    if args.ipvt_command == "sample":
        ic = sample_ipvt(args.rvalid, seed)
        _emit(_hash_header(argv) + format_ideal(ic), args.out)
        return EXIT_OK
    if args.ipvt_command == "converge":
        floor = "frozen" if args.floor is None else args.floor
        report = convergence_experiment(args.intensities, args.rquery, args.queries, args.n, seed, floor=floor)
    elif args.ipvt_command == "mixing":
        event = DEFAULT_MIXING_EVENT if args.box is None else BoxEvent(*args.box)
        report = mixing_experiment(event, None, args.lengths, args.n, seed, axis=args.axis)
    else:
        ic = sample_ipvt(args.rvalid, seed)
        pts, _, mask = grid(HyperbolicDisk(args.rvalid), args.grid_h)
        pts = pts[mask.ravel()]
        result = assign(ipvt_family(ic), pts)
        _emit(render_disk(result, h=args.grid_h, size=args.size, header=_header(argv)), args.out)
        return EXIT_OK
    _emit(_reports_text(argv, [report]), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"sample": _cmd_sample, "mecke": _cmd_mecke, "thin": _cmd_thin, "voronoi": _cmd_voronoi,
            "ipvt": _cmd_ipvt}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, argv)
    except (UsageError, CensoredBoundaryError, ValueError, OverflowError, TypeError) as exc:
        print(f"idealvoronoi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"idealvoronoi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
