"""``gff-lab`` command-line entry point.

Every run writes its artifacts plus one JSON run manifest (command line,
seed, input and output SHA-256 digests, tool version, wall time).
``gff-lab replay MANIFEST`` reruns a manifest and checks that every output
is byte-identical.

Randomness: each command draws from the single ``--seed``.  Commands that
need several streams split it with :func:`gfflab.rng.child_seeds`
(SeedSequence spawning); no wall-clock entropy is used anywhere.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from . import __version__
from . import io as gio
from .analysis import box_dimension, mask_coordinates, thick_point_masks, variance_growth_rate
from .checks import SUITES, run_suite
from .errors import GFFError, InvalidInputError, InvalidLatticeError, NumericalError, ResourceError, UnsupportedGraphError
from .green import greens_by_walk, greens_matrix
from .lattice import build_box_lattice, build_grid, build_torus_grid, cotangent_weights
from .markov import boustrophedon_order, default_f0, explore
from .moments import empirical_moment, wick_moment
from .sampler import sample_dgff_direct, sample_massive, sample_torus_fft

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_THICK_T = 4.5
DEFAULT_SCALES = "4,8,16,32,64"


class UsageError(Exception):
    pass


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


# ---------------------------------------------------------------- commands


def cmd_sample(args) -> tuple[list, list]:
    if args.method == "fft" and args.lattice != "torus":
        raise UsageError("--method fft needs --lattice torus")
    if args.method == "fft" and args.mass2:
        raise UsageError("--method fft samples the massless field only")
    if args.calibrated and args.method != "fft":
        raise UsageError("--calibrated applies to --method fft")
    if args.mass2 < 0:
        raise UsageError("--mass2 must be non-negative")
    inputs = []
    if args.lattice == "box":
        g = build_box_lattice(args.d, args.n)
    elif args.lattice == "torus":
        if args.m is None:
            raise UsageError("--lattice torus needs --m and --n")
        g = build_torus_grid(args.m, args.n)
    else:
        if args.tri is None:
            raise UsageError("--lattice tri-file needs --tri FILE")
        g = cotangent_weights(gio.read_triangulation(args.tri))
        inputs.append(args.tri)
    if args.method == "fft":
        sample = sample_torus_fft(args.m, args.n, args.seed, calibrated=args.calibrated)
    elif args.mass2 > 0:
        sample = sample_massive(g, args.mass2, args.seed)
    else:
        sample = sample_dgff_direct(g, args.seed)
    out = Path(args.out)
    outputs = [out, gio.write_field(sample, out, {"lattice": args.lattice})]
    if args.pgm:
        if g.grid_shape is None or len(g.grid_shape) != 2:
            raise UsageError("--pgm needs a 2D grid lattice")
        outputs += [Path(args.pgm), gio.write_pgm(sample.grid(), args.pgm, {"field": out.name})]
    return inputs, outputs


def _report(checks) -> str:
    lines = []
    for c in checks:
        tag = "PASS" if c.passed else "FAIL"
        lines.append(f"[{tag}] {c.suite}: {c.name}: measured {c.measured:.6g}, oracle {c.oracle:.6g}, tolerance {c.tolerance}")
    n_ok = sum(c.passed for c in checks)
    lines.append(f"{n_ok}/{len(checks)} checks passed")
    return "\n".join(lines)


def cmd_verify(args) -> tuple[list, list]:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = run_suite(args.suite, grid=args.grid, samples=args.samples, seed=args.seed, d=args.d)
    out = Path(args.out or f"verify_{args.suite}.csv")
    rows = [[c.suite, c.name, c.measured, c.oracle, c.tolerance, "pass" if c.passed else "fail"] for c in checks]
    gio.write_csv(out, ["suite", "check", "measured", "oracle", "tolerance", "result"], rows)
    print(_report(checks))
    args._status = EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL
    return [], [out]


def cmd_green(args) -> tuple[list, list]:
    g = gio.read_graph(args.graph)
    out = Path(args.out)
    if args.exact == (args.walks is not None):
        raise UsageError("choose exactly one of --exact or --walks N")
    if args.exact:
        gio.write_green_csv(greens_matrix(g), out)
    else:
        if args.x is None or args.y is None:
            raise UsageError("--walks needs --x and --y")
        for v in (args.x, args.y):
            if not 0 <= v < g.n_vertices:
                raise UsageError(f"vertex {v} is not in the graph")
        est, se = greens_by_walk(g, args.x, args.y, args.walks, args.seed)
        gio.write_csv(out, ["x", "y", "n_walks", "estimate", "std_error"], [[args.x, args.y, args.walks, est, se]])
    return [args.graph], [out]


def cmd_explore(args) -> tuple[list, list]:
    g = build_grid(args.grid)
    field = sample_dgff_direct(g, args.seed)
    trace = explore(g, default_f0(g), boustrophedon_order(g), field)
    out = Path(args.out)
    gio.write_trace_csv(trace, out)
    return [], [out]


def cmd_moments(args) -> tuple[list, list]:
    if len(args.indices) != args.k:
        raise UsageError(f"--indices lists {len(args.indices)} entries but --k is {args.k}")
    g = build_grid(args.grid)
    G = greens_matrix(g)
    if min(args.indices) < 0 or max(args.indices) >= len(G.vertices):
        raise UsageError(f"indices address the {len(G.vertices)} interior vertices (0-based)")
    exact = wick_moment(G.matrix, args.indices).value
    row = [" ".join(str(i) for i in args.indices), exact]
    if args.samples:
        x = sample_dgff_direct(g, args.seed, n_samples=args.samples).values[:, G.vertices]
        row += list(empirical_moment(x, None, args.indices))
    else:
        row += ["", ""]
    out = Path(args.out)
    gio.write_csv(out, ["tuple", "exact", "empirical", "std_error"], [row])
    return [], [out]


def thick_run(size: int, seed: int, a_values, t: float, scales):
    """Sample a ``size x size`` field and return masks and dimension rows per ``a``."""
    g = build_grid(size)
    field = sample_dgff_direct(g, seed)
    norm = variance_growth_rate(g)
    masks = thick_point_masks(field, a_values, t, norm)
    rows = []
    for a, mask in masks.items():
        pts = mask_coordinates(mask)
        if len(pts):
            dim, fit = box_dimension(pts, size, scales)
            rows.append([a, t, len(pts), dim, fit["r2"]])
        else:
            rows.append([a, t, 0, "", ""])
    return norm, masks, rows


def cmd_thick(args) -> tuple[list, list]:
    if any(not 0 <= a <= 2 for a in args.a):
        raise UsageError("--a values must lie in [0, 2]")
    if args.size < 3:
        raise UsageError("--size must be at least 3")
    prefix = Path(args.out)
    norm, masks, rows = thick_run(args.size, args.seed, args.a, args.t, args.scales)
    csv_path = prefix.with_name(f"{prefix.name}_dimension.csv")
    gio.write_csv(csv_path, ["a", "t", "n_points", "box_dimension", "r2"], rows)
    outputs = [csv_path]
    for a, mask in masks.items():
        pgm = prefix.with_name(f"{prefix.name}_a{a:g}.pgm")
        meta = {"a": f"{a:g}", "t": f"{args.t:g}", "normalization": gio.FLOAT_FMT.format(norm)}
        outputs += [pgm, gio.write_pgm(mask.astype(float), pgm, meta)]
    for r in rows:
        print(f"a = {r[0]:g}: {r[2]} thick points, box dimension {r[3] if r[3] == '' else format(r[3], '.4f')}")
    return [], outputs


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    for path, digest in manifest["inputs"].items():
        if not Path(path).exists() or sha256(path) != digest:
            print(f"input {path} changed since the manifest was written", file=sys.stderr)
            return EXIT_USAGE
    status = main(manifest["command"])
    mismatched = [p for p, d in manifest["outputs"].items() if not Path(p).exists() or sha256(p) != d]
    for p in mismatched:
        print(f"output {p} differs from the manifest", file=sys.stderr)
    if mismatched:
        return EXIT_NUMERIC
    print(f"{len(manifest['outputs'])} outputs reproduced byte for byte")
    return status


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gff-lab", description="Sample and verify discrete Gaussian free fields.")
    p.add_argument("--version", action="version", version=f"gff-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=_seed, default=0, help="64-bit seed (default 0)")
        sp.add_argument("--threads", type=int, default=1, help="FFT worker threads; results do not depend on it")
        sp.add_argument("--manifest", help="manifest path (default: next to the main output)")

    sp = sub.add_parser("sample", help="draw one field and write it as FLD1")
    sp.add_argument("--lattice", choices=["box", "torus", "tri-file"], default="box")
    sp.add_argument("--d", type=int, default=2, help="box dimension")
    sp.add_argument("--n", type=int, default=16, help="box half-width, or torus columns")
    sp.add_argument("--m", type=int, help="torus rows")
    sp.add_argument("--tri", help="GFFT 1 triangulation file")
    sp.add_argument("--mass2", type=float, default=0.0, help="squared mass (0 = massless)")
    sp.add_argument("--method", choices=["direct", "fft"], default="direct")
    sp.add_argument("--calibrated", action="store_true", help="fft: divide by the normalization constant")
    sp.add_argument("--out", required=True, help="FLD1 output path")
    sp.add_argument("--pgm", help="optional heatmap path (2D grids)")
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("verify", help="run an invariant suite and print a pass/fail report")
    sp.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    sp.add_argument("--grid", type=int, help="grid side (default 5)")
    sp.add_argument("--samples", type=int, help="Monte Carlo sample count")
    sp.add_argument("--d", type=int, help="scaling: dimension (default all of 1, 2, 3)")
    sp.add_argument("--out", help="CSV report path (default verify_SUITE.csv)")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("green", help="Green's function of a GFFG 1 graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--exact", action="store_true", help="dense exact matrix")
    sp.add_argument("--walks", type=int, help="random-walk estimate with this many walks")
    sp.add_argument("--x", type=int)
    sp.add_argument("--y", type=int)
    sp.add_argument("--out", default="green.csv")
    common(sp)
    sp.set_defaults(func=cmd_green)

    sp = sub.add_parser("explore", help="exploration martingale trace on a grid")
    sp.add_argument("--grid", type=int, default=5)
    sp.add_argument("--out", default="trace.csv")
    common(sp)
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("moments", help="exact and Monte Carlo mixed moments")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--indices", type=_ints, required=True, help="comma-separated 0-based interior indices")
    sp.add_argument("--grid", type=int, default=5)
    sp.add_argument("--samples", type=int, default=100_000, help="0 skips the Monte Carlo column")
    sp.add_argument("--out", default="moments.csv")
    common(sp)
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("thick", help="thick-point masks and box-counting dimensions")
    sp.add_argument("--a", type=_floats, required=True, help="thickness value(s), comma-separated")
    sp.add_argument("--size", type=int, default=513, help="grid side")
    sp.add_argument("--t", type=float, default=DEFAULT_THICK_T, help="profile scale t")
    sp.add_argument("--scales", type=_floats, default=_floats(DEFAULT_SCALES), help="box sizes")
    sp.add_argument("--out", default="thick", help="output prefix")
    common(sp)
    sp.set_defaults(func=cmd_thick)

    sp = sub.add_parser("replay", help="rerun a manifest and compare output digests")
    sp.add_argument("manifest")
    sp.set_defaults(func=None)
    return p


def _manifest_path(args, outputs) -> Path:
    if args.manifest:
        return Path(args.manifest)
    first = Path(outputs[0])
    return first.with_name(first.stem + ".manifest.json")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        return cmd_replay(args)
    if args.threads < 1:
        print("gff-lab: error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    args._status = EXIT_OK
    start = time.perf_counter()
    try:
        with sfft.set_workers(args.threads):
            inputs, outputs = args.func(args)
    except (UsageError, InvalidInputError, InvalidLatticeError, FileNotFoundError) as exc:
        print(f"gff-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ResourceError, UnsupportedGraphError, np.linalg.LinAlgError, GFFError) as exc:
        print(f"gff-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest = {
        "command": argv,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): sha256(p) for p in inputs},
        "outputs": {str(p): sha256(p) for p in outputs},
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - start, 3),
    }
    path = _manifest_path(args, outputs)
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return args._status


if __name__ == "__main__":
    sys.exit(main())
