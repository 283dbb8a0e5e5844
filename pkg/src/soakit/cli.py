"""Command line front end for the reconstruction benchmark."""

from __future__ import annotations

import argparse
from pathlib import Path

from . import bench
from .detector import EventSpec, generate_event, save_event

DEFAULT_GRIDS = ((64, 64),)
DEFAULT_DENSITIES = (0.0, 0.0005, 0.005)


def _grid(text: str) -> tuple[int, int]:
    try:
        w, _, h = text.lower().partition("x")
        dims = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if min(dims) < 1:
        raise argparse.ArgumentTypeError(f"grid dimensions must be positive, got {text!r}")
    return dims


def _add_cell_args(p: argparse.ArgumentParser, events_default: int) -> None:
    p.add_argument("--grid", action="append", type=_grid, metavar="WxH",
                   help="sensor grid, repeatable (default 64x64)")
    p.add_argument("--density", action="append", type=float, metavar="D",
                   help="deposits per sensor, repeatable (default 0.0 0.0005 0.005)")
    p.add_argument("--seed", type=int, default=0, help="seed of the first event (default 0)")
    p.add_argument("--events", type=int, default=events_default, metavar="N",
                   help=f"distinct events per grid/density cell (default {events_default})")


def _add_config_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", action="append", choices=bench.CONFIGURATIONS, metavar="NAME",
                   help="configuration to include, repeatable (default all); one of "
                        + ", ".join(bench.CONFIGURATIONS))


def _cells(args) -> tuple[tuple[tuple[int, int], ...], tuple[float, ...]]:
    grids = tuple(args.grid) if args.grid else DEFAULT_GRIDS
    densities = tuple(args.density) if args.density else DEFAULT_DENSITIES
    return grids, densities


def cmd_generate(args, parser) -> int:
    grids, densities = _cells(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for w, h in grids:
        for density in densities:
            for i in range(args.events):
                spec = EventSpec(w, h, seed=args.seed + i, particle_density=density)
                save_event(generate_event(spec), out / f"{w}x{h}_d{density:g}_s{args.seed + i}.bin")
                count += 1
    print(f"wrote {count} event files to {out}")
    return 0


def cmd_verify(args, parser) -> int:
    grids, densities = _cells(args)
    configs = tuple(args.config) if args.config else bench.CONFIGURATIONS
    others = [c for c in configs if c != bench.REFERENCE_CONFIGURATION]
    if not others:
        parser.error("need at least one configuration besides the reference")
    if args.inject_fault and args.inject_fault not in others:
        parser.error(f"--inject-fault target {args.inject_fault!r} is not being verified")
    mutate = None
    if args.inject_fault:
        target = args.inject_fault
        mutate = lambda name, dump: bench.corrupt_first_energy(dump) if name == target else dump
    mismatches = bench.verify_outputs(
        grids, densities, configs,
        seed=args.seed, events_per_cell=args.events, mutate=mutate, parallel=args.parallel,
    )
    if mismatches:
        for m in mismatches:
            print("MISMATCH", m)
        print(f"verification failed: {len(mismatches)} mismatching dumps")
        return 1
    cells = len(grids) * len(densities)
    print(f"verified {len(others)} configurations against {bench.REFERENCE_CONFIGURATION} "
          f"on {cells * args.events} events: OK")
    return 0


def cmd_bench(args, parser) -> int:
    grids, densities = _cells(args)
    if not 1 <= args.keep_fastest <= args.repetitions:
        parser.error("--keep-fastest must be between 1 and --repetitions")
    configs = tuple(args.config) if args.config else bench.CONFIGURATIONS
    if not args.no_verify:
        mismatches = bench.verify_outputs(
            grids, densities, configs, seed=args.seed, events_per_cell=args.events
        )
        if mismatches:
            for m in mismatches:
                print("MISMATCH", m)
            print(f"verification failed: {len(mismatches)} mismatching dumps; not timing")
            return 1
    results, samples = bench.run_bench(
        grids, densities, configs,
        seed=args.seed, repetitions=args.repetitions,
        keep_fastest=args.keep_fastest, events_per_cell=args.events,
    )
    bench.write_results_csv(args.output, results)
    bench.write_samples_csv(args.samples, samples)
    for r in results:
        print(f"{r.configuration:28s} {r.width}x{r.height} d={r.density:g} {r.phase}: "
              f"{r.mean_fastest_s * 1e3:.3f} ms  bytes={r.bytes_transferred} copies={r.copy_ops}")
    print(f"wrote {args.output} and {args.samples}")
    return 0


def cmd_overhead(args, parser) -> int:
    grids = tuple(args.grid) if args.grid else ((512, 512),)
    densities = tuple(args.density) if args.density else (0.002,)
    if not 1 <= args.keep_fastest <= args.repetitions:
        parser.error("--keep-fastest must be between 1 and --repetitions")
    results, _ = bench.run_bench(
        grids, densities, bench.OVERHEAD_CONFIGURATIONS,
        seed=args.seed, repetitions=args.repetitions,
        keep_fastest=args.keep_fastest, events_per_cell=args.events,
    )
    ratios = bench.overhead_ratios(results)
    base = dict(bench.OVERHEAD_PAIRS)
    ok = True
    for (cfg, phase), ratio in sorted(ratios.items()):
        good = ratio <= args.threshold
        ok = ok and good
        print(f"overhead {cfg} vs {base[cfg]} [{phase}]: {ratio:.4f} {'ok' if good else 'HIGH'}")
    print(f"overhead check: {'PASS' if ok else 'FAIL'} (threshold {args.threshold:.2f})")
    return 0 if ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soakit-bench",
        description="Generate detector events, verify that all storage configurations "
                    "reconstruct identical particles, and time them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write binary event files")
    _add_cell_args(p, events_default=10)
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("verify", help="compare configuration outputs against the reference")
    _add_cell_args(p, events_default=10)
    _add_config_arg(p)
    p.add_argument("--parallel", action="store_true",
                   help="verify cells concurrently (timing never runs in parallel)")
    p.add_argument("--inject-fault", nargs="?", const="lib-per-field", metavar="NAME",
                   choices=bench.CONFIGURATIONS,
                   help="corrupt one configuration's output to exercise mismatch reporting")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("bench", help="time all phases and write CSV results")
    _add_cell_args(p, events_default=10)
    _add_config_arg(p)
    p.add_argument("--repetitions", type=int, default=50, metavar="R")
    p.add_argument("--keep-fastest", type=int, default=10, metavar="K",
                   help="per cell, average the K smallest samples (default 10)")
    p.add_argument("--output", default="bench_results.csv", metavar="CSV",
                   help="per-cell results file (default bench_results.csv)")
    p.add_argument("--samples", default="bench_samples.csv", metavar="CSV",
                   help="per-repetition samples file (default bench_samples.csv)")
    p.add_argument("--no-verify", action="store_true",
                   help="skip the output comparison that normally precedes timing")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("overhead", help="check library overhead against handwritten pipelines")
    _add_cell_args(p, events_default=2)
    p.add_argument("--repetitions", type=int, default=6, metavar="R")
    p.add_argument("--keep-fastest", type=int, default=3, metavar="K")
    p.add_argument("--threshold", type=float, default=1.10,
                   help="maximum acceptable runtime ratio (default 1.10)")
    p.set_defaults(handler=cmd_overhead)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.handler(args, parser)


if __name__ == "__main__":
    raise SystemExit(main())
