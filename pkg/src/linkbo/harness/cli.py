"""Command line interface.

    linkbo run <config.yaml> [--out DIR] [--seed N] [--parallel K]
                             [--set key=value ...]
    linkbo table2
    linkbo decode <trace.csv> [--slot-ps PS] [--threshold V]

Exit codes: 0 success, 1 experiment failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

from ..channel import LineTrace
from ..endpoint import decode_trace
from .config import ConfigError, load_config
from .experiments import (run_clock_skew_grid, run_latency_experiment,
                          run_length_sweep, run_max_bitrate_search,
                          run_param_sweep)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

_RUNNERS = {
    "latency": lambda cfg, parallel: run_latency_experiment(cfg),
    "param_sweep": run_param_sweep,
    "length_sweep": run_length_sweep,
    "max_bitrate": run_max_bitrate_search,
    "clock_skew": run_clock_skew_grid,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkbo", description="LinkBo single-wire protocol simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a YAML config")
    run.add_argument("config", help="path to the experiment YAML file")
    run.add_argument("--out", default="results",
                     help="output directory (default: results)")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    run.add_argument("--parallel", type=int, default=1, metavar="K",
                     help="worker processes for sweep points (default: 1)")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE",
                     help="dotted-path config override, repeatable")

    sub.add_parser("table2", help="print the protocol comparison table")

    dec = sub.add_parser("decode", help="decode one frame from a trace CSV")
    dec.add_argument("trace", help="CSV trace (time_ps,value[,volts])")
    dec.add_argument("--slot-ps", type=float, default=3360000.0,
                     help="nominal slot period in ps (default: 3360000)")
    dec.add_argument("--threshold", type=float, default=1.5,
                     help="comparator threshold for analog traces (volts)")
    return parser


def _digitize(trace: LineTrace, threshold: float) -> LineTrace:
    digital = LineTrace()
    for t, v in trace.samples:
        digital.append(t, float(v > threshold))
    return digital


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, overrides=args.overrides, seed=args.seed)
    if args.parallel < 1:
        raise ConfigError("--parallel must be >= 1")
    result = _RUNNERS[cfg.experiment](cfg, args.parallel)
    from .outputs import emit_outputs
    try:
        paths = emit_outputs(cfg, result, args.out)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for path in paths:
        print(path)
    return EXIT_OK


def _cmd_table2() -> int:
    from ..baselines import comparison_table
    header = f"{'protocol':<10} {'bit rate (kbps)':>18} {'EBR (kbps)':>16} " \
             f"{'latency (us)':>16}"
    print(header)
    print("-" * len(header))
    for row in comparison_table():
        def span(pair: tuple[float, float]) -> str:
            lo, hi = pair
            if abs(hi - lo) < 1e-9:
                return f"{lo:.6g}"
            return f"{lo:.6g} - {hi:.6g}"
        print(f"{row.protocol:<10} {span(row.bit_rate_kbps):>18} "
              f"{span(row.ebr_kbps):>16} {span(row.latency_us):>16}")
    return EXIT_OK


def _cmd_decode(args: argparse.Namespace) -> int:
    try:
        trace = LineTrace.from_csv(args.trace)
    except (OSError, ValueError, IndexError, StopIteration) as exc:
        raise ConfigError(f"cannot read trace {args.trace!r}: {exc}") from exc
    if trace.analog:
        trace = _digitize(trace, args.threshold)
    frame = decode_trace(trace, args.slot_ps)
    if frame.error is not None:
        print(f"decode failed: {frame.error} "
              f"(bits so far: {''.join(map(str, frame.bits))})")
        return EXIT_FAILURE
    assert frame.message is not None and frame.kind is not None
    payload = frame.message.payload_bytes.hex()
    print(f"kind={frame.kind.value} payload=0x{payload} "
          f"slot_ps={frame.slot_period:.6g} bits={len(frame.bits)}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "table2":
            return _cmd_table2()
        return _cmd_decode(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TimeoutError, RuntimeError) as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
