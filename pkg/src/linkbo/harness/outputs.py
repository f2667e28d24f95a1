"""Result serialization: RFC-4180 CSV files, static plots, summary.md.

Output bytes are a pure function of (config, seed): floats are printed
with a fixed format and rows are emitted in axis order, so identical
runs produce identical files regardless of worker count.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from ..baselines import comparison_table  # noqa: E402
from .config import ExperimentConfig  # noqa: E402
from .experiments import (BitrateRow, LatencyRow, LengthSweepResult,  # noqa: E402
                          SkewCell, SweepResult)

_PNG_METADATA = {"Software": "linkbo-harness"}


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v
                             for v in row])


def _save(fig, path: Path) -> None:
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)


# ------------------------------------------------------------ per experiment

def _emit_latency(rows: list[LatencyRow], out: Path) -> list[Path]:
    csv_path = out / "latency.csv"
    _write_csv(csv_path, ["kind", "size_bytes", "wire_m", "latency_us"],
               [[r.kind, r.size_bytes, r.wire_m, r.latency_us] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in sorted({r.kind for r in rows}):
        series = sorted((r.size_bytes, r.latency_us) for r in rows
                        if r.kind == kind)
        ax.plot([s for s, _ in series], [l for _, l in series],
                marker="o", label=kind.upper())
    ax.set_xlabel("payload size (bytes)")
    ax.set_ylabel("latency (us)")
    ax.set_title("Message latency vs payload size")
    ax.legend()
    png_path = out / "latency.png"
    _save(fig, png_path)
    return [csv_path, png_path]


def _emit_param_sweep(result: SweepResult, out: Path) -> list[Path]:
    csv_path = out / "param_sweep.csv"
    _write_csv(csv_path,
               ["parameter", "ratio", "throughput_kbps", "delivered",
                "ack_rate", "mean_latency_us"],
               [[result.parameter, r.axis, r.throughput_kbps, r.delivered,
                 r.ack_rate, r.mean_latency_us] for r in result.rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r.axis for r in result.rows],
            [r.throughput_kbps for r in result.rows], marker=".")
    if result.knee is not None:
        ax.axvline(result.knee, linestyle="--", color="gray")
    ax.set_xlabel(f"{result.parameter} (x baseline)")
    ax.set_ylabel("throughput (kbps)")
    ax.set_title(f"Throughput vs {result.parameter}")
    png_path = out / "param_sweep.png"
    _save(fig, png_path)
    return [csv_path, png_path]


def _emit_length_sweep(result: LengthSweepResult, out: Path) -> list[Path]:
    csv_path = out / "length_sweep.csv"
    _write_csv(csv_path,
               ["kind", "length_m", "throughput_kbps", "delivered",
                "ack_rate", "mean_latency_us"],
               [[r.kind, r.length_m, r.throughput_kbps, r.delivered,
                 r.ack_rate, r.mean_latency_us] for r in result.rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in sorted({r.kind for r in result.rows}):
        series = [(r.length_m, r.throughput_kbps) for r in result.rows
                  if r.kind == kind]
        ax.plot([x for x, _ in series], [y for _, y in series],
                marker=".", label=kind.upper())
    ax.set_xlabel("wire length (m)")
    ax.set_ylabel("throughput (kbps)")
    ax.set_title("Throughput vs wire length")
    ax.legend()
    png_path = out / "length_sweep.png"
    _save(fig, png_path)
    return [csv_path, png_path]


def _emit_max_bitrate(rows: list[BitrateRow], out: Path) -> list[Path]:
    csv_path = out / "max_bitrate.csv"
    _write_csv(csv_path, ["kind", "length_m", "max_kbps", "clock_period_ps"],
               [[r.kind, r.length_m, r.max_kbps, r.clock_period_ps]
                for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [f"{r.kind.upper()} @ {_fmt(r.length_m)} m" for r in rows]
    ax.bar(labels, [r.max_kbps for r in rows])
    ax.set_ylabel("max bit rate (kbps)")
    ax.set_title("Maximum bit rate per message kind and wire length")
    png_path = out / "max_bitrate.png"
    _save(fig, png_path)
    return [csv_path, png_path]


def _emit_skew(cells: list[SkewCell], out: Path) -> list[Path]:
    csv_path = out / "skew_grid.csv"
    _write_csv(csv_path, ["tx_offset", "rx_offset", "delivered", "asserted"],
               [[c.tx_offset, c.rx_offset, int(c.delivered), int(c.asserted)]
                for c in cells])
    return [csv_path]


# ------------------------------------------------------------------ summary

def _table2_markdown() -> list[str]:
    lines = ["| protocol | bit rate (kbps) | EBR (kbps) | latency (us) |",
             "| --- | --- | --- | --- |"]
    for row in comparison_table():
        lines.append(
            f"| {row.protocol} "
            f"| {_fmt(row.bit_rate_kbps[0])} - {_fmt(row.bit_rate_kbps[1])} "
            f"| {_fmt(row.ebr_kbps[0])} - {_fmt(row.ebr_kbps[1])} "
            f"| {_fmt(row.latency_us[0])} - {_fmt(row.latency_us[1])} |")
    return lines


def _summary_lines(cfg: ExperimentConfig, result) -> list[str]:
    lines = [f"# {cfg.experiment} results", "",
             f"- seed: {cfg.seed}", f"- repetitions: {cfg.repetitions}", ""]
    if isinstance(result, SweepResult):
        knee = _fmt(result.knee) if result.knee is not None else "none"
        lines += [f"- parameter: {result.parameter}",
                  f"- plateau: {_fmt(result.plateau_kbps)} kbps",
                  f"- knee ratio: {knee}",
                  f"- cliff within one step: {result.cliff}", ""]
    elif isinstance(result, LengthSweepResult):
        for kind, start in sorted(result.cliff_start.items()):
            where = _fmt(start) if start is not None else "beyond range"
            lines.append(f"- {kind} throughput degrades from: {where} m")
        lines.append("")
    elif result and isinstance(result[0], BitrateRow):
        for row in result:
            lines.append(f"- {row.kind} @ {_fmt(row.length_m)} m: "
                         f"{_fmt(row.max_kbps)} kbps")
        lines.append("")
    elif result and isinstance(result[0], SkewCell):
        grid = [c for c in result if c.asserted]
        ok = sum(1 for c in grid if c.delivered)
        lines.append(f"- skew grid: {ok}/{len(grid)} cells delivered")
        for c in result:
            if not c.asserted:
                lines.append(f"- probe ({_fmt(c.tx_offset)}, "
                             f"{_fmt(c.rx_offset)}): delivered={c.delivered}")
        lines.append("")
    elif result and isinstance(result[0], LatencyRow):
        span = (min(r.latency_us for r in result),
                max(r.latency_us for r in result))
        lines += [f"- latency span: {_fmt(span[0])} - {_fmt(span[1])} us", ""]
    lines += ["## Protocol comparison", ""] + _table2_markdown() + [""]
    return lines


def emit_outputs(cfg: ExperimentConfig, result, out_dir: str | Path) -> list[Path]:
    """Write experiment CSV/plot files plus summary.md; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(result, SweepResult):
        paths = _emit_param_sweep(result, out)
    elif isinstance(result, LengthSweepResult):
        paths = _emit_length_sweep(result, out)
    elif result and isinstance(result[0], BitrateRow):
        paths = _emit_max_bitrate(result, out)
    elif result and isinstance(result[0], SkewCell):
        paths = _emit_skew(result, out)
    elif result and isinstance(result[0], LatencyRow):
        paths = _emit_latency(result, out)
    else:
        raise ValueError("unknown or empty result set")
    summary = out / "summary.md"
    summary.write_text("\n".join(_summary_lines(cfg, result)))
    return paths + [summary]
