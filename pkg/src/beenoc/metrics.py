"""Per-run metrics assembly and machine-readable CSV output.

flows.csv gets one row per offered flow, summary.csv one row of aggregates;
both headers and the numeric formatting (fixed-point, 6 decimals for floats)
are frozen so identical runs produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .config import RunConfig
from .topology import PortDir

FLOWS_HEADER = "flow_seq,src_x,src_y,dst_x,dst_y,bandwidth,phase,setup_latency,path_length,manhattan"

SUMMARY_HEADER = (
    "offered,established,failed,torn_down,success_ratio,"
    "mean_setup_latency,p95_setup_latency,mean_path_stretch,"
    "control_packets_per_flow,forward_deliveries,backward_deliveries,control_deliveries,"
    "util_peak_south,util_mean_south,util_peak_west,util_mean_west,"
    "util_peak_east,util_mean_east,util_peak_north,util_mean_north"
)


@dataclass(frozen=True, slots=True)
class FlowRow:
    """One flows.csv row. Latency and path length are None unless the flow's
    circuit was established; `ever_established` also covers flows that have
    already been torn down."""

    flow_seq: int
    src_x: int
    src_y: int
    dst_x: int
    dst_y: int
    bandwidth: float
    phase: str
    setup_latency: int | None
    path_length: int | None
    manhattan: int
    ever_established: bool


@dataclass(frozen=True, slots=True)
class RunStats:
    """Engine-internal counters exposed for tests and diagnostics."""

    events_processed: int
    forward_deliveries: int
    backward_deliveries: int
    control_deliveries: int
    max_forward_deliveries_per_flow: int
    final_wires_held: int
    drained: bool
    final_cycle: int


@dataclass(frozen=True, slots=True)
class Summary:
    offered: int
    established: int
    failed: int
    torn_down: int
    success_ratio: float | None
    mean_setup_latency: float | None
    p95_setup_latency: float | None
    mean_path_stretch: float | None
    control_packets_per_flow: float | None
    forward_deliveries: int
    backward_deliveries: int
    control_deliveries: int
    util_peak_south: float
    util_mean_south: float
    util_peak_west: float
    util_mean_west: float
    util_peak_east: float
    util_mean_east: float
    util_peak_north: float
    util_mean_north: float


@dataclass(frozen=True)
class MetricsReport:
    """Everything a finished run reports: resolved config, per-flow rows,
    aggregates, and the event trace when tracing was on."""

    config: RunConfig
    flows: tuple[FlowRow, ...]
    summary: Summary
    stats: RunStats
    trace: tuple[str, ...] | None = None


def nearest_rank_percentile(values: list, fraction: float) -> float | None:
    """Nearest-rank percentile of a non-empty list (None when empty)."""
    if not values:
        return None
    ordered = sorted(values)
    rank = math.ceil(fraction * len(ordered))
    return float(ordered[max(rank, 1) - 1])


def build_summary(
    flows: tuple[FlowRow, ...],
    stats: RunStats,
    util_peak: dict[PortDir, float],
    util_mean: dict[PortDir, float],
) -> Summary:
    offered = len(flows)
    established_rows = [r for r in flows if r.ever_established]
    established = len(established_rows)
    failed = sum(1 for r in flows if r.phase == "Failed")
    torn_down = sum(1 for r in flows if r.phase == "TornDown")
    latencies = [r.setup_latency for r in established_rows]
    stretches = [r.path_length / r.manhattan for r in established_rows]
    total_deliveries = stats.forward_deliveries + stats.backward_deliveries + stats.control_deliveries
    return Summary(
        offered=offered,
        established=established,
        failed=failed,
        torn_down=torn_down,
        success_ratio=(established / offered) if offered else None,
        mean_setup_latency=(sum(latencies) / len(latencies)) if latencies else None,
        p95_setup_latency=nearest_rank_percentile(latencies, 0.95),
        mean_path_stretch=(sum(stretches) / len(stretches)) if stretches else None,
        control_packets_per_flow=(total_deliveries / offered) if offered else None,
        forward_deliveries=stats.forward_deliveries,
        backward_deliveries=stats.backward_deliveries,
        control_deliveries=stats.control_deliveries,
        util_peak_south=util_peak[PortDir.SOUTH],
        util_mean_south=util_mean[PortDir.SOUTH],
        util_peak_west=util_peak[PortDir.WEST],
        util_mean_west=util_mean[PortDir.WEST],
        util_peak_east=util_peak[PortDir.EAST],
        util_mean_east=util_mean[PortDir.EAST],
        util_peak_north=util_peak[PortDir.NORTH],
        util_mean_north=util_mean[PortDir.NORTH],
    )


def build_report(
    config: RunConfig,
    flows: tuple[FlowRow, ...],
    stats: RunStats,
    util_peak: dict[PortDir, float],
    util_mean: dict[PortDir, float],
    trace: tuple[str, ...] | None,
) -> MetricsReport:
    return MetricsReport(
        config=config,
        flows=flows,
        summary=build_summary(flows, stats, util_peak, util_mean),
        stats=stats,
        trace=trace,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        raise TypeError("no boolean CSV columns")
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def flow_row_line(row: FlowRow) -> str:
    return ",".join(
        (
            str(row.flow_seq),
            str(row.src_x),
            str(row.src_y),
            str(row.dst_x),
            str(row.dst_y),
            f"{row.bandwidth:.6f}",
            row.phase,
            _fmt(row.setup_latency),
            _fmt(row.path_length),
            str(row.manhattan),
        )
    )


def summary_line(summary: Summary) -> str:
    return ",".join(_fmt(getattr(summary, f.name)) for f in fields(Summary))


def write_report(report: MetricsReport, destination) -> None:
    """Write flows.csv and summary.csv (plus trace.tsv when tracing) under
    `destination`, creating the directory if needed."""
    out = Path(destination)
    out.mkdir(parents=True, exist_ok=True)
    flows_lines = [FLOWS_HEADER] + [flow_row_line(r) for r in report.flows]
    (out / "flows.csv").write_text("\n".join(flows_lines) + "\n", encoding="ascii", newline="\n")
    summary_lines = [SUMMARY_HEADER, summary_line(report.summary)]
    (out / "summary.csv").write_text("\n".join(summary_lines) + "\n", encoding="ascii", newline="\n")
    if report.trace is not None:
        body = "\n".join(report.trace) + ("\n" if report.trace else "")
        (out / "trace.tsv").write_text(body, encoding="ascii", newline="\n")


__all__ = [
    "FLOWS_HEADER",
    "SUMMARY_HEADER",
    "FlowRow",
    "RunStats",
    "Summary",
    "MetricsReport",
    "build_summary",
    "build_report",
    "flow_row_line",
    "summary_line",
    "write_report",
    "nearest_rank_percentile",
]
