"""Per-flow and cross-flow statistics.

Bandwidth share, Jain's fairness index, the throughput-harm metric used to
argue deployability, and nearest-rank percentile summaries. Everything here
is a pure function over immutable trace data; by default statistics exclude
the first 10 % of the run as warm-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MetricsError
from .trace import TraceSet

WARMUP_FRACTION = 0.10
PERCENTILES = (25, 50, 75)


@dataclass(frozen=True, slots=True)
class FlowMetrics:
    """Condensed view of one flow's trace."""

    flow_id: str
    algo: str
    goodput_series: tuple[tuple[float, float], ...]  # (t_ms, Mbps)
    srtt_series: tuple[tuple[float, float], ...]  # (t_ms, ms)
    total_goodput_mbps: float
    delivered_bytes: int
    ce_counts: dict[str, int]
    span_ms: tuple[float, float]


@dataclass(frozen=True, slots=True)
class ShareReport:
    per_flow_fraction: dict[str, float]
    jain_index: float
    harm: float | None
    window_ms: tuple[float, float]


def jain_index(values: list[float]) -> float:
    """(sum x)^2 / (n * sum x^2) over a non-negative allocation."""
    n = len(values)
    if n == 0:
        raise MetricsError("jain index of an empty allocation")
    total = sum(values)
    squares = sum(v * v for v in values)
    if squares == 0.0:
        raise MetricsError("jain index undefined for an all-zero allocation")
    return (total * total) / (n * squares)


def flow_metrics(traces: TraceSet) -> dict[str, FlowMetrics]:
    out: dict[str, FlowMetrics] = {}
    for fid, ft in traces.flows.items():
        goodput = tuple((s.t_us / 1000, s.goodput_mbps) for s in ft.samples)
        srtt = tuple(
            (s.t_us / 1000, s.srtt_us / 1000) for s in ft.samples if s.srtt_us > 0
        )
        delivered = sum(s.delivered_bytes for s in ft.samples)
        if ft.samples:
            span = (ft.start_us / 1000, ft.samples[-1].t_us / 1000)
            active_us = ft.samples[-1].t_us - ft.start_us
        else:
            span = (ft.start_us / 1000, ft.start_us / 1000)
            active_us = 0
        total = delivered * 8.0 / active_us if active_us > 0 else 0.0
        counts: dict[str, int] = {}
        for _, kind in ft.ce_log:
            counts[kind] = counts.get(kind, 0) + 1
        out[fid] = FlowMetrics(
            flow_id=fid,
            algo=ft.algo,
            goodput_series=goodput,
            srtt_series=srtt,
            total_goodput_mbps=total,
            delivered_bytes=delivered,
            ce_counts=counts,
            span_ms=span,
        )
    return out


def bandwidth_share(
    traces: TraceSet, window_us: tuple[int, int] | None = None
) -> ShareReport:
    """Fraction of delivered bytes per flow over a measurement window.

    The window defaults to the run span minus the leading 10 % warm-up.
    Byte counts come straight from the per-sample delivery deltas, so the
    fractions agree exactly with the simulator's own accounting.
    """
    if not traces.flows:
        raise MetricsError("bandwidth share of an empty trace set")
    if window_us is None:
        t0 = round(traces.horizon_us * WARMUP_FRACTION)
        window_us = (t0, traces.horizon_us)
    lo, hi = window_us
    if hi <= lo:
        raise MetricsError(f"empty share window [{lo}, {hi}] us")
    bytes_by_flow: dict[str, int] = {}
    for fid, ft in traces.flows.items():
        total = 0
        for s in ft.samples:
            if lo < s.t_us <= hi:
                total += s.delivered_bytes
        bytes_by_flow[fid] = total
    grand = sum(bytes_by_flow.values())
    if grand == 0:
        raise MetricsError(f"no bytes delivered inside window [{lo}, {hi}] us")
    fractions = {fid: b / grand for fid, b in bytes_by_flow.items()}
    return ShareReport(
        per_flow_fraction=fractions,
        jain_index=jain_index([float(b) for b in bytes_by_flow.values()]),
        harm=None,
        window_ms=(lo / 1000, hi / 1000),
    )


def harm(solo: FlowMetrics, competing: FlowMetrics) -> float:
    """Relative goodput a flow loses when a competitor is added, clamped at
    zero. Solo and competing runs must use the same link and scenario apart
    from the added competitor."""
    if solo.total_goodput_mbps <= 0.0:
        raise MetricsError("harm undefined: solo goodput is zero")
    return max(
        0.0,
        (solo.total_goodput_mbps - competing.total_goodput_mbps)
        / solo.total_goodput_mbps,
    )


def percentile_nearest_rank(values: list[float], pct: float) -> float:
    """Nearest-rank percentile (no interpolation); values need not be sorted."""
    if not values:
        raise MetricsError("percentile of an empty series")
    ordered = sorted(values)
    rank = max(1, math.ceil(pct / 100.0 * len(ordered)))
    return ordered[rank - 1]


def summarize(
    series: dict[str, list[float]] | FlowMetrics,
    t_ms: list[float] | None = None,
    warmup_fraction: float = WARMUP_FRACTION,
) -> dict[str, dict[str, float]]:
    """p25/p50/p75/max table for sRTT and goodput past the warm-up window.

    Accepts either a FlowMetrics or a parsed-CSV column dict (with its
    t_ms handled internally).
    """
    if isinstance(series, FlowMetrics):
        cols = {
            "srtt_ms": [v for _, v in series.srtt_series],
            "goodput_mbps": [v for _, v in series.goodput_series],
            "_t_srtt": [t for t, _ in series.srtt_series],
            "_t_goodput": [t for t, _ in series.goodput_series],
        }
        end = series.span_ms[1]
        cut = series.span_ms[0] + warmup_fraction * (end - series.span_ms[0])
        srtt_vals = [v for t, v in zip(cols["_t_srtt"], cols["srtt_ms"]) if t >= cut]
        good_vals = [
            v for t, v in zip(cols["_t_goodput"], cols["goodput_mbps"]) if t >= cut
        ]
    else:
        times = series["t_ms"] if t_ms is None else t_ms
        if not times:
            raise MetricsError("summarize: empty trace")
        cut = times[0] + warmup_fraction * (times[-1] - times[0])
        srtt_vals = [
            v for t, v in zip(times, series["srtt_ms"]) if t >= cut and v > 0
        ]
        good_vals = [v for t, v in zip(times, series["goodput_mbps"]) if t >= cut]
    if not srtt_vals or not good_vals:
        raise MetricsError(
            f"summarize: no samples after warm-up (window starts at {cut:.1f} ms)"
        )
    out: dict[str, dict[str, float]] = {}
    for name, vals in (("srtt_ms", srtt_vals), ("goodput_mbps", good_vals)):
        table = {f"p{p}": percentile_nearest_rank(vals, p) for p in PERCENTILES}
        table["max"] = max(vals)
        out[name] = table
    return out
