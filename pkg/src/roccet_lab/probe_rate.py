"""Simplified rate-probing comparator.

A model-based controller in the startup / drain / probe-bandwidth /
probe-RTT mould. It keeps a windowed maximum of the measured delivery rate
and a minimum-RTT estimate, paces at a cyclic gain over the rate estimate,
and caps the window at twice the estimated BDP. This is deliberately a
plumbing-grade stand-in for modern rate-based stacks, not a faithful
implementation of any of them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .cc_types import AckInfo, CcState, Phase
from .errors import ScenarioError

PROBE_GAINS = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)

STARTUP = "startup"
DRAIN = "drain"
PROBE_BW = "probe_bw"
PROBE_RTT = "probe_rtt"


@dataclass(frozen=True, slots=True)
class ProbeRateParams:
    startup_pacing_gain: float = 2.885
    min_rtt_window_us: int = 10_000_000
    probe_rtt_duration_us: int = 200_000
    min_cwnd: float = 4.0
    cwnd_gain: float = 2.0
    bw_filter_rounds: int = 10
    loss_beta: float = 0.7
    mss_bytes: int = 1500

    def validate(self) -> None:
        if self.min_rtt_window_us <= 0 or self.probe_rtt_duration_us <= 0:
            raise ScenarioError("probe_rate durations must be > 0")
        if not 0 < self.loss_beta < 1:
            raise ScenarioError("probe_rate loss_beta must be in (0, 1)")


@dataclass(frozen=True, slots=True)
class ProbeRateState:
    mode: str = STARTUP
    min_rtt_us: int | None = None
    min_rtt_stamp_us: int = 0
    probe_rtt_best_us: int | None = None
    probe_rtt_done_us: int = 0
    # Delivery-rate filter: per-round maxima over the last few rounds.
    round_index: int = 0
    round_start_us: int = 0
    round_acked: float = 0.0
    bw_window: tuple[tuple[int, float], ...] = ()  # (round, segs per second)
    full_bw: float = 0.0
    full_bw_count: int = 0
    gain_index: int = 0
    cycle_stamp_us: int = 0


def _max_bw(state: ProbeRateState) -> float:
    if not state.bw_window:
        return 0.0
    return max(bw for _, bw in state.bw_window)


def _bdp_segments(state: ProbeRateState) -> float:
    if state.min_rtt_us is None:
        return 0.0
    return _max_bw(state) * state.min_rtt_us / 1e6


def probe_rate_on_ack(
    cc: CcState,
    state: ProbeRateState,
    ack: AckInfo,
    params: ProbeRateParams,
    in_flight: float,
    round_start: bool,
) -> tuple[CcState, ProbeRateState, float | None]:
    """Advance the model for one ACK.

    Returns the new controller state plus the pacing rate in bits per
    second (None before any rate estimate exists). `in_flight` and
    `round_start` come from the transport (ACK-clocked round counting).
    """
    now = ack.now_us

    if ack.rtt_sample_us is not None:
        if state.min_rtt_us is None or ack.rtt_sample_us < state.min_rtt_us:
            state = replace(
                state, min_rtt_us=ack.rtt_sample_us, min_rtt_stamp_us=now
            )
        if state.mode == PROBE_RTT:
            best = state.probe_rtt_best_us
            if best is None or ack.rtt_sample_us < best:
                state = replace(state, probe_rtt_best_us=ack.rtt_sample_us)

    state = replace(state, round_acked=state.round_acked + ack.newly_acked)
    if round_start:
        elapsed = now - state.round_start_us
        if elapsed > 0 and state.round_acked > 0:
            bw = state.round_acked * 1e6 / elapsed
            window = state.bw_window + ((state.round_index, bw),)
            window = tuple(
                (r, b)
                for r, b in window
                if r > state.round_index - params.bw_filter_rounds
            )
            state = replace(state, bw_window=window)
        state = replace(
            state,
            round_index=state.round_index + 1,
            round_start_us=now,
            round_acked=0.0,
        )

    bdp = _bdp_segments(state)

    if state.mode == STARTUP:
        cc = replace(cc, cwnd=cc.cwnd + ack.newly_acked)
        if round_start and not ack.is_app_limited:
            max_bw = _max_bw(state)
            if max_bw >= state.full_bw * 1.25 or state.full_bw == 0.0:
                state = replace(state, full_bw=max_bw, full_bw_count=0)
            else:
                state = replace(state, full_bw_count=state.full_bw_count + 1)
                if state.full_bw_count >= 3:
                    state = replace(state, mode=DRAIN)
    elif state.mode == DRAIN:
        if bdp > 0 and in_flight <= bdp:
            state = replace(state, mode=PROBE_BW, gain_index=0, cycle_stamp_us=now)
            cc = replace(
                cc,
                cwnd=max(params.min_cwnd, params.cwnd_gain * bdp),
                phase=Phase.CONGESTION_AVOIDANCE,
            )
    elif state.mode == PROBE_BW:
        cap = max(params.min_cwnd, params.cwnd_gain * bdp) if bdp > 0 else cc.cwnd
        cc = replace(cc, cwnd=min(cc.cwnd + ack.newly_acked, cap))
        if state.min_rtt_us is not None and now - state.cycle_stamp_us >= state.min_rtt_us:
            state = replace(
                state,
                gain_index=(state.gain_index + 1) % len(PROBE_GAINS),
                cycle_stamp_us=now,
            )
        if now - state.min_rtt_stamp_us > params.min_rtt_window_us:
            state = replace(
                state,
                mode=PROBE_RTT,
                probe_rtt_done_us=now + params.probe_rtt_duration_us,
                probe_rtt_best_us=None,
            )
            cc = replace(cc, cwnd=params.min_cwnd)
    elif state.mode == PROBE_RTT:
        cc = replace(cc, cwnd=params.min_cwnd)
        if now >= state.probe_rtt_done_us:
            best = state.probe_rtt_best_us
            if best is not None:
                state = replace(state, min_rtt_us=best, min_rtt_stamp_us=now)
            else:
                state = replace(state, min_rtt_stamp_us=now)
            state = replace(state, mode=PROBE_BW, gain_index=0, cycle_stamp_us=now)
            cc = replace(cc, cwnd=max(params.min_cwnd, params.cwnd_gain * bdp))

    return cc, state, pacing_rate_bps(state, params)


def probe_rate_on_loss(
    cc: CcState, state: ProbeRateState, params: ProbeRateParams, now_us: int
) -> CcState:
    """Mild multiplicative backoff; the rate model does the real work."""
    return replace(cc, cwnd=max(params.min_cwnd, cc.cwnd * params.loss_beta))


def pacing_rate_bps(state: ProbeRateState, params: ProbeRateParams) -> float | None:
    """Current pacing rate, or None until a delivery-rate estimate exists."""
    max_bw = _max_bw(state)
    if max_bw <= 0.0:
        return None
    if state.mode == STARTUP:
        gain = params.startup_pacing_gain
    elif state.mode == DRAIN:
        gain = 1.0 / params.startup_pacing_gain
    elif state.mode == PROBE_RTT:
        gain = 1.0
    else:
        gain = PROBE_GAINS[state.gain_index]
    return gain * max_bw * params.mss_bytes * 8.0
