"""Controller adapters binding the pure transition functions to the
simulator's per-flow event stream.

Each controller owns one flow's state, consumes `AckInfo` records plus the
transport extras (in-flight segments, ACK-clocked round boundaries), and
exposes the current window, an optional pacing rate, and a log of
congestion events for the trace.
"""

from __future__ import annotations

from .cc_types import AckInfo, CcState, CubicParams, Phase
from . import cubic, probe_rate, reno, roccet
from .roccet import CeKind, LaunchDecision, OrbiterDecision, RoccetParams, RoccetState

EWMA_SRTT_WEIGHT = 0.125  # transport-style smoothing feeding the srrtt signal


class CubicController:
    def __init__(self, params: CubicParams):
        self.params = params
        self.state = CcState(algo_tag="cubic")
        self.ce_events: list[tuple[int, str]] = []

    @property
    def cwnd(self) -> float:
        return self.state.cwnd

    @property
    def pacing_rate_bps(self) -> float | None:
        return None

    def on_ack(
        self, ack: AckInfo, in_flight: float, round_start: bool, in_recovery: bool = False
    ) -> None:
        if in_recovery:
            return
        self.state = cubic.cubic_on_ack(self.state, ack, self.params)

    def on_loss(self, now_us: int, origin: str) -> None:
        self.state = cubic.cubic_on_congestion_event(self.state, self.params, now_us)
        self.ce_events.append((now_us, CeKind.LOSS_CE.value))


class RenoController:
    def __init__(self):
        self.state = CcState(algo_tag="reno")
        self.ce_events: list[tuple[int, str]] = []

    @property
    def cwnd(self) -> float:
        return self.state.cwnd

    @property
    def pacing_rate_bps(self) -> float | None:
        return None

    def on_ack(
        self, ack: AckInfo, in_flight: float, round_start: bool, in_recovery: bool = False
    ) -> None:
        if in_recovery:
            return
        self.state = reno.reno_on_ack(self.state, ack)

    def on_loss(self, now_us: int, origin: str) -> None:
        self.state = reno.reno_on_congestion_event(self.state, now_us)
        self.ce_events.append((now_us, CeKind.LOSS_CE.value))


class ProbeRateController:
    def __init__(self, params: probe_rate.ProbeRateParams):
        self.params = params
        self.state = CcState(algo_tag="probe_rate")
        self.model = probe_rate.ProbeRateState()
        self._pacing: float | None = None
        self.ce_events: list[tuple[int, str]] = []

    @property
    def cwnd(self) -> float:
        return self.state.cwnd

    @property
    def pacing_rate_bps(self) -> float | None:
        return self._pacing

    def on_ack(
        self, ack: AckInfo, in_flight: float, round_start: bool, in_recovery: bool = False
    ) -> None:
        if in_recovery:
            return
        self.state, self.model, self._pacing = probe_rate.probe_rate_on_ack(
            self.state, self.model, ack, self.params, in_flight, round_start
        )

    def on_loss(self, now_us: int, origin: str) -> None:
        self.state = probe_rate.probe_rate_on_loss(
            self.state, self.model, self.params, now_us
        )
        self.ce_events.append((now_us, CeKind.LOSS_CE.value))


class RoccetController:
    """Per-ACK driver for the ROCCET decision flow.

    Update order per ACK: refresh rtt_min from the raw sample, fold the
    sample into the internal smoothed RTT (weight 1/8) and recompute srrtt,
    advance the interval counters (RTT boundaries tick on rtt_min of wall
    time, so cum_cwnd states what the window promises per uncongested
    round trip), then route: slow start runs the LAUNCH check each 100 ms
    interval, congestion avoidance returns immediately while draining,
    otherwise runs the ORBITER check each five-RTT interval. Whenever no
    check fires, growth falls through to plain CUBIC. While the transport
    is repairing a loss episode, signal updates continue but decisions and
    growth pause, mirroring a kernel suspending the growth hook during
    recovery.
    """

    def __init__(self, cubic_params: CubicParams, params: RoccetParams):
        self.cubic_params = cubic_params
        self.params = params
        self.cc = CcState(algo_tag="roccet")
        self.roc = RoccetState()
        self._srtt_us: float | None = None
        self._next_tick_us: int | None = None
        self.ce_events: list[tuple[int, str]] = []
        self.launch_exits: list[tuple[int, float, float]] = []  # (t, before, after)

    @property
    def state(self) -> CcState:
        return self.cc

    @property
    def cwnd(self) -> float:
        return self.cc.cwnd

    @property
    def pacing_rate_bps(self) -> float | None:
        return None

    def _reset_interval(self, roc: RoccetState, now_us: int) -> RoccetState:
        # The RTT tick grid re-anchors at the ACK that starts the interval,
        # so measurement windows are self-timed per flow.
        out = roccet.reset_interval(roc, now_us)
        self._next_tick_us = now_us + (roc.rtt_min_us or 0)
        return out

    def on_ack(
        self, ack: AckInfo, in_flight: float, round_start: bool, in_recovery: bool = False
    ) -> None:
        now = ack.now_us
        roc = self.roc
        params = self.params

        if ack.rtt_sample_us is not None:
            roc = roccet.update_rtt_min(roc, ack.rtt_sample_us, now, params)
            if self._srtt_us is None:
                self._srtt_us = float(ack.rtt_sample_us)
            else:
                self._srtt_us += EWMA_SRTT_WEIGHT * (ack.rtt_sample_us - self._srtt_us)
            roc = roccet.update_srrtt(roc, round(self._srtt_us), params)

        if roc.rtt_min_us is not None:
            if roc.interval_start_us is None:
                roc = self._reset_interval(roc, now)
            # Each boundary re-anchors on the ACK that crossed it: windows
            # are self-timed per flow, drifting with ACK quantization the
            # way an ACK-clocked kernel timer would.
            boundary = self._next_tick_us is not None and now >= self._next_tick_us
            if boundary:
                self._next_tick_us = now + roc.rtt_min_us
            roc = roccet.accumulate_interval(roc, ack.newly_acked, self.cc.cwnd, boundary)

        if in_recovery:
            self.roc = roc
            return

        cc = self.cc
        if cc.phase is Phase.SLOW_START:
            if (
                roc.interval_start_us is not None
                and now - roc.interval_start_us >= params.launch_interval_us
            ):
                decision = roccet.launch_check(roc, cc, now, params)
                roc = self._reset_interval(roc, now)
                if decision is not LaunchDecision.STAY:
                    before = cc.cwnd
                    roc, cc = roccet.apply_launch_exit(
                        roc, cc, now, decision, self.cubic_params
                    )
                    self.ce_events.append((now, CeKind.LAUNCH_EXIT.value))
                    self.launch_exits.append((now, before, cc.cwnd))
                    self.roc, self.cc = roc, cc
                    return
            cc = cubic.cubic_on_ack(cc, ack, self.cubic_params)
        else:
            if roc.drain_until_us is not None and now < roc.drain_until_us:
                self.roc, self.cc = roc, cc
                return
            if roc.rtts_elapsed_in_interval >= params.orbiter_interval_rtts:
                decision = roccet.orbiter_check(roc, cc, now, params)
                roc = self._reset_interval(roc, now)
                if decision is OrbiterDecision.ROCCET_CE:
                    roc, cc = roccet.apply_roccet_ce(
                        roc, cc, now, params, self.cubic_params
                    )
                    self.ce_events.append((now, CeKind.ROCCET_CE.value))
                    self.roc, self.cc = roc, cc
                    return
            cc = cubic.cubic_on_ack(cc, ack, self.cubic_params)

        self.roc, self.cc = roc, cc

    def on_loss(self, now_us: int, origin: str) -> None:
        if self.cc.phase is Phase.SLOW_START:
            self.cc = roccet.launch_on_loss(self.roc, self.cc)
            return
        before = len(self.roc.ce_log)
        self.roc, self.cc = roccet.orbiter_on_loss(
            self.roc, self.cc, self.params, self.cubic_params, now_us
        )
        if len(self.roc.ce_log) > before:
            self.ce_events.append((now_us, CeKind.LOSS_CE.value))


def make_controller(
    algo: str,
    cubic_params: CubicParams,
    roccet_params: RoccetParams,
    probe_params: probe_rate.ProbeRateParams,
):
    if algo == "cubic":
        return CubicController(cubic_params)
    if algo == "reno":
        return RenoController()
    if algo == "roccet":
        return RoccetController(cubic_params, roccet_params)
    if algo == "probe_rate":
        return ProbeRateController(probe_params)
    raise ValueError(f"unknown congestion control algorithm: {algo!r}")
