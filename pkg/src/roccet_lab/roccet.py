"""ROCCET: delay-based extension over CUBIC.

Two signals drive congestion detection. The first is the smoothed relative
RTT, an EWMA of the relative inflation of the smoothed RTT over the
measured minimum:

    x_t     = (rtt_curr - rtt_min) / rtt_min
    srrtt_t = alpha * x_t + (1 - alpha) * srrtt_{t-1}

The second compares the number of ACKed segments received over an interval
against the cumulative sum of the windows sampled once per RTT over the
same interval (cum_cwnd): a persistent shortfall means the window promises
more than the path delivers.

LAUNCH exits slow start when, over a 100 ms interval, the ACK/cum_cwnd
difference reaches ten segments while srrtt is at least 100 %; the initial
slow start exits by halving the window, later ones by generating a regular
CUBIC congestion event. Loss during slow start is ignored. ORBITER, in
congestion avoidance, generates a delay-based congestion event when the
ACK deficit over five RTTs exceeds 20 % of cum_cwnd and srrtt is at least
100 %; afterwards the window is held constant for a 100 ms drain period so
the standing queue can empty. Loss in congestion avoidance falls back to
the normal CUBIC reaction (unless configured to be ignored entirely).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .cc_types import CcState, CubicParams, MIN_CWND, Phase
from .errors import RoccetLabError, ScenarioError


class CeKind(Enum):
    ROCCET_CE = "roccet_ce"
    LOSS_CE = "loss_ce"
    LAUNCH_EXIT = "launch_exit"


class LaunchDecision(Enum):
    STAY = "stay"
    EXIT_INITIAL = "exit_initial"
    EXIT_LATER = "exit_later"


class OrbiterDecision(Enum):
    NONE = "none"
    ROCCET_CE = "roccet_ce"


@dataclass(frozen=True, slots=True)
class RoccetParams:
    """Tuning knobs; defaults follow the algorithm description.

    `srrtt_threshold` of 1.0 is the "100 %" relative-RTT bound. Raising it
    or `launch_ack_margin` / `orbiter_deviation` makes detection more
    defensive. `ignore_loss` drops the loss reaction entirely (for lossy
    links); `rtt_min_refresh` re-estimates a stale minimum RTT by EWMA once
    it is older than `rtt_min_refresh_age_us`.
    """

    alpha: float = 0.25
    srrtt_threshold: float = 1.0
    launch_ack_margin: float = 10.0
    launch_interval_us: int = 100_000
    orbiter_interval_rtts: int = 5
    orbiter_deviation: float = 0.20
    drain_duration_us: int = 100_000
    ignore_loss: bool = False
    rtt_min_refresh: bool = False
    rtt_min_refresh_age_us: int = 10_000_000
    rtt_min_refresh_alpha: float = 0.5

    def validate(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ScenarioError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.srrtt_threshold > 0:
            raise ScenarioError("srrtt_threshold must be > 0")
        if self.launch_interval_us <= 0 or self.drain_duration_us <= 0:
            raise ScenarioError("launch_interval and drain_duration must be > 0")
        if self.orbiter_interval_rtts < 1:
            raise ScenarioError("orbiter_interval_rtts must be >= 1")
        if not 0 < self.orbiter_deviation < 1:
            raise ScenarioError(
                f"orbiter_deviation must be in (0, 1), got {self.orbiter_deviation}"
            )
        if not 0 < self.rtt_min_refresh_alpha <= 1:
            raise ScenarioError("rtt_min_refresh_alpha must be in (0, 1]")
        if self.rtt_min_refresh_age_us <= 0:
            raise ScenarioError("rtt_min_refresh_age must be > 0")


@dataclass(frozen=True, slots=True)
class RoccetState:
    """Per-flow ROCCET bookkeeping on top of the shared CcState.

    Interval counters (`acks_in_interval`, `cum_cwnd_in_interval`,
    `rtts_elapsed_in_interval`) always reset together. `drain_until_us`,
    when set, is the end of the post-congestion-event hold period.
    """

    srrtt: float = 0.0
    rtt_min_us: int | None = None
    rtt_min_updated_at_us: int = 0
    interval_start_us: int | None = None
    acks_in_interval: float = 0.0
    cum_cwnd_in_interval: float = 0.0
    rtts_elapsed_in_interval: int = 0
    drain_until_us: int | None = None
    is_initial_slow_start: bool = True
    ce_log: tuple[tuple[int, CeKind], ...] = ()


def update_rtt_min(
    state: RoccetState, sample_us: int, now_us: int, params: RoccetParams
) -> RoccetState:
    """Track the minimum per-ACK RTT sample.

    A lower sample always replaces the minimum. With refresh enabled, a
    minimum that has not been updated for longer than the refresh age is
    blended toward the current sample by EWMA, so the baseline can follow
    a path whose floor genuinely moved.
    """
    if state.rtt_min_us is None or sample_us < state.rtt_min_us:
        return replace(state, rtt_min_us=sample_us, rtt_min_updated_at_us=now_us)
    if (
        params.rtt_min_refresh
        and now_us - state.rtt_min_updated_at_us > params.rtt_min_refresh_age_us
    ):
        a = params.rtt_min_refresh_alpha
        blended = round(a * sample_us + (1.0 - a) * state.rtt_min_us)
        return replace(state, rtt_min_us=blended, rtt_min_updated_at_us=now_us)
    return state


def update_srrtt(state: RoccetState, srtt_now_us: int, params: RoccetParams) -> RoccetState:
    """EWMA the relative inflation of the smoothed RTT over the minimum.

    The inflation term is floored at zero: with rtt_min tracking raw
    minima it is never negative, but the refresh option can lift rtt_min
    above a transiently low smoothed RTT.
    """
    if state.rtt_min_us is None:
        raise RoccetLabError("update_srrtt called before any rtt_min sample")
    x = max(0.0, (srtt_now_us - state.rtt_min_us) / state.rtt_min_us)
    # Direct construction: this runs per ACK and replace() is measurably
    # slower.
    return RoccetState(
        srrtt=params.alpha * x + (1.0 - params.alpha) * state.srrtt,
        rtt_min_us=state.rtt_min_us,
        rtt_min_updated_at_us=state.rtt_min_updated_at_us,
        interval_start_us=state.interval_start_us,
        acks_in_interval=state.acks_in_interval,
        cum_cwnd_in_interval=state.cum_cwnd_in_interval,
        rtts_elapsed_in_interval=state.rtts_elapsed_in_interval,
        drain_until_us=state.drain_until_us,
        is_initial_slow_start=state.is_initial_slow_start,
        ce_log=state.ce_log,
    )


def accumulate_interval(
    state: RoccetState,
    newly_acked: float,
    current_cwnd: float,
    rtt_boundary_crossed: bool,
) -> RoccetState:
    """Fold one ACK (and, when flagged, one RTT boundary) into the interval
    counters. At each boundary the current window joins cum_cwnd."""
    cum = state.cum_cwnd_in_interval
    rtts = state.rtts_elapsed_in_interval
    if rtt_boundary_crossed:
        cum += current_cwnd
        rtts += 1
    return RoccetState(
        srrtt=state.srrtt,
        rtt_min_us=state.rtt_min_us,
        rtt_min_updated_at_us=state.rtt_min_updated_at_us,
        interval_start_us=state.interval_start_us,
        acks_in_interval=state.acks_in_interval + newly_acked,
        cum_cwnd_in_interval=cum,
        rtts_elapsed_in_interval=rtts,
        drain_until_us=state.drain_until_us,
        is_initial_slow_start=state.is_initial_slow_start,
        ce_log=state.ce_log,
    )


def reset_interval(state: RoccetState, now_us: int) -> RoccetState:
    """Zero the interval counters and start a new interval at `now_us`.
    Applied by the caller after every LAUNCH or ORBITER check."""
    return replace(
        state,
        interval_start_us=now_us,
        acks_in_interval=0.0,
        cum_cwnd_in_interval=0.0,
        rtts_elapsed_in_interval=0,
    )


def launch_check(
    state: RoccetState, cc: CcState, now_us: int, params: RoccetParams
) -> LaunchDecision:
    """Slow-start exit decision, evaluated once per 100 ms interval.

    Exits when the absolute ACK/cum_cwnd difference reaches the margin
    AND srrtt is at or above the threshold. The absolute difference keeps
    the check robust to the sign of the imbalance. The caller applies the
    exit (see `apply_launch_exit`) and resets the interval either way.
    """
    deficit = abs(state.acks_in_interval - state.cum_cwnd_in_interval)
    if deficit >= params.launch_ack_margin and state.srrtt >= params.srrtt_threshold:
        if state.is_initial_slow_start:
            return LaunchDecision.EXIT_INITIAL
        return LaunchDecision.EXIT_LATER
    return LaunchDecision.STAY


def apply_launch_exit(
    state: RoccetState,
    cc: CcState,
    now_us: int,
    decision: LaunchDecision,
    cubic_params: CubicParams,
) -> tuple[RoccetState, CcState]:
    """Apply a LAUNCH exit decision.

    The initial slow start exits by halving: cwnd = cwnd / 2 and
    ssthresh = cwnd. Later slow starts exit through a regular CUBIC
    congestion event. The halving exit deliberately leaves w_max alone
    (still unset at this point in a fresh connection): the peak tracker
    belongs to congestion events, so the first delay-based event after the
    exit anchors it at a real operating point rather than at the
    slow-start overshoot.
    """
    from .cubic import cubic_on_congestion_event

    if decision is LaunchDecision.EXIT_INITIAL:
        halved = max(MIN_CWND, cc.cwnd / 2.0)
        new_cc = replace(
            cc,
            cwnd=halved,
            ssthresh=halved,
            epoch_start_us=now_us,
            cwnd_epoch=halved,
            w_est=halved,
            phase=Phase.CONGESTION_AVOIDANCE,
        )
    elif decision is LaunchDecision.EXIT_LATER:
        new_cc = cubic_on_congestion_event(cc, cubic_params, now_us)
    else:
        return state, cc
    new_state = replace(
        state,
        is_initial_slow_start=False,
        ce_log=state.ce_log + ((now_us, CeKind.LAUNCH_EXIT),),
    )
    return new_state, new_cc


def launch_on_loss(state: RoccetState, cc: CcState) -> CcState:
    """Loss during slow start is ignored: retransmission is still the
    transport's job, but the window is left untouched."""
    return cc


def orbiter_check(
    state: RoccetState, cc: CcState, now_us: int, params: RoccetParams
) -> OrbiterDecision:
    """Delay-based congestion decision, evaluated once per five-RTT interval.

    Inside the drain window nothing fires. Otherwise a congestion event
    requires both conjuncts: the ACK shortfall must exceed the configured
    fraction of cum_cwnd, and srrtt must be at or above the threshold.
    The caller resets the interval either way.
    """
    if state.drain_until_us is not None and now_us < state.drain_until_us:
        return OrbiterDecision.NONE
    deficit = state.cum_cwnd_in_interval - state.acks_in_interval
    if (
        deficit > params.orbiter_deviation * state.cum_cwnd_in_interval
        and state.srrtt >= params.srrtt_threshold
    ):
        return OrbiterDecision.ROCCET_CE
    return OrbiterDecision.NONE


def apply_roccet_ce(
    state: RoccetState,
    cc: CcState,
    now_us: int,
    params: RoccetParams,
    cubic_params: CubicParams,
) -> tuple[RoccetState, CcState]:
    """Reduce the window for a delay-based congestion event.

    w_max is only raised, never shrunk (no fast convergence here), which
    keeps regrowth after a delay-based event fast. The window drops by the
    survivor fraction and a drain period begins during which the window is
    held constant.
    """
    w_max = cc.cwnd if cc.cwnd > cc.w_max else cc.w_max
    cwnd = max(MIN_CWND, cc.cwnd * cubic_params.beta_mult)
    new_cc = replace(
        cc,
        cwnd=cwnd,
        w_max=w_max,
        epoch_start_us=now_us,
        cwnd_epoch=cwnd,
        w_est=cwnd,
        phase=Phase.CONGESTION_AVOIDANCE,
    )
    new_state = replace(
        state,
        drain_until_us=now_us + params.drain_duration_us,
        ce_log=state.ce_log + ((now_us, CeKind.ROCCET_CE),),
    )
    return new_state, new_cc


def orbiter_on_loss(
    state: RoccetState,
    cc: CcState,
    params: RoccetParams,
    cubic_params: CubicParams,
    now_us: int,
) -> tuple[RoccetState, CcState]:
    """Loss outside slow start: behave like CUBIC (including fast
    convergence), unless loss is configured to be ignored. The drain window
    does not shield against loss."""
    from .cubic import cubic_on_congestion_event

    if params.ignore_loss:
        return state, cc
    new_cc = cubic_on_congestion_event(cc, cubic_params, now_us)
    new_state = replace(state, ce_log=state.ce_log + ((now_us, CeKind.LOSS_CE),))
    return new_state, new_cc
