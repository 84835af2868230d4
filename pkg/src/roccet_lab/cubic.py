"""CUBIC window growth.

The growth curve is a cubic anchored at the window size held when the last
congestion event fired (w_max):

    W(t) = c_scale * (t - K)^3 + w_max

On the standard loss path the window drops to beta_mult * w_max, and K is
chosen so the curve is continuous with that post-reduction window:
W(0) = beta_mult * w_max, hence K = cbrt(w_max * (1 - beta_mult) / c_scale).
That special case is `cubic_k` / `cubic_window`.

In general an epoch can begin from any window (a delay-based reduction
keeps w_max where it was; a slow-start exit can land anywhere), so the
live target in `cubic_on_ack` uses the epoch form (`cubic_target`): K is
derived from the gap between w_max and the window the epoch started from,
which keeps W(0) equal to the actual starting window. When the epoch
starts at or above w_max the curve is purely convex from the current
window (K = 0). The curve plateaus near w_max (cautious close to the last
congestion point) and accelerates the further the window is from it.
"""

from __future__ import annotations

from dataclasses import replace

from .cc_types import AckInfo, CcState, CubicParams, MIN_CWND, Phase


def cubic_k(w_max: float, params: CubicParams) -> float:
    """Seconds for the standard post-reduction curve to regain `w_max`."""
    return (w_max * (1.0 - params.beta_mult) / params.c_scale) ** (1.0 / 3.0)


def cubic_window(t_since_epoch_s: float, w_max: float, params: CubicParams) -> float:
    """Window target `t_since_epoch_s` seconds into a standard epoch, i.e.
    one that began from beta_mult * w_max. Floored at one segment."""
    k = cubic_k(w_max, params)
    return max(MIN_CWND, params.c_scale * (t_since_epoch_s - k) ** 3 + w_max)


def cubic_target(
    t_since_epoch_s: float, w_max: float, cwnd_epoch: float, params: CubicParams
) -> float:
    """Window target for an epoch that began from `cwnd_epoch`.

    Equals `cubic_window` when cwnd_epoch == beta_mult * w_max. For an
    epoch starting at or above w_max the origin moves up to the starting
    window and K collapses to zero (convex growth from there).
    """
    if w_max > cwnd_epoch:
        k = ((w_max - cwnd_epoch) / params.c_scale) ** (1.0 / 3.0)
        origin = w_max
    else:
        k = 0.0
        origin = cwnd_epoch
    return max(MIN_CWND, params.c_scale * (t_since_epoch_s - k) ** 3 + origin)


def aimd_increment(params: CubicParams) -> float:
    """Per-RTT additive growth of the Reno-equivalent companion window,
    scaled so an AIMD flow with this algorithm's decrease factor matches
    plain Reno throughput: 3 * (1 - beta) / (1 + beta)."""
    return 3.0 * (1.0 - params.beta_mult) / (1.0 + params.beta_mult)


def cubic_on_ack(state: CcState, ack: AckInfo, params: CubicParams) -> CcState:
    """Advance the window for one cumulative ACK.

    Slow start grows by the newly acked segment count (doubling per round
    with per-segment ACKs), capped at ssthresh when one is set. Congestion
    avoidance steps toward the growth target by at most
    (target - cwnd) / cwnd per ACK, and never shrinks; the target is the
    cubic curve floored by the Reno-equivalent companion window, which
    keeps small-window flows converging toward each other instead of being
    starved by large-w_max neighbours. If the flow is app-limited and the
    freeze knob is on, the window is left untouched in any phase.
    """
    if params.app_limited_freeze and ack.is_app_limited:
        return state

    if state.phase is Phase.SLOW_START:
        cwnd = state.cwnd + ack.newly_acked
        if state.ssthresh is not None and cwnd >= state.ssthresh:
            capped = min(cwnd, state.ssthresh)
            return replace(
                state,
                cwnd=capped,
                phase=Phase.CONGESTION_AVOIDANCE,
                epoch_start_us=ack.now_us,
                cwnd_epoch=capped,
                w_est=capped,
                w_max=max(state.w_max, capped),
            )
        return replace(state, cwnd=cwnd)

    if state.phase is Phase.CONGESTION_AVOIDANCE:
        epoch = state.epoch_start_us
        if epoch is None:
            # Defensive: anchor a fresh epoch rather than growing blind.
            return replace(
                state, epoch_start_us=ack.now_us, cwnd_epoch=state.cwnd, w_est=state.cwnd
            )
        t = (ack.now_us - epoch) / 1e6
        # The companion window updated by this ACK floors the *next* step,
        # keeping the epoch-start window exactly continuous.
        target = max(cubic_target(t, state.w_max, state.cwnd_epoch, params), state.w_est)
        w_est = state.w_est + aimd_increment(params) * ack.newly_acked / state.cwnd
        cwnd = state.cwnd
        if target > cwnd:
            cwnd = cwnd + (target - cwnd) / cwnd
        # Direct construction: this runs per ACK and replace() is
        # measurably slower.
        return CcState(
            cwnd=cwnd,
            ssthresh=state.ssthresh,
            w_max=state.w_max,
            epoch_start_us=epoch,
            cwnd_epoch=state.cwnd_epoch,
            w_est=w_est,
            phase=Phase.CONGESTION_AVOIDANCE,
            algo_tag=state.algo_tag,
            ca_acked=state.ca_acked,
        )

    return state


def cubic_on_congestion_event(
    state: CcState, params: CubicParams, now_us: int
) -> CcState:
    """Multiplicative decrease plus epoch reset.

    The pre-reduction window becomes the new w_max unless the flow was
    still below its previous peak; in that case fast convergence (when
    enabled) shrinks the recorded peak to cwnd * (2 - beta_mult) / 2 so
    that competing flows converge faster. Callers must not invoke this
    twice for the same loss episode.
    """
    if state.cwnd < state.w_max and params.fast_convergence:
        w_max = state.cwnd * (2.0 - params.beta_mult) / 2.0
    else:
        w_max = state.cwnd
    cwnd = max(MIN_CWND, state.cwnd * params.beta_mult)
    return replace(
        state,
        cwnd=cwnd,
        ssthresh=cwnd,
        w_max=w_max,
        epoch_start_us=now_us,
        cwnd_epoch=cwnd,
        w_est=cwnd,
        phase=Phase.CONGESTION_AVOIDANCE,
    )
