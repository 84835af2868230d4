"""Shared congestion-controller state types.

All controllers operate on the same `CcState` record through pure
transition functions: each operation takes a state value plus event data
and returns a new state. One event loop owns each flow's state at a time;
nothing here is shared or locked.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ScenarioError

#: Conventional initial window, in segments.
INITIAL_CWND = 10.0

#: A flow's window never drops below one segment.
MIN_CWND = 1.0


class Phase(Enum):
    SLOW_START = "slow_start"
    CONGESTION_AVOIDANCE = "congestion_avoidance"
    RECOVERY = "recovery"


@dataclass(frozen=True, slots=True)
class CubicParams:
    """CUBIC tuning knobs.

    `beta_mult` is the multiplicative-decrease *survivor* fraction: after a
    congestion event the window keeps `beta_mult * cwnd`. `c_scale` scales
    the cubic growth curve (segments per second cubed). The app-limited
    freeze reproduces the Linux behaviour of not growing cwnd while the
    application fails to fill the current window; turn it off for an
    idealized controller.
    """

    c_scale: float = 0.4
    beta_mult: float = 0.7
    fast_convergence: bool = True
    app_limited_freeze: bool = True

    def validate(self) -> None:
        if not self.c_scale > 0:
            raise ScenarioError(f"cubic c_scale must be > 0, got {self.c_scale}")
        if not 0 < self.beta_mult < 1:
            raise ScenarioError(
                f"cubic beta_mult must be in (0, 1), got {self.beta_mult}"
            )


@dataclass(frozen=True, slots=True)
class CcState:
    """Per-flow congestion controller state.

    `ssthresh` is None while still "infinite" (no congestion event or
    explicit threshold yet); this mirrors kernels initializing the
    threshold to the largest representable value. `epoch_start_us` and
    `cwnd_epoch` anchor CUBIC's growth curve (when the epoch began and the
    window it began from); both are set whenever the phase is congestion
    avoidance. `w_est` is the Reno-equivalent companion window that floors
    CUBIC growth in its friendly region. `ca_acked` is a
    fractional-increase accumulator used by the Reno controller.
    """

    cwnd: float = INITIAL_CWND
    ssthresh: float | None = None
    w_max: float = 0.0
    epoch_start_us: int | None = None
    cwnd_epoch: float = 0.0
    w_est: float = 0.0
    phase: Phase = Phase.SLOW_START
    algo_tag: str = "cubic"
    ca_acked: float = 0.0


@dataclass(frozen=True, slots=True)
class AckInfo:
    """Everything a controller learns from one cumulative ACK.

    `rtt_sample_us` is None when the sample had to be discarded (the acked
    segment was retransmitted). `is_app_limited` means the sender could not
    fill the current window because the application supplied too little
    data.
    """

    newly_acked: int
    rtt_sample_us: int | None
    now_us: int
    is_app_limited: bool = False
