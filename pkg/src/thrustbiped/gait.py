"""Gait scheduling: stance/swing alternation, phase, and step events."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .morphology import LEFT, RIGHT


def other_side(side: str) -> str:
    return RIGHT if side == LEFT else LEFT


@dataclass(frozen=True)
class GaitConfig:
    """Stepping parameters (implementation defaults; tune per scenario)."""

    t_step: float = 0.4            # nominal step period [s]
    step_width: float = 0.115      # frontal stance offset magnitude [m]
    thrust_fraction: float = 0.25  # commanded vertical thrust / (m g), < 1
    max_step_length: float = 0.30  # step-offset saturation radius [m]
    z0: float = 0.45               # held CoM height [m]
    desired_speed: float = 0.0     # sagittal walking speed command [m/s]
    energy_trigger: Optional[float] = None  # early-step orbital energy [m^2/s^2]
    min_stance_time: float = 0.05  # contact-chatter debounce [s]
    late_step_grace: float = 0.5   # extra fraction of t_step to wait for touchdown
    double_air_grace: float = 0.10 # both feet airborne longer than this flags a fall
    swing_apex: float = 0.04       # swing foot clearance [m]
    settle_time: float = 0.0       # standing time before stepping begins [s]

    def __post_init__(self):
        if self.t_step <= 0.0:
            raise ValueError("t_step must be positive")
        if not 0.0 <= self.thrust_fraction < 1.0:
            raise ValueError("thrust_fraction must lie in [0, 1)")
        if self.max_step_length <= 0.0:
            raise ValueError("max_step_length must be positive")
        if self.z0 <= 0.0:
            raise ValueError("z0 must be positive")
        if self.min_stance_time < 0.0 or self.min_stance_time >= self.t_step:
            raise ValueError("min_stance_time must lie in [0, t_step)")


@dataclass
class SchedulerOutput:
    stance: str
    swing: str
    phase: float
    step_event: bool
    fall_candidate: bool
    stepping: bool


class GaitScheduler:
    """Alternates stance and swing legs on timer/touchdown events.

    The swap fires once the step timer expires (or an orbital-energy hint
    crosses the configured trigger), provided the minimum stance time has
    passed and the swing foot has touched down; if touchdown information
    is unavailable (reduced-order plant, instantaneous exchange) the timer
    alone decides.  A grace window tolerates late touchdowns, and a
    minimum-stance guard debounces contact chatter.
    """

    def __init__(self, config: GaitConfig, t0: float = 0.0,
                 initial_stance: str = LEFT, stepping: bool = True):
        self.config = config
        self.stance = initial_stance
        self.stepping = stepping
        self._swap_time = t0 + config.settle_time
        self._settling = config.settle_time > 0.0
        self._airborne_since: Optional[float] = None
        self.step_count = 0

    def freeze(self) -> None:
        """Stop issuing further step events (support stays where it is)."""
        self.stepping = False

    def unfreeze(self, t: float) -> None:
        self.stepping = True
        self._swap_time = t

    @property
    def swing(self) -> str:
        return other_side(self.stance)

    def phase(self, t: float) -> float:
        if not self.stepping:
            return 0.0
        return float(np.clip((t - self._swap_time) / self.config.t_step, 0.0, 1.0))

    def update(
        self,
        t: float,
        left_contact: Optional[bool] = None,
        right_contact: Optional[bool] = None,
        energy_hint: float = 0.0,
    ) -> SchedulerOutput:
        cfg = self.config
        fall_candidate = False

        if left_contact is not None and right_contact is not None:
            if not left_contact and not right_contact and self.stepping:
                if self._airborne_since is None:
                    self._airborne_since = t
                elif t - self._airborne_since > cfg.double_air_grace:
                    fall_candidate = True
            else:
                self._airborne_since = None

        step_event = False
        if self.stepping and not (self._settling and t < self._swap_time):
            self._settling = False
            elapsed = t - self._swap_time
            timer_due = elapsed >= cfg.t_step
            energy_due = cfg.energy_trigger is not None and energy_hint >= cfg.energy_trigger
            if (timer_due or energy_due) and elapsed >= cfg.min_stance_time:
                swing_contact = left_contact if self.swing == LEFT else right_contact
                overdue = elapsed >= cfg.t_step * (1.0 + cfg.late_step_grace)
                if swing_contact is None or swing_contact or overdue:
                    self.stance = self.swing
                    self._swap_time = t
                    self.step_count += 1
                    step_event = True

        return SchedulerOutput(
            stance=self.stance,
            swing=self.swing,
            phase=self.phase(t),
            step_event=step_event,
            fall_candidate=fall_candidate,
            stepping=self.stepping,
        )
