"""Scenario-driven closed-loop simulation.

One fixed-step loop per plant: the reduced pendulum plant (instantaneous
support exchange, height held) and the full-order plant (compliant
contact, joint tracking, thruster allocation).  Each control tick reads
the state, runs the scheduler and capture planner, maps the plan to
actuation, then advances the physics by an integer number of RK4
substeps with the input held.  Everything is deterministic for a given
scenario.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .contact import GroundParams, ground_forces
from .dynamics import IllConditionedMassMatrix, kinetic_energy, potential_energy
from .engine import Stepper
from .gait import GaitConfig, GaitScheduler
from .integrate import NonFiniteDerivativeError, rk4_step
from .kinematics import JointAngles, leg_chain
from .morphology import LEFT, RIGHT, SIDES, RobotMorphology, default_morphology
from .planner import nominal_thrust, plan_step
from .state import FullState, pack_state
from .tracking import TrackerGains, WholeBodyTracker, com_from_chains, leg_ik
from .vlip import VlipState, orbital_energy

FALL_HEIGHT_FRACTION = 0.5   # CoM below this fraction of z0 counts as fallen
FALL_TILT = np.deg2rad(60.0)


@dataclass(frozen=True)
class Disturbance:
    """Impulse applied to the CoM at a given time [N s]."""

    time: float
    impulse: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "impulse", np.asarray(self.impulse, dtype=float).reshape(3))


@dataclass
class Scenario:
    """Everything one run needs; value-like and safe to ship across workers."""

    name: str = "scenario"
    plant: str = "vlip"                  # "vlip" | "full_order"
    duration: float = 10.0
    dt: float = 1e-4
    control_rate: float = 1000.0         # Hz
    log_rate: float = 500.0              # Hz, <= control_rate
    seed: int = 0
    morphology: RobotMorphology = field(default_factory=default_morphology)
    ground: GroundParams = field(default_factory=GroundParams)
    gait: GaitConfig = field(default_factory=GaitConfig)
    gains: TrackerGains = field(default_factory=TrackerGains)
    disturbances: List[Disturbance] = field(default_factory=list)
    stepping: bool = True                # False: stand on both feet
    initial_stance: str = LEFT
    drop_height: float = 0.01            # full-order start height offset [m]
    stance_stagger: float = 0.0          # fore-aft foot split while standing [m]
    vlip_start: tuple = (0.0, 0.0, 0.0, 0.0)   # x, y, xdot, ydot relative to stance
    post_push_step_budget: Optional[int] = None  # freeze stepping N steps after a push
    step_on_push: bool = False           # start frozen, arm the step timer at the push
    pass_over_margin: float = 0.02       # forward fall classifier margin [m]
    force_pure_backend: bool = False

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if self.plant not in ("vlip", "full_order"):
            raise ValueError(f"unknown plant {self.plant!r}")
        if self.control_rate > 1.0 / self.dt + 1e-9:
            raise ValueError("control rate must not exceed 1/dt")
        sub = 1.0 / (self.control_rate * self.dt)
        if abs(sub - round(sub)) > 1e-9:
            raise ValueError("1/(control_rate*dt) must be an integer substep count")
        if self.log_rate > self.control_rate + 1e-9:
            raise ValueError("log rate must not exceed the control rate")
        dec = self.control_rate / self.log_rate
        if abs(dec - round(dec)) > 1e-9:
            raise ValueError("control_rate/log_rate must be an integer")


@dataclass
class TrajectoryLog:
    """Uniformly sampled run history: named columns over one 2D array."""

    columns: List[str]
    data: np.ndarray        # (n_samples, n_columns)
    events: List[dict]      # step events: {time, stance, target, clamped}
    sample_rate: float

    def col(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.col("t")


@dataclass
class RunMetrics:
    fell: bool = False
    fall_time: Optional[float] = None
    fell_forward: bool = False
    steps: int = 0
    limit_cycle_residuals: List[float] = field(default_factory=list)
    limit_cycle_residual: Optional[float] = None
    mean_height_error: float = 0.0
    peak_joint_torque: float = 0.0
    thruster_impulse: float = 0.0
    constraint_violations: int = 0
    completed: bool = True
    error: Optional[str] = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["limit_cycle_residuals"] = [float(v) for v in self.limit_cycle_residuals]
        return d


class _Recorder:
    def __init__(self, columns: List[str], capacity: int, sample_rate: float):
        self.columns = columns
        self._data = np.zeros((capacity, len(columns)))
        self._n = 0
        self.events: List[dict] = []
        self.sample_rate = sample_rate

    def add(self, row: np.ndarray):
        self._data[self._n, :] = row
        self._n += 1

    def event(self, **kw):
        self.events.append(kw)

    def done(self) -> TrajectoryLog:
        return TrajectoryLog(
            columns=self.columns,
            data=self._data[: self._n].copy(),
            events=self.events,
            sample_rate=self.sample_rate,
        )


def _poincare_update(metrics: RunMetrics, samples: List[np.ndarray], s: np.ndarray):
    samples.append(s)
    if len(samples) >= 2:
        metrics.limit_cycle_residuals.append(float(np.linalg.norm(samples[-1] - samples[-2])))
        metrics.limit_cycle_residual = metrics.limit_cycle_residuals[-1]


VLIP_COLUMNS = (
    ["t", "com_x", "com_y", "com_z", "vcom_x", "vcom_y", "vcom_z",
     "cop_x", "cop_y", "cop_z", "utc_x", "utc_y", "utc_z",
     "offset_x", "offset_y", "g_eff", "stance_is_left", "step_event",
     "clamped", "orbital_energy_x", "leg_length"]
)


def _run_vlip(s: Scenario) -> tuple:
    morph, gait = s.morphology, s.gait
    m = morph.total_mass
    z0 = gait.z0
    g = morph.g
    thrust = nominal_thrust(gait, m, g)
    g_eff = g - thrust.magnitude / m
    r_max = morph.max_leg_extent * 1.05 + 0.12  # generous reach bound

    stepping0 = s.stepping and not s.step_on_push
    sched = GaitScheduler(gait, t0=0.0, initial_stance=s.initial_stance,
                          stepping=stepping0)
    x0, y0, vx0, vy0 = s.vlip_start
    p = np.array([x0, y0, z0])
    v = np.array([vx0, vy0, 0.0])
    c = np.zeros(3)

    n_sub = round(1.0 / (s.control_rate * s.dt))
    n_ticks = round(s.duration * s.control_rate)
    log_dec = round(s.control_rate / s.log_rate)
    rec = _Recorder(list(VLIP_COLUMNS), n_ticks // log_dec + 2, s.log_rate)
    metrics = RunMetrics()
    poincare: List[np.ndarray] = []

    disturbances = sorted(s.disturbances, key=lambda d: d.time)
    d_idx = 0
    push_seen = False
    budget_left = s.post_push_step_budget

    def accel(state4):
        rel = state4[0:2] - c[0:2]
        return np.array([state4[2], state4[3],
                         g_eff * rel[0] / z0, g_eff * rel[1] / z0])

    dt_tick = 1.0 / s.control_rate
    for k in range(n_ticks):
        t = k * dt_tick
        while d_idx < len(disturbances) and disturbances[d_idx].time <= t + 1e-12:
            v[0:2] += disturbances[d_idx].impulse[0:2] / m
            d_idx += 1
            push_seen = True
            if s.step_on_push and not sched.stepping:
                sched.unfreeze(t)   # reaction step fires one period later

        rel = p - c
        E = orbital_energy(float(rel[0]), float(v[0]), z0, g_eff).E
        out = sched.update(t, None, None, energy_hint=abs(E))
        plan = plan_step(VlipState(p_B=p, v_B=v, c=c, z0=z0, m=m), thrust,
                         gait, swing_side=sched.swing, g=g)
        if out.step_event:
            placed = out.stance
            exec_plan = plan_step(VlipState(p_B=p, v_B=v, c=c, z0=z0, m=m),
                                  thrust, gait, swing_side=placed, g=g)
            c = exec_plan.target.copy()
            metrics.steps += 1
            rec.event(time=t, stance=placed, target=[float(q) for q in c],
                      clamped=bool(exec_plan.clamped))
            if placed == LEFT:
                rel_e = p - c
                _poincare_update(metrics, poincare,
                                 np.array([rel_e[0], rel_e[1], v[0], v[1]]))
            if push_seen and budget_left is not None:
                budget_left -= 1
                if budget_left <= 0:
                    sched.freeze()
            plan = exec_plan

        if k % log_dec == 0:
            rel = p - c
            rec.add(np.array([
                t, p[0], p[1], p[2], v[0], v[1], v[2], c[0], c[1], c[2],
                thrust.u_tc[0], thrust.u_tc[1], thrust.u_tc[2],
                plan.offset_x, plan.offset_y, plan.g_eff,
                1.0 if sched.stance == LEFT else 0.0,
                1.0 if out.step_event else 0.0,
                1.0 if plan.clamped else 0.0,
                orbital_energy(float(rel[0]), float(v[0]), z0, g_eff).E,
                float(np.sqrt(rel[0] ** 2 + rel[1] ** 2 + z0 ** 2)),
            ]))

        state4 = np.array([p[0], p[1], v[0], v[1]])
        for _ in range(n_sub):
            state4 = rk4_step(accel, state4, s.dt)
        p[0], p[1] = state4[0], state4[1]
        v[0], v[1] = state4[2], state4[3]

        rel = p - c
        leg = np.sqrt(rel[0] ** 2 + rel[1] ** 2 + z0 ** 2)
        if not sched.stepping and rel[0] > s.pass_over_margin:
            metrics.fell_forward = True
            metrics.fell = True
            metrics.fall_time = t
            break
        if leg > r_max:
            metrics.fell = True
            metrics.fall_time = t
            break

    return rec.done(), metrics


FULL_COLUMNS = (
    ["t"]
    + ["r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22"]
    + ["pb_x", "pb_y", "pb_z", "gam_L", "gam_R", "phih_L", "phih_R", "phik_L", "phik_R"]
    + ["wx", "wy", "wz", "vb_x", "vb_y", "vb_z",
       "dgam_L", "dgam_R", "dphih_L", "dphih_R", "dphik_L", "dphik_R"]
    + ["uj_pel_L", "uj_pel_R", "uj_hip_L", "uj_hip_R", "uj_knee_L", "uj_knee_R"]
    + ["ut_Lx", "ut_Ly", "ut_Lz", "ut_Rx", "ut_Ry", "ut_Rz"]
    + ["ug_Lx", "ug_Ly", "ug_Lz", "ug_Rx", "ug_Ry", "ug_Rz"]
    + ["cop_x", "cop_y", "cop_z", "com_x", "com_y", "com_z",
       "vcom_x", "vcom_y", "vcom_z"]
    + ["plan_target_x", "plan_target_y", "offset_x", "offset_y", "g_eff",
       "thrust_mag", "stance_is_left", "step_event", "phase",
       "knee_load_L", "knee_load_R", "total_energy", "injected_work", "tilt"]
)


def standing_state(morph: RobotMorphology, gait: GaitConfig,
                   drop_height: float = 0.0, foot_y: Optional[float] = None,
                   stagger: float = 0.0) -> FullState:
    """Double-support stance with the CoM at z0 (+ drop offset).

    Feet sit at x = +/- stagger/2 (left forward), y = +/- foot_y; the body
    pose is iterated so the total CoM lands exactly over the support
    midpoint at the commanded height, then the drop offset is applied.
    A nonzero stagger turns the support line into a polygon, which gives
    the stand passive fore-aft stiffness through the ground springs.
    """
    foot_y = gait.step_width if foot_y is None else foot_y
    # iterate the body pose until the total CoM sits exactly above the feet
    # at the commanded height
    x_B, z_B = 0.0, gait.z0 + 0.06
    for _ in range(80):
        joints = {}
        for side in SIDES:
            y_t = foot_y if side == LEFT else -foot_y
            x_t = 0.5 * stagger if side == LEFT else -0.5 * stagger
            ik = leg_ik(morph, np.eye(3), np.array([x_B, 0.0, z_B]),
                        np.array([x_t, y_t, 0.0]), side)
            joints[side] = ik
        x = pack_state(
            np.eye(3), [x_B, 0.0, z_B],
            (joints[LEFT].gamma_h, joints[RIGHT].gamma_h),
            (joints[LEFT].phi_h, joints[RIGHT].phi_h),
            (joints[LEFT].phi_k, joints[RIGHT].phi_k),
            omega=np.zeros(3), pbdot=np.zeros(3), dgammas=(0, 0),
            dphi_hs=(0, 0), dphi_ks=(0, 0),
        )
        st = FullState(x)
        chains = {side: leg_chain(morph, st.R, st.p_B, JointAngles(*st.joints(side)), side)
                  for side in SIDES}
        com, _ = com_from_chains(morph, st, chains)
        err_z = gait.z0 - com[2]
        err_x = 0.0 - com[0]
        if abs(err_z) < 1e-12 and abs(err_x) < 1e-12:
            break
        z_B += err_z
        x_B += err_x
    x[11] += drop_height
    return FullState(x)


def _tilt(R: np.ndarray) -> float:
    return float(np.arccos(np.clip(R[2, 2], -1.0, 1.0)))


def _run_full(s: Scenario) -> tuple:
    morph, gait, ground = s.morphology, s.gait, s.ground
    m = morph.total_mass
    g = morph.g
    thrust = nominal_thrust(gait, m, g)
    tracker = WholeBodyTracker(morph, gait, s.gains, ground)
    stepper = Stepper(morph, ground, force_pure=s.force_pure_backend)

    state = standing_state(morph, gait, drop_height=s.drop_height,
                           stagger=s.stance_stagger)
    sched = GaitScheduler(gait, t0=0.0, initial_stance=s.initial_stance,
                          stepping=s.stepping and not s.step_on_push)

    chains = {side: leg_chain(morph, state.R, state.p_B,
                              JointAngles(*state.joints(side)), side,
                              omega=state.omega, pbdot=state.x[21:24])
              for side in SIDES}
    anchors: Dict[str, np.ndarray] = {
        side: np.array([chains[side].p_F[0], chains[side].p_F[1], 0.0])
        for side in SIDES
    }
    liftoff: Optional[np.ndarray] = None
    walking_started = False
    anchor_settle_until = -1.0   # re-anchor window after touchdown (skid)

    n_sub = round(1.0 / (s.control_rate * s.dt))
    n_ticks = round(s.duration * s.control_rate)
    log_dec = round(s.control_rate / s.log_rate)
    rec = _Recorder(list(FULL_COLUMNS), n_ticks // log_dec + 2, s.log_rate)
    metrics = RunMetrics()
    poincare: List[np.ndarray] = []

    disturbances = sorted(s.disturbances, key=lambda d: d.time)
    d_idx = 0
    push_seen = False
    budget_left = s.post_push_step_budget
    work_total = 0.0

    dt_tick = 1.0 / s.control_rate
    for k in range(n_ticks):
        t = k * dt_tick
        while d_idx < len(disturbances) and disturbances[d_idx].time <= t + 1e-12:
            state.x[21:24] += disturbances[d_idx].impulse / m
            d_idx += 1
            push_seen = True
            if s.step_on_push and not sched.stepping:
                sched.unfreeze(t)

        chains = {side: leg_chain(morph, state.R, state.p_B,
                                  JointAngles(*state.joints(side)), side,
                                  omega=state.omega, pbdot=state.x[21:24])
                  for side in SIDES}
        u_g, c_L, c_R = ground_forces(ground, chains[LEFT].p_F, chains[LEFT].pdot_F,
                                      chains[RIGHT].p_F, chains[RIGHT].pdot_F)
        com, vcom = com_from_chains(morph, state, chains)

        stance_anchor = anchors.get(sched.stance, next(iter(anchors.values())))
        rel_x = float(com[0] - stance_anchor[0])
        try:
            E_hint = abs(orbital_energy(rel_x, float(vcom[0]), gait.z0,
                                        g - thrust.magnitude / m).E)
        except ValueError:
            E_hint = 0.0
        out = sched.update(t, c_L.in_contact, c_R.in_contact, energy_hint=E_hint)

        if out.step_event:
            placed = out.stance
            swing_now = out.swing
            anchors = {placed: np.array([chains[placed].p_F[0],
                                         chains[placed].p_F[1], 0.0])}
            liftoff = chains[swing_now].p_F.copy()
            anchor_settle_until = t + 0.08
            metrics.steps += 1
            if push_seen and budget_left is not None:
                budget_left -= 1
                if budget_left <= 0:
                    sched.freeze()
                    anchors[swing_now] = np.array([chains[swing_now].p_F[0],
                                                   chains[swing_now].p_F[1], 0.0])
            if placed == LEFT:
                _poincare_update(metrics, poincare, np.concatenate([
                    com - np.array([*anchors[placed][0:2], 0.0]), vcom,
                    [_tilt(state.R)],
                ]))
        elif out.stepping and not walking_started and sched.phase(t) > 0.0:
            # first swing begins: drop the swing anchor, mark liftoff
            walking_started = True
            sw = sched.swing
            anchors = {sched.stance: anchors[sched.stance]}
            liftoff = chains[sw].p_F.copy()

        if walking_started and t < anchor_settle_until and sched.stance in anchors:
            f = chains[sched.stance].p_F
            anchors[sched.stance] = np.array([f[0], f[1], 0.0])
        c_stance = anchors.get(sched.stance, next(iter(anchors.values())))
        vstate = VlipState(p_B=com, v_B=vcom,
                           c=np.array([c_stance[0], c_stance[1], 0.0]),
                           z0=gait.z0, m=m)
        t_go = max(0.0, (1.0 - out.phase) * gait.t_step) if out.stepping else 0.0
        plan = plan_step(vstate, thrust, gait, swing_side=sched.swing, g=g,
                         time_to_go=t_go)
        if out.step_event:
            rec.event(time=t, stance=out.stance,
                      target=[float(q) for q in plan.target],
                      clamped=bool(plan.clamped))

        u, debug = tracker.compute(state, out, plan, liftoff, anchors, u_g)

        if k % log_dec == 0:
            energy = kinetic_energy(morph, state) + potential_energy(morph, state)
            f_zs = (c_L.force[2], c_R.force[2])
            if f_zs[0] + f_zs[1] > 0.0:
                lam_L = f_zs[0] / (f_zs[0] + f_zs[1])
                cop = lam_L * chains[LEFT].p_F + (1 - lam_L) * chains[RIGHT].p_F
            else:
                cop = np.full(3, np.nan)
            rec.add(np.concatenate([
                [t], state.x,
                u.u_j, u.u_t, u_g,
                cop, com, vcom,
                [plan.target[0], plan.target[1], plan.offset_x, plan.offset_y,
                 plan.g_eff, thrust.magnitude,
                 1.0 if sched.stance == LEFT else 0.0,
                 1.0 if out.step_event else 0.0, out.phase,
                 debug.knee_load_torque[LEFT], debug.knee_load_torque[RIGHT],
                 energy, work_total, _tilt(state.R)],
            ]))

        try:
            new_x, block_work = stepper.run(state.x, u.u_j, u.u_t, n_sub, s.dt)
        except (NonFiniteDerivativeError, IllConditionedMassMatrix) as exc:
            metrics.completed = False
            metrics.error = f"{type(exc).__name__}: {exc}"
            metrics.fell = True
            metrics.fall_time = t
            break
        state = FullState(new_x)
        work_total += block_work

        tilt = _tilt(state.R)
        com_z = float(com[2])
        if com_z < FALL_HEIGHT_FRACTION * gait.z0 or tilt > FALL_TILT or out.fall_candidate:
            metrics.fell = True
            metrics.fall_time = t
            break

        metrics.peak_joint_torque = max(metrics.peak_joint_torque,
                                        float(np.max(np.abs(u.u_j[0:4]))))
        metrics.thruster_impulse += (np.linalg.norm(u.u_t[0:3])
                                     + np.linalg.norm(u.u_t[3:6])) * dt_tick

    log = rec.done()
    if log.data.shape[0]:
        metrics.mean_height_error = float(np.mean(np.abs(log.col("com_z") - gait.z0)))
    return log, metrics


def run_scenario(scenario: Scenario) -> tuple:
    """Run one scenario; returns (TrajectoryLog, RunMetrics)."""
    if scenario.plant == "vlip":
        return _run_vlip(scenario)
    return _run_full(scenario)
