"""Variable-length inverted pendulum with a thruster force at the CoM.

The pendulum connects the CoM to the center of pressure through a
massless, length-actuated leg.  Holding the CoM height constant turns
each horizontal axis into a linear pendulum whose stiffness is set by the
effective gravity g_eff = g - |thrust|/m: vertical thrust makes the
system behave as if partially buoyant, lowering its natural frequency.
The capture point, orbital energy and saddle eigenstructure all inherit
that g_eff.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

REST_ENERGY_TOL = 1e-9


class VlipInfeasibleError(RuntimeError):
    """The leg constraint force left its validity region (pulling or slipping)."""


@dataclass
class VlipState:
    """CoM state of the reduced model.

    ``p_B`` CoM position, ``v_B`` CoM velocity, ``c`` stance/CoP position
    (all inertial, m); ``z0`` the held pendulum height; ``m`` total mass.
    """

    p_B: np.ndarray
    v_B: np.ndarray
    c: np.ndarray
    z0: float
    m: float

    def __post_init__(self):
        self.p_B = np.asarray(self.p_B, dtype=float).reshape(3)
        self.v_B = np.asarray(self.v_B, dtype=float).reshape(3)
        self.c = np.asarray(self.c, dtype=float).reshape(3)
        if self.z0 <= 0.0:
            raise ValueError("z0 must be positive")
        if self.m <= 0.0:
            raise ValueError("mass must be positive")
        if np.linalg.norm(self.r) == 0.0:
            raise ValueError("pendulum is degenerate: CoM coincides with CoP")

    @property
    def r(self) -> np.ndarray:
        """Leg vector CoM - CoP."""
        return self.p_B - self.c


@dataclass(frozen=True)
class ThrustCommand:
    """Thruster force resultant acting about the CoM (inertial frame)."""

    u_tc: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "u_tc", np.asarray(self.u_tc, dtype=float).reshape(3))

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.u_tc))

    @property
    def theta_T(self) -> float:
        """Sagittal tilt from vertical, positive tipped toward +x."""
        return float(np.arctan2(self.u_tc[0], self.u_tc[2]))

    @staticmethod
    def vertical(force: float) -> "ThrustCommand":
        return ThrustCommand(np.array([0.0, 0.0, float(force)]))


@dataclass
class OrbitalEnergy:
    """Orbital energy of one planar axis and its sign classification."""

    E: float                # m^2/s^2 (per unit mass)
    plane: str              # "sagittal" or "frontal"
    classification: str     # "pass_over" | "reverse" | "rest"


@dataclass
class PlanarVlip:
    """Sagittal-plane projection of the height-constrained pendulum."""

    x: float          # CoM ahead of the CoP [m]
    xdot: float
    z0: float
    theta_L: float    # leg lean from vertical
    theta_T: float    # thrust tilt from vertical
    lam: float        # leg force magnitude [N]
    xddot: float
    g_eff: float


def effective_gravity(m: float, thrust_mag: float, g: float, theta_T: float = 0.0) -> float:
    """g - |u_tc| cos(theta_T) / m; must stay positive for the model to hold."""
    g_eff = g - thrust_mag * np.cos(theta_T) / m
    if g_eff <= 0.0:
        raise VlipInfeasibleError(
            f"thrust {thrust_mag:.3f} N cancels gravity for m = {m:.3f} kg: g_eff <= 0"
        )
    return float(g_eff)


def vlip_dynamics(
    state: VlipState,
    u_r: float,
    thrust: ThrustCommand,
    g: float = 9.81,
    mu_s: Optional[float] = None,
):
    """CoM acceleration under the leg-length and thruster inputs.

    Solves m pddot = m g_vec + u_tc + r k subject to r . pddot = u_r with
    the stance point fixed (no slip).  Returns (pddot (3,), lam) where lam
    is the leg force magnitude, positive in compression.  Raises
    VlipInfeasibleError when the leg would have to pull (lam < 0) or, if
    ``mu_s`` is given, when the implied ground force leaves the friction
    cone.
    """
    r = state.r
    r2 = float(r @ r)
    g_vec = np.array([0.0, 0.0, -g])
    free = g_vec + thrust.u_tc / state.m
    k = (u_r - float(r @ free)) / r2            # force per unit leg vector, / m
    lam = state.m * k * float(np.sqrt(r2))
    if lam < 0.0:
        raise VlipInfeasibleError(f"leg force is pulling (lam = {lam:.3f} N)")
    if mu_s is not None and k > 0.0:
        r_t = float(np.hypot(r[0], r[1]))
        if r[2] <= 0.0 or r_t > mu_s * r[2]:
            raise VlipInfeasibleError("implied ground force lies outside the friction cone")
    return free + k * r, lam


def height_hold_input(state: VlipState, thrust: ThrustCommand, g: float = 9.81) -> float:
    """The u_r that makes the vertical CoM acceleration zero right now.

    Solves the constrained dynamics backwards: the leg-force multiplier
    that cancels gravity-plus-thrust vertically fixes the constraint
    value r . pddot, which is u_r by definition.
    """
    r = state.r
    v = state.v_B
    if r[2] == 0.0:
        raise VlipInfeasibleError("leg is horizontal: cannot hold height")
    g_vec = np.array([0.0, 0.0, -g])
    free = g_vec + thrust.u_tc / state.m
    # want pddot_z = 0: pddot = free + k r  =>  k = -free_z / r_z
    k = -free[2] / r[2]
    return float(r @ (free + k * r))


def sagittal_projection(state: VlipState, thrust: ThrustCommand, g: float = 9.81) -> PlanarVlip:
    """Planar x-z dynamics of the height-constrained pendulum.

    Requires the CoM height to sit on the constraint (|p_Bz - c_z - z0|
    small) and positive effective gravity.
    """
    r = state.r
    if abs(r[2] - state.z0) > 1e-6:
        raise ValueError("state is not in height-constrained mode (p_Bz - c_z != z0)")
    theta_T = thrust.theta_T
    mag = thrust.magnitude
    g_eff = effective_gravity(state.m, mag, g, theta_T)
    x = float(r[0])
    r_norm = float(np.linalg.norm([r[0], r[2]]))
    theta_L = float(np.arctan2(x, r[2]))
    lam = (state.m * g - mag * np.cos(theta_T)) * r_norm / state.z0
    xddot = g_eff * x / state.z0 + mag * np.sin(theta_T) / state.m
    return PlanarVlip(
        x=x, xdot=float(state.v_B[0]), z0=state.z0,
        theta_L=theta_L, theta_T=theta_T, lam=float(lam),
        xddot=float(xddot), g_eff=g_eff,
    )


def orbital_energy(
    x: float, xdot: float, z0: float, g_eff: float,
    plane: str = "sagittal", tol: float = REST_ENERGY_TOL,
) -> OrbitalEnergy:
    """E = xdot^2/2 - g_eff x^2 / (2 z0), conserved between steps.

    E > 0: the CoM carries enough energy to pass over the stance point;
    E < 0: it stops short and reverses; |E| <= tol: it comes to rest above
    the foot (the state sits on an eigenvector of the saddle).
    """
    if z0 <= 0.0 or g_eff <= 0.0:
        raise ValueError("z0 and g_eff must be positive")
    E = 0.5 * xdot * xdot - 0.5 * g_eff * x * x / z0
    if abs(E) <= tol:
        cls = "rest"
    elif E > 0.0:
        cls = "pass_over"
    else:
        cls = "reverse"
    return OrbitalEnergy(E=float(E), plane=plane, classification=cls)


def capture_point(
    xdot: float, z0: float, m: float, thrust_mag: float = 0.0, g: float = 9.81
) -> float:
    """Step offset ahead of the CoM that zeroes the orbital energy.

    xdot sqrt(z0 / (g - thrust/m)): stepping there parks the post-exchange
    state on the stable eigenvector, so the CoM coasts to rest above the
    new stance point.  Monotone increasing in both xdot and thrust.
    """
    if thrust_mag < 0.0:
        raise ValueError("thrust magnitude must be non-negative")
    g_eff = effective_gravity(m, thrust_mag, g)
    return float(xdot * np.sqrt(z0 / g_eff))


def saddle_frequency(z0: float, g_eff: float) -> float:
    """sqrt(g_eff / z0): the +/- eigenvalue magnitude of the linear pendulum."""
    if z0 <= 0.0 or g_eff <= 0.0:
        raise ValueError("z0 and g_eff must be positive")
    return float(np.sqrt(g_eff / z0))


def cop_from_feet(p_F_L, p_F_R, f_z_L: float, f_z_R: float) -> np.ndarray:
    """Center of pressure: normal-force weighted average of the feet.

    With a single loaded foot this reduces exactly to that foot's position.
    """
    total = f_z_L + f_z_R
    if total <= 0.0:
        raise ValueError("no ground load: CoP undefined")
    lam_L = f_z_L / total
    return lam_L * np.asarray(p_F_L, dtype=float) + (1.0 - lam_L) * np.asarray(p_F_R, dtype=float)
