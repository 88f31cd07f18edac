"""Velocity-level avoidance controller.

Every tick the controller turns the proximity state and the current goal
point into commanded joint velocities:

* a repulsion velocity at the robot point closest to the obstacle, built
  from a distance term (hyperbolic in the clearance, active inside a
  dynamically sized influence band) and a velocity-damping term (active
  while the obstacle approaches);
* an attraction velocity at the EEF, a proportional + quasi-integral law
  scaled by a detachment factor that releases the goal as the obstacle
  closes in;
* both mapped to joint space with damped least squares and superimposed.

After a controller switch the repulsion magnitude is ramped up from zero
with a first-order exponential so the command stays continuous.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .geometry import ProximityResult
from .kinematics import RobotModel, eef_position, forward_kinematics, jacobian_at_point, jacobian_eef


class ParamError(ValueError):
    """Raised when controller parameters violate their invariants."""


class SingularityError(RuntimeError):
    """Undamped least squares hit a rank-deficient task matrix."""


# JSON key -> dataclass field (lambda is a Python keyword).
_PARAM_KEYS = {
    "k1": "k1", "k2": "k2", "c_v": "c_v", "d_1": "d_1", "d_cr": "d_cr",
    "l1": "l1", "l2": "l2", "kp": "kp", "ki": "ki", "lambda": "lam",
    "tau": "tau", "dt": "dt", "v_rel_smoothing": "v_rel_smoothing",
    "rep_cap": "rep_cap", "e_max": "e_max", "goal_tolerance": "goal_tolerance",
}


@dataclass
class ControllerParams:
    """Tunable constants of the avoidance controller.

    ``tau`` and ``rep_cap`` may be left unset: they default to
    v_max / (5 * a_max) and v_max of the robot model (see
    :meth:`with_model_defaults`).
    """

    k1: float = 0.2              # repulsion distance gain, m/s
    k2: float = 0.5              # repulsion damping gain, dimensionless
    c_v: float = 0.2             # influence-band growth per approach speed, s
    d_1: float = 0.3             # minimum influence distance, m
    d_cr: float = 0.05           # critical clearance, m
    l1: float = 0.3              # damping band inner edge, m
    l2: float = 0.8              # damping band outer edge, m
    kp: float = 2.0              # attraction proportional gain, 1/s
    ki: float = 0.5              # attraction integral gain, 1/s^2
    lam: float = 0.05            # least-squares damping constant
    tau: float | None = None     # switch ramp time constant, s
    dt: float = 0.04             # control period, s (25 Hz)
    v_rel_smoothing: float = 0.5
    rep_cap: float | None = None  # repulsion magnitude clamp, m/s
    e_max: float = 0.15          # goal catch-up threshold, m
    goal_tolerance: float = 0.005  # segment completion tolerance, m

    def validate(self):
        p = self
        checks = [
            (p.k1 >= 0 and p.k2 >= 0 and p.c_v >= 0 and p.kp >= 0 and p.ki >= 0
             and p.lam >= 0, "gains must be >= 0"),
            (p.d_1 > 0, "d_1 must be > 0"),
            (p.d_cr >= 0, "d_cr must be >= 0"),
            (p.l1 < p.l2, "l1 must be < l2"),
            (p.dt > 0, "dt must be > 0"),
            (p.tau is None or p.tau > 0, "tau must be > 0"),
            (0.0 <= p.v_rel_smoothing <= 1.0, "v_rel_smoothing must be in [0, 1]"),
            (p.rep_cap is None or p.rep_cap > 0, "rep_cap must be > 0"),
            (p.e_max > 0, "e_max must be > 0"),
            (p.goal_tolerance > 0, "goal_tolerance must be > 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ParamError(msg)

    def with_model_defaults(self, model: RobotModel) -> "ControllerParams":
        """Resolved copy with tau/rep_cap filled in from the robot model."""
        out = replace(
            self,
            tau=self.tau if self.tau is not None else model.v_max / (5.0 * model.a_max),
            rep_cap=self.rep_cap if self.rep_cap is not None else model.v_max)
        out.validate()
        return out

    def updated(self, overrides: dict) -> "ControllerParams":
        return params_from_dict(overrides, base=self)

    def to_dict(self) -> dict:
        out = {}
        for key, attr in _PARAM_KEYS.items():
            value = getattr(self, attr)
            if value is not None:
                out[key] = value
        return out


def params_from_dict(data: dict, base: ControllerParams | None = None) -> ControllerParams:
    """Parameters from a JSON object; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ParamError(f"parameter document must be an object, got {type(data).__name__}")
    params = replace(base) if base is not None else ControllerParams()
    for key, value in data.items():
        attr = _PARAM_KEYS.get(key)
        if attr is None:
            raise ParamError(f"unknown parameter {key!r}")
        try:
            setattr(params, attr, float(value))
        except (TypeError, ValueError) as exc:
            raise ParamError(f"parameter {key!r} must be a number: {exc}") from exc
    params.validate()
    return params


def load_params(path: str | Path, base: ControllerParams | None = None) -> ControllerParams:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParamError(f"cannot read parameter file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParamError(f"parameter file {path} is not valid JSON: {exc}") from exc
    return params_from_dict(data, base=base)


def influence_distance(v_rel: float, p: ControllerParams) -> float:
    """Influence-band size around the obstacle, grown with approach speed."""
    if v_rel < 0.0:
        return p.d_1 - p.c_v * v_rel
    return p.d_1


def repulsion_from_distance(d_min: float, d0: float, p: ControllerParams) -> float:
    """Distance-driven repulsion magnitude, clamped at ``rep_cap``.

    Zero at and beyond clearance d0, hyperbolically increasing toward the
    critical distance, clamped once the clearance reaches zero (the raw
    law diverges there).
    """
    gap = d_min - p.d_cr
    if gap >= d0:
        return 0.0
    if gap <= 0.0:
        return p.rep_cap
    return min(p.k1 * (d0 / gap - 1.0), p.rep_cap)


def proximity_coefficient(d_min: float, p: ControllerParams) -> float:
    """Cosine blend from 1 (below l1) to 0 (above l2)."""
    if d_min <= p.l1:
        return 1.0
    if d_min >= p.l2:
        return 0.0
    return 0.5 * (1.0 + math.cos(math.pi * (d_min - p.l1) / (p.l2 - p.l1)))


def repulsion_from_velocity(v_rel: float, c: float, p: ControllerParams) -> float:
    """Damping repulsion, non-zero only while the obstacle approaches."""
    if v_rel < 0.0:
        return -c * p.k2 * v_rel
    return 0.0


def detachment_factor(d_min: float, d0: float, p: ControllerParams) -> float:
    """Attraction scale: 0 at the critical distance, asymptotically 1 far away.

    Inside the critical zone the symmetric raw law would grow again, so the
    factor is pinned to 0 there (full detachment).
    """
    if d_min < p.d_cr:
        return 0.0
    x = (d_min - p.d_cr) / d0
    beta = 2.0 / (1.0 + math.exp(-x * x)) - 1.0
    return min(max(beta, 0.0), 1.0)


class SwitchRamp:
    """Exponential repulsion ramp restarted at every controller switch."""

    def __init__(self, t0: float = 0.0):
        self.t0 = t0

    def gamma(self, now: float, switched: bool, tau: float) -> float:
        if switched:
            self.t0 = now
        return 1.0 - math.exp(-(now - self.t0) / tau)


class IntegralState:
    """Quasi-integral attraction term with obstacle-aware anti-windup.

    Accumulation is frozen whenever the clearance over the critical
    distance is within the influence band, so error stored up while the
    robot is held off the goal cannot wind up.
    """

    def __init__(self):
        self.psi = np.zeros(3)

    def reset(self):
        self.psi = np.zeros(3)

    def step(self, e: np.ndarray, d_min: float, d0: float, p: ControllerParams):
        if d_min - p.d_cr > d0:
            self.psi = self.psi - p.ki * e * p.dt


def attraction_velocity(e: np.ndarray, psi: np.ndarray, beta: float,
                        p: ControllerParams) -> np.ndarray:
    return beta * (-p.kp * e + psi)


def dls_solve(jac: np.ndarray, v: np.ndarray, lam: float) -> np.ndarray:
    """Damped least-squares joint velocities: J^T (J J^T + lam^2 I)^-1 v.

    For lam > 0 this is always well defined; lam == 0 demands full row
    rank and raises :class:`SingularityError` otherwise.
    """
    jac = np.asarray(jac, dtype=float)
    v = np.asarray(v, dtype=float)
    jjt = jac @ jac.T
    m = jjt.shape[0]
    if lam == 0.0:
        if np.linalg.matrix_rank(jjt) < m:
            raise SingularityError("task matrix is rank deficient and lambda is 0")
        x = np.linalg.solve(jjt, v)
    else:
        x = np.linalg.solve(jjt + lam * lam * np.eye(m), v)
    return jac.T @ x


@dataclass
class ControlOutput:
    """One tick of commanded joint velocities plus diagnostics."""

    qdot_total: np.ndarray
    qdot_att: np.ndarray
    qdot_rep: np.ndarray
    v_rep_mod: float            # ramped, clamped repulsion magnitude, m/s
    v_rep_raw: float            # pre-ramp clamped magnitude, m/s
    v_e_att: np.ndarray         # attraction velocity at the EEF, m/s
    gamma: float
    beta: float
    c: float
    d0_eff: float
    degenerate_direction: bool = False


class AvoidanceController:
    """Deterministic per-tick controller; owns the ramp and integral state.

    Exactly one writer (the simulation tick) advances it.  ``ca_active``
    mirrors the task layer: while avoidance is deactivated the obstacle is
    ignored entirely and the output is the plain attraction command.
    """

    def __init__(self, model: RobotModel, params: ControllerParams):
        self.model = model
        self.params = params.with_model_defaults(model)
        self.ramp = SwitchRamp()
        self.integral = IntegralState()

    def reset(self):
        self.ramp = SwitchRamp()
        self.integral.reset()

    def step(self, prox: ProximityResult | None, p_g: np.ndarray, q: np.ndarray,
             now: float, switched: bool, ca_active: bool = True) -> ControlOutput:
        p = self.params
        frames = forward_kinematics(self.model, q)
        p_e = eef_position(self.model, q, frames)
        e = p_e - p_g

        obstacle = prox if (ca_active and prox is not None) else None
        gamma = self.ramp.gamma(now, switched, p.tau)
        if obstacle is None:
            d0 = p.d_1
            c = 0.0
            v_raw = 0.0
            beta = 1.0
            self.integral.step(e, math.inf, d0, p)
        else:
            d0 = influence_distance(obstacle.v_rel, p)
            v1 = repulsion_from_distance(obstacle.d_min, d0, p)
            c = proximity_coefficient(obstacle.d_min, p)
            v2 = repulsion_from_velocity(obstacle.v_rel, c, p)
            v_raw = min(v1 + v2, p.rep_cap)
            beta = detachment_factor(obstacle.d_min, d0, p)
            self.integral.step(e, obstacle.d_min, d0, p)
        v_mod = gamma * v_raw

        v_att = attraction_velocity(e, self.integral.psi, beta, p)
        qdot_att = dls_solve(jacobian_eef(self.model, q, frames), v_att, p.lam)

        if obstacle is not None:
            binding = self.model.capsule_by_name(obstacle.robot_capsule)
            j_cp = jacobian_at_point(self.model, q, binding.link, obstacle.r1, frames)
            qdot_rep = dls_solve(j_cp, v_mod * obstacle.s, p.lam)
        else:
            qdot_rep = np.zeros(self.model.dof)

        qdot_total = qdot_att + qdot_rep
        scale = float(np.max(np.abs(qdot_total) / self.model.qdot_max))
        if scale > 1.0:
            qdot_total = qdot_total / scale

        return ControlOutput(
            qdot_total=qdot_total, qdot_att=qdot_att, qdot_rep=qdot_rep,
            v_rep_mod=v_mod, v_rep_raw=v_raw, v_e_att=v_att,
            gamma=gamma, beta=beta, c=c, d0_eff=d0,
            degenerate_direction=bool(obstacle is not None and obstacle.degenerate))
