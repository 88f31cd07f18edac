"""Deterministic fixed-timestep closed-loop simulator.

Each tick, in order: obstacle pose, robot capsules, minimum distance and
relative velocity, task step, control step, explicit Euler integration of
the joint velocities with joint-limit clamping, trace record.  No wall
clock and no hidden state enter the loop, so a scenario always reproduces
byte-identical traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .control import (AvoidanceController, ControllerParams, ParamError,
                      params_from_dict)
from .geometry import Capsule, ProximityResult, RelativeVelocityEstimator
from .kinematics import (ModelError, RobotModel, eef_position,
                         forward_kinematics, load_robot_model, robot_capsules)
from .task import PathSegment, TaskMachine, TaskMode, TaskPlan, WorkAction

EPS_PENETRATION = 0.01  # tolerated clearance shortfall below d_cr, m


class ScenarioError(ValueError):
    """Raised when a scenario file violates the schema or its invariants."""


@dataclass(frozen=True)
class HumanTemplate:
    name: str
    radius: float


@dataclass(frozen=True)
class HumanKeyframe:
    t: float
    poses: tuple[tuple[np.ndarray, np.ndarray], ...]  # per capsule (a, b)


class HumanTrajectory:
    """Keyframed capsule poses, linearly interpolated and clamped."""

    def __init__(self, templates: list[HumanTemplate], keyframes: list[HumanKeyframe]):
        if not keyframes:
            raise ScenarioError("human trajectory needs at least one keyframe")
        times = [k.t for k in keyframes]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ScenarioError("keyframe times must be strictly increasing")
        for k in keyframes:
            if len(k.poses) != len(templates):
                raise ScenarioError("keyframe pose count must match capsule templates")
        self.templates = templates
        self.keyframes = keyframes

    def capsules_at(self, t: float) -> list[Capsule]:
        frames = self.keyframes
        if t <= frames[0].t:
            poses = frames[0].poses
        elif t >= frames[-1].t:
            poses = frames[-1].poses
        else:
            hi = next(i for i, k in enumerate(frames) if k.t > t)
            k0, k1 = frames[hi - 1], frames[hi]
            w = (t - k0.t) / (k1.t - k0.t)
            poses = tuple(
                (a0 + w * (a1 - a0), b0 + w * (b1 - b0))
                for (a0, b0), (a1, b1) in zip(k0.poses, k1.poses))
        return [Capsule(a, b, tpl.radius, tpl.name)
                for tpl, (a, b) in zip(self.templates, poses)]


class LiveHuman:
    """Human capsules steered by external commands at a clamped speed.

    Endpoints move toward their commanded targets by at most
    ``speed * dt`` per tick, so the relative velocity seen by the
    controller stays physically plausible even under abrupt commands.
    """

    def __init__(self, templates: list[HumanTemplate],
                 initial: tuple[tuple[np.ndarray, np.ndarray], ...],
                 speed_limit: float = 1.5):
        self.templates = templates
        self.speed_limit = speed_limit
        self._pose = [(np.array(a), np.array(b)) for a, b in initial]
        self._target: dict[int, tuple[np.ndarray, np.ndarray, float]] = {}

    def set_target(self, name: str, a, b, speed: float):
        for i, tpl in enumerate(self.templates):
            if tpl.name == name:
                speed = min(float(speed), self.speed_limit)
                if speed <= 0.0:
                    raise ValueError("target speed must be > 0")
                self._target[i] = (np.asarray(a, float).reshape(3),
                                   np.asarray(b, float).reshape(3), speed)
                return
        raise ValueError(f"unknown human capsule {name!r}")

    def advance(self, dt: float):
        for i, (ta, tb, speed) in list(self._target.items()):
            a, b = self._pose[i]
            step = speed * dt
            new_a = _step_toward(a, ta, step)
            new_b = _step_toward(b, tb, step)
            self._pose[i] = (new_a, new_b)
            if np.array_equal(new_a, ta) and np.array_equal(new_b, tb):
                del self._target[i]

    def capsules(self) -> list[Capsule]:
        return [Capsule(a, b, tpl.radius, tpl.name)
                for tpl, (a, b) in zip(self.templates, self._pose)]


def _step_toward(p: np.ndarray, target: np.ndarray, step: float) -> np.ndarray:
    delta = target - p
    dist = float(np.linalg.norm(delta))
    if dist <= step:
        return target.copy()
    return p + (step / dist) * delta


@dataclass
class Scenario:
    name: str
    model: RobotModel
    params: ControllerParams
    initial_q: np.ndarray
    plan: TaskPlan
    duration: float
    human: HumanTrajectory | None = None
    seed: int = 0
    human_speed_limit: float = 1.5

    def validate(self):
        if self.duration <= 0:
            raise ScenarioError("duration must be > 0")
        q = np.asarray(self.initial_q, float)
        if q.shape != (self.model.dof,):
            raise ScenarioError(f"initial_q must have {self.model.dof} entries")
        if np.any(q < self.model.q_min) or np.any(q > self.model.q_max):
            raise ScenarioError("initial_q violates the joint limits")


def _vec(x):
    return np.asarray(x, dtype=float).reshape(3)


def scenario_from_dict(data: dict, base_dir: Path | None = None) -> Scenario:
    """Parse and validate a scenario document.

    ``model`` may be a shipped model name, a path (resolved against the
    scenario file's directory) or an inline model object.
    """
    if not isinstance(data, dict):
        raise ScenarioError("scenario document must be an object")
    try:
        model_ref = data["model"]
        raw_task = data["task"]
        duration = float(data["duration"])
        initial_q = np.asarray(data["initial_q"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"scenario is missing or mangles a required field: {exc}") from exc

    if isinstance(model_ref, dict):
        from .kinematics import model_from_dict
        model = model_from_dict(model_ref)
    else:
        ref = str(model_ref)
        if base_dir is not None and (base_dir / ref).exists():
            ref = str(base_dir / ref)
        model = load_robot_model(ref)

    params = params_from_dict(data.get("params", {})).with_model_defaults(model)

    segments = []
    for i, s in enumerate(raw_task.get("segments", [])):
        work = s.get("work_action")
        try:
            segments.append(PathSegment(
                start=_vec(s["start"]), end=_vec(s["end"]),
                ca_enabled=bool(s.get("ca_enabled", True)),
                goal_speed=float(s["goal_speed"]),
                work_action=WorkAction(float(work["dwell_s"])) if work else None))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"task segment {i} is invalid: {exc}") from exc
    plan = TaskPlan(segments=tuple(segments),
                    hold_in_zone=bool(raw_task.get("hold_in_zone", True)))

    human = None
    speed_limit = 1.5
    raw_human = data.get("human")
    if raw_human is not None:
        try:
            templates = [HumanTemplate(str(c["id"]), float(c["radius"]))
                         for c in raw_human["capsules"]]
            keyframes = [
                HumanKeyframe(float(k["t"]), tuple(
                    (_vec(pose["a"]), _vec(pose["b"])) for pose in k["poses"]))
                for k in raw_human["keyframes"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"human section is invalid: {exc}") from exc
        for tpl in templates:
            if tpl.radius <= 0:
                raise ScenarioError(f"human capsule {tpl.name}: radius must be > 0")
        human = HumanTrajectory(templates, keyframes)
        speed_limit = float(raw_human.get("speed_limit", 1.5))

    scenario = Scenario(
        name=str(data.get("name", "scenario")), model=model, params=params,
        initial_q=initial_q, plan=plan, duration=duration, human=human,
        seed=int(data.get("seed", 0)), human_speed_limit=speed_limit)
    scenario.validate()
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data, base_dir=path.parent)


# Trace records carry exactly these fields, in this order.
TRACE_COLUMNS = (
    ["t"]
    + [f"q{i}" for i in range(7)]
    + [f"qdot_cmd{i}" for i in range(7)]
    + ["pe_x", "pe_y", "pe_z", "pg_x", "pg_y", "pg_z",
       "d_min", "v_rel", "v_rep_mod", "gamma", "beta", "mode", "closest_pair"]
)


@dataclass
class TraceRecord:
    t: float
    q: np.ndarray
    qdot_cmd: np.ndarray
    p_e: np.ndarray
    p_g: np.ndarray
    d_min: float
    v_rel: float
    v_rep_mod: float
    gamma: float
    beta: float
    mode: TaskMode
    closest_pair: str

    def row(self) -> list:
        return ([self.t] + list(self.q) + list(self.qdot_cmd)
                + list(self.p_e) + list(self.p_g)
                + [self.d_min, self.v_rel, self.v_rep_mod, self.gamma, self.beta,
                   str(self.mode), self.closest_pair])


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # numpy scalars repr as np.float64(...)
    return str(value)


class Trace:
    def __init__(self, records: list[TraceRecord] | None = None):
        self.records: list[TraceRecord] = records if records is not None else []

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def to_csv(self) -> str:
        lines = [",".join(TRACE_COLUMNS)]
        for rec in self.records:
            lines.append(",".join(_fmt(v) for v in rec.row()))
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        lines = []
        for rec in self.records:
            obj = {
                "t": rec.t, "q": list(rec.q), "qdot_cmd": list(rec.qdot_cmd),
                "p_e": list(rec.p_e), "p_g": list(rec.p_g),
                "d_min": None if math.isinf(rec.d_min) else rec.d_min,
                "v_rel": rec.v_rel, "v_rep_mod": rec.v_rep_mod,
                "gamma": rec.gamma, "beta": rec.beta,
                "mode": str(rec.mode), "closest_pair": rec.closest_pair,
            }
            lines.append(json.dumps(obj))
        return "\n".join(lines) + "\n"

    def eef_speeds(self, dt: float) -> np.ndarray:
        """Discrete EEF speed per tick; the first tick has no history and is 0."""
        if not self.records:
            return np.zeros(0)
        pos = np.array([rec.p_e for rec in self.records])
        speeds = np.zeros(len(pos))
        speeds[1:] = np.linalg.norm(np.diff(pos, axis=0), axis=1) / dt
        return speeds


@dataclass
class SegmentTiming:
    index: int
    t_enter: float
    t_exit: float


@dataclass
class Metrics:
    min_d_min: float
    max_eef_accel: float
    completion_time: float | None
    final_error: float
    segment_timings: list[SegmentTiming]
    violation: bool
    violation_reason: str | None
    ticks: int
    duration: float
    dt: float

    def to_dict(self) -> dict:
        return {
            "min_d_min": None if math.isinf(self.min_d_min) else self.min_d_min,
            "max_eef_accel": self.max_eef_accel,
            "completion_time": self.completion_time,
            "final_error": self.final_error,
            "segment_timings": [
                {"index": s.index, "t_enter": s.t_enter, "t_exit": s.t_exit}
                for s in self.segment_timings],
            "violation": self.violation,
            "violation_reason": self.violation_reason,
            "ticks": self.ticks,
            "duration": self.duration,
            "dt": self.dt,
        }


class Simulation:
    """Closed-loop simulation state; ``tick`` is the single writer."""

    def __init__(self, scenario: Scenario, live: bool = False):
        self.scenario = scenario
        self.live = live
        self.params = scenario.params
        self.reset()

    def reset(self):
        sc = self.scenario
        self.q = np.asarray(sc.initial_q, dtype=float).copy()
        self.t = 0.0
        self.tick_index = 0
        self.controller = AvoidanceController(sc.model, self.params)
        self.task = TaskMachine(sc.plan, self.controller.params)
        self.v_rel_estimator = RelativeVelocityEstimator(self.controller.params.v_rel_smoothing)
        self.trace = Trace()
        self._last_s: np.ndarray | None = None
        self._completion_flags: list[bool] = []
        self._segment_flags: list[int] = []
        self.last_prox: ProximityResult | None = None
        self.last_output = None
        self.last_status = None
        self.live_human: LiveHuman | None = None
        if self.live and sc.human is not None:
            self.live_human = LiveHuman(sc.human.templates,
                                        sc.human.keyframes[0].poses,
                                        sc.human_speed_limit)

    def _human_capsules(self) -> list[Capsule] | None:
        if self.live_human is not None:
            self.live_human.advance(self.controller.params.dt)
            return self.live_human.capsules()
        if self.scenario.human is not None:
            return self.scenario.human.capsules_at(self.t)
        return None

    def tick(self) -> TraceRecord:
        p = self.controller.params
        dt = p.dt

        human = self._human_capsules()
        frames = forward_kinematics(self.scenario.model, self.q)
        robot = robot_capsules(self.scenario.model, self.q, frames)
        p_e = eef_position(self.scenario.model, self.q, frames)

        prox = None
        if human:
            prox = geometry.min_distance_robot_human(robot, human, self._last_s)
            prox.v_rel = self.v_rel_estimator.update(prox.d_min, dt)
            if not prox.degenerate:
                self._last_s = prox.s
        self.last_prox = prox

        status = self.task.step(prox, p_e, dt)
        self.last_status = status
        self._completion_flags.append(self.task.complete)
        self._segment_flags.append(status.segment_index)

        out = self.controller.step(prox, status.p_g, self.q, now=self.t,
                                   switched=status.switched,
                                   ca_active=status.ca_active)
        self.last_output = out

        record = TraceRecord(
            t=self.t, q=self.q.copy(), qdot_cmd=out.qdot_total.copy(),
            p_e=p_e, p_g=status.p_g.copy(),
            d_min=prox.d_min if prox else math.inf,
            v_rel=prox.v_rel if prox else 0.0,
            v_rep_mod=out.v_rep_mod, gamma=out.gamma, beta=out.beta,
            mode=status.mode,
            closest_pair=(f"{prox.robot_capsule}:{prox.obstacle_capsule}" if prox else ""))
        self.trace.records.append(record)

        self.q = np.clip(self.q + out.qdot_total * dt,
                         self.scenario.model.q_min, self.scenario.model.q_max)
        self.tick_index += 1
        self.t = self.tick_index * dt
        return record

    def metrics(self) -> Metrics:
        p = self.controller.params
        recs = self.trace.records
        d_mins = [r.d_min for r in recs]
        min_d = min(d_mins) if d_mins else math.inf

        vel = np.zeros((len(recs), 3))
        if len(recs) >= 2:
            pos = np.array([r.p_e for r in recs])
            vel[1:] = np.diff(pos, axis=0) / p.dt
        max_accel = 0.0
        if len(recs) >= 3:
            max_accel = float(np.max(np.linalg.norm(
                np.diff(vel[1:], axis=0), axis=1))) / p.dt

        completion = None
        if self.task.complete:
            # first tick at which the task reported completion
            for rec, done in zip(recs, self._completion_flags):
                if done:
                    completion = rec.t
                    break

        timings: list[SegmentTiming] = []
        for idx, t in zip(self._segment_flags, (r.t for r in recs)):
            if not timings or timings[-1].index != idx:
                timings.append(SegmentTiming(idx, t, t))
            else:
                timings[-1].t_exit = t

        final_error = float("nan")
        if recs:
            final_error = float(np.linalg.norm(recs[-1].p_e - recs[-1].p_g))

        violation = min_d < p.d_cr - EPS_PENETRATION
        reason = (f"clearance {min_d:.4f} m fell below d_cr - {EPS_PENETRATION} m"
                  if violation else None)
        return Metrics(
            min_d_min=min_d, max_eef_accel=max_accel, completion_time=completion,
            final_error=final_error, segment_timings=timings,
            violation=violation, violation_reason=reason,
            ticks=len(recs), duration=self.scenario.duration, dt=p.dt)

    def run(self) -> tuple[Trace, Metrics]:
        """Run duration/dt ticks and collect metrics."""
        n = round(self.scenario.duration / self.controller.params.dt)
        for _ in range(n):
            self.tick()
        return self.trace, self.metrics()


def run_scenario(scenario: Scenario) -> tuple[Trace, Metrics]:
    return Simulation(scenario).run()
