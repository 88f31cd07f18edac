"""Industrial task layer: path segments, moving goal point, mode switching.

A task is an ordered list of straight path segments.  On collision-
avoidance segments the goal point travels along the segment at its nominal
speed, freezes while the human occupies the safety zone (mode CA_HOLD) and
waits for the robot when the tracking error grows too large.  On work
segments avoidance is deactivated (mode WORK), the goal advances regardless
of the human, and an optional dwell at the segment end stands in for the
force-fed insertion action.  Every mode transition raises a one-tick
``switched`` pulse that restarts the repulsion ramp.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .control import ControllerParams, influence_distance
from .geometry import ProximityResult


class TaskError(ValueError):
    """Raised when a task plan violates its invariants."""


class TaskMode(enum.Enum):
    CA_TRACK = "CA_TRACK"
    CA_HOLD = "CA_HOLD"
    WORK = "WORK"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class WorkAction:
    dwell_s: float


@dataclass(frozen=True)
class PathSegment:
    start: np.ndarray
    end: np.ndarray
    ca_enabled: bool = True
    goal_speed: float = 0.1     # m/s along the segment
    work_action: WorkAction | None = None

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float).reshape(3))
        object.__setattr__(self, "end", np.asarray(self.end, dtype=float).reshape(3))
        if self.goal_speed <= 0.0:
            raise TaskError(f"goal_speed must be > 0, got {self.goal_speed}")
        if float(np.linalg.norm(self.end - self.start)) < 1e-12:
            raise TaskError("segment start and end must differ")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    def point_at(self, arc_s: float) -> np.ndarray:
        return self.start + (arc_s / self.length) * (self.end - self.start)


@dataclass(frozen=True)
class TaskPlan:
    """Segments plus the zone-gating strategy.

    ``hold_in_zone`` selects whether the goal freezes while the human is in
    the safety zone.  An empty segment list is a hold-in-place task: the
    goal is pinned to the EEF position seen on the first tick.
    """

    segments: tuple[PathSegment, ...] = ()
    hold_in_zone: bool = True


@dataclass
class GoalState:
    segment_index: int
    arc_s: float
    p_g: np.ndarray
    moving: bool


@dataclass
class TaskStatus:
    """Per-tick task decision handed to the controller."""

    p_g: np.ndarray
    mode: TaskMode
    switched: bool
    ca_active: bool
    complete: bool
    goal: GoalState
    segment_index: int


def safety_zone(d_min: float, d0: float, p: ControllerParams) -> bool:
    """True iff the human clearance is strictly inside the influence band."""
    return d_min - p.d_cr < d0


class TaskMachine:
    """Single-writer task state advanced once per tick, before the controller."""

    def __init__(self, plan: TaskPlan, params: ControllerParams):
        self.plan = plan
        self.params = params
        self.reset()

    def reset(self):
        self.segment_index = 0
        self.arc_s = 0.0
        self.mode: TaskMode | None = None
        self.complete = not self.plan.segments
        self.dwell_left: float | None = None
        self._hold_point: np.ndarray | None = None

    def _zone_occupied(self, prox: ProximityResult | None) -> bool:
        if prox is None:
            return False
        d0 = influence_distance(prox.v_rel, self.params)
        return safety_zone(prox.d_min, d0, self.params)

    def _ca_mode(self, prox: ProximityResult | None) -> TaskMode:
        if self.plan.hold_in_zone and self._zone_occupied(prox):
            return TaskMode.CA_HOLD
        return TaskMode.CA_TRACK

    def step(self, prox: ProximityResult | None, p_e: np.ndarray, dt: float) -> TaskStatus:
        p = self.params
        segments = self.plan.segments

        if not segments and self._hold_point is None:
            self._hold_point = np.array(p_e, dtype=float)

        seg = segments[self.segment_index] if segments else None

        if self.complete or seg is None or seg.ca_enabled:
            mode = self._ca_mode(prox)
        else:
            mode = TaskMode.WORK
        switched = mode is not self.mode
        self.mode = mode

        moving = False
        if seg is not None and not self.complete:
            p_g = seg.point_at(self.arc_s)
            tracking_ok = float(np.linalg.norm(p_e - p_g)) <= p.e_max
            if (mode is not TaskMode.CA_HOLD and self.dwell_left is None
                    and tracking_ok and self.arc_s < seg.length):
                self.arc_s = min(self.arc_s + seg.goal_speed * dt, seg.length)
                moving = True

            if self.arc_s >= seg.length:
                arrived = float(np.linalg.norm(p_e - seg.end)) < p.goal_tolerance
                if self.dwell_left is not None:
                    self.dwell_left -= dt
                    if self.dwell_left <= 0.0:
                        self.dwell_left = None
                        self._advance_segment()
                elif arrived:
                    if seg.work_action is not None and seg.work_action.dwell_s > 0.0:
                        self.dwell_left = seg.work_action.dwell_s
                    else:
                        self._advance_segment()

        if segments:
            seg = segments[self.segment_index]
            arc = min(self.arc_s, seg.length)
            goal = GoalState(self.segment_index, arc, seg.point_at(arc), moving)
        else:
            goal = GoalState(0, 0.0, self._hold_point.copy(), False)

        return TaskStatus(goal.p_g, mode, switched, mode is not TaskMode.WORK,
                          self.complete, goal, self.segment_index)

    def _advance_segment(self):
        if self.segment_index + 1 < len(self.plan.segments):
            self.segment_index += 1
            self.arc_s = 0.0
        else:
            self.complete = True
