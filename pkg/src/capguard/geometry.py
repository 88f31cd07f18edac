"""Capsule primitives and minimum-distance queries.

A capsule is a cylinder capped with hemispheres, described by its axis
segment (two endpoints) and a radius.  The surface-to-surface distance of
two capsules is the distance between their axis segments minus both radii,
which is why everything here reduces to the closest points of two segments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Axis witness points closer than this are treated as coincident: the
# separation direction is undefined and a fallback must be used.
DEGENERATE_AXIS_DISTANCE = 1e-9

_PARALLEL_EPS = 1e-12
_Z_UP = np.array([0.0, 0.0, 1.0])


def _vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite coordinates: {x!r}")
    return v


@dataclass(frozen=True)
class Capsule:
    """Hemisphere-capped cylinder: axis segment a-b plus a radius.

    A degenerate axis (a == b) is allowed and represents a sphere.
    """

    a: np.ndarray
    b: np.ndarray
    radius: float
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a", _vec3(self.a))
        object.__setattr__(self, "b", _vec3(self.b))
        if self.radius <= 0.0:
            raise ValueError(f"capsule radius must be > 0, got {self.radius}")

    def transformed(self, rotation: np.ndarray, translation) -> "Capsule":
        """Rigidly transform the capsule (radius is preserved)."""
        t = _vec3(translation)
        return Capsule(rotation @ self.a + t, rotation @ self.b + t,
                       self.radius, self.name)


@dataclass
class ProximityResult:
    """Closest-pair query result between a robot capsule and an obstacle.

    ``d_min`` is surface-to-surface and negative when the capsules
    penetrate.  ``r1``/``r2`` are the witness points on the robot and
    obstacle surfaces, ``s`` the unit direction from the obstacle witness
    toward the robot witness (the escape direction under penetration).
    ``v_rel`` is the minimum-distance rate: negative while approaching.
    """

    d_min: float
    r1: np.ndarray
    r2: np.ndarray
    s: np.ndarray
    robot_capsule: str = ""
    obstacle_capsule: str = ""
    v_rel: float = 0.0
    degenerate: bool = False


def segment_closest_points(a0, a1, b0, b1) -> tuple[float, float]:
    """Parameters (u, v) of the globally closest points of two segments.

    Closest points are ``a0 + u*(a1-a0)`` and ``b0 + v*(b1-b0)`` with
    u, v in [0, 1].  Degenerate (zero-length) segments are fine.  For
    parallel segments the tie is broken toward the smallest parameters,
    so the result is deterministic.
    """
    a0, a1, b0, b1 = _vec3(a0), _vec3(a1), _vec3(b0), _vec3(b1)
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    la = float(d1 @ d1)
    lb = float(d2 @ d2)
    f = float(d2 @ r)

    if la <= _PARALLEL_EPS and lb <= _PARALLEL_EPS:
        return 0.0, 0.0
    if la <= _PARALLEL_EPS:
        return 0.0, min(max(f / lb, 0.0), 1.0)
    c = float(d1 @ r)
    if lb <= _PARALLEL_EPS:
        return min(max(-c / la, 0.0), 1.0), 0.0

    b = float(d1 @ d2)
    denom = la * lb - b * b
    if denom > _PARALLEL_EPS * la * lb:
        u = min(max((b * f - c * lb) / denom, 0.0), 1.0)
    else:
        u = 0.0  # parallel: pick the smallest u among the minimizers
    v = (b * u + f) / lb
    # Clamping v can free u again; re-minimize u for the clamped v.
    if v < 0.0:
        v = 0.0
        u = min(max(-c / la, 0.0), 1.0)
    elif v > 1.0:
        v = 1.0
        u = min(max((b - c) / la, 0.0), 1.0)
    return u, v


def _capsule_key(c: Capsule):
    return (tuple(c.a), tuple(c.b), c.radius, c.name)


def _min_distance_ordered(c1: Capsule, c2: Capsule, fallback_dir) -> ProximityResult:
    u, v = segment_closest_points(c1.a, c1.b, c2.a, c2.b)
    p1 = c1.a + u * (c1.b - c1.a)
    p2 = c2.a + v * (c2.b - c2.a)
    delta = p1 - p2
    axis_dist = float(np.linalg.norm(delta))
    degenerate = axis_dist <= DEGENERATE_AXIS_DISTANCE
    if degenerate:
        if fallback_dir is not None:
            s = _vec3(fallback_dir)
            s = s / np.linalg.norm(s)
        else:
            s = _Z_UP.copy()
    else:
        s = delta / axis_dist
    d_min = axis_dist - c1.radius - c2.radius
    r1 = p1 - c1.radius * s
    r2 = p2 + c2.radius * s
    return ProximityResult(d_min=d_min, r1=r1, r2=r2, s=s,
                           robot_capsule=c1.name, obstacle_capsule=c2.name,
                           degenerate=degenerate)


def capsule_min_distance(c1: Capsule, c2: Capsule, fallback_dir=None) -> ProximityResult:
    """Surface distance, witness points and direction for a capsule pair.

    ``s`` points from the second capsule's witness toward the first's, so
    calling this as ``capsule_min_distance(robot, obstacle)`` yields the
    repulsion direction directly.  Penetration is reported as a negative
    ``d_min`` (the direction is kept from the axis witness points so an
    escape direction survives).  When the axis witness points coincide the
    direction is unrecoverable: ``fallback_dir`` is used when given, else
    +z, and the result is flagged ``degenerate``.

    The computation is internally ordered by a canonical key so that
    swapping the arguments yields the exact same ``d_min`` bit pattern.
    """
    if _capsule_key(c2) < _capsule_key(c1):
        flipped = None if fallback_dir is None else -_vec3(fallback_dir)
        res = _min_distance_ordered(c2, c1, flipped)
        return ProximityResult(d_min=res.d_min, r1=res.r2, r2=res.r1,
                               s=-res.s,
                               robot_capsule=c1.name, obstacle_capsule=c2.name,
                               degenerate=res.degenerate)
    return _min_distance_ordered(c1, c2, fallback_dir)


def min_distance_robot_human(robot: list[Capsule], human: list[Capsule],
                             fallback_dir=None) -> ProximityResult:
    """Globally closest pair over all robot x human capsule pairs.

    Ties are resolved toward the lowest (robot index, human index) pair so
    the selection is deterministic.  Empty capsule lists are a modelling
    error.
    """
    if not robot or not human:
        raise ValueError("robot and human capsule lists must be non-empty")
    best: ProximityResult | None = None
    for rc in robot:
        for hc in human:
            res = capsule_min_distance(rc, hc, fallback_dir)
            if best is None or res.d_min < best.d_min:
                best = res
    return best


class RelativeVelocityEstimator:
    """Minimum-distance rate from tick-to-tick finite differences.

    The raw difference quotient is first-order low-passed with smoothing
    factor ``alpha`` in [0, 1] (1 = no smoothing).  The first sample after
    a reset yields 0 because there is no history yet.
    """

    def __init__(self, alpha: float = 0.5):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"smoothing factor must be in [0, 1], got {alpha}")
        self.alpha = alpha
        self._prev_d: float | None = None
        self._v = 0.0

    def reset(self):
        self._prev_d = None
        self._v = 0.0

    def update(self, d_min: float, dt: float) -> float:
        if dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if self._prev_d is None:
            self._v = 0.0
        else:
            raw = (d_min - self._prev_d) / dt
            self._v = self.alpha * raw + (1.0 - self.alpha) * self._v
        self._prev_d = d_min
        return self._v


def relative_velocity(d_min: float, previous_d_min: float, dt: float,
                      alpha: float = 1.0, previous_v: float = 0.0) -> float:
    """One finite-difference + low-pass step as a pure function."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    raw = (d_min - previous_d_min) / dt
    return alpha * raw + (1.0 - alpha) * previous_v
