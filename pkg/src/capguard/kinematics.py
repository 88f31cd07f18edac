"""Forward kinematics and Jacobians for a serial arm with rotational joints.

The arm is described by a data-driven model: each joint contributes a fixed
translation (``offset``, expressed in the parent frame) followed by a
rotation of angle q about a fixed local ``axis``.  Collision capsules are
bound to links by local endpoints so their world pose follows from the same
frame chain.  The shipped default model encodes a 7-DOF KUKA iiwa 14 R820
geometry, but any 7-DOF chain loads from the same JSON schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .geometry import Capsule


class ModelError(ValueError):
    """Raised when a robot model file violates the schema or its invariants."""


class Frame(NamedTuple):
    rotation: np.ndarray   # 3x3
    origin: np.ndarray     # 3


@dataclass(frozen=True)
class JointSpec:
    axis: np.ndarray    # unit vector, in the parent frame
    offset: np.ndarray  # translation from the parent origin, parent frame, m


@dataclass(frozen=True)
class CapsuleBinding:
    name: str
    link: int           # 1..n_joints; the capsule rides on this link's frame
    a_local: np.ndarray
    b_local: np.ndarray
    radius: float


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple[JointSpec, ...]
    tool_offset: np.ndarray        # TCP expressed in the last link frame, m
    capsules: tuple[CapsuleBinding, ...]
    q_min: np.ndarray
    q_max: np.ndarray
    qdot_max: np.ndarray
    v_max: float                   # max curvilinear EEF speed, m/s
    a_max: float                   # max EEF acceleration, m/s^2

    @property
    def dof(self) -> int:
        return len(self.joints)

    def capsule_by_name(self, name: str) -> CapsuleBinding:
        for binding in self.capsules:
            if binding.name == name:
                return binding
        raise ModelError(f"no capsule named {name!r} in model {self.name!r}")


def _unit(v, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(a)
    if n < 1e-12:
        raise ModelError(f"{what}: axis must be non-zero")
    return a / n


def model_from_dict(data: dict, name: str = "") -> RobotModel:
    """Build and validate a RobotModel from parsed JSON.

    Schema::

        {
          "name": str,
          "joints": [{"axis": [x,y,z], "offset": [x,y,z]}, ...],
          "tool": [x,y,z],
          "capsules": [{"id": str, "link": int, "a": [..], "b": [..], "r": float}, ...],
          "limits": {"q_min": [...], "q_max": [...], "qdot_max": [...]},
          "v_max": float, "a_max": float
        }
    """
    try:
        raw_joints = data["joints"]
        raw_capsules = data["capsules"]
        limits = data["limits"]
        v_max = float(data["v_max"])
        a_max = float(data["a_max"])
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model file is missing required field: {exc}") from exc

    joints = tuple(
        JointSpec(axis=_unit(j["axis"], f"joint {i}"),
                  offset=np.asarray(j["offset"], dtype=float).reshape(3))
        for i, j in enumerate(raw_joints, start=1)
    )
    n = len(joints)
    if n < 1:
        raise ModelError("model needs at least one joint")

    capsules = []
    for i, c in enumerate(raw_capsules):
        link = int(c["link"])
        if not 1 <= link <= n:
            raise ModelError(f"capsule {i}: link {link} outside 1..{n}")
        radius = float(c["r"])
        if radius <= 0.0:
            raise ModelError(f"capsule {i}: radius must be > 0")
        capsules.append(CapsuleBinding(
            name=str(c.get("id", f"R{i + 1}")), link=link,
            a_local=np.asarray(c["a"], dtype=float).reshape(3),
            b_local=np.asarray(c["b"], dtype=float).reshape(3),
            radius=radius))

    q_min = np.asarray(limits["q_min"], dtype=float)
    q_max = np.asarray(limits["q_max"], dtype=float)
    qdot_max = np.asarray(limits["qdot_max"], dtype=float)
    for arr, label in ((q_min, "q_min"), (q_max, "q_max"), (qdot_max, "qdot_max")):
        if arr.shape != (n,):
            raise ModelError(f"limits.{label} must have {n} entries")
    if not np.all(q_min < q_max):
        raise ModelError("q_min must be < q_max elementwise")
    if not np.all(qdot_max > 0):
        raise ModelError("qdot_max must be > 0 elementwise")
    if v_max <= 0 or a_max <= 0:
        raise ModelError("v_max and a_max must be > 0")

    return RobotModel(
        name=str(data.get("name", name)),
        joints=joints,
        tool_offset=np.asarray(data.get("tool", (0.0, 0.0, 0.0)), dtype=float).reshape(3),
        capsules=tuple(capsules),
        q_min=q_min, q_max=q_max, qdot_max=qdot_max,
        v_max=v_max, a_max=a_max)


def load_robot_model(name_or_path: str | Path) -> RobotModel:
    """Load a model by shipped name (e.g. ``iiwa14``) or filesystem path."""
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ModelError(f"cannot read model file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ModelError(f"model file {path} is not valid JSON: {exc}") from exc
        return model_from_dict(data, name=path.stem)
    try:
        text = resources.files("capguard").joinpath(f"models/{name_or_path}.json").read_text()
    except (FileNotFoundError, OSError) as exc:
        raise ModelError(f"unknown robot model {name_or_path!r}") from exc
    return model_from_dict(json.loads(text), name=str(name_or_path))


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def forward_kinematics(model: RobotModel, q) -> list[Frame]:
    """Frames of the base and of every link (n+1 frames for n joints).

    Frame i sits at joint i's origin and carries link i; it depends only on
    q[0..i-1].  The TCP is the tool offset expressed in the last frame (see
    :func:`eef_position`).
    """
    q = np.asarray(q, dtype=float)
    frames = [Frame(np.eye(3), np.zeros(3))]
    for joint, qi in zip(model.joints, q):
        rot, origin = frames[-1]
        frames.append(Frame(rot @ rotation_about_axis(joint.axis, float(qi)),
                            origin + rot @ joint.offset))
    return frames


def eef_position(model: RobotModel, q, frames: list[Frame] | None = None) -> np.ndarray:
    """TCP position in the base frame (tool offset included)."""
    if frames is None:
        frames = forward_kinematics(model, q)
    rot, origin = frames[-1]
    return origin + rot @ model.tool_offset


def _joint_axes_world(model: RobotModel, frames: list[Frame]) -> list[np.ndarray]:
    # Rotation about the own axis leaves it fixed, so frame i's rotation
    # maps joint i's local axis to world coordinates.
    return [frames[i + 1].rotation @ model.joints[i].axis for i in range(model.dof)]


def jacobian_at_point(model: RobotModel, q, link: int, point,
                      frames: list[Frame] | None = None) -> np.ndarray:
    """3xN linear-velocity Jacobian of a point rigidly attached to a link.

    Columns for joints distal to ``link`` are exactly zero; proximal
    columns are z_i x (point - o_i).
    """
    if not 1 <= link <= model.dof:
        raise ValueError(f"link must be in 1..{model.dof}, got {link}")
    if frames is None:
        frames = forward_kinematics(model, q)
    point = np.asarray(point, dtype=float).reshape(3)
    axes = _joint_axes_world(model, frames)
    jac = np.zeros((3, model.dof))
    for i in range(link):
        jac[:, i] = np.cross(axes[i], point - frames[i + 1].origin)
    return jac


def jacobian_eef(model: RobotModel, q, frames: list[Frame] | None = None) -> np.ndarray:
    """3xN linear-velocity Jacobian of the TCP."""
    if frames is None:
        frames = forward_kinematics(model, q)
    return jacobian_at_point(model, q, model.dof, eef_position(model, q, frames), frames)


def robot_capsules(model: RobotModel, q, frames: list[Frame] | None = None) -> list[Capsule]:
    """World-space collision capsules for the configuration q."""
    if frames is None:
        frames = forward_kinematics(model, q)
    out = []
    for binding in model.capsules:
        rot, origin = frames[binding.link]
        out.append(Capsule(origin + rot @ binding.a_local,
                           origin + rot @ binding.b_local,
                           binding.radius, binding.name))
    return out
