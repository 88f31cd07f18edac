"""Access to the scenario library shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .sim import Scenario, ScenarioError, load_scenario

SHIPPED = (
    "config1_y",
    "config1_z",
    "config1_xy_inclined",
    "config2_approach",
    "config3_doorcard",
)


def shipped_path(name: str) -> Path:
    """Filesystem path of a shipped scenario file."""
    if name not in SHIPPED:
        raise ScenarioError(f"unknown shipped scenario {name!r}; available: {', '.join(SHIPPED)}")
    return Path(str(resources.files("capguard").joinpath(f"scenarios/{name}.json")))


def load_shipped(name: str) -> Scenario:
    return load_scenario(shipped_path(name))


def resolve_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by filesystem path or by shipped name."""
    path = Path(name_or_path)
    if path.exists():
        return load_scenario(path)
    if str(name_or_path) in SHIPPED:
        return load_shipped(str(name_or_path))
    raise ScenarioError(f"no scenario file or shipped scenario named {name_or_path!r}")
