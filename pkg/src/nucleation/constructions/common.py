"""Shared containers for the microstructure generators."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from ..geometry import Scene


class ConstructionError(ValueError):
    """A geometric or parameter precondition of a construction failed."""


@lru_cache(maxsize=1)
def constants() -> dict:
    text = resources.files(__package__).joinpath("constants.json").read_text()
    return json.loads(text)


@dataclass
class ConstructionParams:
    family: str
    values: dict = field(default_factory=dict)
    V: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)

    @classmethod
    def from_json(cls, text: str) -> "ConstructionParams":
        return cls(**json.loads(text))


@dataclass
class Construction:
    """A scene with its cellwise-affine ``u`` and the closed-form bound form."""

    scene: Scene
    params: ConstructionParams
    bound: float
    bound_form: str
    extra: dict = field(default_factory=dict)

    @property
    def V(self) -> float:
        return self.scene.support_volume()


def require(cond: bool, msg: str):
    if not cond:
        raise ConstructionError(msg)


def diag(*d) -> np.ndarray:
    return np.diag(np.asarray(d, float))
