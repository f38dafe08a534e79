"""Experiment configuration: solver settings, initial data and Monte Carlo size.

Configurations are JSON documents::

    {
      "solver": {"T": 1.0, "J": 256, "K": 16, "p": 2, "q": 4, "m": 2, "n_max": 10,
                 "operator": {"kind": "diagonal", "order": 2, "shift": 1.0},
                 "model": {"nonlinearity": {...}, "diffusion": {...}}},
      "paths": 100,
      "seed": 0,
      "initial": {"kind": "random", "target": 2.0, "decay": 2.0, "cutoff": 8}
    }

The configuration hash (first 16 hex digits of the SHA-256 of the canonical
JSON) identifies every output file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .rng import stream_id
from .solver import SolverConfig
from .spectral import SpectralField, _sobolev_norm_coeffs, random_field

__all__ = ["ExperimentConfig", "InitialCondition", "load_config"]


@dataclass(frozen=True, eq=False)
class InitialCondition:
    """Deterministic field, or a random trigonometric ensemble.

    For ``kind="random"`` sample ``i`` is a random polynomial with
    ``(1+|k|)^-decay`` spectrum on ``cutoff`` modes, normalised so that
    ``||u0||_{W^{m,p}} = target``. ``scale`` multiplies every sample.
    """

    kind: str = "deterministic"
    field: SpectralField | None = None
    target: float = 1.0
    decay: float = 2.0
    cutoff: int = 4
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("deterministic", "random"):
            raise ValueError(f"unknown initial-condition kind {self.kind!r}")
        if self.target < 0 or self.cutoff < 0:
            raise ValueError("target and cutoff must be non-negative")

    def scaled(self, s: float) -> "InitialCondition":
        return replace(self, scale=self.scale * s)

    def sample(self, index: int, seed: int, K: int, dimension: int, m: int, p: float) -> np.ndarray:
        if self.kind == "deterministic":
            if self.field is None:
                return np.zeros((2 * K + 1,) * dimension, dtype=complex)
            if self.field.dimension != dimension:
                raise ValueError("initial field lives on the wrong torus")
            return self.scale * self.field.resize(K).coeffs
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=stream_id("initial", index))
        u = random_field(np.random.default_rng(ss), dimension, min(self.cutoff, K), decay=self.decay)
        c = u.resize(K).coeffs
        norm = float(_sobolev_norm_coeffs(c, dimension, m, p))
        return self.scale * self.target * c / norm if norm > 0 else c

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "scale": self.scale}
        if self.kind == "deterministic":
            out["field"] = None if self.field is None else self.field.to_dict()
        else:
            out.update(target=self.target, decay=self.decay, cutoff=self.cutoff)
        return out

    @classmethod
    def from_dict(cls, record: dict) -> "InitialCondition":
        rec = dict(record)
        fld = rec.pop("field", None)
        if fld is not None:
            rec["field"] = SpectralField.from_dict(fld)
        return cls(**rec)


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    solver: SolverConfig = field(default_factory=SolverConfig)
    paths: int = 100
    seed: int = 0
    initial: InitialCondition = field(default_factory=InitialCondition)
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("need at least one path")

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"solver": self.solver.to_dict(), "paths": self.paths, "seed": self.seed,
                "initial": self.initial.to_dict(), "report": dict(self.report)}

    @classmethod
    def from_dict(cls, record: dict) -> "ExperimentConfig":
        return cls(SolverConfig.from_dict(record.get("solver", {})), int(record.get("paths", 100)),
                   int(record.get("seed", 0)), InitialCondition.from_dict(record.get("initial", {})),
                   dict(record.get("report", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))
