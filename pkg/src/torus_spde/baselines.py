"""Regression baselines for empirical suite constants.

The stored file holds a ``values`` mapping and the SHA-256 of its canonical
JSON. Loading verifies the checksum, so a hand-edited or truncated file is
rejected. Regeneration overwrites the file and must be confirmed
explicitly.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

from .analysis import moser_check, moser_check_x_dependent
from .functions import SeparableFunction
from .harness import theorem_scaling_study
from .suites import MOSER_SCALES, moser_suite, scaling_config

__all__ = [
    "BaselineError",
    "SCALING_SCALES",
    "default_baseline_path",
    "load_baselines",
    "moser_ratios",
    "regenerate_baselines",
    "scaling_constant",
]

SCALING_SCALES = (0.0, 1.0, 2.0, 4.0)
MARGIN = 1e-9


class BaselineError(RuntimeError):
    """Missing, malformed or tampered baseline file."""


def default_baseline_path() -> Path:
    return Path(str(resources.files("torus_spde") / "data" / "baselines.json"))


def _checksum(values: dict) -> str:
    return hashlib.sha256(json.dumps(values, sort_keys=True).encode()).hexdigest()


def moser_ratios(cases: list[dict] | None = None, scales=MOSER_SCALES) -> list[float]:
    """Moser ratios over every suite case and amplitude scale."""
    cases = moser_suite() if cases is None else cases
    out = []
    for case in cases:
        G = case["G"]
        check = moser_check_x_dependent if isinstance(G, SeparableFunction) else moser_check
        for s in scales:
            out.append(check(G, case["f"] * s, case["m"], case["p"]).ratio)
    return out


def scaling_constant(paths: int = 40) -> float:
    return theorem_scaling_study(scaling_config(paths), SCALING_SCALES).C


def load_baselines(path=None) -> dict:
    """Stored constants, after checksum verification."""
    path = Path(path) if path is not None else default_baseline_path()
    try:
        record = json.loads(path.read_text())
        values, digest = record["values"], record["sha256"]
    except FileNotFoundError as exc:
        raise BaselineError(f"baseline file {path} not found") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise BaselineError(f"baseline file {path} is malformed") from exc
    if _checksum(values) != digest:
        raise BaselineError(f"baseline mismatch: checksum of {path} does not match its contents")
    return values


def regenerate_baselines(path=None, *, confirm: bool = False) -> dict:
    """Recompute every suite constant and overwrite the baseline file.

    Refuses to run unless ``confirm=True``.
    """
    if not confirm:
        raise BaselineError("baseline regeneration is deliberate: pass confirm=True")
    path = Path(path) if path is not None else default_baseline_path()
    ratios = moser_ratios()
    values = {
        "moser_C_star": max(ratios) * (1 + MARGIN),
        "moser_cases": len(ratios),
        "scaling_C": scaling_constant(),
        "scaling_scales": list(SCALING_SCALES),
    }
    record = {"values": values, "sha256": _checksum(values)}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return values
