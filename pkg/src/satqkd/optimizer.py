"""Exhaustive grid search over source parameters maximizing the secret key.

The analytic key rate is cheap, so a deterministic grid is preferred over
local search: the whole table is returned for inspection and reruns are
bit-identical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError
from .protocol import DetectorModel, SecurityParams, key_from_fixed_loss
from .source import IntensityClass, IntensityLabel, SourceConfig

# parameters the grid may sweep, in tie-break priority order
SWEEPABLE = ("mu_signal", "mu_decoy", "p_signal", "p_decoy", "basis_probability_z")


@dataclass(frozen=True)
class Axis:
    lower: float
    upper: float
    points: int

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError("axis lower must be < upper")
        if self.points < 2:
            raise DomainError("axis needs >= 2 grid points")

    def values(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.points)


@dataclass(frozen=True)
class SearchSpace:
    axes: Dict[str, Axis]

    def __post_init__(self):
        for name in self.axes:
            if name not in SWEEPABLE:
                raise DomainError(f"unknown search parameter {name!r}; choose from {SWEEPABLE}")
        if not self.axes:
            raise DomainError("search space has no axes")


@dataclass(frozen=True)
class OptimizeResult:
    best_params: Dict[str, float]
    best_key_length: float
    table: List[dict]  # one row per evaluated grid point


def _apply_params(base: SourceConfig, params: Dict[str, float]) -> Optional[SourceConfig]:
    """Build a SourceConfig for one grid point; None if the combination is infeasible."""
    mu_s = params.get("mu_signal", base.intensity(IntensityLabel.SIGNAL).mu)
    mu_d = params.get("mu_decoy", base.intensity(IntensityLabel.DECOY).mu)
    p_s = params.get("p_signal", base.intensity(IntensityLabel.SIGNAL).emit_probability)
    p_d = params.get("p_decoy", base.intensity(IntensityLabel.DECOY).emit_probability)
    pz = params.get("basis_probability_z", base.basis_probability_z)
    p_v = 1.0 - p_s - p_d
    if mu_s <= 0 or mu_d <= 0 or mu_s == mu_d:
        return None
    if p_s <= 0 or p_d <= 0 or p_v < 0:
        return None
    if not 0.0 < pz < 1.0:
        return None
    classes = []
    for cls in base.intensity_classes:
        if cls.label is IntensityLabel.SIGNAL:
            classes.append(replace(cls, mu=mu_s, emit_probability=p_s))
        elif cls.label is IntensityLabel.DECOY:
            classes.append(replace(cls, mu=mu_d, emit_probability=p_d))
        else:
            classes.append(replace(cls, emit_probability=p_v))
    return replace(base, intensity_classes=tuple(classes), basis_probability_z=pz)


def optimize(
    space: SearchSpace,
    base_source: SourceConfig,
    total_loss_db: float,
    det: DetectorModel,
    e_det: float,
    sec: SecurityParams,
    regime: str = "asymptotic",
    duration_s: float = 1.0,
) -> OptimizeResult:
    """Evaluate the full grid and return the argmax (first listed combination wins ties)."""
    names = [n for n in SWEEPABLE if n in space.axes]
    grids = [space.axes[n].values() for n in names]
    best: Optional[Tuple[Dict[str, float], float]] = None
    table: List[dict] = []
    for combo in itertools.product(*grids):
        params = dict(zip(names, (float(v) for v in combo)))
        source = _apply_params(base_source, params)
        if source is None:
            continue
        result = key_from_fixed_loss(source, total_loss_db, det, e_det, sec, duration_s, regime)
        row = dict(params)
        row["key_length_bits"] = result.secret_key_length
        row["key_rate_bps"] = result.secret_key_rate
        table.append(row)
        if best is None or result.secret_key_length > best[1]:
            best = (params, result.secret_key_length)
    if best is None:
        raise DomainError("search space contains no feasible grid point")
    return OptimizeResult(best_params=best[0], best_key_length=best[1], table=table)
