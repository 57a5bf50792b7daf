"""The three security objective scores, penalty and score combination.

These are the reference (per-point) implementations of the quantities
the optimizer minimizes. The population-scale vectorized versions live
in evaluator.py and are tested for equality against these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import geo, gdop
from .geo import EcefPosition, GeodeticPosition, PropagationParams

DEFAULT_GDOP_CAP = 100.0


class InvalidConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveRequirements:
    """Required per-point values and acceptance tolerances."""

    required_gdop: float = 10.0
    required_range_km: float = 150.0
    min_sensor_spacing_km: float = 80.0
    min_jammer_distance_km: float = 80.0
    max_sensors_in_jammer_los: int = 0
    gdop_tolerance: float = 1.0
    range_tolerance_km: float = 10.0
    spacing_tolerance_km: float = 5.0
    jammer_distance_tolerance_km: float = 5.0
    jammer_los_tolerance: int = 0
    gdop_cap: float = DEFAULT_GDOP_CAP
    range_cap_km: float | None = None  # None: use the area diagonal

    def __post_init__(self):
        for name in (
            "required_gdop",
            "required_range_km",
            "min_sensor_spacing_km",
            "min_jammer_distance_km",
            "gdop_tolerance",
            "range_tolerance_km",
            "spacing_tolerance_km",
            "jammer_distance_tolerance_km",
            "gdop_cap",
        ):
            if not getattr(self, name) > 0 or not math.isfinite(getattr(self, name)):
                raise InvalidConfigError(f"{name} must be finite and positive")
        if self.max_sensors_in_jammer_los < 0:
            raise InvalidConfigError("max_sensors_in_jammer_los must be >= 0")


@dataclass(frozen=True)
class JammerModel:
    """A jamming transmitter plus the link-budget constants for JSR."""

    position: GeodeticPosition
    power_w: float = 1.0
    antenna_gain: float = 1.0
    transmitter_power_w: float = 100.0
    transmitter_antenna_gain: float = 1.0
    affect_rule: str = "los"  # "los" or "jsr"
    jsr_threshold: float = 1.0
    # Nominal transmitter-to-sensor distance (km) used by the "jsr" rule.
    nominal_signal_distance_km: float = 150.0

    def __post_init__(self):
        if self.power_w <= 0 or self.antenna_gain <= 0:
            raise InvalidConfigError("jammer power and gain must be positive")
        if self.transmitter_power_w <= 0 or self.transmitter_antenna_gain <= 0:
            raise InvalidConfigError("transmitter power and gain must be positive")
        if self.affect_rule not in ("los", "jsr"):
            raise InvalidConfigError(f"unknown affect rule: {self.affect_rule}")


@dataclass
class ObjectiveScores:
    """Raw objective scores of one placement."""

    of1: float
    of2: float
    of3: float
    of3_components: tuple[float, float, float]
    penalty: float
    normalized: dict[str, float] = field(default_factory=dict)


def _visible_sensors(
    point: GeodeticPosition,
    sensors_geo: Sequence[GeodeticPosition],
    sensors_ecef: Sequence[EcefPosition],
    params: PropagationParams,
):
    out = []
    for s_geo, s_ecef in zip(sensors_geo, sensors_ecef):
        if geo.is_visible(point, s_geo, params):
            out.append(s_ecef)
    return out


def of1_gdop_msd(
    grid,
    sensors_geo: Sequence[GeodeticPosition],
    sensors_ecef: Sequence[EcefPosition],
    req: ObjectiveRequirements,
    subset_strategy: str | int | None = None,
    params: PropagationParams = geo.DEFAULT_PROPAGATION,
) -> float:
    """Mean squared deviation of achieved vs required GDOP over the grid.

    Points where GDOP cannot be evaluated contribute the saturated
    deviation (required - gdop_cap)^2.
    """
    points = list(grid.points())
    if not points:
        raise ValueError("empty airspace grid")
    total = 0.0
    for j, point in enumerate(points):
        visible = _visible_sensors(point, sensors_geo, sensors_ecef, params)
        achieved = gdop.best_gdop_at(point, visible, subset_strategy)
        if math.isinf(achieved):
            achieved = req.gdop_cap
        total += (grid.required_gdop[j] - achieved) ** 2
    return total / len(points)


def of2_range_msd(
    grid,
    sensors_geo: Sequence[GeodeticPosition],
    sensors_ecef: Sequence[EcefPosition],
    req: ObjectiveRequirements,
    range_cap_km: float,
    params: PropagationParams = geo.DEFAULT_PROPAGATION,
) -> float:
    """MSD between required and achieved two-receiver verification range.

    The achieved range at a point is the distance to its second-nearest
    visible sensor; fewer than two visible sensors saturate at
    range_cap_km.
    """
    points = list(grid.points())
    if not points:
        raise ValueError("empty airspace grid")
    total = 0.0
    for j, point in enumerate(points):
        visible = _visible_sensors(point, sensors_geo, sensors_ecef, params)
        if len(visible) < 2:
            achieved = range_cap_km
        else:
            p_ecef = geo.geodetic_to_ecef(point)
            dists = sorted(geo.euclidean_distance(p_ecef, s) / 1000.0 for s in visible)
            achieved = dists[1]
        total += (grid.required_range_km[j] - achieved) ** 2
    return total / len(points)


def of3_direction1_spacing(
    sensors_ecef: Sequence[EcefPosition], req: ObjectiveRequirements
) -> float:
    """Mean squared nearest-neighbor spacing shortfall, km^2."""
    n = len(sensors_ecef)
    if n < 2:
        raise ValueError("spacing objective needs at least two sensors")
    pts = np.array([s.as_array() for s in sensors_ecef]) / 1000.0
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    np.fill_diagonal(dist, np.inf)
    nearest = dist.min(axis=1)
    shortfall = np.minimum(0.0, nearest - req.min_sensor_spacing_km)
    return float(np.mean(shortfall**2))


def of3_direction2_jammer_distance(
    sensors_geo: Sequence[GeodeticPosition],
    sensors_ecef: Sequence[EcefPosition],
    jammers: Sequence[JammerModel],
    req: ObjectiveRequirements,
    params: PropagationParams = geo.DEFAULT_PROPAGATION,
) -> float:
    """Mean squared shortfall of the jammer-to-nearest-sensor distance.

    A jammer with no sensor inside its LOS contributes zero (it cannot
    affect the network at all).
    """
    if not jammers or not sensors_ecef:
        raise ValueError("need at least one jammer and one sensor")
    total = 0.0
    for jam in jammers:
        in_los = [
            geo.is_visible(jam.position, s, params) for s in sensors_geo
        ]
        if not any(in_los):
            continue
        jam_ecef = geo.geodetic_to_ecef(jam.position)
        nearest = min(geo.euclidean_distance(jam_ecef, s) / 1000.0 for s in sensors_ecef)
        shortfall = min(0.0, nearest - req.min_jammer_distance_km)
        total += shortfall**2
    return total / len(jammers)


def of3_direction3_sensors_in_range(
    sensors_geo: Sequence[GeodeticPosition],
    sensors_ecef: Sequence[EcefPosition],
    jammers: Sequence[JammerModel],
    req: ObjectiveRequirements,
    params: PropagationParams = geo.DEFAULT_PROPAGATION,
) -> float:
    """Mean squared excess of affected-sensor counts over the target."""
    if not jammers or not sensors_ecef:
        raise ValueError("need at least one jammer and one sensor")
    total = 0.0
    for jam in jammers:
        count = sum(
            1
            for s_geo, s_ecef in zip(sensors_geo, sensors_ecef)
            if sensor_affected(jam, s_geo, s_ecef, params)
        )
        excess = max(0, count - req.max_sensors_in_jammer_los)
        total += float(excess) ** 2
    return total / len(jammers)


def sensor_affected(
    jam: JammerModel,
    sensor_geo: GeodeticPosition,
    sensor_ecef: EcefPosition,
    params: PropagationParams = geo.DEFAULT_PROPAGATION,
) -> bool:
    """Whether the jammer disrupts this sensor under its affect rule."""
    if not geo.is_visible(jam.position, sensor_geo, params):
        return False
    if jam.affect_rule == "los":
        return True
    dist_km = geo.euclidean_distance(geo.geodetic_to_ecef(jam.position), sensor_ecef) / 1000.0
    return jsr(jam, dist_km, jam.nominal_signal_distance_km) >= jam.jsr_threshold


def jsr(jam: JammerModel, jammer_sensor_km: float, transmitter_sensor_km: float) -> float:
    """Jamming-to-signal power ratio at a sensor."""
    if jammer_sensor_km <= 0.0:
        return math.inf
    return (jam.power_w * jam.antenna_gain * transmitter_sensor_km**2) / (
        jam.transmitter_power_w * jam.transmitter_antenna_gain * jammer_sensor_km**2
    )


def of3_combined(d1: float, d2: float, d3: float, weights: Sequence[float]) -> float:
    """Weighted-sum scalarization of the three anti-jamming directions."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (3,) or np.any(w < 0):
        raise InvalidConfigError("of3 weights must be three non-negative values")
    if abs(float(w.sum()) - 1.0) > 1e-9:
        raise InvalidConfigError("of3 weights must sum to 1")
    return float(w[0] * d1 + w[1] * d2 + w[2] * d3)


def knapsack_penalty(selected_count: int, total_cells: int) -> float:
    """Site-count pressure: half the squared selected fraction."""
    if total_cells <= 0:
        raise InvalidConfigError("total cell count must be positive")
    if not 0 <= selected_count <= total_cells:
        raise ValueError("selected count out of range")
    return 0.5 * (selected_count / total_cells) ** 2


def weighted_fitness(objective_score: float, penalty: float, pareto_weight_a: float) -> float:
    """Convex blend of an objective score with the knapsack penalty."""
    if not 0.0 <= pareto_weight_a <= 1.0:
        raise InvalidConfigError("pareto weight must lie in [0, 1]")
    return (1.0 - pareto_weight_a) * objective_score + pareto_weight_a * penalty


def normalize_score(score: float, running_min: float, running_max: float) -> float:
    """Min-max normalization clamped to [0, 1]; 0 on a degenerate range."""
    if running_max < running_min:
        raise ValueError("running_max must be >= running_min")
    if running_max == running_min:
        return 0.0
    return min(1.0, max(0.0, (score - running_min) / (running_max - running_min)))


class RunningBounds:
    """Per-score running min/max used for normalization.

    Bounds only widen during a run and are frozen into run metadata when
    it finishes so that archived fronts stay comparable.
    """

    KEYS = ("of1", "of2", "of3", "d1", "d2", "d3")

    def __init__(self, initial: dict[str, tuple[float, float]] | None = None):
        self._bounds: dict[str, tuple[float, float]] = dict(initial or {})

    def update(self, key: str, value: float) -> None:
        if not math.isfinite(value):
            return
        lo, hi = self._bounds.get(key, (value, value))
        self._bounds[key] = (min(lo, value), max(hi, value))

    def normalize(self, key: str, value: float) -> float:
        if key not in self._bounds:
            return 0.0
        lo, hi = self._bounds[key]
        return normalize_score(value, lo, hi)

    def to_dict(self) -> dict[str, list[float]]:
        return {k: [lo, hi] for k, (lo, hi) in sorted(self._bounds.items())}

    @classmethod
    def from_dict(cls, data: dict[str, Sequence[float]]) -> "RunningBounds":
        return cls({k: (float(v[0]), float(v[1])) for k, v in data.items()})
