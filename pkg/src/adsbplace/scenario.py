"""Problem construction: airspace sampling, candidate sites, jammers,
and the precomputed geometry matrices shared by every evaluation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import geo
from .geo import GeodeticPosition, PropagationParams
from .objectives import InvalidConfigError, JammerModel, ObjectiveRequirements

log = logging.getLogger("adsbplace.scenario")


@dataclass(frozen=True)
class AreaBounds:
    """Geodetic bounding box plus the aircraft sampling altitudes."""

    lat_low: float
    lat_up: float
    lon_low: float
    lon_up: float
    altitude_levels_m: tuple[float, ...] = (3000.0, 6000.0, 10000.0)

    def __post_init__(self):
        if not self.lat_low < self.lat_up:
            raise InvalidConfigError("lat_low must be < lat_up")
        if not self.lon_low < self.lon_up:
            raise InvalidConfigError("lon_low must be < lon_up")
        alts = self.altitude_levels_m
        if not alts or any(a <= 0 for a in alts) or list(alts) != sorted(set(alts)):
            raise InvalidConfigError("altitudes must be strictly increasing and > 0")

    def contains(self, lat: float, lon: float) -> bool:
        return self.lat_low <= lat <= self.lat_up and self.lon_low <= lon <= self.lon_up

    def diagonal_km(self) -> float:
        return float(
            geo.haversine_km_arrays(self.lat_low, self.lon_low, self.lat_up, self.lon_up)
        )


@dataclass
class AirspaceGrid:
    """Sampled airspace points with per-point requirements."""

    lat_deg: np.ndarray
    lon_deg: np.ndarray
    alt_m: np.ndarray
    required_gdop: np.ndarray
    required_range_km: np.ndarray

    def __len__(self) -> int:
        return self.lat_deg.size

    def points(self) -> Iterator[GeodeticPosition]:
        for la, lo, al in zip(self.lat_deg, self.lon_deg, self.alt_m):
            yield GeodeticPosition(float(la), float(lo), float(al))


def sample_grid(
    bounds: AreaBounds,
    lat_count: int,
    lon_count: int,
    required_gdop: float = 10.0,
    required_range_km: float = 150.0,
) -> AirspaceGrid:
    """Regular lat x lon lattice at each altitude level.

    Points come out sorted by longitude, ties broken by latitude, so the
    node-uniqueness ordering holds by construction.
    """
    if lat_count < 2 or lon_count < 2:
        raise InvalidConfigError("grid counts must be >= 2")
    lats = np.linspace(bounds.lat_low, bounds.lat_up, lat_count)
    lons = np.linspace(bounds.lon_low, bounds.lon_up, lon_count)
    alts = np.asarray(bounds.altitude_levels_m, dtype=float)
    lon_g, lat_g, alt_g = np.meshgrid(lons, lats, alts, indexing="ij")
    m = lon_g.size
    return AirspaceGrid(
        lat_deg=lat_g.ravel(),
        lon_deg=lon_g.ravel(),
        alt_m=alt_g.ravel(),
        required_gdop=np.full(m, float(required_gdop)),
        required_range_km=np.full(m, float(required_range_km)),
    )


def _lattice_shape(count: int) -> tuple[int, int]:
    rows = int(round(math.sqrt(count)))
    while rows > 1 and count % rows:
        rows -= 1
    return rows, count // rows


def generate_candidates(
    bounds: AreaBounds,
    count: int,
    pattern: str = "lattice",
    seed: int | None = None,
    antenna_height_m: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Candidate ground sites as (lat, lon, alt) arrays, ordering sorted."""
    if count < 1:
        raise InvalidConfigError("candidate count must be >= 1")
    if pattern == "lattice":
        # One site per rectangle of the area split, placed at the center.
        rows, cols = _lattice_shape(count)
        lat_step = (bounds.lat_up - bounds.lat_low) / rows
        lon_step = (bounds.lon_up - bounds.lon_low) / cols
        lats = bounds.lat_low + lat_step * (np.arange(rows) + 0.5)
        lons = bounds.lon_low + lon_step * (np.arange(cols) + 0.5)
        lon_g, lat_g = np.meshgrid(lons, lats, indexing="ij")
        lat_arr, lon_arr = lat_g.ravel(), lon_g.ravel()
    elif pattern == "seeded-uniform":
        rng = np.random.default_rng(seed)
        lat_arr = rng.uniform(bounds.lat_low, bounds.lat_up, count)
        lon_arr = rng.uniform(bounds.lon_low, bounds.lon_up, count)
        order = np.lexsort((lat_arr, lon_arr))
        lat_arr, lon_arr = lat_arr[order], lon_arr[order]
    else:
        raise InvalidConfigError(f"unknown candidate pattern: {pattern}")
    return lat_arr, lon_arr, np.full(count, float(antenna_height_m))


def generate_jammers(
    bounds: AreaBounds,
    count: int,
    heights_m: Sequence[float],
    pattern: str = "grid",
    seed: int | None = None,
    **jammer_kwargs,
) -> list[JammerModel]:
    """Jammers spread over the area at the given height levels."""
    if count < 1 or not heights_m:
        raise InvalidConfigError("need at least one jammer and one height")
    positions: list[tuple[float, float, float]] = []
    if pattern == "grid":
        if count % len(heights_m):
            raise InvalidConfigError("jammer count must be divisible by the height count")
        per_level = count // len(heights_m)
        rows, cols = _lattice_shape(per_level)
        lat_step = (bounds.lat_up - bounds.lat_low) / rows
        lon_step = (bounds.lon_up - bounds.lon_low) / cols
        lats = bounds.lat_low + lat_step * (np.arange(rows) + 0.5)
        lons = bounds.lon_low + lon_step * (np.arange(cols) + 0.5)
        for h in heights_m:
            for lo in lons:
                for la in lats:
                    positions.append((float(la), float(lo), float(h)))
    elif pattern == "seeded-uniform":
        rng = np.random.default_rng(seed)
        lat_arr = rng.uniform(bounds.lat_low, bounds.lat_up, count)
        lon_arr = rng.uniform(bounds.lon_low, bounds.lon_up, count)
        h_arr = rng.choice(np.asarray(heights_m, dtype=float), size=count)
        for la, lo, h in sorted(zip(lat_arr, lon_arr, h_arr), key=lambda t: (t[1], t[0])):
            positions.append((float(la), float(lo), float(h)))
    else:
        raise InvalidConfigError(f"unknown jammer pattern: {pattern}")
    return [
        JammerModel(position=GeodeticPosition(la, lo, h), **jammer_kwargs)
        for la, lo, h in positions
    ]


@dataclass
class PlacementProblem:
    """Immutable problem instance with all geometry precomputed."""

    grid: AirspaceGrid
    cand_lat: np.ndarray
    cand_lon: np.ndarray
    cand_alt: np.ndarray
    forced_mask: np.ndarray
    jammers: list[JammerModel]
    requirements: ObjectiveRequirements
    propagation: PropagationParams = field(default_factory=PropagationParams)
    range_cap_km: float = 0.0

    # Filled by precompute().
    dist_point_cand: np.ndarray | None = None
    dc_point_cand: np.ndarray | None = None
    los_point_cand: np.ndarray | None = None
    dist_jam_cand: np.ndarray | None = None
    los_jam_cand: np.ndarray | None = None
    dc_jam_cand: np.ndarray | None = None
    affected_jam_cand: np.ndarray | None = None
    dist_cand_cand: np.ndarray | None = None

    @property
    def n_candidates(self) -> int:
        return self.cand_lat.size

    def candidate_positions(self) -> list[GeodeticPosition]:
        return [
            GeodeticPosition(float(la), float(lo), float(al))
            for la, lo, al in zip(self.cand_lat, self.cand_lon, self.cand_alt)
        ]


def precompute(problem: PlacementProblem) -> PlacementProblem:
    """Fill the distance / direction-cosine / LOS matrices in place."""
    grid = problem.grid
    m = len(grid)
    params = problem.propagation

    grid_ecef = geo.geodetic_to_ecef_arrays(grid.lat_deg, grid.lon_deg, grid.alt_m)
    cand_ecef = geo.geodetic_to_ecef_arrays(
        problem.cand_lat, problem.cand_lon, problem.cand_alt
    )

    rot = geo.ned_rotation_arrays(grid.lat_deg, grid.lon_deg)  # (m,3,3)
    diff = cand_ecef[None, :, :] - grid_ecef[:, None, :]  # (m,N,3)
    ned = np.einsum("mij,mnj->mni", rot, diff)
    dist = np.sqrt((ned**2).sum(axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        dc = np.where(dist[..., None] > 0.0, ned / dist[..., None], 0.0)
    ground = geo.haversine_km_arrays(
        grid.lat_deg[:, None], grid.lon_deg[:, None],
        problem.cand_lat[None, :], problem.cand_lon[None, :],
    )
    los = geo.visibility_mask_arrays(
        grid.alt_m[:, None], ground, problem.cand_alt[None, :], params
    )
    problem.dist_point_cand = dist
    problem.dc_point_cand = dc
    problem.los_point_cand = los

    jams = problem.jammers
    if jams:
        jam_lat = np.array([j.position.latitude_deg for j in jams])
        jam_lon = np.array([j.position.longitude_deg for j in jams])
        jam_alt = np.array([j.position.altitude_m for j in jams])
        jam_ecef = geo.geodetic_to_ecef_arrays(jam_lat, jam_lon, jam_alt)
        jrot = geo.ned_rotation_arrays(jam_lat, jam_lon)
        jdiff = cand_ecef[None, :, :] - jam_ecef[:, None, :]
        jned = np.einsum("kij,knj->kni", jrot, jdiff)
        jdist = np.sqrt((jned**2).sum(axis=-1))
        with np.errstate(invalid="ignore", divide="ignore"):
            jdc = np.where(jdist[..., None] > 0.0, jned / jdist[..., None], 0.0)
        jground = geo.haversine_km_arrays(
            jam_lat[:, None], jam_lon[:, None],
            problem.cand_lat[None, :], problem.cand_lon[None, :],
        )
        jlos = geo.visibility_mask_arrays(
            jam_alt[:, None], jground, problem.cand_alt[None, :], params
        )
        affected = jlos.copy()
        for l, jam in enumerate(jams):
            if jam.affect_rule == "jsr":
                num = jam.power_w * jam.antenna_gain * jam.nominal_signal_distance_km**2
                den = jam.transmitter_power_w * jam.transmitter_antenna_gain
                with np.errstate(divide="ignore"):
                    ratio = np.where(
                        jdist[l] > 0.0, num / (den * (jdist[l] / 1000.0) ** 2), np.inf
                    )
                affected[l] &= ratio >= jam.jsr_threshold
        problem.dist_jam_cand = jdist
        problem.dc_jam_cand = jdc
        problem.los_jam_cand = jlos
        problem.affected_jam_cand = affected
    else:
        problem.dist_jam_cand = np.zeros((0, problem.n_candidates))
        problem.dc_jam_cand = np.zeros((0, problem.n_candidates, 3))
        problem.los_jam_cand = np.zeros((0, problem.n_candidates), dtype=bool)
        problem.affected_jam_cand = np.zeros((0, problem.n_candidates), dtype=bool)

    cdiff = cand_ecef[:, None, :] - cand_ecef[None, :, :]
    problem.dist_cand_cand = np.sqrt((cdiff**2).sum(axis=-1))

    if not problem.range_cap_km:
        cap = problem.requirements.range_cap_km
        problem.range_cap_km = float(cap) if cap else _area_diagonal(problem)
    return problem


def _area_diagonal(problem: PlacementProblem) -> float:
    grid = problem.grid
    return float(
        geo.haversine_km_arrays(
            grid.lat_deg.min(), grid.lon_deg.min(), grid.lat_deg.max(), grid.lon_deg.max()
        )
    )


class DeployedFileError(ValueError):
    """Malformed deployed-sensor CSV; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def load_deployed_csv(path: str | Path) -> list[tuple[str, float, float, float]]:
    """Parse a deployed-sensor CSV with header id,lat_deg,lon_deg,alt_m."""
    rows: list[tuple[str, float, float, float]] = []
    seen: set[tuple[float, float, float]] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            return rows
        expected = ["id", "lat_deg", "lon_deg", "alt_m"]
        if [h.strip() for h in header[:4]] != expected:
            raise DeployedFileError(1, f"expected header {','.join(expected)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 4:
                raise DeployedFileError(line_no, "expected 4 columns")
            try:
                lat, lon, alt = float(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise DeployedFileError(line_no, str(exc)) from exc
            key = (lat, lon, alt)
            if key in seen:
                log.warning("deployed sensor on line %d duplicates an earlier row; skipped", line_no)
                continue
            seen.add(key)
            rows.append((row[0].strip(), lat, lon, alt))
    return rows


def build_problem(
    bounds: AreaBounds,
    lat_count: int,
    lon_count: int,
    candidate_count: int,
    requirements: ObjectiveRequirements,
    jammers: list[JammerModel] | None = None,
    deployed: Sequence[tuple[str, float, float, float]] = (),
    candidate_pattern: str = "lattice",
    candidate_seed: int | None = None,
    antenna_height_m: float = 0.0,
    propagation: PropagationParams | None = None,
) -> PlacementProblem:
    """Assemble and precompute a placement problem.

    ``deployed`` sites are appended to the candidate list with their
    forced-mask bits set (Scenario 2); leave it empty for Scenario 1.
    """
    grid = sample_grid(
        bounds, lat_count, lon_count,
        requirements.required_gdop, requirements.required_range_km,
    )
    lat_arr, lon_arr, alt_arr = generate_candidates(
        bounds, candidate_count, candidate_pattern, candidate_seed, antenna_height_m
    )
    forced = np.zeros(candidate_count, dtype=bool)
    for _, lat, lon, alt in deployed:
        if not bounds.contains(lat, lon):
            log.warning("deployed sensor (%.4f, %.4f) lies outside the area bounds", lat, lon)
        lat_arr = np.append(lat_arr, lat)
        lon_arr = np.append(lon_arr, lon)
        alt_arr = np.append(alt_arr, alt)
        forced = np.append(forced, True)
    problem = PlacementProblem(
        grid=grid,
        cand_lat=lat_arr,
        cand_lon=lon_arr,
        cand_alt=alt_arr,
        forced_mask=forced,
        jammers=list(jammers or []),
        requirements=requirements,
        propagation=propagation or PropagationParams(),
    )
    return precompute(problem)


def build_problem_from_sites(
    bounds: AreaBounds,
    lat_count: int,
    lon_count: int,
    requirements: ObjectiveRequirements,
    sites: Sequence[tuple[str, float, float, float]],
    jammers: list[JammerModel] | None = None,
    propagation: PropagationParams | None = None,
) -> PlacementProblem:
    """Problem whose candidate set is exactly the given sensor sites.

    Used to evaluate free-standing deployments that do not correspond to
    any generated candidate lattice; all sites are forced.
    """
    if not sites:
        raise InvalidConfigError("need at least one sensor site")
    grid = sample_grid(
        bounds, lat_count, lon_count,
        requirements.required_gdop, requirements.required_range_km,
    )
    for _, lat, lon, _alt in sites:
        if not bounds.contains(lat, lon):
            log.warning("sensor (%.4f, %.4f) lies outside the area bounds", lat, lon)
    problem = PlacementProblem(
        grid=grid,
        cand_lat=np.array([s[1] for s in sites], dtype=float),
        cand_lon=np.array([s[2] for s in sites], dtype=float),
        cand_alt=np.array([s[3] for s in sites], dtype=float),
        forced_mask=np.ones(len(sites), dtype=bool),
        jammers=list(jammers or []),
        requirements=requirements,
        propagation=propagation or PropagationParams(),
    )
    return precompute(problem)


def clustered21_path() -> Path:
    """Path of the bundled synthetic clustered 21-sensor deployment."""
    return Path(str(resources.files("adsbplace").joinpath("data/clustered21.csv")))
