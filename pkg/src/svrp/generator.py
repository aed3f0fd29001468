"""Seeded instance generation.

Customers cluster around city centers placed by k-means over a scattered
candidate cloud; demands, profiles, depots, and time windows come from
independent derived streams, so regenerating with one knob changed leaves
every other entity's draws untouched.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    DEPOT_CONFIGS,
    GenerationError,
    Instance,
    Customer,
    FleetSpec,
    Location,
    PROBLEM_TYPES,
    StochasticParams,
    TimeWindowParams,
    canonical_real,
)
from .stochastic import RandomStream, sample_time_window

CUSTOMERS_PER_CITY = 50
CUSTOMERS_PER_VEHICLE = 25
CANDIDATES_PER_CITY = 50
KMEANS_ITERATIONS = 20
MAX_GENERATION_ATTEMPTS = 100


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything needed to rebuild an instance from scratch."""

    n_customers: int
    problem_type: str = "cvrp"
    depot_config: str = "single"
    num_vehicles: "int | None" = None
    max_demand: int = 10
    extent: float = 100.0
    start_time: float = 480.0
    stochastic: StochasticParams = field(default_factory=StochasticParams)
    tw_params: TimeWindowParams = field(default_factory=TimeWindowParams)
    seed: int = 0

    def __post_init__(self):
        if self.n_customers < 1:
            raise ValueError(f"n_customers must be >= 1, got {self.n_customers}")
        if self.problem_type not in PROBLEM_TYPES:
            raise ValueError(f"unknown problem_type {self.problem_type!r}")
        if self.depot_config not in DEPOT_CONFIGS:
            raise ValueError(f"unknown depot_config {self.depot_config!r}")
        if self.max_demand < 1:
            raise ValueError(f"max_demand must be >= 1, got {self.max_demand}")
        if self.num_vehicles is not None and self.num_vehicles < 1:
            raise ValueError(f"num_vehicles must be >= 1, got {self.num_vehicles}")
        if self.extent <= 0.0:
            raise ValueError(f"extent must be positive, got {self.extent}")


@dataclass(frozen=True)
class CityLayout:
    """City centers plus the shared customer-scatter deviation."""

    centers: "tuple[Location, ...]"
    city_sigma: float


@dataclass(frozen=True)
class ValidationResult:
    """Verdict of the fleet-feasibility check, with a reason when infeasible."""

    feasible: bool
    reason: "str | None" = None


def city_count(n_customers: int) -> int:
    """One city per 50 customers, at least one."""
    return max(1, n_customers // 50)


def default_num_vehicles(n_customers: int) -> int:
    """One vehicle per 25 customers, rounded up."""
    return math.ceil(n_customers / CUSTOMERS_PER_VEHICLE)


def _farthest_point_init(candidates: np.ndarray, k: int, g: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, 2))
    centers[0] = candidates[int(g.integers(len(candidates)))]
    d2 = ((candidates - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        centers[j] = candidates[int(d2.argmax())]
        d2 = np.minimum(d2, ((candidates - centers[j]) ** 2).sum(axis=1))
    return centers


def plan_cities(n_customers: int, extent: float, stream: RandomStream) -> CityLayout:
    """Place well-separated city centers by k-means over a candidate cloud."""
    k = city_count(n_customers)
    sigma = extent / (4.0 * math.sqrt(k))
    g = stream.rng
    candidates = g.uniform(0.0, extent, size=(CANDIDATES_PER_CITY * k, 2))
    centers = _farthest_point_init(candidates, k, g)
    for _ in range(KMEANS_ITERATIONS):
        d2 = ((candidates[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        for j in range(k):
            members = candidates[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    if k > 1:
        # crowded centers shrink the scatter instead of failing the layout
        diffs = centers[:, None, :] - centers[None, :, :]
        dist = np.sqrt((diffs ** 2).sum(axis=2))
        dist[np.diag_indices(k)] = np.inf
        sigma = min(sigma, float(dist.min()) / 2.0)
        sigma = max(sigma, extent / 1000.0)
    order = np.lexsort((centers[:, 1], centers[:, 0]))
    centers = centers[order]
    locs = tuple(Location(canonical_real(x), canonical_real(y)) for x, y in centers)
    return CityLayout(centers=locs, city_sigma=sigma)


def sample_customers(layout: CityLayout, n: int, extent: float,
                     stream: RandomStream) -> "list[Location]":
    """Scatter n customer locations round-robin over the cities."""
    k = len(layout.centers)
    out = []
    for i in range(n):
        center = layout.centers[i % k]
        g = stream.derive(i).rng
        x, y = g.normal((center.x, center.y), layout.city_sigma)
        x = min(max(x, 0.0), extent)
        y = min(max(y, 0.0), extent)
        out.append(Location(canonical_real(x), canonical_real(y)))
    return out


def assign_demands_and_fleet(n: int, max_demand: int, num_vehicles: "int | None",
                             stream: RandomStream) -> "tuple[list[int], FleetSpec]":
    """Uniform integer demands, then a fleet sized to carry them all.

    Capacity is ceil(total demand / vehicles), so the fleet is never
    undersized for aggregate demand by construction.
    """
    demands = [int(stream.derive(i).rng.integers(1, max_demand + 1)) for i in range(n)]
    if num_vehicles is None:
        num_vehicles = default_num_vehicles(n)
    capacity = math.ceil(sum(demands) / num_vehicles)
    return demands, FleetSpec(num_vehicles=num_vehicles, capacity=capacity)


def assign_profiles(n: int, residential_fraction: float,
                    stream: RandomStream) -> "list[str]":
    """Independent residential/commercial draws per customer."""
    return ["residential" if stream.derive(i).rng.random() < residential_fraction
            else "commercial" for i in range(n)]


def place_depots(depot_config: str, layout: CityLayout, extent: float,
                 stream: RandomStream) -> "tuple[Location, ...]":
    """Depots: one uniform point, one uniform per city, or the city centers."""
    if depot_config == "single":
        g = stream.derive(0).rng
        x, y = g.uniform(0.0, extent, 2)
        return (Location(canonical_real(x), canonical_real(y)),)
    if depot_config == "multi_random":
        out = []
        for i in range(len(layout.centers)):
            g = stream.derive(i).rng
            x, y = g.uniform(0.0, extent, 2)
            out.append(Location(canonical_real(x), canonical_real(y)))
        return tuple(out)
    if depot_config == "depots_equal_city":
        return layout.centers
    raise ValueError(f"unknown depot_config {depot_config!r}")


def validate_instance(instance: Instance) -> ValidationResult:
    """Fleet-feasibility check: per-hour windowed demand bins (a window
    contributes its full demand to every bin it overlaps), then aggregate
    capacity."""
    total_capacity = instance.fleet.num_vehicles * instance.fleet.capacity
    if instance.problem_type == "twvrp":
        bins = [0] * 24
        for c in instance.customers:
            first = int(c.window.start // 60.0)
            last = min(int(math.ceil(c.window.end / 60.0)), 24)
            for b in range(first, last):
                bins[b] += c.demand
        peak = max(bins)
        if peak > total_capacity:
            hour = bins.index(peak)
            return ValidationResult(False, f"peak bin {peak} at hour {hour} exceeds "
                                           f"fleet capacity {total_capacity}")
    if instance.total_demand > total_capacity:
        return ValidationResult(False, f"total demand {instance.total_demand} exceeds "
                                       f"fleet capacity {total_capacity}")
    return ValidationResult(True)


def _build_instance(config: GeneratorConfig, attempt: int) -> Instance:
    def stream(label: str) -> RandomStream:
        return RandomStream(config.seed, label, (attempt,))

    n = config.n_customers
    layout = plan_cities(n, config.extent, stream("cities"))
    locations = sample_customers(layout, n, config.extent, stream("locations"))
    demands, fleet = assign_demands_and_fleet(n, config.max_demand,
                                              config.num_vehicles, stream("demands"))
    profiles = assign_profiles(n, config.tw_params.residential_fraction, stream("profiles"))
    if config.problem_type == "twvrp":
        wstream = stream("windows")
        windows = [sample_time_window(profiles[i], config.tw_params, wstream.derive(i))
                   for i in range(n)]
    else:
        windows = [None] * n
    customers = tuple(
        Customer(id=i + 1, location=locations[i], demand=demands[i],
                 profile=profiles[i], window=windows[i])
        for i in range(n))
    depots = place_depots(config.depot_config, layout, config.extent, stream("depots"))
    name = (f"{config.problem_type}-n{n}-{config.depot_config}-seed{config.seed}"
            + (f"-r{attempt}" if attempt else ""))
    return Instance(
        id=name,
        problem_type=config.problem_type,
        extent=float(config.extent),
        depots=depots,
        customers=customers,
        depot_config=config.depot_config,
        fleet=fleet,
        stochastic=config.stochastic,
        tw_params=config.tw_params,
        start_time=float(config.start_time),
        seed=config.seed,
    )


def generate_instance(config: GeneratorConfig) -> Instance:
    """Generate a fleet-feasible instance, regenerating on validation failure."""
    reason = None
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        instance = _build_instance(config, attempt)
        verdict = validate_instance(instance)
        if verdict.feasible:
            return instance
        reason = verdict.reason
    raise GenerationError(f"no feasible instance after {MAX_GENERATION_ATTEMPTS} attempts; "
                          f"last failure: {reason}")


SIZE_TIERS = ("small", "medium", "large")

# preset size ladders: the short one for dataset generation, the long
# one for benchmark sweeps
GENERATION_SIZES = (10, 20, 100, 500, 1000)
BENCHMARK_SIZES = (10, 20, 50, 100, 200, 500, 1000)


def tier_config(tier: str, n_customers: int, seed: int = 0, **overrides) -> GeneratorConfig:
    """Preset difficulty tiers: noise level and window tightness scale with size."""
    if tier == "small":
        if not 50 <= n_customers <= 100:
            raise ValueError(f"small tier covers 50..100 customers, got {n_customers}")
        stochastic = StochasticParams(sigma_base=0.2)
        tw = TimeWindowParams()
    elif tier == "medium":
        if not 100 <= n_customers <= 300:
            raise ValueError(f"medium tier covers 100..300 customers, got {n_customers}")
        stochastic = StochasticParams()
        tw = TimeWindowParams()
    elif tier == "large":
        if n_customers < 300:
            raise ValueError(f"large tier starts at 300 customers, got {n_customers}")
        stochastic = StochasticParams(sigma_base=0.4)
        base = TimeWindowParams()
        tw = replace(base, w_max=base.w_max / 2.0,
                     w_max_com=min(base.w_max_com, base.w_max / 2.0))
    else:
        raise ValueError(f"unknown size tier {tier!r}; expected one of {SIZE_TIERS}")
    config = GeneratorConfig(n_customers=n_customers, seed=seed,
                             stochastic=stochastic, tw_params=tw)
    return replace(config, **overrides) if overrides else config
