"""Domain model for stochastic vehicle routing.

Conventions used across the toolkit: coordinates are kilometers on a square
map, times are minutes-of-day in [0, 1440), speeds are km/h, demands are
integer units. Parameters quoted in hours (rush-hour kernel locations and
widths) are converted where they are consumed, never stored converted.
"""

import math
from dataclasses import dataclass, field

MINUTES_PER_DAY = 1440.0

PROBLEM_TYPES = ("cvrp", "twvrp")
DEPOT_CONFIGS = ("single", "multi_random", "depots_equal_city")
CUSTOMER_PROFILES = ("residential", "commercial")


class SvrpError(Exception):
    """Base class for all domain errors raised by this package."""


class InvariantError(SvrpError):
    """A value violates one of the model invariants."""


class SchemaError(SvrpError):
    """A file or payload does not match the expected format."""


class GenerationError(SvrpError):
    """Instance generation could not produce a feasible instance."""


class ConstructionError(SvrpError):
    """A solver could not build a coverage-complete plan."""


class ExternalSolverError(SvrpError):
    """An external solver subprocess failed or returned bad output."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvariantError(message)


def canonical_real(x: float) -> float:
    """Round to 9 significant digits, the precision carried by stored reals."""
    return float(f"{float(x):.9g}")


@dataclass(frozen=True)
class Location:
    """A point on the map, in kilometers."""

    x: float
    y: float

    def __post_init__(self):
        _require(math.isfinite(self.x) and math.isfinite(self.y),
                 f"location coordinates must be finite, got ({self.x}, {self.y})")


def euclidean_distance(a: Location, b: Location) -> float:
    """Straight-line distance between two locations, kilometers."""
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class TimeWindow:
    """A service window: start minute-of-day plus a positive length."""

    start: float
    length: float

    def __post_init__(self):
        _require(0.0 <= self.start < MINUTES_PER_DAY,
                 f"window start must lie in [0, {MINUTES_PER_DAY}), got {self.start}")
        _require(self.length > 0.0,
                 f"window length must be positive, got {self.length}")
        _require(self.start + self.length <= MINUTES_PER_DAY,
                 f"window [{self.start}, {self.start + self.length}] runs past midnight")

    @property
    def end(self) -> float:
        return self.start + self.length


@dataclass(frozen=True)
class Customer:
    """A demand point. Window is present exactly when the instance is twvrp."""

    id: int
    location: Location
    demand: int
    profile: str
    window: "TimeWindow | None" = None

    def __post_init__(self):
        _require(isinstance(self.id, int) and self.id >= 1,
                 f"customer id must be a positive integer, got {self.id!r}")
        _require(isinstance(self.demand, int) and self.demand >= 1,
                 f"customer {self.id}: demand must be a positive integer, got {self.demand!r}")
        _require(self.profile in CUSTOMER_PROFILES,
                 f"customer {self.id}: unknown profile {self.profile!r}")


@dataclass(frozen=True)
class FleetSpec:
    """A homogeneous fleet: vehicle count and per-vehicle capacity."""

    num_vehicles: int
    capacity: int

    def __post_init__(self):
        _require(isinstance(self.num_vehicles, int) and self.num_vehicles >= 1,
                 f"fleet must have at least one vehicle, got {self.num_vehicles!r}")
        _require(isinstance(self.capacity, int) and self.capacity >= 1,
                 f"vehicle capacity must be a positive integer, got {self.capacity!r}")


@dataclass(frozen=True)
class StochasticParams:
    """Parameters of the travel-time noise model.

    Kernel locations and widths (mu_morning, mu_evening, mu_night, sigma_peak,
    sigma_acc) are in hours; alpha is in minutes; accident delays are in hours;
    speed_v is km/h; lambda_dist is km.
    """

    speed_v: float = 40.0
    alpha: float = 10.0
    beta_base: float = 1.0
    gamma_amp: float = 5.0
    mu_morning: float = 8.0
    mu_evening: float = 17.0
    sigma_peak: float = 1.5
    lambda_dist: float = 50.0
    mu_base: float = 0.0
    delta: float = 0.1
    sigma_base: float = 0.3
    epsilon: float = 0.2
    lambda_scale: float = 0.1
    mu_night: float = 21.0
    sigma_acc: float = 2.0
    accident_delay_min: float = 0.5
    accident_delay_max: float = 2.0

    def __post_init__(self):
        _require(self.speed_v > 0.0, f"speed_v must be positive, got {self.speed_v}")
        _require(self.sigma_peak > 0.0, f"sigma_peak must be positive, got {self.sigma_peak}")
        _require(self.sigma_acc > 0.0, f"sigma_acc must be positive, got {self.sigma_acc}")
        _require(self.sigma_base > 0.0, f"sigma_base must be positive, got {self.sigma_base}")
        _require(self.lambda_dist > 0.0, f"lambda_dist must be positive, got {self.lambda_dist}")
        _require(self.alpha >= 0.0, f"alpha must be non-negative, got {self.alpha}")
        _require(self.lambda_scale >= 0.0,
                 f"lambda_scale must be non-negative, got {self.lambda_scale}")
        _require(0.0 <= self.accident_delay_min <= self.accident_delay_max,
                 "accident delay range must satisfy 0 <= min <= max, got "
                 f"[{self.accident_delay_min}, {self.accident_delay_max}]")


@dataclass(frozen=True)
class TimeWindowParams:
    """Parameters of the customer time-window sampler, minutes-of-day."""

    res_morning_mean: float = 480.0
    res_morning_sigma: float = 90.0
    res_evening_mean: float = 1140.0
    res_evening_sigma: float = 120.0
    com_mean: float = 780.0
    com_sigma: float = 60.0
    w_min: float = 60.0
    w_max: float = 120.0
    w_max_com: float = 120.0
    residential_fraction: float = 0.6

    def __post_init__(self):
        _require(0.0 < self.w_min <= self.w_max,
                 f"window lengths must satisfy 0 < w_min <= w_max, got [{self.w_min}, {self.w_max}]")
        _require(self.w_min <= self.w_max_com <= MINUTES_PER_DAY,
                 f"w_max_com must lie in [w_min, {MINUTES_PER_DAY}], got {self.w_max_com}")
        _require(self.w_max <= MINUTES_PER_DAY,
                 f"w_max must not exceed {MINUTES_PER_DAY}, got {self.w_max}")
        _require(0.0 <= self.residential_fraction <= 1.0,
                 f"residential_fraction must lie in [0, 1], got {self.residential_fraction}")
        _require(self.res_morning_sigma > 0.0 and self.res_evening_sigma > 0.0
                 and self.com_sigma > 0.0, "window start sigmas must be positive")


@dataclass(frozen=True)
class Instance:
    """A routing problem: map, customers, depots, fleet, and noise model."""

    id: str
    problem_type: str
    extent: float
    depots: "tuple[Location, ...]"
    customers: "tuple[Customer, ...]"
    depot_config: str
    fleet: FleetSpec
    stochastic: StochasticParams = field(default_factory=StochasticParams)
    tw_params: TimeWindowParams = field(default_factory=TimeWindowParams)
    start_time: float = 480.0
    seed: int = 0

    def __post_init__(self):
        _require(self.problem_type in PROBLEM_TYPES,
                 f"unknown problem_type {self.problem_type!r}")
        _require(self.depot_config in DEPOT_CONFIGS,
                 f"unknown depot_config {self.depot_config!r}")
        _require(self.extent > 0.0, f"extent must be positive, got {self.extent}")
        _require(len(self.depots) >= 1, "instance must have at least one depot")
        _require(len(self.customers) >= 1, "instance must have at least one customer")
        _require(0.0 <= self.start_time < MINUTES_PER_DAY,
                 f"start_time must lie in [0, {MINUTES_PER_DAY}), got {self.start_time}")
        ids = [c.id for c in self.customers]
        _require(ids == list(range(1, len(ids) + 1)),
                 "customer ids must be contiguous starting at 1")
        for loc in self.depots:
            _require(0.0 <= loc.x <= self.extent and 0.0 <= loc.y <= self.extent,
                     f"depot at ({loc.x}, {loc.y}) lies outside the {self.extent} km map")
        for c in self.customers:
            _require(0.0 <= c.location.x <= self.extent and 0.0 <= c.location.y <= self.extent,
                     f"customer {c.id} at ({c.location.x}, {c.location.y}) lies outside the map")
            if self.problem_type == "twvrp":
                _require(c.window is not None, f"customer {c.id}: twvrp requires a time window")
            else:
                _require(c.window is None, f"customer {c.id}: cvrp forbids time windows")

    @property
    def num_customers(self) -> int:
        return len(self.customers)

    @property
    def num_depots(self) -> int:
        return len(self.depots)

    @property
    def num_nodes(self) -> int:
        return len(self.depots) + len(self.customers)

    @property
    def total_demand(self) -> int:
        return sum(c.demand for c in self.customers)

    def customer(self, cid: int) -> Customer:
        _require(1 <= cid <= len(self.customers), f"no customer with id {cid}")
        return self.customers[cid - 1]

    def customer_node(self, cid: int) -> int:
        """Node index of a customer: depots occupy [0, num_depots)."""
        _require(1 <= cid <= len(self.customers), f"no customer with id {cid}")
        return len(self.depots) + cid - 1

    def node_location(self, node: int) -> Location:
        if node < len(self.depots):
            return self.depots[node]
        return self.customers[node - len(self.depots)].location


@dataclass(frozen=True)
class Route:
    """One vehicle's plan: a depot node index and an ordered customer id tuple."""

    depot_index: int
    customers: "tuple[int, ...]"


@dataclass(frozen=True)
class Solution:
    """An a priori plan: fixed routes executed unchanged under every realization."""

    routes: "tuple[Route, ...]"
    solver_name: str
    wall_time: float = 0.0
    plan_feasible: bool = True

    def validate(self, instance: Instance) -> None:
        """Check coverage, capacity, fleet size, and depot indices in O(n)."""
        seen = set()
        for r, route in enumerate(self.routes):
            _require(0 <= route.depot_index < instance.num_depots,
                     f"route {r}: depot index {route.depot_index} out of range")
            load = 0
            for cid in route.customers:
                _require(1 <= cid <= instance.num_customers,
                         f"route {r}: unknown customer id {cid}")
                _require(cid not in seen, f"customer {cid} appears on more than one route")
                seen.add(cid)
                load += instance.customer(cid).demand
            _require(load <= instance.fleet.capacity,
                     f"route {r}: load {load} exceeds capacity {instance.fleet.capacity}")
        _require(len(seen) == instance.num_customers,
                 f"plan covers {len(seen)} of {instance.num_customers} customers")
        _require(len(self.routes) <= instance.fleet.num_vehicles,
                 f"plan uses {len(self.routes)} routes but fleet has "
                 f"{instance.fleet.num_vehicles} vehicles")
