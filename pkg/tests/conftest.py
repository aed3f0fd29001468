import math

import pytest

from svrp.core import (
    Customer,
    FleetSpec,
    Instance,
    Location,
    StochasticParams,
    TimeWindow,
    TimeWindowParams,
)

# noise-free model: travel time reduces to 60 * d / speed exactly
DETERMINISTIC = StochasticParams(alpha=0.0, lambda_scale=0.0)


@pytest.fixture
def params():
    return StochasticParams()


@pytest.fixture
def tw_params():
    return TimeWindowParams()


def make_instance(customer_specs, depots=((0.0, 0.0),), capacity=None,
                  num_vehicles=None, problem_type=None, stochastic=None,
                  extent=1000.0, start_time=480.0, depot_config="single", seed=0):
    """Hand-built instance from (x, y, demand[, window]) tuples."""
    customers = []
    for i, spec in enumerate(customer_specs):
        x, y, demand = spec[0], spec[1], spec[2]
        window = spec[3] if len(spec) > 3 else None
        if window is not None and not isinstance(window, TimeWindow):
            window = TimeWindow(start=float(window[0]), length=float(window[1]))
        customers.append(Customer(id=i + 1, location=Location(float(x), float(y)),
                                  demand=int(demand), profile="commercial",
                                  window=window))
    if problem_type is None:
        problem_type = "twvrp" if customers and customers[0].window is not None else "cvrp"
    total = sum(c.demand for c in customers)
    if num_vehicles is None:
        num_vehicles = 1 if capacity is None else max(1, math.ceil(total / capacity))
    if capacity is None:
        capacity = total
    return Instance(
        id=f"test-{problem_type}-{len(customers)}",
        problem_type=problem_type,
        extent=extent,
        depots=tuple(Location(float(x), float(y)) for x, y in depots),
        customers=tuple(customers),
        depot_config=depot_config,
        fleet=FleetSpec(num_vehicles=num_vehicles, capacity=capacity),
        stochastic=stochastic if stochastic is not None else DETERMINISTIC,
        tw_params=TimeWindowParams(),
        start_time=start_time,
        seed=seed,
    )
