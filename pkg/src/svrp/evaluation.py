"""Realized-cost simulation and the benchmark metric suite.

A realization samples every leg's travel time from streams keyed by
(realization seed, arc), so matched instances face identical noise. Metrics
follow the benchmark definitions: TC sums sampled travel only (waiting is
unpenalized and uncounted), CVR counts each customer at most once per
realization, FR requires all realizations clean, ROB is population variance.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import fmean
from time import perf_counter

from .core import Instance, InvariantError, Solution
from .solvers import build_planning_matrix
from .stochastic import RandomStream, derive_seed, travel_time


@dataclass(frozen=True)
class RealizationResult:
    """Outcome of one stochastic execution of a plan."""

    realization_index: int
    total_cost: float
    violations: int
    feasible: bool
    leg_times: "tuple[tuple[float, ...], ...]"


def realize_cost(solution: Solution, instance: Instance, realization_seed: int,
                 realization_index: int = 0) -> RealizationResult:
    """Execute the fixed plan once under sampled travel times.

    Early arrivals wait for the window to open (allowed, uncounted); lateness
    marks the customer violated; customers loaded beyond the running capacity
    of their route are violated too. Every route starts its clock at
    instance.start_time.
    """
    params = instance.stochastic
    cap = instance.fleet.capacity
    base = RandomStream(realization_seed, "travel")
    offset = instance.num_depots
    total = 0.0
    violated = set()
    all_legs = []
    for route in solution.routes:
        t = instance.start_time
        node = route.depot_index
        loc = instance.depots[route.depot_index]
        load = 0
        legs = []
        for cid in route.customers:
            customer = instance.customers[cid - 1]
            nxt = offset + cid - 1
            sample = travel_time(loc, customer.location, t, params,
                                 base.derive(node, nxt))
            total += sample.total
            legs.append(sample.total)
            arrival = t + sample.total
            w = customer.window
            if w is not None:
                if arrival > w.end:
                    violated.add(cid)
                elif arrival < w.start:
                    arrival = w.start
            t = arrival
            load += customer.demand
            if load > cap:
                violated.add(cid)
            loc = customer.location
            node = nxt
        sample = travel_time(loc, instance.depots[route.depot_index], t, params,
                             base.derive(node, route.depot_index))
        total += sample.total
        legs.append(sample.total)
        all_legs.append(tuple(legs))
    count = len(violated)
    return RealizationResult(realization_index=realization_index,
                             total_cost=float(total), violations=count,
                             feasible=count == 0, leg_times=tuple(all_legs))


def realization_seed(seed: int, instance: Instance, index: int) -> int:
    """Seed for one realization; deliberately excludes the problem type so
    cvrp/twvrp twins built from the same generator seed share their noise."""
    return derive_seed(seed, "realization", instance.seed, instance.num_customers,
                       instance.depot_config, index)


def evaluate_solution(solution: Solution, instance: Instance,
                      n_realizations: int = 5, seed: int = 0) -> "list[RealizationResult]":
    """Run the standard repeated-realization protocol for one plan."""
    if n_realizations < 1:
        raise ValueError(f"n_realizations must be >= 1, got {n_realizations}")
    return [realize_cost(solution, instance, realization_seed(seed, instance, r),
                         realization_index=r)
            for r in range(n_realizations)]


def cvr(results, num_customers: int) -> float:
    """Customer violation rate in percent, averaged over realizations."""
    results = list(results)
    if not results or num_customers < 1:
        raise ValueError("cvr needs at least one realization and one customer")
    return 100.0 * sum(r.violations for r in results) / (len(results) * num_customers)


def feasibility_rate(per_instance_results) -> float:
    """Fraction of instances whose every realization is violation-free."""
    groups = list(per_instance_results)
    if not groups:
        raise ValueError("feasibility_rate needs at least one instance")
    clean = sum(1 for results in groups if all(r.feasible for r in results))
    return clean / len(groups)


def robustness(costs) -> float:
    """Population variance of realized total costs (divide by N)."""
    values = [float(c) for c in costs]
    if not values:
        raise ValueError("robustness of zero realizations is undefined")
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


@dataclass(frozen=True)
class MetricsReport:
    """One benchmark table row: a (solver, size, type, depots) aggregate."""

    solver_name: str
    n_customers: int
    problem_type: str
    depot_config: str
    num_instances: int
    total_cost: float
    cvr_percent: float
    feasibility: float
    runtime_seconds: float
    robustness: float

    def __post_init__(self):
        if not math.isnan(self.feasibility) and not 0.0 <= self.feasibility <= 1.0:
            raise InvariantError(f"feasibility must lie in [0, 1], got {self.feasibility}")
        if not math.isnan(self.cvr_percent) and not 0.0 <= self.cvr_percent <= 100.0:
            raise InvariantError(f"cvr_percent must lie in [0, 100], got {self.cvr_percent}")
        if not math.isnan(self.robustness) and self.robustness < 0.0:
            raise InvariantError(f"robustness must be non-negative, got {self.robustness}")


@dataclass(frozen=True)
class BenchmarkItem:
    """One (solver, instance) work item with its realizations or its failure."""

    solver_name: str
    instance_id: str
    solution: "Solution | None"
    results: "tuple[RealizationResult, ...]"
    runtime_seconds: float
    error: "str | None" = None


def _max_workers() -> int:
    raw = os.environ.get("SVRP_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def benchmark_items(solvers, instances, n_realizations: int = 5,
                    seed: int = 0) -> "list[BenchmarkItem]":
    """Plan and evaluate every (solver, instance) pair.

    Solver callables take (instance, matrix, seed=...) and return a Solution.
    A solver failure becomes an item with an error note; the run continues.
    SVRP_THREADS caps thread parallelism (default sequential).
    """
    matrices = {inst.id: build_planning_matrix(inst) for inst in instances}
    work = [(name, fn, inst) for inst in instances for name, fn in solvers.items()]

    def run_item(task):
        name, fn, inst = task
        try:
            t0 = perf_counter()
            solution = fn(inst, matrices[inst.id],
                          seed=derive_seed(seed, "solver", name, inst.id))
            elapsed = perf_counter() - t0
            results = evaluate_solution(solution, inst, n_realizations, seed)
            return BenchmarkItem(name, inst.id, solution, tuple(results), elapsed)
        except Exception as exc:  # a broken solver must not sink the run
            return BenchmarkItem(name, inst.id, None, (), 0.0,
                                 error=f"{type(exc).__name__}: {exc}")

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_item, work))
    return [run_item(task) for task in work]


def aggregate_metrics(items, instances) -> "list[MetricsReport]":
    """Reduce items to per-(solver, size, type, depots) table rows.

    Failed items count as infeasible and are excluded from cost and runtime
    means; a group with no successful item reports NaN costs.
    """
    by_id = {inst.id: inst for inst in instances}
    groups = {}
    for item in items:
        inst = by_id[item.instance_id]
        key = (item.solver_name, inst.num_customers, inst.problem_type, inst.depot_config)
        groups.setdefault(key, []).append((item, inst))
    reports = []
    for key in sorted(groups):
        rows = groups[key]
        costs, spreads, rates, runtimes, flags = [], [], [], [], []
        for item, inst in rows:
            if item.error is not None or not item.results:
                flags.append(False)
                continue
            sampled = [r.total_cost for r in item.results]
            costs.append(fmean(sampled))
            spreads.append(robustness(sampled))
            rates.append(cvr(item.results, inst.num_customers))
            runtimes.append(item.runtime_seconds)
            flags.append(all(r.feasible for r in item.results))
        reports.append(MetricsReport(
            solver_name=key[0], n_customers=key[1], problem_type=key[2],
            depot_config=key[3], num_instances=len(rows),
            total_cost=fmean(costs) if costs else float("nan"),
            cvr_percent=fmean(rates) if rates else float("nan"),
            feasibility=sum(flags) / len(flags),
            runtime_seconds=fmean(runtimes) if runtimes else float("nan"),
            robustness=fmean(spreads) if spreads else float("nan")))
    return reports


def run_benchmark(solvers, instances, n_realizations: int = 5,
                  seed: int = 0) -> "list[MetricsReport]":
    """Plan once per (solver, instance), evaluate realizations, aggregate."""
    items = benchmark_items(solvers, instances, n_realizations, seed)
    return aggregate_metrics(items, instances)
