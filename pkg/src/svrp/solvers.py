"""Baseline planners over the expected-travel-time matrix.

All planning is a priori: routes are fixed before any uncertainty resolves,
using expected leg times looked up at the hourly slice of a running clock
that starts at instance.start_time and waits at closed time windows.
Windows are soft during search (penalized lateness); capacity is hard in
every emitted solution.
"""

import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    ConstructionError,
    ExternalSolverError,
    Instance,
    InvariantError,
    Route,
    Solution,
)
from .stochastic import RandomStream, peak_kernel

PHEROMONE_FLOOR = 1e-12
HEURISTIC_FLOOR = 1e-6
IMPROVEMENT_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class PlanningMatrix:
    """Expected leg minutes for every node pair at 24 hourly departure slices."""

    entries: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.entries.shape[1]

    def lookup(self, a: int, b: int, t: float) -> float:
        """Expected minutes from node a to b departing at minute-of-day t."""
        return float(self.entries[int(t // 60.0) % 24, a, b])


def build_planning_matrix(instance: Instance) -> PlanningMatrix:
    """Evaluate the expected travel time for all node pairs at each hour."""
    p = instance.stochastic
    locs = list(instance.depots) + [c.location for c in instance.customers]
    coords = np.array([[loc.x, loc.y] for loc in locs])
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    base = 60.0 * dist / p.speed_v
    fdist = 1.0 - np.exp(-dist / p.lambda_dist)
    n = len(locs)
    entries = np.empty((24, n, n))
    for h in range(24):
        k = float(peak_kernel(float(h), p))
        ftime = p.beta_base + p.gamma_amp * k
        mu = p.mu_base + p.delta * k
        sigma = p.sigma_base + p.epsilon * k
        mean_mult = math.exp(mu + 0.5 * sigma * sigma)
        entries[h] = base + (p.alpha * ftime * fdist) * mean_mult
    if not np.isfinite(entries).all():
        raise InvariantError("planning matrix contains non-finite entries")
    return PlanningMatrix(entries=entries)


@dataclass(frozen=True)
class RoutePlan:
    """Planned outcome of one route: travel minutes, lateness minutes, load."""

    travel: float
    lateness: float
    load: int


def plan_route(instance: Instance, matrix: PlanningMatrix, depot_index: int,
               sequence) -> RoutePlan:
    """Simulate one route on the expected matrix with the running clock."""
    entries = matrix.entries
    offset = instance.num_depots
    t = instance.start_time
    node = depot_index
    travel = 0.0
    lateness = 0.0
    load = 0
    for cid in sequence:
        nxt = offset + cid - 1
        leg = float(entries[int(t // 60.0) % 24, node, nxt])
        travel += leg
        arrival = t + leg
        c = instance.customers[cid - 1]
        w = c.window
        if w is not None:
            if arrival > w.end:
                lateness += arrival - w.end
            elif arrival < w.start:
                arrival = w.start
        t = arrival
        load += c.demand
        node = nxt
    travel += float(entries[int(t // 60.0) % 24, node, depot_index])
    return RoutePlan(travel=travel, lateness=lateness, load=load)


def planned_cost(solution: Solution, instance: Instance, matrix: PlanningMatrix) -> float:
    """Total expected travel minutes of a plan."""
    return sum(plan_route(instance, matrix, r.depot_index, r.customers).travel
               for r in solution.routes)


def penalized_cost(solution: Solution, instance: Instance, matrix: PlanningMatrix,
                   lam: float) -> float:
    """Cost plus lam times (capacity excess units + lateness minutes)."""
    cost = 0.0
    penalty = 0.0
    for r in solution.routes:
        plan = plan_route(instance, matrix, r.depot_index, r.customers)
        cost += plan.travel
        penalty += plan.lateness + max(0, plan.load - instance.fleet.capacity)
    return cost + lam * penalty


def nearest_neighbor_construct(instance: Instance, matrix: PlanningMatrix) -> Solution:
    """Greedy construction: vehicles take depots round-robin and repeatedly
    visit the nearest (by expected time) unvisited customer that still fits."""
    entries = matrix.entries
    offset = instance.num_depots
    demands = [c.demand for c in instance.customers]
    windows = [c.window for c in instance.customers]
    unvisited = list(range(1, instance.num_customers + 1))
    routes = []
    for v in range(instance.fleet.num_vehicles):
        if not unvisited:
            break
        depot = v % instance.num_depots
        node = depot
        t = instance.start_time
        remaining = instance.fleet.capacity
        seq = []
        while True:
            sliced = entries[int(t // 60.0) % 24]
            best_cid = None
            best_leg = math.inf
            for cid in unvisited:
                if demands[cid - 1] <= remaining:
                    leg = sliced[node, offset + cid - 1]
                    if leg < best_leg:
                        best_leg = leg
                        best_cid = cid
            if best_cid is None:
                break
            unvisited.remove(best_cid)
            seq.append(best_cid)
            arrival = t + float(best_leg)
            w = windows[best_cid - 1]
            if w is not None and arrival < w.start:
                arrival = w.start
            t = arrival
            node = offset + best_cid - 1
            remaining -= demands[best_cid - 1]
        if seq:
            routes.append(Route(depot_index=depot, customers=tuple(seq)))
    if unvisited:
        raise ConstructionError(
            f"{len(unvisited)} customers could not be packed into "
            f"{instance.fleet.num_vehicles} vehicles")
    solution = Solution(routes=tuple(routes), solver_name="nn")
    solution.validate(instance)
    return solution


def two_opt_improve(solution: Solution, instance: Instance,
                    matrix: PlanningMatrix) -> Solution:
    """Best-improving intra-route segment reversals until no move helps."""
    new_routes = []
    for route in solution.routes:
        seq = list(route.customers)
        cost = plan_route(instance, matrix, route.depot_index, seq).travel
        while True:
            best_seq = None
            best_cost = cost
            for i in range(len(seq) - 1):
                for j in range(i + 1, len(seq)):
                    cand = seq[:i] + seq[i:j + 1][::-1] + seq[j + 1:]
                    c = plan_route(instance, matrix, route.depot_index, cand).travel
                    if c < best_cost - IMPROVEMENT_EPS:
                        best_cost = c
                        best_seq = cand
            if best_seq is None:
                break
            seq = best_seq
            cost = best_cost
        new_routes.append(Route(depot_index=route.depot_index, customers=tuple(seq)))
    return Solution(routes=tuple(new_routes), solver_name=solution.solver_name,
                    wall_time=solution.wall_time, plan_feasible=solution.plan_feasible)


@dataclass(frozen=True)
class TabuParams:
    """Tabu search controls; max_iters of None runs until the move budget
    (move_budget_per_customer * n evaluations) is spent."""

    tenure: int = 15
    max_iters: "int | None" = None
    lambda_init: float = 10.0
    lambda_up: float = 2.0
    lambda_down: float = 0.5
    move_budget_per_customer: int = 500

    def __post_init__(self):
        if self.tenure < 1:
            raise ValueError(f"tenure must be >= 1, got {self.tenure}")
        if self.lambda_init <= 0.0:
            raise ValueError(f"lambda_init must be positive, got {self.lambda_init}")
        if not (self.lambda_up >= 1.0 and 0.0 < self.lambda_down <= 1.0):
            raise ValueError("lambda multipliers must satisfy up >= 1 and 0 < down <= 1")


class AdaptivePenalty:
    """Penalty weight that doubles after 5 straight infeasible incumbents
    and halves after 5 straight feasible ones (multipliers configurable)."""

    STREAK = 5

    def __init__(self, params: TabuParams):
        self.value = params.lambda_init
        self._up = params.lambda_up
        self._down = params.lambda_down
        self._feasible = 0
        self._infeasible = 0

    def update(self, feasible: bool) -> float:
        if feasible:
            self._feasible += 1
            self._infeasible = 0
            if self._feasible >= self.STREAK:
                self.value *= self._down
                self._feasible = 0
        else:
            self._infeasible += 1
            self._feasible = 0
            if self._infeasible >= self.STREAK:
                self.value *= self._up
                self._infeasible = 0
        return self.value


def _solution_from(routes, depots, name, plan_feasible=True) -> Solution:
    kept = tuple(Route(depot_index=d, customers=tuple(seq))
                 for d, seq in zip(depots, routes) if seq)
    return Solution(routes=kept, solver_name=name, plan_feasible=plan_feasible)


def tabu_search(instance: Instance, matrix: PlanningMatrix,
                params: "TabuParams | None" = None,
                rng: "RandomStream | None" = None) -> Solution:
    """Penalty-guided tabu search over 2-opt reversals and relocations.

    Starts from the 2-opt-improved greedy plan, takes the best non-tabu
    neighbor each iteration (aspiration admits tabu moves that beat the best
    score seen), and adapts the penalty weight to the feasibility streak.
    Returns the best feasible plan found, else the best capacity-respecting
    plan flagged infeasible. rng is accepted for signature symmetry; the
    search itself is deterministic.
    """
    del rng
    params = params or TabuParams()
    cap = instance.fleet.capacity
    start = two_opt_improve(nearest_neighbor_construct(instance, matrix), instance, matrix)

    routes = [list(r.customers) for r in start.routes]
    depots = [r.depot_index for r in start.routes]
    plans = [plan_route(instance, matrix, d, seq) for d, seq in zip(depots, routes)]

    def totals():
        cost = sum(p.travel for p in plans)
        penalty = sum(p.lateness + max(0, p.load - cap) for p in plans)
        return cost, penalty

    cost, penalty = totals()
    control = AdaptivePenalty(params)
    lam = control.value
    best_score = cost + lam * penalty

    best_feasible = None
    best_feasible_cost = math.inf
    if penalty == 0.0:
        best_feasible = [list(seq) for seq in routes]
        best_feasible_depots = list(depots)
        best_feasible_cost = cost
    # fallback compared at lambda_init so the ordering is stable across
    # penalty-weight changes
    fallback = [list(seq) for seq in routes]
    fallback_depots = list(depots)
    fallback_score = cost + params.lambda_init * penalty

    tabu = {}
    budget = params.move_budget_per_customer * instance.num_customers
    iteration = 0
    while budget > 0 and (params.max_iters is None or iteration < params.max_iters):
        best_move = None
        best_move_score = math.inf

        def consider(move, attr, new_score):
            nonlocal best_move, best_move_score
            expires = tabu.get(attr, -1)
            if expires > iteration and new_score >= best_score - IMPROVEMENT_EPS:
                return
            if new_score < best_move_score - IMPROVEMENT_EPS:
                best_move = (move, attr)
                best_move_score = new_score

        for r, seq in enumerate(routes):
            others_cost = cost - plans[r].travel
            others_pen = penalty - plans[r].lateness - max(0, plans[r].load - cap)
            for i in range(len(seq) - 1):
                for j in range(i + 1, len(seq)):
                    cand = seq[:i] + seq[i:j + 1][::-1] + seq[j + 1:]
                    plan = plan_route(instance, matrix, depots[r], cand)
                    budget -= 1
                    score = (others_cost + plan.travel
                             + lam * (others_pen + plan.lateness + max(0, plan.load - cap)))
                    attr = (min(seq[i], seq[j]), max(seq[i], seq[j]))
                    consider(("rev", r, i, j), attr, score)

        for r1, seq1 in enumerate(routes):
            base1_travel = plans[r1].travel
            base1_pen = plans[r1].lateness + max(0, plans[r1].load - cap)
            for p, cid in enumerate(seq1):
                removed = seq1[:p] + seq1[p + 1:]
                plan1 = plan_route(instance, matrix, depots[r1], removed)
                budget -= 1
                pen1 = plan1.lateness + max(0, plan1.load - cap)
                for q in range(len(removed) + 1):
                    if q == p:
                        continue
                    cand = removed[:q] + [cid] + removed[q:]
                    plan = plan_route(instance, matrix, depots[r1], cand)
                    budget -= 1
                    score = (cost - base1_travel + plan.travel
                             + lam * (penalty - base1_pen + plan.lateness
                                      + max(0, plan.load - cap)))
                    pred = cand[q - 1] if q > 0 else 0
                    consider(("rel", r1, p, r1, q),
                             (min(cid, pred), max(cid, pred)), score)
                for r2 in range(len(routes) + 1):
                    if r2 == r1:
                        continue
                    if r2 == len(routes):
                        if len(routes) >= instance.fleet.num_vehicles:
                            continue
                        target = []
                        depot2 = len(routes) % instance.num_depots
                        base2_travel = 0.0
                        base2_pen = 0.0
                    else:
                        target = routes[r2]
                        depot2 = depots[r2]
                        base2_travel = plans[r2].travel
                        base2_pen = plans[r2].lateness + max(0, plans[r2].load - cap)
                    for q in range(len(target) + 1):
                        cand2 = target[:q] + [cid] + target[q:]
                        plan2 = plan_route(instance, matrix, depot2, cand2)
                        budget -= 1
                        score = (cost - base1_travel - base2_travel
                                 + plan1.travel + plan2.travel
                                 + lam * (penalty - base1_pen - base2_pen + pen1
                                          + plan2.lateness + max(0, plan2.load - cap)))
                        pred = cand2[q - 1] if q > 0 else 0
                        consider(("rel", r1, p, r2, q),
                                 (min(cid, pred), max(cid, pred)), score)

        if best_move is None:
            break
        move, attr = best_move
        if move[0] == "rev":
            _, r, i, j = move
            routes[r][i:j + 1] = routes[r][i:j + 1][::-1]
            plans[r] = plan_route(instance, matrix, depots[r], routes[r])
        else:
            _, r1, p, r2, q = move
            cid = routes[r1].pop(p)
            if r2 == len(routes):
                depot2 = len(routes) % instance.num_depots
                routes.append([cid])
                depots.append(depot2)
                plans.append(plan_route(instance, matrix, depot2, routes[-1]))
            else:
                routes[r2].insert(q, cid)
                plans[r2] = plan_route(instance, matrix, depots[r2], routes[r2])
            plans[r1] = plan_route(instance, matrix, depots[r1], routes[r1])
            if not routes[r1]:
                del routes[r1], depots[r1], plans[r1]
        tabu[attr] = iteration + params.tenure

        cost, penalty = totals()
        score = cost + lam * penalty
        if score < best_score:
            best_score = score
        if penalty == 0.0 and cost < best_feasible_cost - IMPROVEMENT_EPS:
            best_feasible = [list(seq) for seq in routes]
            best_feasible_depots = list(depots)
            best_feasible_cost = cost
        capacity_ok = all(p.load <= cap for p in plans)
        stable = cost + params.lambda_init * penalty
        if capacity_ok and stable < fallback_score - IMPROVEMENT_EPS:
            fallback = [list(seq) for seq in routes]
            fallback_depots = list(depots)
            fallback_score = stable
        lam = control.update(penalty == 0.0)
        iteration += 1

    if best_feasible is not None:
        solution = _solution_from(best_feasible, best_feasible_depots, "tabu")
    else:
        solution = _solution_from(fallback, fallback_depots, "tabu", plan_feasible=False)
    solution.validate(instance)
    return solution


@dataclass(frozen=True)
class AcoParams:
    """Ant-colony controls matching the usual pheromone/heuristic weighting."""

    num_ants: int = 50
    evaporation: float = 0.5
    alpha_pher: float = 1.0
    beta_heur: float = 2.0
    deposit: float = 1.0
    iterations: int = 100

    def __post_init__(self):
        if not 0.0 < self.evaporation < 1.0:
            raise ValueError(f"evaporation must lie in (0, 1), got {self.evaporation}")
        if self.num_ants < 1:
            raise ValueError(f"num_ants must be >= 1, got {self.num_ants}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


def pheromone_update(tau: np.ndarray, tours, lengths, params: AcoParams) -> np.ndarray:
    """Evaporate every trail, then deposit Q/L on each edge of each ant tour."""
    out = (1.0 - params.evaporation) * tau
    for edges, length in zip(tours, lengths):
        share = params.deposit / max(length, HEURISTIC_FLOOR)
        for a, b in edges:
            out[a, b] += share
    np.maximum(out, PHEROMONE_FLOOR, out=out)
    return out


def _construct_ant(instance, matrix, tau, params, g):
    """One ant builds a fleet-bounded plan, favoring candidates whose window
    is still reachable; returns None when it strands customers it can no
    longer pack into the fleet."""
    entries = matrix.entries
    offset = instance.num_depots
    demands = [c.demand for c in instance.customers]
    windows = [c.window for c in instance.customers]
    cap = instance.fleet.capacity
    unvisited = list(range(1, instance.num_customers + 1))
    routes = []
    edges = []
    total = 0.0
    while unvisited:
        if len(routes) >= instance.fleet.num_vehicles:
            return None
        depot = len(routes) % instance.num_depots
        node = depot
        t = instance.start_time
        remaining = cap
        seq = []
        while True:
            sliced = entries[int(t // 60.0) % 24]
            fits = [cid for cid in unvisited if demands[cid - 1] <= remaining]
            # prefer candidates whose window is still reachable; when every
            # window has closed fall back to capacity-only (lateness is soft)
            feasible = [cid for cid in fits
                        if windows[cid - 1] is None
                        or t + sliced[node, offset + cid - 1] <= windows[cid - 1].end]
            if not feasible:
                feasible = fits
            if not feasible:
                break
            idx = np.array([offset + cid - 1 for cid in feasible])
            eta = 1.0 / np.maximum(sliced[node, idx], HEURISTIC_FLOOR)
            weights = (tau[node, idx] ** params.alpha_pher) * (eta ** params.beta_heur)
            total_w = float(weights.sum())
            pick = int(np.searchsorted(np.cumsum(weights), g.random() * total_w))
            pick = min(pick, len(feasible) - 1)
            cid = feasible[pick]
            nxt = offset + cid - 1
            leg = float(sliced[node, nxt])
            edges.append((node, nxt))
            total += leg
            arrival = t + leg
            w = windows[cid - 1]
            if w is not None and arrival < w.start:
                arrival = w.start
            t = arrival
            node = nxt
            remaining -= demands[cid - 1]
            unvisited.remove(cid)
            seq.append(cid)
        edges.append((node, depot))
        total += float(entries[int(t // 60.0) % 24, node, depot])
        routes.append(Route(depot_index=depot, customers=tuple(seq)))
    return routes, edges, total


def aco_solve(instance: Instance, matrix: PlanningMatrix,
              params: "AcoParams | None" = None,
              rng: "RandomStream | None" = None) -> Solution:
    """Ant-colony search: ants sample next stops by pheromone and inverse
    expected time, the colony reinforces tour edges, best plan wins."""
    params = params or AcoParams()
    stream = rng or RandomStream(0, "aco")
    g = stream.rng
    n_nodes = matrix.num_nodes
    tau = np.ones((n_nodes, n_nodes))
    best_routes = None
    best_length = math.inf
    for _ in range(params.iterations):
        tours = []
        lengths = []
        for _ant in range(params.num_ants):
            built = _construct_ant(instance, matrix, tau, params, g)
            if built is None:
                continue
            routes, edges, total = built
            tours.append(edges)
            lengths.append(total)
            if total < best_length:
                best_length = total
                best_routes = routes
        tau = pheromone_update(tau, tours, lengths, params)
    if best_routes is None:
        raise ConstructionError("no ant produced a fleet-feasible plan")
    solution = Solution(routes=tuple(r for r in best_routes if r.customers),
                        solver_name="aco")
    solution.validate(instance)
    return solution


def solve_nn2opt(instance: Instance, matrix: PlanningMatrix, seed: int = 0,
                 **_ignored) -> Solution:
    """Greedy construction plus 2-opt, timed."""
    t0 = time.perf_counter()
    solution = two_opt_improve(nearest_neighbor_construct(instance, matrix),
                               instance, matrix)
    elapsed = time.perf_counter() - t0
    return Solution(routes=solution.routes, solver_name="nn2opt", wall_time=elapsed)


def solve_tabu(instance: Instance, matrix: PlanningMatrix, seed: int = 0,
               params: "TabuParams | None" = None, **_ignored) -> Solution:
    t0 = time.perf_counter()
    solution = tabu_search(instance, matrix, params=params,
                           rng=RandomStream(seed, "tabu"))
    elapsed = time.perf_counter() - t0
    return Solution(routes=solution.routes, solver_name="tabu", wall_time=elapsed,
                    plan_feasible=solution.plan_feasible)


def solve_aco(instance: Instance, matrix: PlanningMatrix, seed: int = 0,
              params: "AcoParams | None" = None, **_ignored) -> Solution:
    t0 = time.perf_counter()
    solution = aco_solve(instance, matrix, params=params,
                         rng=RandomStream(seed, "aco"))
    elapsed = time.perf_counter() - t0
    return Solution(routes=solution.routes, solver_name="aco", wall_time=elapsed)


SOLVERS = {
    "nn2opt": solve_nn2opt,
    "tabu": solve_tabu,
    "aco": solve_aco,
}


def external_solve(instance: Instance, command, workdir: "str | None" = None) -> Solution:
    """Adapter seam for third-party solvers.

    Writes the instance to a file, invokes `command instance_path solution_path`,
    and validates the solution the subprocess wrote.
    """
    from . import fileio

    if isinstance(command, str):
        command = shlex.split(command)
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        instance_path = Path(tmp) / "instance.json"
        solution_path = Path(tmp) / "solution.json"
        fileio.write_instance(instance, instance_path)
        proc = subprocess.run([*command, str(instance_path), str(solution_path)],
                              capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExternalSolverError(
                f"external solver exited {proc.returncode}: {proc.stderr.strip()[:500]}")
        if not solution_path.exists():
            raise ExternalSolverError("external solver wrote no solution file")
        solution = fileio.read_solution(solution_path, instance=instance).solution
    elapsed = time.perf_counter() - t0
    return Solution(routes=solution.routes, solver_name=solution.solver_name,
                    wall_time=elapsed, plan_feasible=solution.plan_feasible)
