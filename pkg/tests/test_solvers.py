import itertools
import math

import numpy as np
import pytest

from svrp.core import Route, Solution, StochasticParams
from svrp.solvers import (
    AcoParams,
    AdaptivePenalty,
    TabuParams,
    aco_solve,
    build_planning_matrix,
    external_solve,
    nearest_neighbor_construct,
    penalized_cost,
    pheromone_update,
    plan_route,
    planned_cost,
    solve_nn2opt,
    tabu_search,
    two_opt_improve,
)
from svrp.stochastic import RandomStream, expected_travel_time

from conftest import DETERMINISTIC, make_instance


def brute_force_optimum(instance, matrix):
    """Exhaustive single-route oracle over all visit orders."""
    ids = [c.id for c in instance.customers]
    return min(plan_route(instance, matrix, 0, perm).travel
               for perm in itertools.permutations(ids))


def test_matrix_shape_and_diagonal():
    inst = make_instance([(10, 0, 1), (0, 10, 1)], stochastic=StochasticParams())
    matrix = build_planning_matrix(inst)
    assert matrix.entries.shape == (24, 3, 3)
    assert (np.diagonal(matrix.entries, axis1=1, axis2=2) == 0.0).all()
    assert (matrix.entries >= 0.0).all()
    assert np.isfinite(matrix.entries).all()


def test_matrix_agrees_with_scalar_expectation():
    inst = make_instance([(30, 40, 1), (70, 10, 1)], stochastic=StochasticParams())
    matrix = build_planning_matrix(inst)
    nodes = [inst.depots[0]] + [c.location for c in inst.customers]
    for h in (0, 8, 13, 21):
        for a in range(3):
            for b in range(3):
                want = expected_travel_time(nodes[a], nodes[b], 60.0 * h,
                                            inst.stochastic)
                assert matrix.entries[h, a, b] == pytest.approx(want, rel=1e-12)


def test_matrix_lookup_uses_hour_slice():
    inst = make_instance([(50, 0, 1)], stochastic=StochasticParams())
    matrix = build_planning_matrix(inst)
    assert matrix.lookup(0, 1, 480.0) == matrix.lookup(0, 1, 539.9)
    assert matrix.lookup(0, 1, 480.0) == matrix.entries[8, 0, 1]
    assert matrix.lookup(0, 1, 1500.0) == matrix.entries[1, 0, 1]  # wraps midnight


def test_nn_single_customer():
    inst = make_instance([(10, 0, 1)])
    sol = nearest_neighbor_construct(inst, build_planning_matrix(inst))
    assert [r.customers for r in sol.routes] == [(1,)]


def test_nn_collinear_greedy_order():
    inst = make_instance([(10, 0, 1), (20, 0, 1), (30, 0, 1)])
    sol = nearest_neighbor_construct(inst, build_planning_matrix(inst))
    assert [r.customers for r in sol.routes] == [(1, 2, 3)]


def test_nn_capacity_forces_singletons():
    inst = make_instance([(10, 0, 1), (20, 0, 1), (30, 0, 1), (40, 0, 1)],
                         capacity=1, num_vehicles=4)
    sol = nearest_neighbor_construct(inst, build_planning_matrix(inst))
    assert len(sol.routes) == 4
    assert all(len(r.customers) == 1 for r in sol.routes)


def test_nn_round_robin_depots():
    inst = make_instance([(0, 10, 1), (100, 10, 1)], depots=((0, 0), (100, 0)),
                         capacity=1, num_vehicles=2, depot_config="multi_random")
    sol = nearest_neighbor_construct(inst, build_planning_matrix(inst))
    assert [r.depot_index for r in sol.routes] == [0, 1]
    # each vehicle grabs the customer nearest its own depot
    assert sol.routes[0].customers == (1,)
    assert sol.routes[1].customers == (2,)


def test_two_opt_uncrosses_square():
    # depot (0,0); crossing tour (1,1)->(1,0)->(0,1) has cost 1.5*(2+2*sqrt(2))
    inst = make_instance([(1, 1, 1), (1, 0, 1), (0, 1, 1)])
    matrix = build_planning_matrix(inst)
    crossed = Solution(routes=(Route(0, (1, 2, 3)),), solver_name="x")
    start = planned_cost(crossed, inst, matrix)
    assert start == pytest.approx(1.5 * (2.0 + 2.0 * math.sqrt(2.0)), rel=1e-12)
    improved = two_opt_improve(crossed, inst, matrix)
    cost = planned_cost(improved, inst, matrix)
    assert cost == pytest.approx(6.0, rel=1e-12)  # unit-square perimeter at 40 km/h
    assert cost == pytest.approx(brute_force_optimum(inst, matrix), rel=1e-12)


def test_two_opt_leaves_optimal_triangle_alone():
    inst = make_instance([(10, 0, 1), (10, 10, 1)])
    matrix = build_planning_matrix(inst)
    optimal = Solution(routes=(Route(0, (1, 2)),), solver_name="x")
    improved = two_opt_improve(optimal, inst, matrix)
    assert improved.routes == optimal.routes


def test_two_opt_never_beats_brute_force_and_never_regresses():
    for seed in range(10):
        g = RandomStream(seed, "two-opt-prop").rng
        n = int(g.integers(4, 9))
        coords = g.uniform(0, 100, (n, 2))
        inst = make_instance([(x, y, 1) for x, y in coords],
                             stochastic=StochasticParams())
        matrix = build_planning_matrix(inst)
        nn = nearest_neighbor_construct(inst, matrix)
        improved = two_opt_improve(nn, inst, matrix)
        nn_cost = planned_cost(nn, inst, matrix)
        cost = planned_cost(improved, inst, matrix)
        optimum = brute_force_optimum(inst, matrix)
        assert cost <= nn_cost + 1e-9
        assert cost >= optimum - 1e-9


def test_penalized_cost_equals_cost_when_feasible():
    inst = make_instance([(10, 0, 1), (20, 0, 1)])
    matrix = build_planning_matrix(inst)
    sol = nearest_neighbor_construct(inst, matrix)
    cost = planned_cost(sol, inst, matrix)
    assert penalized_cost(sol, inst, matrix, 10.0) == pytest.approx(cost, rel=1e-12)


def test_penalized_cost_counts_lateness_and_excess():
    # travel 60 min each way; window closes at 510 so lateness is 30;
    # demand 7 against capacity 5 adds 2 units of excess
    inst = make_instance([(40, 0, 7, (480, 30))], capacity=5, num_vehicles=2)
    matrix = build_planning_matrix(inst)
    sol = Solution(routes=(Route(0, (1,)),), solver_name="x")
    cost = planned_cost(sol, inst, matrix)
    assert cost == pytest.approx(120.0, rel=1e-12)
    assert penalized_cost(sol, inst, matrix, 10.0) == pytest.approx(
        cost + 10.0 * 32.0, rel=1e-12)


def test_penalized_cost_monotone_in_lambda():
    inst = make_instance([(40, 0, 7, (480, 30))], capacity=5, num_vehicles=2)
    matrix = build_planning_matrix(inst)
    sol = Solution(routes=(Route(0, (1,)),), solver_name="x")
    low = penalized_cost(sol, inst, matrix, 10.0)
    high = penalized_cost(sol, inst, matrix, 20.0)
    assert high > low


def test_adaptive_penalty_doubles_after_five_infeasible():
    control = AdaptivePenalty(TabuParams())
    for _ in range(4):
        control.update(False)
        assert control.value == 10.0
    control.update(False)
    assert control.value == 20.0
    # streak reset: five more needed for the next doubling
    for _ in range(4):
        control.update(False)
        assert control.value == 20.0
    control.update(False)
    assert control.value == 40.0


def test_adaptive_penalty_halves_after_five_feasible():
    control = AdaptivePenalty(TabuParams())
    for _ in range(5):
        control.update(True)
    assert control.value == 5.0


def test_adaptive_penalty_streak_interrupted():
    control = AdaptivePenalty(TabuParams())
    for _ in range(4):
        control.update(False)
    control.update(True)
    for _ in range(4):
        control.update(False)
    assert control.value == 10.0


def test_tabu_never_worse_than_nn2opt():
    for seed, ptype in ((0, "cvrp"), (1, "twvrp"), (2, "twvrp")):
        from svrp.generator import GeneratorConfig, generate_instance
        inst = generate_instance(GeneratorConfig(
            n_customers=12, problem_type=ptype, seed=seed))
        matrix = build_planning_matrix(inst)
        nn2opt = solve_nn2opt(inst, matrix)
        tabu = tabu_search(inst, matrix)
        assert penalized_cost(tabu, inst, matrix, 10.0) <= penalized_cost(
            nn2opt, inst, matrix, 10.0) + 1e-9


def test_tabu_deterministic():
    from svrp.generator import GeneratorConfig, generate_instance
    inst = generate_instance(GeneratorConfig(n_customers=15, problem_type="twvrp", seed=4))
    matrix = build_planning_matrix(inst)
    a = tabu_search(inst, matrix)
    b = tabu_search(inst, matrix)
    assert a.routes == b.routes


def test_tabu_respects_capacity_and_coverage():
    from svrp.generator import GeneratorConfig, generate_instance
    inst = generate_instance(GeneratorConfig(n_customers=30, seed=5))
    matrix = build_planning_matrix(inst)
    sol = tabu_search(inst, matrix)
    sol.validate(inst)  # raises on any violation


def test_pheromone_update_deposits_on_tour_edges():
    params = AcoParams()
    tau = np.ones((3, 3))
    out = pheromone_update(tau, [[(0, 1)]], [10.0], params)
    assert out[0, 1] == pytest.approx(0.6, rel=1e-12)  # 0.5 * 1 + 1/10
    assert out[1, 0] == pytest.approx(0.5, rel=1e-12)  # evaporation only
    assert out[2, 2] == pytest.approx(0.5, rel=1e-12)


def test_pheromone_floor_keeps_trails_positive():
    params = AcoParams()
    tau = np.full((2, 2), 1e-12)
    out = pheromone_update(tau, [], [], params)
    assert (out >= 1e-12).all()
    assert (out > 0.0).all()


def test_aco_high_beta_matches_nearest_neighbor():
    # geometric spacing: every greedy choice dominates by at least 3x,
    # so (1/3)^20 makes any other pick vanishingly unlikely
    inst = make_instance([(1, 0, 1), (3, 0, 1), (7, 0, 1), (15, 0, 1)])
    matrix = build_planning_matrix(inst)
    nn = nearest_neighbor_construct(inst, matrix)
    aco = aco_solve(inst, matrix,
                    params=AcoParams(num_ants=1, iterations=1, beta_heur=20.0),
                    rng=RandomStream(0, "aco"))
    assert [r.customers for r in aco.routes] == [r.customers for r in nn.routes]


def test_aco_deterministic_given_seed():
    from svrp.generator import GeneratorConfig, generate_instance
    inst = generate_instance(GeneratorConfig(n_customers=12, seed=6))
    matrix = build_planning_matrix(inst)
    params = AcoParams(num_ants=8, iterations=10)
    a = aco_solve(inst, matrix, params=params, rng=RandomStream(3, "aco"))
    b = aco_solve(inst, matrix, params=params, rng=RandomStream(3, "aco"))
    assert a.routes == b.routes


def test_aco_solution_validates():
    from svrp.generator import GeneratorConfig, generate_instance
    inst = generate_instance(GeneratorConfig(n_customers=20, problem_type="twvrp", seed=8))
    matrix = build_planning_matrix(inst)
    sol = aco_solve(inst, matrix, params=AcoParams(num_ants=10, iterations=5),
                    rng=RandomStream(1, "aco"))
    sol.validate(inst)


def test_solver_params_validate():
    with pytest.raises(ValueError):
        TabuParams(tenure=0)
    with pytest.raises(ValueError):
        TabuParams(lambda_init=0.0)
    with pytest.raises(ValueError):
        AcoParams(evaporation=1.0)
    with pytest.raises(ValueError):
        AcoParams(num_ants=0)


def test_external_solver_adapter(tmp_path):
    import sys
    stub = tmp_path / "stub_solver.py"
    stub.write_text(
        "import json, sys\n"
        "inst = json.load(open(sys.argv[1]))\n"
        "ids = [c['id'] for c in inst['customers']]\n"
        "doc = {'format_version': 1, 'kind': 'solution', 'instance_id': inst['id'],\n"
        "       'solver_name': 'stub', 'wall_time': 0.0, 'plan_feasible': True,\n"
        "       'routes': [{'depot_index': 0, 'customers': ids}]}\n"
        "json.dump(doc, open(sys.argv[2], 'w'))\n")
    inst = make_instance([(10, 0, 1), (20, 0, 1)])
    sol = external_solve(inst, [sys.executable, str(stub)])
    assert sol.solver_name == "stub"
    assert [r.customers for r in sol.routes] == [(1, 2)]


def test_external_solver_failure_raises(tmp_path):
    import sys
    from svrp.core import ExternalSolverError
    bad = tmp_path / "bad_solver.py"
    bad.write_text("import sys; sys.exit(3)\n")
    inst = make_instance([(10, 0, 1)])
    with pytest.raises(ExternalSolverError):
        external_solve(inst, [sys.executable, str(bad)])
