import csv
import json
import math

import pytest

from svrp.core import InvariantError, Route, SchemaError, Solution
from svrp.evaluation import MetricsReport
from svrp.fileio import (
    REPORT_COLUMNS,
    export_cvrplib,
    parse_generator_config,
    parse_instance,
    parse_report,
    parse_solution,
    read_generator_config,
    read_instance,
    read_report,
    read_solution,
    report_rows,
    serialize_instance,
    serialize_report,
    serialize_solution,
    write_instance,
    write_report,
    write_report_csv,
    write_solution,
)
from svrp.generator import GeneratorConfig, generate_instance

from conftest import make_instance

PROBLEM_TYPES = ("cvrp", "twvrp")
DEPOT_CONFIGS = ("single", "multi_random", "depots_equal_city")


def sample_instance(problem_type="twvrp", seed=0):
    return generate_instance(GeneratorConfig(n_customers=12, problem_type=problem_type,
                                             depot_config="multi_random", seed=seed))


def test_instance_round_trip_identity():
    inst = sample_instance()
    data = serialize_instance(inst)
    back = parse_instance(data)
    assert back == inst
    assert serialize_instance(back) == data


def test_instance_round_trip_hand_built():
    inst = make_instance([(10.5, 3.25, 4, (600, 90)), (0.125, 7.0, 2, (480, 240))],
                         depots=((1.0, 2.0), (3.0, 4.0)), capacity=6, num_vehicles=2,
                         depot_config="multi_random")
    assert parse_instance(serialize_instance(inst)) == inst


def test_instance_serialization_is_line_oriented_json():
    data = serialize_instance(sample_instance())
    assert data.endswith(b"\n")
    doc = json.loads(data)
    assert doc["format_version"] == 1
    assert doc["kind"] == "instance"


def test_parse_rejects_missing_field():
    doc = json.loads(serialize_instance(sample_instance()))
    del doc["fleet"]
    with pytest.raises(SchemaError, match="fleet"):
        parse_instance(json.dumps(doc))


def test_parse_rejects_unknown_fields():
    doc = json.loads(serialize_instance(sample_instance()))
    doc["surprise"] = 1
    with pytest.raises(SchemaError, match="surprise"):
        parse_instance(json.dumps(doc))
    doc = json.loads(serialize_instance(sample_instance()))
    doc["customers"][0]["priority"] = 3
    with pytest.raises(SchemaError, match=r"customers\[0\].*priority"):
        parse_instance(json.dumps(doc))


def test_parse_rejects_version_and_kind_mismatch():
    doc = json.loads(serialize_instance(sample_instance()))
    doc["format_version"] = 2
    with pytest.raises(SchemaError, match="format_version"):
        parse_instance(json.dumps(doc))
    doc = json.loads(serialize_instance(sample_instance()))
    doc["kind"] = "solution"
    with pytest.raises(SchemaError, match="kind"):
        parse_instance(json.dumps(doc))


def test_parse_rejects_wrong_types():
    doc = json.loads(serialize_instance(sample_instance()))
    doc["extent"] = True
    with pytest.raises(SchemaError, match="extent"):
        parse_instance(json.dumps(doc))
    doc = json.loads(serialize_instance(sample_instance()))
    doc["customers"][0]["demand"] = 2.5
    with pytest.raises(SchemaError, match="demand"):
        parse_instance(json.dumps(doc))


def test_parse_surfaces_domain_violations():
    doc = json.loads(serialize_instance(sample_instance()))
    doc["customers"][0]["demand"] = 0
    with pytest.raises(InvariantError):
        parse_instance(json.dumps(doc))


def test_parse_rejects_garbage_json():
    with pytest.raises(SchemaError, match="JSON"):
        parse_instance(b"{nope")
    with pytest.raises(SchemaError):
        parse_instance(b"[1, 2]\n")


def test_instance_file_round_trip(tmp_path):
    inst = sample_instance(problem_type="cvrp", seed=5)
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_solution_round_trip():
    inst = make_instance([(10, 0, 1), (20, 0, 1)], num_vehicles=2)
    sol = Solution(routes=(Route(0, (2,)), Route(0, (1,))), solver_name="tabu",
                   wall_time=0.125, plan_feasible=False)
    record = parse_solution(serialize_solution(sol, inst.id), instance=inst)
    assert record.solution == sol
    assert record.instance_id == inst.id


def test_solution_plan_feasible_defaults_true():
    inst = make_instance([(10, 0, 1)])
    sol = Solution(routes=(Route(0, (1,)),), solver_name="nn")
    doc = json.loads(serialize_solution(sol, inst.id))
    del doc["plan_feasible"]
    assert parse_solution(json.dumps(doc)).solution.plan_feasible is True


def test_solution_instance_id_mismatch():
    inst = make_instance([(10, 0, 1)])
    data = serialize_solution(Solution(routes=(Route(0, (1,)),), solver_name="nn"),
                              "someone-else")
    with pytest.raises(SchemaError, match="instance_id"):
        parse_solution(data, instance=inst)
    # without an instance the id is taken at face value
    assert parse_solution(data).instance_id == "someone-else"


def test_solution_validated_against_instance():
    inst = make_instance([(10, 0, 1), (20, 0, 1)])
    missing = Solution(routes=(Route(0, (1,)),), solver_name="nn")
    data = serialize_solution(missing, inst.id)
    with pytest.raises(InvariantError):
        parse_solution(data, instance=inst)


def test_solution_file_round_trip(tmp_path):
    inst = make_instance([(10, 0, 1)])
    sol = Solution(routes=(Route(0, (1,)),), solver_name="aco", wall_time=1.5)
    path = tmp_path / "sol.json"
    write_solution(sol, inst.id, path)
    assert read_solution(path, instance=inst).solution == sol


def test_report_round_trip_with_nan(tmp_path):
    rows = [
        MetricsReport("nn2opt", 50, "cvrp", "single", 4, 123.456, 1.25, 0.75,
                      0.0125, 9.5),
        MetricsReport("tabu", 50, "twvrp", "multi_random", 4, float("nan"),
                      float("nan"), 0.0, float("nan"), float("nan")),
    ]
    path = tmp_path / "report.json"
    write_report(rows, path, n_realizations=5, seed=42)
    back, meta = read_report(path)
    assert meta == {"n_realizations": 5, "seed": 42}
    assert back[0] == rows[0]
    assert back[1].solver_name == "tabu"
    assert math.isnan(back[1].total_cost) and math.isnan(back[1].robustness)
    assert back[1].feasibility == 0.0


def test_report_nan_becomes_json_null():
    row = MetricsReport("nn2opt", 10, "cvrp", "single", 1, float("nan"),
                        float("nan"), 0.0, float("nan"), float("nan"))
    doc = json.loads(serialize_report([row], 5, 0))
    assert doc["rows"][0]["total_cost"] is None
    assert doc["rows"][0]["feasibility"] == 0.0


def test_report_parse_rejects_unknown_row_field():
    doc = json.loads(serialize_report(
        [MetricsReport("nn2opt", 10, "cvrp", "single", 1, 1.0, 0.0, 1.0, 0.0, 0.0)],
        5, 0))
    doc["rows"][0]["extra"] = 1
    with pytest.raises(SchemaError, match=r"rows\[0\].*extra"):
        parse_report(json.dumps(doc))


def test_report_rows_formatting():
    rows = report_rows([
        MetricsReport("nn2opt", 50, "cvrp", "single", 4, 123.4567, 1.25, 0.75,
                      0.01234, 9.5),
        MetricsReport("tabu", 50, "cvrp", "single", 4, float("nan"), float("nan"),
                      0.0, float("nan"), float("nan")),
    ])
    assert rows[0] == ["nn2opt", "50", "cvrp", "single", "4", "123.457", "1.250",
                       "0.750", "0.0123", "9.500"]
    assert rows[1][5] == "" and rows[1][9] == ""
    assert len(REPORT_COLUMNS) == len(rows[0])


def test_report_csv_companion(tmp_path):
    reports = [MetricsReport("nn2opt", 10, "cvrp", "single", 2, 100.0, 0.0, 1.0,
                             0.5, 2.0)]
    path = tmp_path / "report.csv"
    write_report_csv(reports, path)
    with open(path, newline="", encoding="utf-8") as fh:
        parsed = list(csv.reader(fh))
    assert parsed[0] == list(REPORT_COLUMNS)
    assert parsed[1][0] == "nn2opt"
    assert parsed[1][5] == "100.000"
    assert len(parsed) == 2


def test_generator_config_parsing():
    cfg = parse_generator_config(json.dumps({
        "n_customers": 40,
        "problem_type": "twvrp",
        "depot_config": "multi_random",
        "seed": 7,
        "stochastic": {"sigma_base": 0.4},
        "tw_params": {"w_max": 120.0, "w_max_com": 120.0},
    }))
    assert cfg.n_customers == 40
    assert cfg.problem_type == "twvrp"
    assert cfg.stochastic.sigma_base == 0.4
    assert cfg.stochastic.alpha == GeneratorConfig(n_customers=1).stochastic.alpha
    assert cfg.tw_params.w_max == 120.0


def test_generator_config_rejections():
    with pytest.raises(SchemaError, match="n_customers"):
        parse_generator_config("{}")
    with pytest.raises(SchemaError, match="mystery"):
        parse_generator_config(json.dumps({"n_customers": 5, "mystery": 1}))
    with pytest.raises(SchemaError):
        parse_generator_config(json.dumps({"n_customers": 0}))
    with pytest.raises(SchemaError):
        parse_generator_config(json.dumps(
            {"n_customers": 5, "stochastic": {"bogus": 1.0}}))


def test_generator_config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"n_customers": 6, "seed": 3}), encoding="utf-8")
    cfg = read_generator_config(path)
    assert cfg == GeneratorConfig(n_customers=6, seed=3)


def test_cvrplib_export_layout():
    inst = make_instance([(10, 20, 3), (30, 40, 5)],
                         depots=((0.0, 0.0), (99.0, 99.0)), capacity=8,
                         num_vehicles=1, depot_config="multi_random")
    text = export_cvrplib(inst)
    lines = text.splitlines()
    assert lines[0] == f"NAME : {inst.id}"
    assert "TYPE : CVRP" in lines
    assert "DIMENSION : 3" in lines  # first depot only plus two customers
    assert "CAPACITY : 8" in lines
    coord = lines.index("NODE_COORD_SECTION")
    assert lines[coord + 1] == "1 0 0"
    assert lines[coord + 2] == "2 10 20"
    demand = lines.index("DEMAND_SECTION")
    assert lines[demand + 1] == "1 0"
    assert lines[demand + 2] == "2 3"
    assert lines[demand + 3] == "3 5"
    assert lines[-2:] == ["DEPOT_SECTION", "1"] or "EOF" in lines
    assert text.endswith("EOF\n")


def test_round_trip_fuzz_many_generated_instances():
    for seed in range(500):
        n = 1 + seed % 25
        cfg = GeneratorConfig(
            n_customers=n,
            problem_type=PROBLEM_TYPES[seed % 2],
            depot_config=DEPOT_CONFIGS[seed % 3],
            seed=seed,
        )
        inst = generate_instance(cfg)
        data = serialize_instance(inst)
        back = parse_instance(data)
        assert back == inst
        assert serialize_instance(back) == data
