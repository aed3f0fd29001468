"""Versioned JSON formats for instances, solutions, and reports.

Writers emit canonical bytes: fixed field order, two-space indentation, all
reals rounded to 9 significant digits, trailing newline. Equal objects
therefore serialize byte-identically. Parsers are strict: unknown fields,
wrong types, and version mismatches are errors that name the field.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .core import (
    Customer,
    FleetSpec,
    Instance,
    Location,
    Route,
    SchemaError,
    Solution,
    StochasticParams,
    TimeWindow,
    TimeWindowParams,
    canonical_real,
)
from .evaluation import MetricsReport
from .generator import GeneratorConfig

FORMAT_VERSION = 1

_STOCHASTIC_FIELDS = (
    "speed_v", "alpha", "beta_base", "gamma_amp", "mu_morning", "mu_evening",
    "sigma_peak", "lambda_dist", "mu_base", "delta", "sigma_base", "epsilon",
    "lambda_scale", "mu_night", "sigma_acc", "accident_delay_min", "accident_delay_max",
)
_TW_FIELDS = (
    "res_morning_mean", "res_morning_sigma", "res_evening_mean", "res_evening_sigma",
    "com_mean", "com_sigma", "w_min", "w_max", "w_max_com", "residential_fraction",
)


def _check_keys(obj, required, optional, ctx):
    if not isinstance(obj, dict):
        raise SchemaError(f"{ctx}: expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in required and key not in optional:
            raise SchemaError(f"{ctx}: unknown field {key!r}")
    for key in required:
        if key not in obj:
            raise SchemaError(f"{ctx}: missing field {key!r}")


def _real(obj, key, ctx) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{ctx}.{key}: expected a number, got {value!r}")
    return float(value)


def _integer(obj, key, ctx) -> int:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{ctx}.{key}: expected an integer, got {value!r}")
    return value


def _string(obj, key, ctx) -> str:
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaError(f"{ctx}.{key}: expected a string, got {value!r}")
    return value


def _array(obj, key, ctx) -> list:
    value = obj[key]
    if not isinstance(value, list):
        raise SchemaError(f"{ctx}.{key}: expected an array, got {value!r}")
    return value


def _load_document(data, kind: str) -> dict:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(f"expected a JSON object, got {type(doc).__name__}")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"format_version: expected {FORMAT_VERSION}, got {version!r}")
    if doc.get("kind") != kind:
        raise SchemaError(f"kind: expected {kind!r}, got {doc.get('kind')!r}")
    return doc


def _dump(document: dict) -> bytes:
    return (json.dumps(document, indent=2, allow_nan=False) + "\n").encode("utf-8")


def _params_dict(params, names) -> dict:
    return {name: canonical_real(getattr(params, name)) for name in names}


def _location_dict(loc: Location) -> dict:
    return {"x": canonical_real(loc.x), "y": canonical_real(loc.y)}


def serialize_instance(instance: Instance) -> bytes:
    """Canonical instance document; equal instances give identical bytes."""
    customers = []
    for c in instance.customers:
        window = None
        if c.window is not None:
            window = {"start": canonical_real(c.window.start),
                      "length": canonical_real(c.window.length)}
        customers.append({
            "id": c.id,
            "x": canonical_real(c.location.x),
            "y": canonical_real(c.location.y),
            "demand": c.demand,
            "profile": c.profile,
            "window": window,
        })
    document = {
        "format_version": FORMAT_VERSION,
        "kind": "instance",
        "id": instance.id,
        "problem_type": instance.problem_type,
        "depot_config": instance.depot_config,
        "extent": canonical_real(instance.extent),
        "start_time": canonical_real(instance.start_time),
        "seed": instance.seed,
        "fleet": {"num_vehicles": instance.fleet.num_vehicles,
                  "capacity": instance.fleet.capacity},
        "stochastic": _params_dict(instance.stochastic, _STOCHASTIC_FIELDS),
        "tw_params": _params_dict(instance.tw_params, _TW_FIELDS),
        "depots": [_location_dict(d) for d in instance.depots],
        "customers": customers,
    }
    return _dump(document)


def parse_instance(data) -> Instance:
    """Strictly parse an instance document; diagnostics name the bad field."""
    doc = _load_document(data, "instance")
    _check_keys(doc, ("format_version", "kind", "id", "problem_type", "depot_config",
                      "extent", "start_time", "seed", "fleet", "stochastic",
                      "tw_params", "depots", "customers"), (), "instance")
    fleet_doc = doc["fleet"]
    _check_keys(fleet_doc, ("num_vehicles", "capacity"), (), "fleet")
    fleet = FleetSpec(num_vehicles=_integer(fleet_doc, "num_vehicles", "fleet"),
                      capacity=_integer(fleet_doc, "capacity", "fleet"))
    sto_doc = doc["stochastic"]
    _check_keys(sto_doc, _STOCHASTIC_FIELDS, (), "stochastic")
    stochastic = StochasticParams(**{k: _real(sto_doc, k, "stochastic")
                                     for k in _STOCHASTIC_FIELDS})
    tw_doc = doc["tw_params"]
    _check_keys(tw_doc, _TW_FIELDS, (), "tw_params")
    tw_params = TimeWindowParams(**{k: _real(tw_doc, k, "tw_params")
                                    for k in _TW_FIELDS})
    depots = []
    for i, d in enumerate(_array(doc, "depots", "instance")):
        ctx = f"depots[{i}]"
        _check_keys(d, ("x", "y"), (), ctx)
        depots.append(Location(_real(d, "x", ctx), _real(d, "y", ctx)))
    customers = []
    for i, c in enumerate(_array(doc, "customers", "instance")):
        ctx = f"customers[{i}]"
        _check_keys(c, ("id", "x", "y", "demand", "profile", "window"), (), ctx)
        window_doc = c["window"]
        window = None
        if window_doc is not None:
            wctx = f"{ctx}.window"
            _check_keys(window_doc, ("start", "length"), (), wctx)
            window = TimeWindow(start=_real(window_doc, "start", wctx),
                                length=_real(window_doc, "length", wctx))
        customers.append(Customer(
            id=_integer(c, "id", ctx),
            location=Location(_real(c, "x", ctx), _real(c, "y", ctx)),
            demand=_integer(c, "demand", ctx),
            profile=_string(c, "profile", ctx),
            window=window,
        ))
    return Instance(
        id=_string(doc, "id", "instance"),
        problem_type=_string(doc, "problem_type", "instance"),
        extent=_real(doc, "extent", "instance"),
        depots=tuple(depots),
        customers=tuple(customers),
        depot_config=_string(doc, "depot_config", "instance"),
        fleet=fleet,
        stochastic=stochastic,
        tw_params=tw_params,
        start_time=_real(doc, "start_time", "instance"),
        seed=_integer(doc, "seed", "instance"),
    )


def write_instance(instance: Instance, path) -> None:
    Path(path).write_bytes(serialize_instance(instance))


def read_instance(path) -> Instance:
    return parse_instance(Path(path).read_bytes())


@dataclass(frozen=True)
class SolutionRecord:
    """A solution plus the id of the instance it solves."""

    solution: Solution
    instance_id: str


def serialize_solution(solution: Solution, instance_id: str) -> bytes:
    document = {
        "format_version": FORMAT_VERSION,
        "kind": "solution",
        "instance_id": instance_id,
        "solver_name": solution.solver_name,
        "wall_time": canonical_real(solution.wall_time),
        "plan_feasible": solution.plan_feasible,
        "routes": [{"depot_index": r.depot_index, "customers": list(r.customers)}
                   for r in solution.routes],
    }
    return _dump(document)


def parse_solution(data, instance: "Instance | None" = None) -> SolutionRecord:
    """Parse a solution document; validates against the instance when given."""
    doc = _load_document(data, "solution")
    _check_keys(doc, ("format_version", "kind", "instance_id", "solver_name",
                      "wall_time", "routes"), ("plan_feasible",), "solution")
    routes = []
    for i, r in enumerate(_array(doc, "routes", "solution")):
        ctx = f"routes[{i}]"
        _check_keys(r, ("depot_index", "customers"), (), ctx)
        cids = _array(r, "customers", ctx)
        for j, cid in enumerate(cids):
            if isinstance(cid, bool) or not isinstance(cid, int):
                raise SchemaError(f"{ctx}.customers[{j}]: expected an integer, got {cid!r}")
        routes.append(Route(depot_index=_integer(r, "depot_index", ctx),
                            customers=tuple(cids)))
    solution = Solution(
        routes=tuple(routes),
        solver_name=_string(doc, "solver_name", "solution"),
        wall_time=_real(doc, "wall_time", "solution"),
        plan_feasible=bool(doc.get("plan_feasible", True)),
    )
    instance_id = _string(doc, "instance_id", "solution")
    if instance is not None:
        if instance.id != instance_id:
            raise SchemaError(f"instance_id: solution references {instance_id!r} "
                              f"but instance is {instance.id!r}")
        solution.validate(instance)
    return SolutionRecord(solution=solution, instance_id=instance_id)


def write_solution(solution: Solution, instance_id: str, path) -> None:
    Path(path).write_bytes(serialize_solution(solution, instance_id))


def read_solution(path, instance: "Instance | None" = None) -> SolutionRecord:
    return parse_solution(Path(path).read_bytes(), instance=instance)


def _row_real(value: float):
    return None if math.isnan(value) else canonical_real(value)


def serialize_report(reports, n_realizations: int, seed: int) -> bytes:
    rows = []
    for r in reports:
        rows.append({
            "solver": r.solver_name,
            "size": r.n_customers,
            "problem_type": r.problem_type,
            "depot_config": r.depot_config,
            "instances": r.num_instances,
            "total_cost": _row_real(r.total_cost),
            "cvr_percent": _row_real(r.cvr_percent),
            "feasibility": _row_real(r.feasibility),
            "runtime_seconds": _row_real(r.runtime_seconds),
            "robustness": _row_real(r.robustness),
        })
    document = {
        "format_version": FORMAT_VERSION,
        "kind": "report",
        "n_realizations": n_realizations,
        "seed": seed,
        "rows": rows,
    }
    return _dump(document)


def parse_report(data) -> "tuple[list[MetricsReport], dict]":
    doc = _load_document(data, "report")
    _check_keys(doc, ("format_version", "kind", "n_realizations", "seed", "rows"),
                (), "report")
    reports = []
    for i, row in enumerate(_array(doc, "rows", "report")):
        ctx = f"rows[{i}]"
        _check_keys(row, ("solver", "size", "problem_type", "depot_config", "instances",
                          "total_cost", "cvr_percent", "feasibility",
                          "runtime_seconds", "robustness"), (), ctx)

        def cell(key):
            if row[key] is None:
                return float("nan")
            return _real(row, key, ctx)

        reports.append(MetricsReport(
            solver_name=_string(row, "solver", ctx),
            n_customers=_integer(row, "size", ctx),
            problem_type=_string(row, "problem_type", ctx),
            depot_config=_string(row, "depot_config", ctx),
            num_instances=_integer(row, "instances", ctx),
            total_cost=cell("total_cost"),
            cvr_percent=cell("cvr_percent"),
            feasibility=cell("feasibility"),
            runtime_seconds=cell("runtime_seconds"),
            robustness=cell("robustness"),
        ))
    meta = {"n_realizations": _integer(doc, "n_realizations", "report"),
            "seed": _integer(doc, "seed", "report")}
    return reports, meta


def write_report(reports, path, n_realizations: int, seed: int) -> None:
    Path(path).write_bytes(serialize_report(reports, n_realizations, seed))


def read_report(path) -> "tuple[list[MetricsReport], dict]":
    return parse_report(Path(path).read_bytes())

REPORT_COLUMNS = ("Method", "Size", "Problem Type", "Depot Config", "Instances",
                  "Total Cost", "CVR (%)", "Feasibility", "Runtime (s)", "Robustness")


def report_rows(reports) -> "list[list[str]]":
    """Rows of display strings in the report-table column order."""
    out = []
    for r in reports:
        out.append([
            r.solver_name, str(r.n_customers), r.problem_type, r.depot_config,
            str(r.num_instances),
            "" if math.isnan(r.total_cost) else f"{r.total_cost:.3f}",
            "" if math.isnan(r.cvr_percent) else f"{r.cvr_percent:.3f}",
            "" if math.isnan(r.feasibility) else f"{r.feasibility:.3f}",
            "" if math.isnan(r.runtime_seconds) else f"{r.runtime_seconds:.4f}",
            "" if math.isnan(r.robustness) else f"{r.robustness:.3f}",
        ])
    return out


def write_report_csv(reports, path) -> None:
    """Delimited companion of the structured report, one row per group."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    writer.writerows(report_rows(reports))
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


_CONFIG_FIELDS = ("n_customers", "problem_type", "depot_config", "num_vehicles",
                  "max_demand", "extent", "start_time", "seed", "stochastic", "tw_params")


def parse_generator_config(data) -> GeneratorConfig:
    """Parse a generator configuration document (all fields optional except
    n_customers; stochastic/tw_params accept partial overrides)."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    _check_keys(doc, ("n_customers",), _CONFIG_FIELDS, "config")
    kwargs = {"n_customers": _integer(doc, "n_customers", "config")}
    if "problem_type" in doc:
        kwargs["problem_type"] = _string(doc, "problem_type", "config")
    if "depot_config" in doc:
        kwargs["depot_config"] = _string(doc, "depot_config", "config")
    if "num_vehicles" in doc and doc["num_vehicles"] is not None:
        kwargs["num_vehicles"] = _integer(doc, "num_vehicles", "config")
    if "max_demand" in doc:
        kwargs["max_demand"] = _integer(doc, "max_demand", "config")
    if "extent" in doc:
        kwargs["extent"] = _real(doc, "extent", "config")
    if "start_time" in doc:
        kwargs["start_time"] = _real(doc, "start_time", "config")
    if "seed" in doc:
        kwargs["seed"] = _integer(doc, "seed", "config")
    if "stochastic" in doc:
        sto = doc["stochastic"]
        _check_keys(sto, (), _STOCHASTIC_FIELDS, "config.stochastic")
        kwargs["stochastic"] = StochasticParams(
            **{k: _real(sto, k, "config.stochastic") for k in sto})
    if "tw_params" in doc:
        tw = doc["tw_params"]
        _check_keys(tw, (), _TW_FIELDS, "config.tw_params")
        kwargs["tw_params"] = TimeWindowParams(
            **{k: _real(tw, k, "config.tw_params") for k in tw})
    try:
        return GeneratorConfig(**kwargs)
    except ValueError as exc:
        raise SchemaError(f"config: {exc}") from exc


def read_generator_config(path) -> GeneratorConfig:
    return parse_generator_config(Path(path).read_bytes())


def export_cvrplib(instance: Instance) -> str:
    """Lossy deterministic projection to the classic CVRP text layout.

    Stochastic parameters and time windows have no encoding there and are
    dropped; multi-depot instances keep only their first depot.
    """
    lines = [
        f"NAME : {instance.id}",
        "COMMENT : projected from a stochastic instance (windows and noise dropped)",
        "TYPE : CVRP",
        f"DIMENSION : {instance.num_customers + 1}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {instance.fleet.capacity}",
        "NODE_COORD_SECTION",
        f"1 {canonical_real(instance.depots[0].x):.9g} {canonical_real(instance.depots[0].y):.9g}",
    ]
    for c in instance.customers:
        lines.append(f"{c.id + 1} {canonical_real(c.location.x):.9g} "
                     f"{canonical_real(c.location.y):.9g}")
    lines.append("DEMAND_SECTION")
    lines.append("1 0")
    for c in instance.customers:
        lines.append(f"{c.id + 1} {c.demand}")
    lines.extend(["DEPOT_SECTION", "1", "-1", "EOF", ""])
    return "\n".join(lines)
