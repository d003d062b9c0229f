"""JSON problem descriptions and CSV emission.

Two config flavors share one file format: a generic problem (variables,
polyhedron rows, cost, uncertain terms) and a feeder scheduling case
(lines, profiles, batteries, segmentation schemes).  Validation errors
carry JSON-pointer-style paths so a bad field is easy to locate.
"""

from __future__ import annotations

import json

import numpy as np

from obro.bess import Battery, ScheduleInputs, build_feeder
from obro.linsolve import Row
from obro.model import ObroProblem, UncertainTerm
from obro.pwl import (
    NeighborhoodSpec,
    Partition,
    SampledFunction,
    make_partition,
)

__all__ = [
    "ConfigError",
    "load_config",
    "problem_from_config",
    "bess_case_from_config",
    "format_float",
    "write_csv",
]


class ConfigError(ValueError):
    """Invalid configuration; ``path`` points at the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}")


def _need(cfg: dict, key: str, path: str):
    if key not in cfg:
        raise ConfigError("missing required field", f"{path}/{key}")
    return cfg[key]


def _number(value, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError("expected a number", path)
    return float(value)


def _partition_from(cfg, path: str) -> Partition:
    if isinstance(cfg, list):
        return Partition(np.asarray(cfg, dtype=float))
    if not isinstance(cfg, dict):
        raise ConfigError("expected a point list or a scheme object", path)
    lo = _number(_need(cfg, "lo", path), f"{path}/lo")
    hi = _number(_need(cfg, "hi", path), f"{path}/hi")
    try:
        if "step" in cfg:
            return make_partition(lo, hi, _number(cfg["step"], f"{path}/step"))
        if "pieces" in cfg:
            pieces = [
                (float(a), float(b), float(h)) for a, b, h in cfg["pieces"]
            ]
            return make_partition(lo, hi, pieces)
    except ValueError as exc:
        raise ConfigError(str(exc), path)
    raise ConfigError("scheme needs either 'step' or 'pieces'", path)


def problem_from_config(cfg: dict) -> tuple:
    """Build (problem, solve options dict) from a generic config."""
    variables = _need(cfg, "variables", "")
    if not isinstance(variables, list) or not variables:
        raise ConfigError("expected a non-empty list", "/variables")
    names, lower, upper = [], [], []
    for i, var in enumerate(variables):
        path = f"/variables/{i}"
        names.append(str(_need(var, "name", path)))
        lower.append(_number(var.get("lower", -np.inf), f"{path}/lower"))
        upper.append(_number(var.get("upper", np.inf), f"{path}/upper"))
    if len(set(names)) != len(names):
        raise ConfigError("duplicate variable names", "/variables")
    index = {n: j for j, n in enumerate(names)}
    n = len(names)

    def coeffs_from(obj, path):
        if not isinstance(obj, dict):
            raise ConfigError("expected {variable: coefficient}", path)
        out = {}
        for key, val in obj.items():
            if key not in index:
                raise ConfigError(f"unknown variable {key!r}", path)
            out[index[key]] = _number(val, f"{path}/{key}")
        return out

    rows = []
    for i, row in enumerate(cfg.get("rows", [])):
        path = f"/rows/{i}"
        rows.append(
            Row(
                coeffs_from(_need(row, "coeffs", path), f"{path}/coeffs"),
                "<=",
                _number(_need(row, "rhs", path), f"{path}/rhs"),
                str(row.get("name", f"row{i}")),
            )
        )

    c = np.zeros(n)
    for key, val in cfg.get("cost", {}).items():
        if key not in index:
            raise ConfigError(f"unknown variable {key!r}", "/cost")
        c[index[key]] = _number(val, f"/cost/{key}")

    epsilon = _number(_need(cfg, "epsilon", ""), "/epsilon")
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive", "/epsilon")

    terms_cfg = _need(cfg, "terms", "")
    if not isinstance(terms_cfg, list) or not terms_cfg:
        raise ConfigError("expected a non-empty list", "/terms")
    terms = []
    for i, tc in enumerate(terms_cfg):
        path = f"/terms/{i}"
        part = _partition_from(_need(tc, "partition", path), f"{path}/partition")
        ref_values = np.asarray(_need(tc, "reference_values", path), dtype=float)
        if ref_values.shape != (part.n_points,):
            raise ConfigError(
                f"need {part.n_points} values for this partition",
                f"{path}/reference_values",
            )
        try:
            spec = NeighborhoodSpec(
                SampledFunction(part, ref_values),
                _number(_need(tc, "delta_max", path), f"{path}/delta_max"),
                _number(_need(tc, "dev_max", path), f"{path}/dev_max"),
                _number(_need(tc, "lip_ratio", path), f"{path}/lip_ratio"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), path)
        evals = _need(tc, "evaluations", path)
        eval_ix = []
        for k, name in enumerate(evals):
            if name not in index:
                raise ConfigError(f"unknown variable {name!r}", f"{path}/evaluations/{k}")
            eval_ix.append(index[name])
        terms.append(UncertainTerm(str(tc.get("name", f"f{i}")), spec, tuple(eval_ix)))

    prob = ObroProblem(c, rows, np.array(lower), np.array(upper), epsilon, terms, names)
    options = {
        "tol": _number(cfg.get("tol", 1e-2), "/tol"),
        "max_iter": int(cfg.get("max_iter", 100)),
    }
    if options["tol"] <= 0:
        raise ConfigError("tol must be positive", "/tol")
    return prob, options


def bess_case_from_config(cfg: dict) -> tuple:
    """Build (feeder, schedule inputs, schemes dict, options) from a config."""
    fcfg = _need(cfg, "feeder", "")
    lines_cfg = _need(fcfg, "lines", "/feeder")
    lines = []
    for i, ln in enumerate(lines_cfg):
        path = f"/feeder/lines/{i}"
        lines.append(
            (
                _need(ln, "from", path),
                _need(ln, "to", path),
                _number(_need(ln, "r", path), f"{path}/r"),
                _number(_need(ln, "x", path), f"{path}/x"),
            )
        )
    try:
        feeder = build_feeder(
            lines,
            v_s=_number(fcfg.get("substation_voltage", 1.0), "/feeder/substation_voltage"),
            substation=fcfg.get("substation", 0),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "/feeder")

    hcfg = _need(cfg, "horizon", "")
    n_slots = int(_need(hcfg, "slots", "/horizon"))
    dt = _number(_need(hcfg, "dt", "/horizon"), "/horizon/dt")

    def profile_table(key):
        table = {}
        for node_key, series in cfg.get("profiles", {}).get(key, {}).items():
            node = int(node_key)
            arr = np.asarray(series, dtype=float)
            if arr.shape != (n_slots,):
                raise ConfigError(
                    f"need {n_slots} values", f"/profiles/{key}/{node_key}"
                )
            table[node] = arr
        return table

    defaults = cfg.get("neighborhood", {})
    batteries = []
    for i, bc in enumerate(_need(cfg, "batteries", "")):
        path = f"/batteries/{i}"
        batteries.append(
            Battery(
                node=_need(bc, "node", path),
                p_min=_number(bc.get("p_min", 0.0), f"{path}/p_min"),
                p_max=_number(bc.get("p_max", 0.04), f"{path}/p_max"),
                e_max=_number(bc.get("e_max", 0.2), f"{path}/e_max"),
                e_0=_number(bc.get("e_0", 0.0), f"{path}/e_0"),
                delta_max=_number(
                    bc.get("delta_max", defaults.get("delta_max", 0.05)),
                    f"{path}/delta_max",
                ),
                dev_max=_number(
                    bc.get("dev_max", defaults.get("dev_max", 1e-3)), f"{path}/dev_max"
                ),
                lip_ratio=_number(
                    bc.get("lip_ratio", defaults.get("lip_ratio", 1.5)),
                    f"{path}/lip_ratio",
                ),
            )
        )

    limits = cfg.get("limits", {})
    weights = cfg.get("weights", {})
    epsilon = _number(weights.get("epsilon", 0.1), "/weights/epsilon")
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive", "/weights/epsilon")

    inputs = ScheduleInputs(
        dt=dt,
        n_slots=n_slots,
        load_p=profile_table("load_p"),
        load_q=profile_table("load_q"),
        pv=profile_table("pv"),
        batteries=batteries,
        v_min=_number(limits.get("v_min", 0.95), "/limits/v_min"),
        v_max=_number(limits.get("v_max", 1.05), "/limits/v_max"),
        w_v=_number(weights.get("voltage", 10.0), "/weights/voltage"),
        epsilon=epsilon,
        scheme=0.002,
    )

    schemes = {}
    for name, sc in _need(cfg, "schemes", "").items():
        path = f"/schemes/{name}"
        if "step" in sc:
            schemes[name] = _number(sc["step"], f"{path}/step")
        elif "pieces" in sc:
            schemes[name] = [(float(a), float(b), float(h)) for a, b, h in sc["pieces"]]
        elif "a" in sc and "b" in sc:
            schemes[name] = {
                "a": [float(v) for v in sc["a"]],
                "b": [float(v) for v in sc["b"]],
            }
        else:
            raise ConfigError("scheme needs 'step', 'pieces', or 'a'/'b' ranges", path)

    options = {
        "tol": _number(cfg.get("tol", 1e-2), "/tol"),
        "max_iter": int(cfg.get("max_iter", 200)),
    }
    return feeder, inputs, schemes, options


def format_float(value) -> str:
    """12 significant digits, plain decimal or exponent as %g chooses."""
    return f"{value:.12g}"


def write_csv(path, header, rows):
    """UTF-8, LF-terminated CSV with one header row; floats at 12 digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    format_float(v) if isinstance(v, float) else str(v) for v in row
                )
                + "\n"
            )
