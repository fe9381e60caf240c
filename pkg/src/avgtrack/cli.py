"""Scenario ingestion, the gains/run/compare subcommands, and file emission.

Scenario files are strict JSON: unknown keys anywhere are rejected, all
dimensions must be mutually consistent, and outputs are byte-identical
across repeated invocations of the same configuration. Exit codes: 0
success, 1 file/schema problems, 2 violated design assumptions, 3 numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .clocksync import ATTRACTING, PAPER_LITERAL, run_sync
from .controllers import (
    design_adaptive_params,
    design_gains,
    omega_radii,
)
from .engine import Scenario, Trace, run, total_variation
from .errors import ConfigError, DesignError, NumericalError
from .graph import Topology
from .signals import ConstantInput, InputFamily, Plant, SinusoidInput, ZeroInput

SEED_ENV_VAR = "AVGTRACK_SEED"

_TOP_KEYS = {
    "plant",
    "Q",
    "topology",
    "inputs",
    "controller",
    "eps",
    "phi",
    "mu",
    "nu",
    "theta",
    "chi",
    "c1",
    "c2",
    "clock_sync",
    "integrator",
    "initial",
    "output",
    "seed",
}
_ADAPTIVE_KEYS = ("mu", "nu", "theta", "chi")


def _require_keys(section: dict, allowed: set, required: set, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = required - set(section)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {where}")


def _number(value, where: str, positive=False, nonnegative=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    v = float(value)
    if positive and v <= 0.0:
        raise ConfigError(f"{where} must be positive")
    if nonnegative and v < 0.0:
        raise ConfigError(f"{where} must be nonnegative")
    return v


def load_config(path) -> dict:
    """Read and schema-validate a scenario file, returning the raw document."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    validate_config(doc)
    return doc


def serialize_config(doc: dict) -> str:
    """Canonical JSON serialization of a scenario document."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _parse_input_spec(spec, where: str):
    _require_keys(spec, {"type", "value", "amplitude", "omega", "phase"}, {"type"}, where)
    kind = spec["type"]
    if kind == "zero":
        _require_keys(spec, {"type"}, {"type"}, where)
        return ZeroInput()
    if kind == "constant":
        _require_keys(spec, {"type", "value"}, {"type", "value"}, where)
        return ConstantInput(value=tuple(spec["value"]))
    if kind == "sinusoid":
        _require_keys(spec, {"type", "amplitude", "omega", "phase"}, {"type", "amplitude"}, where)
        return SinusoidInput(
            amplitude=tuple(spec["amplitude"]),
            omega=_number(spec.get("omega", 1.0), f"{where}.omega"),
            phase=_number(spec.get("phase", 0.0), f"{where}.phase"),
        )
    raise ConfigError(f"{where}.type must be zero, constant, or sinusoid")


def validate_config(doc: dict):
    """Structural validation; raises ConfigError on any schema violation."""
    _require_keys(doc, _TOP_KEYS, {"plant", "Q", "topology", "inputs", "controller"}, "config")
    _require_keys(doc["plant"], {"A", "B"}, {"A", "B"}, "plant")
    _require_keys(doc["topology"], {"vertices", "edges"}, {"vertices", "edges"}, "topology")
    if doc["controller"] not in ("static", "modified", "adaptive"):
        raise ConfigError("controller must be static, modified, or adaptive")
    if doc["controller"] == "adaptive":
        missing = [k for k in _ADAPTIVE_KEYS if k not in doc]
        if missing:
            raise ConfigError(f"adaptive controller requires key(s) {missing}")
    inputs = doc["inputs"]
    if isinstance(inputs, dict):
        _parse_input_spec(inputs, "inputs")
    elif isinstance(inputs, list):
        for i, spec in enumerate(inputs):
            _parse_input_spec(spec, f"inputs[{i}]")
    else:
        raise ConfigError("inputs must be an object or a per-agent list")
    if "clock_sync" in doc:
        _require_keys(
            doc["clock_sync"],
            {"enabled", "initial_offsets", "convention", "tol", "step"},
            {"enabled"},
            "clock_sync",
        )
        convention = doc["clock_sync"].get("convention", ATTRACTING)
        if convention not in (ATTRACTING, PAPER_LITERAL):
            raise ConfigError(f"clock_sync.convention must be {ATTRACTING} or {PAPER_LITERAL}")
    if "integrator" in doc:
        _require_keys(doc["integrator"], {"step", "horizon", "stride"}, set(), "integrator")
    if "initial" in doc:
        _require_keys(doc["initial"], {"r", "s", "clocks"}, set(), "initial")
    if "output" in doc:
        _require_keys(doc["output"], {"dir"}, set(), "output")
    if "seed" in doc and (isinstance(doc["seed"], bool) or not isinstance(doc["seed"], int)):
        raise ConfigError("seed must be an integer")


def _matrix(doc_value, where: str) -> np.ndarray:
    try:
        mat = np.array(doc_value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where} must be a nested numeric array: {exc}") from exc
    if mat.ndim != 2 or not np.all(np.isfinite(mat)):
        raise ConfigError(f"{where} must be a finite 2-D matrix")
    return mat


def _initial_block(doc: dict, key: str, shape: tuple, seed: int):
    value = doc.get("initial", {}).get(key, "zero")
    if value == "zero":
        return np.zeros(shape)
    if value == "seeded":
        rng = np.random.default_rng(seed)
        return rng.uniform(-1.0, 1.0, size=shape)
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"initial.{key} must be numeric: {exc}") from exc
    if arr.shape != shape:
        raise ConfigError(f"initial.{key} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"initial.{key} entries must be finite")
    return arr


class ScenarioBundle:
    """Everything assembled from one config document."""

    def __init__(self, doc: dict):
        try:
            self._build(doc)
        except (ValueError, KeyError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def _build(self, doc: dict):
        self.doc = doc
        self.plant = Plant(a=_matrix(doc["plant"]["A"], "plant.A"),
                           b=_matrix(doc["plant"]["B"], "plant.B"))
        self.q_mat = _matrix(doc["Q"], "Q")
        topo_doc = doc["topology"]
        if isinstance(topo_doc["vertices"], bool) or not isinstance(topo_doc["vertices"], int):
            raise ConfigError("topology.vertices must be an integer")
        self.topology = Topology(
            vertex_count=topo_doc["vertices"],
            edges=tuple(tuple(e) for e in topo_doc["edges"]),
        )

        n_agents = self.topology.vertex_count
        inputs = doc["inputs"]
        if isinstance(inputs, dict):
            specs = tuple(_parse_input_spec(inputs, "inputs") for _ in range(n_agents))
        else:
            if len(inputs) != n_agents:
                raise ConfigError(
                    f"inputs list has {len(inputs)} entries for {n_agents} agents"
                )
            specs = tuple(
                _parse_input_spec(spec, f"inputs[{i}]") for i, spec in enumerate(inputs)
            )
        self.family = InputFamily(specs=specs, input_dim=self.plant.input_dim)

        self.controller = doc["controller"]
        self.eps = _number(doc.get("eps", 1.0), "eps", nonnegative=True)
        self.phi = _number(doc.get("phi", 0.0), "phi", nonnegative=True)
        self.seed = int(os.environ.get(SEED_ENV_VAR, doc.get("seed", 0)))

        integ = doc.get("integrator", {})
        self.step = _number(integ.get("step", 1e-3), "integrator.step", positive=True)
        self.horizon = _number(integ.get("horizon", 30.0), "integrator.horizon", nonnegative=True)
        stride = integ.get("stride", 10)
        if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
            raise ConfigError("integrator.stride must be a positive integer")
        self.sample_every = stride

        sync = doc.get("clock_sync", {"enabled": False})
        self.sync_enabled = bool(sync.get("enabled", False))
        self.sync_offsets = np.array(
            sync.get("initial_offsets", np.zeros(n_agents)), dtype=float
        ).reshape(-1)
        if self.sync_offsets.shape != (n_agents,):
            raise ConfigError("clock_sync.initial_offsets must list one value per agent")
        self.sync_convention = sync.get("convention", ATTRACTING)
        self.sync_tol = _number(sync.get("tol", 1e-9), "clock_sync.tol", positive=True)
        self.sync_step = _number(sync.get("step", 1e-5), "clock_sync.step", positive=True)

        self.out_dir = Path(doc.get("output", {}).get("dir", "out"))

    def design(self):
        """Gain design plus optional adaptive parameters and radii."""
        gains = design_gains(
            self.plant,
            self.topology,
            self.family,
            self.q_mat,
            eps=self.eps,
            phi=self.phi,
            c1=self.doc.get("c1"),
            c2=self.doc.get("c2"),
        )
        adapt = None
        if self.controller == "adaptive":
            adapt = design_adaptive_params(
                gains,
                mu=_number(self.doc["mu"], "mu", positive=True),
                nu=_number(self.doc["nu"], "nu", positive=True),
                theta=_number(self.doc["theta"], "theta", positive=True),
                chi=_number(self.doc["chi"], "chi", positive=True),
            )
        return gains, adapt

    def scenario(
        self,
        gains,
        adapt,
        horizon: float | None = None,
        step: float | None = None,
        discontinuous: bool = False,
        clocks0=None,
    ) -> Scenario:
        n_agents, n = self.topology.vertex_count, self.plant.state_dim
        return Scenario(
            plant=self.plant,
            topology=self.topology,
            family=self.family,
            controller=self.controller,
            gains=gains,
            adapt=adapt,
            r0=_initial_block(self.doc, "r", (n_agents, n), self.seed),
            s0=_initial_block(self.doc, "s", (n_agents, n), self.seed),
            clocks0=(
                clocks0
                if clocks0 is not None
                else _initial_block(self.doc, "clocks", (n_agents,), self.seed)
            ),
            step=self.step if step is None else step,
            horizon=self.horizon if horizon is None else horizon,
            sample_every=self.sample_every,
            discontinuous=discontinuous,
            clock_convention=self.sync_convention,
        )


# -- report assembly ---------------------------------------------------------


def _matrix_list(mat) -> list:
    return [[float(v) for v in row] for row in np.atleast_2d(mat)]


def gain_report(bundle: ScenarioBundle) -> dict:
    gains, adapt = bundle.design()
    radii = omega_radii(gains, adapt, bundle.topology) if (
        adapt is None or adapt.rho < gains.gamma_rate
    ) else None
    report = {
        "P": _matrix_list(gains.p_mat),
        "K": _matrix_list(gains.k_mat),
        "Gamma": _matrix_list(gains.gamma_mat),
        "lambda2": gains.lam2,
        "f0": gains.f0,
        "c1": gains.c1,
        "c2": gains.c2,
        "gamma": gains.gamma_rate,
        "eps": gains.eps,
        "phi": gains.phi,
        "rho": None,
        "feasible": None,
        "omega0": None,
        "omega2": None,
        "omega1_level": None,
    }
    if radii is not None:
        report["omega0"] = radii.omega0
        report["omega2"] = radii.omega2
        report["omega1_level"] = radii.omega1_level
    else:
        report["omega0"] = omega_radii(gains, None, bundle.topology).omega0
    if adapt is not None:
        report["rho"] = adapt.rho
        report["feasible"] = bool(adapt.rho < gains.gamma_rate)
    return report


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def write_trace_csv(trace: Trace, path: Path):
    """CSV schema: t, x_<i>_<k>, r_<i>_<k>, xi_<i>_<k>, u_<i>_<k>, V1
    [, V2, alpha_<e>, beta_<e>], clock_<i>."""
    sc = trace.scenario
    n_agents = sc.topology.vertex_count
    n = sc.plant.state_dim
    p = sc.plant.input_dim
    adaptive = sc.controller == "adaptive"

    header = ["t"]
    for tag, dim in (("x", n), ("r", n), ("xi", n)):
        header += [f"{tag}_{i}_{k}" for i in range(n_agents) for k in range(dim)]
    header += [f"u_{i}_{k}" for i in range(n_agents) for k in range(p)]
    header.append("V1")
    if adaptive:
        header.append("V2")
        header += [f"alpha_{e}" for e in range(sc.topology.edge_count)]
        header += [f"beta_{e}" for e in range(sc.topology.edge_count)]
    header += [f"clock_{i}" for i in range(n_agents)]

    x = trace.x
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(trace.sample_count):
            row = [trace.times[k]]
            row += list(x[k].ravel()) + list(trace.r[k].ravel()) + list(trace.xi[k].ravel())
            row += list(trace.u[k].ravel())
            row.append(trace.v1[k])
            if adaptive:
                row.append(trace.v2[k])
                row += list(trace.alpha[k]) + list(trace.beta[k])
            row += list(trace.clocks[k])
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def summarize(trace: Trace, gains, adapt, bundle: ScenarioBundle, sync_info=None) -> dict:
    per_agent_tv, tv_total = total_variation(trace)
    x_final = trace.x[-1]
    r_mean = trace.r[-1].mean(axis=0)
    tracking = np.sqrt(((x_final - r_mean) ** 2).sum())
    radii = None
    if adapt is None or adapt.rho < gains.gamma_rate:
        radii = omega_radii(gains, adapt, bundle.topology)
    summary = {
        "final_time": float(trace.times[-1]),
        "final_xi_norm": float(trace.xi_norm[-1]),
        "final_tracking_error_norm": float(tracking),
        "final_v1": float(trace.v1[-1]),
        "final_v2": float(trace.v2[-1]) if trace.v2 is not None else None,
        "max_clock_spread": float(trace.clock_spread.max()),
        "total_variation": {
            "per_agent": [float(v) for v in per_agent_tv],
            "total": tv_total,
        },
        "omega0": radii.omega0 if radii else None,
        "omega2": radii.omega2 if radii else None,
        "omega1_level": radii.omega1_level if radii else None,
        "clock_sync": sync_info,
        "samples": int(trace.sample_count),
    }
    return summary


# -- subcommands --------------------------------------------------------------


def cmd_gains(config_path, out_dir=None) -> int:
    bundle = ScenarioBundle(load_config(config_path))
    report = gain_report(bundle)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "gains.json").write_text(text + "\n", encoding="utf-8")
    return 0


def _sync_pre_phase(bundle: ScenarioBundle):
    """Run the clock-sync phase; returns (clocks0 for tracking, info dict)."""
    result = run_sync(
        bundle.topology,
        bundle.sync_offsets,
        convention=bundle.sync_convention,
        tol=bundle.sync_tol,
        step=bundle.sync_step,
    )
    info = {
        "settled_at": result.settled_at,
        "final_spread": float(result.spreads[-1]),
        "tol": bundle.sync_tol,
    }
    if result.settled_at is None:
        raise NumericalError(
            f"clock synchronization did not settle below {bundle.sync_tol}"
        )
    # hand the tracking phase exactly equal clocks at the settled value
    common = float(result.final.mean())
    return np.full(bundle.topology.vertex_count, common), info


def cmd_run(config_path, horizon=None, step=None, out_dir=None) -> int:
    bundle = ScenarioBundle(load_config(config_path))
    gains, adapt = bundle.design()
    sync_info = None
    clocks0 = None
    if bundle.sync_enabled:
        clocks0, sync_info = _sync_pre_phase(bundle)
    scenario = bundle.scenario(gains, adapt, horizon=horizon, step=step, clocks0=clocks0)
    trace = run(scenario)

    out = Path(out_dir) if out_dir is not None else bundle.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "trace.csv")
    summary = summarize(trace, gains, adapt, bundle, sync_info)
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {out / 'trace.csv'} and {out / 'summary.json'}")
    return 0


def cmd_compare(config_path, out_dir=None) -> int:
    bundle = ScenarioBundle(load_config(config_path))
    gains, adapt = bundle.design()
    sync_info = None
    clocks0 = None
    if bundle.sync_enabled:
        clocks0, sync_info = _sync_pre_phase(bundle)

    traces = {}
    for label, discontinuous in (("continuous", False), ("discontinuous", True)):
        scenario = bundle.scenario(gains, adapt, discontinuous=discontinuous, clocks0=clocks0)
        traces[label] = run(scenario)

    out = Path(out_dir) if out_dir is not None else bundle.out_dir
    out.mkdir(parents=True, exist_ok=True)
    report = {"clock_sync": sync_info}
    for label, trace in traces.items():
        write_trace_csv(trace, out / f"trace_{label}.csv")
        _, tv_total = total_variation(trace)
        report[label] = {
            "total_variation": tv_total,
            "final_xi_norm": float(trace.xi_norm[-1]),
        }
    tv_disc = report["discontinuous"]["total_variation"]
    report["tv_ratio_continuous_over_discontinuous"] = (
        report["continuous"]["total_variation"] / tv_disc if tv_disc > 0.0 else None
    )
    text = json.dumps(report, indent=2, sort_keys=True)
    (out / "comparison.json").write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


# -- entry point ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avgtrack",
        description=(
            "Distributed average tracking: Riccati gain design and "
            "deterministic multi-agent simulation from JSON scenarios."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gains = sub.add_parser("gains", help="design gains and print the report")
    p_gains.add_argument("config")
    p_gains.add_argument("--out", default=None, help="also write gains.json here")

    p_run = sub.add_parser("run", help="simulate and write trace.csv + summary.json")
    p_run.add_argument("config")
    p_run.add_argument("--horizon", type=float, default=None)
    p_run.add_argument("--step", type=float, default=None)
    p_run.add_argument("--out", default=None)

    p_cmp = sub.add_parser(
        "compare", help="run the scenario with smooth and discontinuous directions"
    )
    p_cmp.add_argument("config")
    p_cmp.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gains":
            return cmd_gains(args.config, out_dir=args.out)
        if args.command == "run":
            return cmd_run(
                args.config, horizon=args.horizon, step=args.step, out_dir=args.out
            )
        return cmd_compare(args.config, out_dir=args.out)
    except ConfigError as exc:
        print(f"schema-error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"schema-error: {exc}", file=sys.stderr)
        return 1
    except DesignError as exc:
        print(f"design-error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numeric-error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"schema-error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
