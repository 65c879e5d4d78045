"""Named scenarios, parameter sweeps, structured output and golden files."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from ctcsim.chain import (
    BUILTIN_UNITARIES,
    ChainConfig,
    TwoWireUnitary,
    builtin_unitary,
    ctc_wire_trajectory,
    default_stage,
    run_chain,
)
from ctcsim.deutsch import deutsch_channel_output, fixed_point
from ctcsim.metrics import compute_metrics, trace_distance
from ctcsim.qmath import DensityMatrix, QMathError, partial_trace
from ctcsim.states import BUILTIN_ENSEMBLES, InputForm, PairEnsemble, build_global_input

LOGGER = logging.getLogger(__name__)

DEFAULT_GOLDEN_TOL = 1e-9
CSV_COLUMNS = ("scenario", "form", "unitary", "n", "stage", "metric", "value", "spec_hash")


class SpecError(ValueError):
    """Invalid scenario specification; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SimulationError(RuntimeError):
    pass


class SweepAborted(SimulationError):
    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to reproduce one scenario or sweep.

    ``form`` is ``correlated``, ``iid``, ``measured:K`` or ``measured:auto``
    (measure the A-particle of whatever stage is retained).
    """

    scenario: str = "custom"
    ensemble: Union[str, PairEnsemble] = "bell"
    form: str = "correlated"
    unitary: Union[str, TwoWireUnitary] = "identity"
    n: Union[int, tuple] = 8
    retained_stage: Union[int, str] = "auto"
    ctc_seed: Union[str, Any] = "mixed"
    tol: float = 1e-12
    output_path: Optional[str] = None
    format: str = "csv"

    @property
    def n_values(self) -> list[int]:
        return list(self.n) if isinstance(self.n, (list, tuple)) else [self.n]

    @property
    def is_sweep(self) -> bool:
        return isinstance(self.n, (list, tuple))


BUILTIN_SCENARIOS = {
    "bell-identity": ScenarioSpec("bell-identity", "bell", "correlated", "identity", 8),
    "classical-correlated": ScenarioSpec("classical-correlated", "classical", "correlated", "identity", 8),
    "classical-iid": ScenarioSpec("classical-iid", "classical", "iid", "identity", 8),
    "measured-single": ScenarioSpec("measured-single", "bell", "measured:auto", "identity", 8),
    "distinguish-correlated": ScenarioSpec(
        "distinguish-correlated", "nonorthogonal", "correlated", "ch_lower_control", 8
    ),
    "distinguish-iid": ScenarioSpec("distinguish-iid", "nonorthogonal", "iid", "ch_lower_control", 16),
    "deutsch-crosscheck": ScenarioSpec(
        "deutsch-crosscheck", "nonorthogonal", "iid", "ch_lower_control", 64
    ),
}

# One line per builtin scenario: the claim it reproduces.
SCENARIO_CLAIMS = {
    "bell-identity": "half of a Bell pair through U=I: the retained pair is decorrelated",
    "classical-correlated": "correlated-copies classical input through U=I: correlations survive",
    "classical-iid": "i.i.d. classical input through U=I: correlations are destroyed",
    "measured-single": "Bell pairs with one A measured: same output as the i.i.d. classical input",
    "distinguish-correlated": "correlated-copies |0>/|-> input through CH: discrimination beats Helstrom",
    "distinguish-iid": "i.i.d. |0>/|-> input through CH: no gain over Helstrom",
    "deutsch-crosscheck": "long i.i.d. CH chain converges to the Deutsch fixed point",
}


def _complex(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise SpecError(path, f"expected a number or [re, im] pair, got {value!r}")


def _complex_matrix(value, shape, path: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != shape[0]:
        raise SpecError(path, f"expected {shape[0]} rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, (list, tuple)) or len(row) != shape[1]:
            raise SpecError(f"{path}[{i}]", f"expected {shape[1]} entries")
        rows.append([_complex(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return np.array(rows, dtype=np.complex128)


def resolve_ensemble(value, path: str = "ensemble") -> PairEnsemble:
    """Builtin ensemble name or inline ``[[p, [[re, im] x 4]], ...]`` literal."""
    if isinstance(value, PairEnsemble):
        return value
    if isinstance(value, str):
        if value not in BUILTIN_ENSEMBLES:
            raise SpecError(path, f"unknown ensemble {value!r} (choose from {sorted(BUILTIN_ENSEMBLES)})")
        return BUILTIN_ENSEMBLES[value]()
    if not isinstance(value, (list, tuple)):
        raise SpecError(path, "expected a builtin name or a component list")
    comps = []
    for i, comp in enumerate(value):
        if isinstance(comp, dict):
            p, amps = comp.get("p"), comp.get("amplitudes")
        elif isinstance(comp, (list, tuple)) and len(comp) == 2:
            p, amps = comp
        else:
            raise SpecError(f"{path}[{i}]", "expected [probability, amplitudes]")
        if not isinstance(amps, (list, tuple)) or len(amps) != 4:
            raise SpecError(f"{path}[{i}].amplitudes", "expected 4 complex amplitudes")
        comps.append((float(p), [_complex(a, f"{path}[{i}].amplitudes[{k}]") for k, a in enumerate(amps)]))
    try:
        return PairEnsemble(tuple(comps))
    except QMathError as exc:
        raise SpecError(path, str(exc)) from exc


def resolve_unitary(value, path: str = "unitary") -> TwoWireUnitary:
    if isinstance(value, TwoWireUnitary):
        return value
    if isinstance(value, str):
        if value not in BUILTIN_UNITARIES:
            raise SpecError(path, f"unknown unitary {value!r} (choose from {list(BUILTIN_UNITARIES)})")
        return builtin_unitary(value)
    try:
        return TwoWireUnitary("custom", _complex_matrix(value, (4, 4), path))
    except QMathError as exc:
        raise SpecError(path, str(exc)) from exc


def resolve_seed(value, path: str = "ctc_seed") -> DensityMatrix:
    if isinstance(value, DensityMatrix):
        return value
    if value == "mixed":
        return DensityMatrix.maximally_mixed(1)
    if value == "zero":
        return DensityMatrix(np.diag([1.0, 0.0]))
    if isinstance(value, str):
        raise SpecError(path, f"expected 'mixed', 'zero' or a 2x2 matrix, got {value!r}")
    try:
        return DensityMatrix(_complex_matrix(value, (2, 2), path))
    except QMathError as exc:
        raise SpecError(path, str(exc)) from exc


def resolve_stage(spec: ScenarioSpec, n: int) -> int:
    if spec.retained_stage == "auto":
        return default_stage(n)
    try:
        s = int(spec.retained_stage)
    except (TypeError, ValueError):
        raise SpecError("retained_stage", f"expected an integer or 'auto', got {spec.retained_stage!r}")
    if not 2 <= s <= n:
        raise SpecError("retained_stage", f"stage {s} outside [2, {n}] for n={n}")
    return s


def resolve_form(spec: ScenarioSpec, stage: int) -> InputForm:
    text = str(spec.form).strip().lower()
    if text == "measured:auto":
        return InputForm.measured(stage)
    try:
        return InputForm.parse(text)
    except (QMathError, ValueError) as exc:
        raise SpecError("form", str(exc)) from exc


def validate_spec(spec: ScenarioSpec) -> None:
    """Raise :class:`SpecError` for any invalid field."""
    ns = spec.n_values
    if not ns:
        raise SpecError("n", "empty sweep")
    for i, n in enumerate(ns):
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise SpecError(f"n[{i}]" if spec.is_sweep else "n", f"expected an integer, got {n!r}")
        if n < 2:
            raise SpecError(f"n[{i}]" if spec.is_sweep else "n", "chain too short (n must be >= 2)")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise SpecError("n", "sweep values must be strictly increasing")
    for n in ns:
        s = resolve_stage(spec, n)
        form = resolve_form(spec, s)
        if form.kind == "measured" and not 1 <= form.measured_stage <= n:
            raise SpecError("form", f"bad stage {form.measured_stage} for n={n}")
    resolve_ensemble(spec.ensemble)
    resolve_unitary(spec.unitary)
    resolve_seed(spec.ctc_seed)
    if not spec.tol > 0:
        raise SpecError("tol", "must be positive")
    if spec.format not in ("csv", "json"):
        raise SpecError("format", f"expected csv or json, got {spec.format!r}")


def _jsonable(value):
    if isinstance(value, PairEnsemble):
        return [[p, [[a.real, a.imag] for a in psi]] for p, psi in value.components]
    if isinstance(value, TwoWireUnitary):
        return value.name if value.name in BUILTIN_UNITARIES else matrix_to_json(value.matrix)
    if isinstance(value, DensityMatrix):
        return matrix_to_json(value.matrix)
    if isinstance(value, np.ndarray):
        return matrix_to_json(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def spec_echo(spec: ScenarioSpec) -> dict:
    return {
        "scenario": spec.scenario,
        "ensemble": _jsonable(spec.ensemble),
        "form": str(spec.form),
        "unitary": _jsonable(spec.unitary),
        "n": _jsonable(spec.n),
        "retained_stage": spec.retained_stage,
        "ctc_seed": _jsonable(spec.ctc_seed),
        "tol": spec.tol,
    }


def spec_hash(spec: ScenarioSpec) -> str:
    blob = json.dumps(spec_echo(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def matrix_to_json(m) -> list:
    m = np.asarray(m)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=np.complex128)


@dataclass
class ScenarioResult:
    spec: dict
    spec_hash: str
    scenario: str
    form: str
    unitary: str
    n: int
    stage: int
    retained: np.ndarray
    metrics: dict
    convergence_residual: float
    extrapolated: bool = False
    deutsch: Optional[dict] = None

    def metric_rows(self) -> list[tuple[str, float]]:
        rows = [(k, v) for k, v in self.metrics.items() if v is not None]
        rows.append(("convergence_residual", self.convergence_residual))
        if self.deutsch is not None:
            rows.append(("deutsch_ctc_delta", self.deutsch["ctc_delta"]))
            rows.append(("deutsch_output_delta", self.deutsch["output_delta"]))
        return rows

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "spec": self.spec,
            "spec_hash": self.spec_hash,
            "form": self.form,
            "unitary": self.unitary,
            "n": self.n,
            "stage": self.stage,
            "extrapolated": self.extrapolated,
            "retained": matrix_to_json(self.retained),
            "metrics": {k: v for k, v in self.metric_rows()},
            "deutsch": self.deutsch,
        }


def _simulate(spec: ScenarioSpec, n: int) -> ScenarioResult:
    ensemble = resolve_ensemble(spec.ensemble)
    unitary = resolve_unitary(spec.unitary)
    seed = resolve_seed(spec.ctc_seed)
    stage = resolve_stage(spec, n)
    form = resolve_form(spec, stage)
    try:
        inp = build_global_input(ensemble, form, n)
    except QMathError as exc:
        raise SpecError("form", str(exc)) from exc
    cfg = ChainConfig(n, unitary, stage, seed)

    retained = run_chain(inp, cfg)
    trajectory = ctc_wire_trajectory(inp, cfg)
    residual = trace_distance(trajectory[-1], trajectory[-2])
    metrics = compute_metrics(retained).as_dict()

    deutsch = None
    if form.kind == "iid":
        rho_in = partial_trace(ensemble.average(), [1])
        report = fixed_point(unitary, rho_in, seed, tol=spec.tol)
        expected_out = deutsch_channel_output(unitary, rho_in, report.ctc_state)
        deutsch = {
            "ctc_delta": trace_distance(trajectory[-1], report.ctc_state),
            "output_delta": trace_distance(partial_trace(retained.state, [1]), expected_out),
            "converged": report.converged,
            "degenerate": report.degenerate,
            "iterations": report.iterations,
            "residual": report.residual,
        }
    return ScenarioResult(
        spec=spec_echo(spec),
        spec_hash=spec_hash(spec),
        scenario=spec.scenario,
        form=str(form),
        unitary=unitary.name,
        n=n,
        stage=stage,
        retained=retained.state.matrix,
        metrics=metrics,
        convergence_residual=residual,
        extrapolated=ensemble.extrapolated,
        deutsch=deutsch,
    )


def _run_point(spec: ScenarioSpec, n: int) -> ScenarioResult:
    try:
        return _simulate(spec, n)
    except SpecError:
        raise
    except QMathError as exc:
        raise SimulationError(f"scenario {spec.scenario!r} at n={n}: {exc}") from exc


def write_results(results: list[ScenarioResult], path, fmt: str, partial: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = {"partial": partial, "results": [r.to_json() for r in results]}
        path.write_text(json.dumps(payload, indent=2))
        return
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in results:
            for metric, value in r.metric_rows():
                writer.writerow([r.scenario, r.form, r.unitary, r.n, r.stage, metric, repr(float(value)), r.spec_hash])
        if partial:
            writer.writerow(["", "", "", "", "", "partial", "1", ""])


def scenario_spec(name: str, **overrides) -> ScenarioSpec:
    if name not in BUILTIN_SCENARIOS:
        raise SpecError("scenario", f"unknown scenario {name!r} (choose from {sorted(BUILTIN_SCENARIOS)})")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(BUILTIN_SCENARIOS[name], **overrides)


def run_scenario(spec: ScenarioSpec) -> ScenarioResult:
    """Run a single-n scenario and write its output if a path is set."""
    validate_spec(spec)
    if spec.is_sweep:
        raise SpecError("n", "run_scenario takes a single n; use run_sweep")
    result = _run_point(spec, spec.n)
    if spec.output_path:
        write_results([result], spec.output_path, spec.format)
    return result


def run_sweep(spec: ScenarioSpec) -> list[ScenarioResult]:
    """One result per n (in increasing order), written as a single table.

    A failing point aborts the sweep; the rows computed so far are still
    written, flagged as partial.
    """
    validate_spec(spec)
    results = []
    for n in spec.n_values:
        LOGGER.info("scenario %s: n=%d", spec.scenario, n)
        try:
            results.append(_run_point(spec, n))
        except SimulationError as exc:
            if spec.output_path:
                write_results(results, spec.output_path, spec.format, partial=True)
            raise SweepAborted(str(exc), results) from exc
    if spec.output_path:
        write_results(results, spec.output_path, spec.format)
    return results


def load_config(path) -> ScenarioSpec:
    """Read a JSON scenario config; unknown keys are rejected."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError("config", str(exc)) from exc
    if not isinstance(data, dict):
        raise SpecError("config", "top level must be an object")
    base = ScenarioSpec()
    if "scenario" in data and data["scenario"] in BUILTIN_SCENARIOS:
        base = BUILTIN_SCENARIOS[data["scenario"]]
    known = set(ScenarioSpec.__dataclass_fields__)
    unknown = sorted(set(data) - known)
    if unknown:
        raise SpecError(f"config.{unknown[0]}", "unknown field")
    if isinstance(data.get("n"), list):
        data["n"] = tuple(data["n"])
    return replace(base, **data)


# ---------------------------------------------------------------- goldens

def golden_payload(result: ScenarioResult) -> dict:
    return {
        "scenario": result.scenario,
        "spec_hash": result.spec_hash,
        "n": result.n,
        "stage": result.stage,
        "retained": matrix_to_json(result.retained),
        "metrics": {k: float(v) for k, v in result.metric_rows()},
    }


def write_goldens(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, spec in BUILTIN_SCENARIOS.items():
        path = directory / f"{name}.json"
        path.write_text(json.dumps(golden_payload(run_scenario(spec)), indent=2) + "\n")
        paths.append(path)
    return paths


def _flatten(payload: dict) -> dict[str, float]:
    flat = {}
    for i, row in enumerate(payload["retained"]):
        for j, (re, im) in enumerate(row):
            flat[f"retained[{i}][{j}].re"] = re
            flat[f"retained[{i}][{j}].im"] = im
    for k, v in payload["metrics"].items():
        flat[f"metrics.{k}"] = v
    return flat


@dataclass
class GoldenReport:
    entries: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e["status"] == "pass" for e in self.entries)

    def lines(self) -> list[str]:
        out = list(self.notes)
        for e in self.entries:
            line = f"{e['status'].upper():13s} {e['scenario']}"
            if e["max_delta"] is not None:
                line += f"  max_delta={e['max_delta']:.3e} tol={e['tol']:.1e}"
            if e["failures"]:
                line += "  entries: " + ", ".join(e["failures"])
            out.append(line)
        return out


def verify_goldens(directory) -> GoldenReport:
    """Recompute every builtin scenario and compare against ``directory``.

    Per-scenario tolerances come from ``tolerances.json`` (keys are scenario
    names, ``"default"`` sets the fallback); without it every file uses 1e-9.
    """
    directory = Path(directory)
    report = GoldenReport()
    tol_file = directory / "tolerances.json"
    if tol_file.exists():
        tolerances = json.loads(tol_file.read_text())
        default_tol = float(tolerances.get("default", DEFAULT_GOLDEN_TOL))
        report.notes.append(f"tolerances from {tol_file.name} (default {default_tol:g})")
    else:
        tolerances = {}
        default_tol = DEFAULT_GOLDEN_TOL
        report.notes.append(f"no tolerances.json; using default tolerance {DEFAULT_GOLDEN_TOL:g}")

    for name, spec in BUILTIN_SCENARIOS.items():
        tol = float(tolerances.get(name, default_tol))
        path = directory / f"{name}.json"
        entry = {"scenario": name, "tol": tol, "max_delta": None, "failures": []}
        if not path.exists():
            entry["status"] = "uninitialized"
            report.entries.append(entry)
            continue
        expected = _flatten(json.loads(path.read_text()))
        actual = _flatten(golden_payload(run_scenario(spec)))
        deltas = {}
        for key, value in expected.items():
            if key not in actual:
                entry["failures"].append(f"{key} (missing)")
                continue
            deltas[key] = abs(actual[key] - value)
        for key in actual.keys() - expected.keys():
            entry["failures"].append(f"{key} (unexpected)")
        entry["max_delta"] = max(deltas.values()) if deltas else 0.0
        entry["failures"] += [k for k, d in deltas.items() if d > tol]
        entry["status"] = "fail" if entry["failures"] else "pass"
        report.entries.append(entry)
    return report
