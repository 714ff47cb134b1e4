"""Declarative scenario documents.

The canonical format is JSON with explicit complex encoding: a complex
number is a two-element array [re, im], a complex vector is an array of
those, and a complex matrix is an array of rows (row-major).  Floats in
canonical output are rendered with 17 significant digits and keys are
sorted, so identical scenarios serialize to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .coset import Partition
from .dynamics import (
    ConstantSpec,
    Envelope,
    HamiltonianSpec,
    InterpolatedSpec,
    RotatingFieldSpec,
    SumOfTermsSpec,
)
from .errors import ScenarioParseError, ScenarioValidationError
from .matcore import ToleranceProfile, hermiticity_defect

TASK_KINDS = (
    "evolve_full",
    "evolve_reduced",
    "compare",
    "phases",
    "kinematic_phases",
    "check_invariants",
)
FORMATS = ("trace_csv", "report_json")


# --- canonical JSON ----------------------------------------------------------


def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError("cannot serialize non-finite float")
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def canonical_json(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, fixed float formatting."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        items = [canonical_json(v, indent + 2) for v in obj]
        return "[\n" + ",\n".join(inner + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if len(obj) == 0:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {canonical_json(obj[k], indent + 2)}"
            for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise TypeError(f"cannot canonically serialize {type(obj).__name__}")


# --- complex encoding --------------------------------------------------------


def encode_complex(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def encode_cvector(v: np.ndarray) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).reshape(-1)]


def encode_cmatrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


class _Issues:
    def __init__(self):
        self.items: list[tuple[str, str]] = []

    def add(self, path: str, msg: str):
        self.items.append((path, msg))

    def raise_if_any(self):
        if self.items:
            raise ScenarioValidationError(self.items)


def _decode_complex(obj, path: str, issues: _Issues) -> complex:
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj)
    ):
        issues.add(path, "complex numbers are encoded as [re, im]")
        return 0j
    return complex(obj[0], obj[1])


def _decode_cvector(obj, path: str, issues: _Issues) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) == 0:
        issues.add(path, "expected a nonempty array of [re, im] pairs")
        return np.zeros(1, dtype=complex)
    return np.array([_decode_complex(x, f"{path}[{i}]", issues) for i, x in enumerate(obj)])


def _decode_cmatrix(obj, path: str, issues: _Issues) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) == 0 or not all(isinstance(r, list) for r in obj):
        issues.add(path, "expected a nonempty array of rows of [re, im] pairs")
        return np.zeros((1, 1), dtype=complex)
    width = len(obj[0])
    if width == 0 or any(len(r) != width for r in obj):
        issues.add(path, "matrix rows must be nonempty and equally sized")
        return np.zeros((1, 1), dtype=complex)
    return np.array(
        [
            [_decode_complex(x, f"{path}[{i}][{j}]", issues) for j, x in enumerate(row)]
            for i, row in enumerate(obj)
        ]
    )


# --- scenario model ----------------------------------------------------------


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    steps: int


@dataclass(frozen=True, eq=False)
class InitialCondition:
    """Exactly one of state_vector, coset_Z, ray_z is set."""

    kind: str  # state_vector | coset_Z | ray_z
    state_vector: np.ndarray | None = None
    coset_Z: np.ndarray | None = None
    ray_z: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Task:
    kind: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    formats: tuple[str, ...] = ("trace_csv", "report_json")


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    partition: Partition
    hamiltonian: HamiltonianSpec
    initial: InitialCondition
    time: TimeGrid
    tasks: tuple[Task, ...]
    output: OutputSpec = OutputSpec()
    seed: int = 0
    tolerances: ToleranceProfile = ToleranceProfile()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "partition": {"n1": self.partition.n1, "n2": self.partition.n2},
            "seed": self.seed,
            "hamiltonian": _hamiltonian_to_dict(self.hamiltonian),
            "initial": _initial_to_dict(self.initial),
            "time": {"t0": self.time.t0, "t1": self.time.t1, "steps": self.time.steps},
            "tasks": [t.kind if not t.options else {t.kind: t.options} for t in self.tasks],
            "output": {
                "directory": self.output.directory,
                "formats": list(self.output.formats),
            },
            "tolerances": {
                "hermiticity_tol": self.tolerances.hermiticity_tol,
                "unitarity_tol": self.tolerances.unitarity_tol,
                "positivity_floor": self.tolerances.positivity_floor,
                "singularity_tol": self.tolerances.singularity_tol,
            },
        }


def serialize_scenario(sc: Scenario) -> str:
    return canonical_json(sc.to_dict()) + "\n"


def _hamiltonian_to_dict(spec: HamiltonianSpec) -> dict:
    if isinstance(spec, ConstantSpec):
        if spec.matrix is not None:
            return {"kind": "constant", "matrix": encode_cmatrix(spec.matrix)}
        return {"kind": "constant", "random": {"norm": spec.random_norm}}
    if isinstance(spec, RotatingFieldSpec):
        return {
            "kind": "rotating_field",
            "amplitude": spec.amplitude,
            "frequency": spec.frequency,
            "tilt": spec.tilt,
        }
    if isinstance(spec, InterpolatedSpec):
        return {
            "kind": "interpolated_samples",
            "times": [float(t) for t in spec.times],
            "matrices": [encode_cmatrix(m) for m in spec.matrices],
        }
    if isinstance(spec, SumOfTermsSpec):
        return {
            "kind": "sum_of_terms",
            "terms": [
                {
                    "matrix": encode_cmatrix(m),
                    "envelope": {
                        "kind": e.kind,
                        "amplitude": e.amplitude,
                        "frequency": e.frequency,
                        "phase": e.phase,
                    },
                }
                for m, e in spec.terms
            ],
        }
    raise TypeError(f"unknown spec {type(spec).__name__}")


def _initial_to_dict(init: InitialCondition) -> dict:
    if init.kind == "state_vector":
        return {"state_vector": encode_cvector(init.state_vector)}
    if init.kind == "coset_Z":
        return {"coset_Z": encode_cmatrix(init.coset_Z)}
    return {"ray_z": encode_cvector(init.ray_z)}


# --- parsing / validation ----------------------------------------------------


def _expect_number(obj, path: str, issues: _Issues, default: float = 0.0) -> float:
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        issues.add(path, "expected a number")
        return default
    return float(obj)


def _expect_int(obj, path: str, issues: _Issues, default: int = 1) -> int:
    if not isinstance(obj, int) or isinstance(obj, bool):
        issues.add(path, "expected an integer")
        return default
    return obj


def _parse_hamiltonian(obj, n: int, prof: ToleranceProfile, issues: _Issues) -> HamiltonianSpec:
    fallback = ConstantSpec(matrix=np.zeros((n, n), dtype=complex))
    if not isinstance(obj, dict):
        issues.add("hamiltonian", "expected an object with a 'kind' key")
        return fallback
    kind = obj.get("kind")
    if kind == "constant":
        if "matrix" in obj:
            m = _decode_cmatrix(obj["matrix"], "hamiltonian.matrix", issues)
            if m.shape != (n, n):
                issues.add("hamiltonian.matrix", f"expected {n} x {n}, got {m.shape}")
            elif hermiticity_defect(m) > prof.hermiticity_tol:
                issues.add("hamiltonian.matrix", "matrix is not Hermitian")
            return ConstantSpec(matrix=m)
        if "random" in obj:
            r = obj["random"] if isinstance(obj["random"], dict) else {}
            norm = _expect_number(r.get("norm", 1.0), "hamiltonian.random.norm", issues, 1.0)
            if norm <= 0:
                issues.add("hamiltonian.random.norm", "must be positive")
            return ConstantSpec(random_norm=norm)
        issues.add("hamiltonian", "constant kind needs 'matrix' or 'random'")
        return fallback
    if kind == "rotating_field":
        if n != 2:
            issues.add("hamiltonian", "rotating_field requires N = 2")
        return RotatingFieldSpec(
            amplitude=_expect_number(obj.get("amplitude"), "hamiltonian.amplitude", issues),
            frequency=_expect_number(obj.get("frequency"), "hamiltonian.frequency", issues),
            tilt=_expect_number(obj.get("tilt"), "hamiltonian.tilt", issues),
        )
    if kind == "interpolated_samples":
        times = obj.get("times")
        mats = obj.get("matrices")
        if not isinstance(times, list) or len(times) < 2:
            issues.add("hamiltonian.times", "need at least 2 grid times")
            return fallback
        tgrid = np.array([_expect_number(t, f"hamiltonian.times[{i}]", issues) for i, t in enumerate(times)])
        if np.any(np.diff(tgrid) <= 0):
            issues.add("hamiltonian.times", "grid must be strictly increasing")
        if not isinstance(mats, list) or len(mats) != len(times):
            issues.add("hamiltonian.matrices", "need one matrix per grid time")
            return fallback
        decoded = []
        for i, m in enumerate(mats):
            mm = _decode_cmatrix(m, f"hamiltonian.matrices[{i}]", issues)
            if mm.shape != (n, n):
                issues.add(f"hamiltonian.matrices[{i}]", f"expected {n} x {n}, got {mm.shape}")
            elif hermiticity_defect(mm) > prof.hermiticity_tol:
                issues.add(f"hamiltonian.matrices[{i}]", "matrix is not Hermitian")
            decoded.append(mm)
        return InterpolatedSpec(times=tgrid, matrices=tuple(decoded))
    if kind == "sum_of_terms":
        terms = obj.get("terms")
        if not isinstance(terms, list) or len(terms) == 0:
            issues.add("hamiltonian.terms", "need a nonempty term list")
            return fallback
        out = []
        for i, term in enumerate(terms):
            if not isinstance(term, dict) or "matrix" not in term:
                issues.add(f"hamiltonian.terms[{i}]", "each term needs 'matrix' and 'envelope'")
                continue
            m = _decode_cmatrix(term["matrix"], f"hamiltonian.terms[{i}].matrix", issues)
            if m.shape != (n, n):
                issues.add(f"hamiltonian.terms[{i}].matrix", f"expected {n} x {n}, got {m.shape}")
            elif hermiticity_defect(m) > prof.hermiticity_tol:
                issues.add(f"hamiltonian.terms[{i}].matrix", "matrix is not Hermitian")
            env = term.get("envelope", {"kind": "const"})
            if not isinstance(env, dict) or env.get("kind") not in ("const", "cos", "sin"):
                issues.add(f"hamiltonian.terms[{i}].envelope", "kind must be const, cos or sin")
                env = {"kind": "const"}
            out.append(
                (
                    m,
                    Envelope(
                        kind=env.get("kind", "const"),
                        amplitude=_expect_number(
                            env.get("amplitude", 1.0),
                            f"hamiltonian.terms[{i}].envelope.amplitude",
                            issues,
                            1.0,
                        ),
                        frequency=_expect_number(
                            env.get("frequency", 0.0),
                            f"hamiltonian.terms[{i}].envelope.frequency",
                            issues,
                        ),
                        phase=_expect_number(
                            env.get("phase", 0.0),
                            f"hamiltonian.terms[{i}].envelope.phase",
                            issues,
                        ),
                    ),
                )
            )
        return SumOfTermsSpec(terms=tuple(out))
    issues.add("hamiltonian.kind", f"unknown kind {kind!r}")
    return fallback


def _parse_initial(obj, part: Partition, issues: _Issues) -> InitialCondition:
    fallback = InitialCondition(kind="ray_z", ray_z=np.zeros(max(part.N - 1, 1), dtype=complex))
    if not isinstance(obj, dict) or len(obj) != 1:
        issues.add("initial", "expected exactly one of state_vector, coset_Z, ray_z")
        return fallback
    key = next(iter(obj))
    if key == "state_vector":
        v = _decode_cvector(obj[key], "initial.state_vector", issues)
        if v.shape[0] != part.N:
            issues.add("initial.state_vector", f"expected {part.N} components, got {v.shape[0]}")
        elif abs(np.linalg.norm(v) - 1.0) > 1e-10:
            issues.add("initial.state_vector", "state vector must have unit norm")
        return InitialCondition(kind="state_vector", state_vector=v)
    if key == "coset_Z":
        m = _decode_cmatrix(obj[key], "initial.coset_Z", issues)
        if m.shape != (part.n1, part.n2):
            issues.add("initial.coset_Z", f"expected {part.n1} x {part.n2}, got {m.shape}")
        return InitialCondition(kind="coset_Z", coset_Z=m)
    if key == "ray_z":
        if part.n2 != 1:
            issues.add("initial.ray_z", "ray_z initial data requires partition (N-1, 1)")
        v = _decode_cvector(obj[key], "initial.ray_z", issues)
        if v.shape[0] != part.n1:
            issues.add("initial.ray_z", f"expected {part.n1} components, got {v.shape[0]}")
        return InitialCondition(kind="ray_z", ray_z=v)
    issues.add("initial", f"unknown initial kind {key!r}")
    return fallback


def _parse_tasks(obj, part: Partition, issues: _Issues) -> tuple[Task, ...]:
    if not isinstance(obj, list) or len(obj) == 0:
        issues.add("tasks", "need a nonempty task list")
        return (Task("check_invariants"),)
    tasks = []
    for i, entry in enumerate(obj):
        if isinstance(entry, str):
            kind, options = entry, {}
        elif isinstance(entry, dict) and len(entry) == 1:
            kind = next(iter(entry))
            options = entry[kind]
            if not isinstance(options, dict):
                issues.add(f"tasks[{i}]", "task options must be an object")
                options = {}
        else:
            issues.add(f"tasks[{i}]", "tasks are strings or single-key objects")
            continue
        if kind not in TASK_KINDS:
            issues.add(f"tasks[{i}]", f"unknown task {kind!r}")
            continue
        if kind in ("phases",) and part.n2 != 1:
            issues.add(f"tasks[{i}]", f"task {kind!r} requires partition (N-1, 1)")
        tasks.append(Task(kind, options))
    if not tasks:
        issues.add("tasks", "no valid tasks")
        return (Task("check_invariants"),)
    return tuple(tasks)


def parse_scenario_dict(doc: dict) -> Scenario:
    issues = _Issues()
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a JSON object")

    name = doc.get("name", "scenario")
    if not isinstance(name, str) or not name:
        issues.add("name", "expected a nonempty string")
        name = "scenario"

    pd = doc.get("partition")
    if not isinstance(pd, dict):
        issues.add("partition", "expected an object {n1, n2}")
        part = Partition(1, 1)
    else:
        n1 = _expect_int(pd.get("n1"), "partition.n1", issues)
        n2 = _expect_int(pd.get("n2"), "partition.n2", issues)
        if n1 < 1:
            issues.add("partition.n1", "must be >= 1")
            n1 = 1
        if n2 < 1:
            issues.add("partition.n2", "must be >= 1")
            n2 = 1
        part = Partition(n1, n2)

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        issues.add("seed", "expected a nonnegative integer")
        seed = 0

    tol_doc = doc.get("tolerances", {})
    prof = ToleranceProfile()
    if isinstance(tol_doc, dict):
        kwargs = {}
        for key in ("hermiticity_tol", "unitarity_tol", "positivity_floor", "singularity_tol"):
            if key in tol_doc:
                val = _expect_number(tol_doc[key], f"tolerances.{key}", issues, getattr(prof, key))
                if val <= 0:
                    issues.add(f"tolerances.{key}", "must be strictly positive")
                else:
                    kwargs[key] = val
        prof = ToleranceProfile(**kwargs)
    elif tol_doc is not None:
        issues.add("tolerances", "expected an object")

    ham = _parse_hamiltonian(doc.get("hamiltonian"), part.N, prof, issues)
    init = _parse_initial(doc.get("initial"), part, issues)

    td = doc.get("time")
    if not isinstance(td, dict):
        issues.add("time", "expected an object {t0, t1, steps}")
        time = TimeGrid(0.0, 1.0, 1)
    else:
        t0 = _expect_number(td.get("t0", 0.0), "time.t0", issues)
        t1 = _expect_number(td.get("t1"), "time.t1", issues, t0 + 1.0)
        steps = _expect_int(td.get("steps"), "time.steps", issues)
        if t1 <= t0:
            issues.add("time.t1", "must exceed t0")
            t1 = t0 + 1.0
        if steps < 1:
            issues.add("time.steps", "must be >= 1")
            steps = 1
        time = TimeGrid(t0, t1, steps)
        if isinstance(ham, InterpolatedSpec) and len(ham.times) >= 2:
            if time.t0 < ham.times[0] - 1e-12 or time.t1 > ham.times[-1] + 1e-12:
                issues.add("hamiltonian.times", "interpolation grid does not cover the time window")

    tasks = _parse_tasks(doc.get("tasks"), part, issues)

    od = doc.get("output", {})
    output = OutputSpec()
    if isinstance(od, dict):
        directory = od.get("directory", "out")
        if not isinstance(directory, str) or not directory:
            issues.add("output.directory", "expected a nonempty string")
            directory = "out"
        fmts = od.get("formats", list(FORMATS))
        if not isinstance(fmts, list) or not all(f in FORMATS for f in fmts):
            issues.add("output.formats", f"formats must be a subset of {list(FORMATS)}")
            fmts = list(FORMATS)
        output = OutputSpec(directory=directory, formats=tuple(fmts))
    else:
        issues.add("output", "expected an object")

    # task/initial compatibility
    needs_vector = any(t.kind in ("evolve_reduced", "compare", "phases") for t in tasks)
    if needs_vector and part.n2 != 1 and init.kind != "coset_Z":
        issues.add("initial", "matrix-valued reduction (n2 > 1) needs a coset_Z initial")
    if init.kind == "state_vector" and part.n2 == 1 and init.state_vector is not None:
        if init.state_vector.shape[0] == part.N and abs(init.state_vector[-1]) < 1e-12:
            issues.add(
                "initial.state_vector",
                "last component must be nonzero to lie on the reduction chart",
            )

    issues.raise_if_any()
    return Scenario(
        name=name,
        partition=part,
        hamiltonian=ham,
        initial=init,
        time=time,
        tasks=tasks,
        output=output,
        seed=seed,
        tolerances=prof,
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises ScenarioParseError for malformed JSON and
    ScenarioValidationError (with key paths) for semantic problems.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"malformed scenario document: {exc}") from exc
    return parse_scenario_dict(doc)
