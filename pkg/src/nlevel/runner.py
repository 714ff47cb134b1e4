"""Scenario execution: evolutions, reductions, phase computations,
full-vs-reduced comparisons and invariant diagnostics.

Artifacts are deterministic: CSV traces stream row by row during
integration, the JSON report is written atomically at the end with
canonical formatting, and identical scenarios (same seed) produce byte
identical reports.  Exit codes: 0 success, 2 validation error, 3 runtime
breakdown, 4 invariant violation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np

from . import __version__
from .coset import CosetPoint, extract_Z, reconstruct_U0
from .dynamics import BlockHamiltonian, build_hamiltonian, evolve_state, evolve_unitary
from .errors import ChartBreakdown, NLevelError, UndefinedPhase
from .phase import (
    BASE_CONVENTION,
    CLOSURE_TOL,
    KinematicCurve,
    PhaseReport,
    geometric_phase_schrodinger,
    kinematic_phases,
    line_integral_theta0,
    wrap_two_pi,
)
from .riccati import (
    MatrixRiccatiTrajectory,
    RayPoint,
    ReducedTrajectory,
    integrate_matrix_riccati,
    integrate_reduced,
    vector_riccati_rhs,
)
from .scenario import (
    Scenario,
    ScenarioValidationError,
    canonical_json,
    _format_float,
)
from .symplectic import hamiltonian_flow, pb_gamma_identities, symplectic_matrices

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BREAKDOWN = 3
EXIT_INVARIANT = 4

REPORT_CONVENTIONS = dict(
    BASE_CONVENTION,
    complex_encoding="[re, im]",
    float_format=".17g",
)

INVARIANT_THRESHOLDS = {
    "unitarity_drift_per_time": 5e-13,
    "gamma_intertwining": 1e-13,
    "inverse_pairing": 1e-10,
    "pb_identities": 1e-10,
    "flow_equivalence": 1e-10,
    "gamma_consistency": 1e-7,
}


@dataclass
class RunResult:
    exit_code: int
    report: dict
    files: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ComparisonReport:
    """Quantifies how well the reduced dynamics tracks the full evolution."""

    sup_error_Z: float | None = None
    sup_error_z: float | None = None
    gamma_consistency_max: float | None = None
    flow_equivalence_max: float | None = None
    breakdown: tuple[float, str] | None = None

    def to_dict(self) -> dict:
        return {
            "sup_error_Z": self.sup_error_Z,
            "sup_error_z": self.sup_error_z,
            "gamma_consistency_max": self.gamma_consistency_max,
            "flow_equivalence_max": self.flow_equivalence_max,
            "breakdown": None
            if self.breakdown is None
            else {"time": self.breakdown[0], "diagnostic": self.breakdown[1]},
        }


def _fmt(x: float) -> str:
    return _format_float(float(x))


def _phase_report_dict(rep: PhaseReport) -> dict:
    return {
        "phi_total": rep.phi_total,
        "phi_dynamical": rep.phi_dynamical,
        "phi_geometric": rep.phi_geometric,
        "phi_geometric_mod_2pi": wrap_two_pi(rep.phi_geometric),
        "convention": dict(rep.convention),
    }


class _Context:
    """Resolved inputs plus lazily computed trajectories for one scenario."""

    def __init__(self, sc: Scenario, steps_override: int | None):
        self.sc = sc
        self.prof = sc.tolerances
        self.h: BlockHamiltonian = build_hamiltonian(
            sc.hamiltonian, sc.partition, seed=sc.seed, prof=sc.tolerances
        )
        self.t0 = sc.time.t0
        self.t1 = sc.time.t1
        self.steps = steps_override if steps_override else sc.time.steps
        self._reduced: ReducedTrajectory | None = None
        self._matrix: MatrixRiccatiTrajectory | None = None

    @property
    def vector_mode(self) -> bool:
        return self.sc.partition.n2 == 1

    def matrix_Z0(self) -> CosetPoint:
        init = self.sc.initial
        part = self.sc.partition
        if init.kind == "coset_Z":
            return CosetPoint(part, init.coset_Z)
        if init.kind == "ray_z":
            return CosetPoint(part, init.ray_z[:, None])
        z0, _ = self.vector_initial()
        return CosetPoint(part, z0.z[:, None])

    def vector_initial(self) -> tuple[RayPoint, float]:
        """(z0, alpha0) for the ray-space route; requires n2 = 1."""
        init = self.sc.initial
        if init.kind == "ray_z":
            return RayPoint(init.ray_z), 0.0
        if init.kind == "coset_Z":
            return RayPoint(init.coset_Z[:, 0]), 0.0
        psi = init.state_vector
        eta = psi[-1]
        if abs(eta) < 1e-12:
            raise ChartBreakdown("initial state has vanishing last component")
        return RayPoint(psi[:-1] / eta), float(np.angle(eta))

    def psi_initial(self) -> np.ndarray:
        init = self.sc.initial
        if init.kind == "state_vector":
            return init.state_vector.copy()
        z0, _ = self.vector_initial()
        psi = np.concatenate([z0.z, [1.0 + 0.0j]])
        return psi / np.linalg.norm(psi)

    def unitary_initial(self) -> np.ndarray:
        return reconstruct_U0(self.matrix_Z0(), self.prof).assemble()

    def reduced(self, observer=None) -> ReducedTrajectory:
        if self._reduced is None or observer is not None:
            z0, alpha0 = self.vector_initial()
            self._reduced = integrate_reduced(
                self.h, z0, alpha0, self.t0, self.t1, self.steps, observer=observer
            )
        return self._reduced

    def matrix(self, observer=None) -> MatrixRiccatiTrajectory:
        if self._matrix is None or observer is not None:
            self._matrix = integrate_matrix_riccati(
                self.h, self.matrix_Z0(), self.t0, self.t1, self.steps, observer=observer
            )
        return self._matrix

    def oracle_steps(self) -> tuple[int, int]:
        """(full-evolution steps, subsampling stride).  The midpoint stepper
        is exact for constant H; time-dependent H gets an 8x finer oracle."""
        mult = 1 if self.h.is_constant else 8
        return self.steps * mult, mult


# --- trace writing -----------------------------------------------------------


def _reduced_header(n: int) -> str:
    cols = ["t"]
    for r in range(1, n + 1):
        cols += [f"re(z_{r})", f"im(z_{r})"]
    cols += ["gamma", "alpha"]
    return ",".join(cols)


def _matrix_header(n1: int, n2: int) -> str:
    cols = ["t"]
    for r in range(1, n1 + 1):
        for c in range(1, n2 + 1):
            cols += [f"re(Z_{r}_{c})", f"im(Z_{r}_{c})"]
    return ",".join(cols)


def _reduced_row(t: float, z: np.ndarray, gamma: float, alpha: float) -> str:
    vals = [_fmt(t)]
    for zr in z:
        vals += [_fmt(zr.real), _fmt(zr.imag)]
    vals += [_fmt(gamma), _fmt(alpha)]
    return ",".join(vals)


def _matrix_row(t: float, z: np.ndarray) -> str:
    vals = [_fmt(t)]
    for zr in z.reshape(-1):
        vals += [_fmt(zr.real), _fmt(zr.imag)]
    return ",".join(vals)


def _stream_writer(fh: IO[str], row_fn):
    def observer(*args):
        fh.write(row_fn(*args) + "\n")

    return observer


# --- tasks -------------------------------------------------------------------


def _task_evolve_reduced(ctx: _Context, out_dir: Path, formats, files: list[str]):
    breakdown = None
    if ctx.vector_mode:
        if "trace_csv" in formats:
            path = out_dir / "trace_reduced.csv"
            with open(path, "w") as fh:
                fh.write(_reduced_header(ctx.sc.partition.n1) + "\n")
                traj = ctx.reduced(observer=_stream_writer(fh, _reduced_row))
            files.append(str(path))
        else:
            traj = ctx.reduced()
        breakdown = traj.breakdown
    else:
        if "trace_csv" in formats:
            path = out_dir / "trace_matrix.csv"
            with open(path, "w") as fh:
                fh.write(_matrix_header(ctx.sc.partition.n1, ctx.sc.partition.n2) + "\n")
                traj = ctx.matrix(observer=_stream_writer(fh, _matrix_row))
            files.append(str(path))
        else:
            traj = ctx.matrix()
        breakdown = traj.breakdown
    return breakdown


def _task_evolve_full(ctx: _Context, out_dir: Path, formats, files: list[str]):
    """Full evolution projected onto the chart coordinates."""
    utraj = evolve_unitary(ctx.h, ctx.t0, ctx.t1, ctx.steps)
    breakdown = None
    rows = []
    if ctx.vector_mode and ctx.sc.initial.kind != "coset_Z":
        straj = evolve_state(ctx.h, ctx.psi_initial(), ctx.t0, ctx.t1, ctx.steps)
        eta = straj.states[:, -1]
        valid = np.abs(eta) ** 2 > 1e-12
        cut = int(np.argmin(valid)) if not np.all(valid) else len(eta)
        if cut < len(eta):
            breakdown = (float(straj.times[cut]), "last state component vanished (chart edge)")
        alphas = np.unwrap(np.angle(eta[:cut]))
        for k in range(cut):
            z = straj.states[k, :-1] / eta[k]
            gamma = 1.0 + float(np.sum(np.abs(z) ** 2))
            rows.append(_reduced_row(float(straj.times[k]), z, gamma, float(alphas[k])))
        header = _reduced_header(ctx.sc.partition.n1)
    else:
        u_init = ctx.unitary_initial()
        header = _matrix_header(ctx.sc.partition.n1, ctx.sc.partition.n2)
        for k, t in enumerate(utraj.times):
            try:
                zp = extract_Z(
                    _split_for(ctx, utraj.unitaries[k] @ u_init), ctx.prof
                )
            except ChartBreakdown as exc:
                breakdown = (float(t), f"chart breakdown during projection: {exc}")
                break
            rows.append(_matrix_row(float(t), zp.Z))
    if "trace_csv" in formats:
        path = out_dir / "trace_full.csv"
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(row + "\n")
        files.append(str(path))
    return breakdown


def _split_for(ctx: _Context, u: np.ndarray):
    from .coset import split_blocks

    return split_blocks(u, ctx.sc.partition, ctx.prof)


def _task_compare(ctx: _Context) -> ComparisonReport:
    part = ctx.sc.partition
    osteps, stride = ctx.oracle_steps()
    utraj = evolve_unitary(ctx.h, ctx.t0, ctx.t1, osteps)
    u_init = ctx.unitary_initial()

    mtraj = ctx.matrix()
    breakdown = None
    if mtraj.breakdown is not None:
        breakdown = (mtraj.breakdown.time, mtraj.breakdown.diagnostic)
    sup_z_mat = 0.0
    for k in range(len(mtraj.times)):
        try:
            zp = extract_Z(_split_for(ctx, utraj.unitaries[k * stride] @ u_init), ctx.prof)
        except ChartBreakdown as exc:
            if breakdown is None:
                breakdown = (float(mtraj.times[k]), f"oracle chart breakdown: {exc}")
            break
        sup_z_mat = max(sup_z_mat, float(np.max(np.abs(zp.Z - mtraj.Zs[k]))))

    sup_z_vec = None
    gamma_max = None
    flow_max = None
    if ctx.vector_mode:
        rtraj = ctx.reduced()
        if rtraj.breakdown is not None and breakdown is None:
            breakdown = (rtraj.breakdown.time, rtraj.breakdown.diagnostic)
        z0, alpha0 = ctx.vector_initial()
        psi0 = np.exp(1j * alpha0) * np.concatenate([z0.z, [1.0 + 0.0j]]) / np.sqrt(z0.gamma)
        straj = evolve_state(ctx.h, psi0, ctx.t0, ctx.t1, osteps)
        sup_z_vec = 0.0
        for k in range(len(rtraj.times)):
            psi = straj.states[k * stride]
            eta = psi[-1]
            if abs(eta) ** 2 <= 1e-6:  # outside the validated chart region
                continue
            sup_z_vec = max(sup_z_vec, float(np.max(np.abs(psi[:-1] / eta - rtraj.zs[k]))))
        gamma_max = rtraj.gamma_consistency_max()
        flow_max = 0.0
        stride_flow = max(1, len(rtraj.times) // 100)
        for k in range(0, len(rtraj.times), stride_flow):
            pt = RayPoint(rtraj.zs[k])
            sample = ctx.h.blocks(float(rtraj.times[k]))
            delta = hamiltonian_flow(pt, sample) - vector_riccati_rhs(pt, sample)
            flow_max = max(flow_max, float(np.max(np.abs(delta))))
    return ComparisonReport(
        sup_error_Z=sup_z_mat,
        sup_error_z=sup_z_vec,
        gamma_consistency_max=gamma_max,
        flow_equivalence_max=flow_max,
        breakdown=breakdown,
    )


def _build_curve(ctx: _Context, options: dict) -> KinematicCurve:
    source = options.get("curve", {"from": "reduced"})
    if not isinstance(source, dict):
        raise ScenarioValidationError([("tasks.kinematic_phases.curve", "expected an object")])
    origin = source.get("from", "reduced")
    if origin == "reduced":
        return KinematicCurve.from_trajectory(ctx.reduced())
    if origin == "circle":
        if ctx.sc.partition.n1 != 1 or ctx.sc.partition.n2 != 1:
            raise ScenarioValidationError(
                [("tasks.kinematic_phases.curve", "circle curves need partition (1, 1)")]
            )
        radius = float(source.get("radius", 1.0))
        samples = int(source.get("samples", 10000))
        turns = float(source.get("turns", 1.0))
        direction = float(source.get("direction", 1.0))
        s = np.linspace(0.0, 2.0 * np.pi * turns, samples)
        z = radius * np.exp(1j * direction * s)
        return KinematicCurve(s, z[:, None])
    if origin == "samples":
        from .scenario import _decode_cmatrix, _Issues

        issues = _Issues()
        pts = _decode_cmatrix(source.get("points"), "tasks.kinematic_phases.curve.points", issues)
        issues.raise_if_any()
        params = np.asarray(source.get("params", np.arange(pts.shape[0])), dtype=float)
        alphas = source.get("alphas")
        return KinematicCurve(params, pts, None if alphas is None else np.asarray(alphas, float))
    raise ScenarioValidationError(
        [("tasks.kinematic_phases.curve", f"unknown curve source {origin!r}")]
    )


def _task_kinematic(ctx: _Context, options: dict) -> dict:
    curve = _build_curve(ctx, options)
    rep = kinematic_phases(curve)
    out = _phase_report_dict(rep)
    gap = float(np.linalg.norm(curve.points[0] - curve.points[-1]))
    if gap < CLOSURE_TOL:
        out["loop_symplectic_area"] = -line_integral_theta0(curve)
    return out


def check_invariants(ctx: _Context) -> list[dict]:
    """Evaluate the cross-module invariant suite along this scenario's
    trajectories.  Failures are data, not exceptions."""
    rows: list[dict] = []

    def add(name: str, residual: float):
        thr = INVARIANT_THRESHOLDS[name]
        rows.append(
            {
                "name": name,
                "max_residual": float(residual),
                "threshold": thr,
                "passed": bool(residual <= thr),
            }
        )

    utraj = evolve_unitary(ctx.h, ctx.t0, ctx.t1, ctx.steps)
    duration = np.maximum(1.0, utraj.times - ctx.t0)
    defects = np.array(
        [
            float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))
            for u in utraj.unitaries
        ]
    )
    add("unitarity_drift_per_time", float(np.max(defects / duration)))

    u_init = ctx.unitary_initial()
    stride = max(1, len(utraj.times) // 40)
    inter = 0.0
    for k in range(0, len(utraj.times), stride):
        try:
            zp = extract_Z(_split_for(ctx, utraj.unitaries[k] @ u_init), ctx.prof)
        except ChartBreakdown:
            continue
        inter = max(inter, zp.intertwining_residual())
    add("gamma_intertwining", inter)

    mtraj = ctx.matrix()
    stride = max(1, len(mtraj.times) // 40)
    pairing = 0.0
    identities = 0.0
    for k in range(0, len(mtraj.times), stride):
        pt = RayPoint(mtraj.Zs[k].reshape(-1))
        pairing = max(pairing, symplectic_matrices(pt).inverse_pairing_residual())
        identities = max(identities, pb_gamma_identities(pt).max_residual)
    add("inverse_pairing", pairing)
    add("pb_identities", identities)

    if ctx.vector_mode:
        rtraj = ctx.reduced()
        stride = max(1, len(rtraj.times) // 40)
        flow = 0.0
        for k in range(0, len(rtraj.times), stride):
            pt = RayPoint(rtraj.zs[k])
            sample = ctx.h.blocks(float(rtraj.times[k]))
            delta = hamiltonian_flow(pt, sample) - vector_riccati_rhs(pt, sample)
            flow = max(flow, float(np.max(np.abs(delta))))
        add("flow_equivalence", flow)
        add("gamma_consistency", rtraj.gamma_consistency_max())
    return rows


# --- entry points ------------------------------------------------------------


def write_report(report: dict, path: Path):
    """Atomic canonical-JSON write."""
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(canonical_json(report) + "\n")
    os.replace(tmp, path)


def run_scenario(
    sc: Scenario,
    out_dir: str | None = None,
    steps_override: int | None = None,
    quiet: bool = True,
) -> RunResult:
    """Execute all tasks of a scenario and write its artifacts.

    Returns the exit code, the report dictionary, and the list of files
    written.  Runtime breakdowns and invariant violations are reported in
    the artifacts and reflected in the exit code, not raised.
    """
    ctx = _Context(sc, steps_override)
    directory = Path(out_dir) if out_dir else Path(sc.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    formats = sc.output.formats
    files: list[str] = []
    report: dict = {
        "scenario": sc.to_dict(),
        "conventions": dict(REPORT_CONVENTIONS),
        "versions": {"package": __version__, "report_schema": 1},
    }
    breakdowns: list[tuple[float, str]] = []
    invariant_failed = False

    def note(msg: str):
        if not quiet:
            print(msg)

    try:
        for task in sc.tasks:
            if task.kind == "evolve_reduced":
                br = _task_evolve_reduced(ctx, directory, formats, files)
                if br is not None:
                    breakdowns.append((br.time, br.diagnostic))
                note(f"task evolve_reduced: {ctx.steps} steps")
            elif task.kind == "evolve_full":
                br = _task_evolve_full(ctx, directory, formats, files)
                if br is not None:
                    breakdowns.append(br)
                note(f"task evolve_full: {ctx.steps} steps")
            elif task.kind == "compare":
                comp = _task_compare(ctx)
                report["comparison"] = comp.to_dict()
                if comp.breakdown is not None:
                    breakdowns.append(comp.breakdown)
                note("task compare: done")
            elif task.kind == "phases":
                traj = ctx.reduced()
                if traj.breakdown is not None:
                    breakdowns.append((traj.breakdown.time, traj.breakdown.diagnostic))
                rep = geometric_phase_schrodinger(
                    traj, ctx.h, float(traj.times[0]), float(traj.times[-1])
                )
                report.setdefault("phases", {})["schrodinger"] = _phase_report_dict(rep)
                note(f"task phases: phi_geom = {rep.phi_geometric:.9g}")
            elif task.kind == "kinematic_phases":
                report.setdefault("phases", {})["kinematic"] = _task_kinematic(ctx, task.options)
                note("task kinematic_phases: done")
            elif task.kind == "check_invariants":
                rows = check_invariants(ctx)
                report["invariants"] = rows
                invariant_failed = invariant_failed or any(not r["passed"] for r in rows)
                note(f"task check_invariants: {sum(r['passed'] for r in rows)}/{len(rows)} passed")
    except (UndefinedPhase, ChartBreakdown) as exc:
        breakdowns.append((ctx.t0, f"{type(exc).__name__}: {exc}"))
    except NLevelError as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        breakdowns.append((ctx.t0, str(exc)))

    if breakdowns:
        report["breakdown"] = {"time": breakdowns[0][0], "diagnostic": breakdowns[0][1]}
    if "report_json" in formats:
        path = directory / "report.json"
        write_report(report, path)
        files.append(str(path))

    if breakdowns:
        code = EXIT_BREAKDOWN
    elif invariant_failed:
        code = EXIT_INVARIANT
    else:
        code = EXIT_OK
    return RunResult(code, report, files)
