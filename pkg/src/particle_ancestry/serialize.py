"""CSV and JSON renderings of the package's result objects.

Every emitted artifact stamps a schema tag (a ``# schema:`` comment line
in CSV, a ``"schema"`` key in JSON) and is re-parseable by the readers
here.  Floats in CSV are rendered with 17 significant digits so emitted
files diff cleanly across runs.
"""

from __future__ import annotations

import json

import numpy as np

from .analytic import AnalyticReport, CounterexampleParams
from .conditional import (
    ConditionalEstimate,
    DiagnosticEntry,
    DiagnosticsReport,
    ReportRow,
)
from .coupling import IndependenceResult, MismatchReport, MismatchRow
from .errors import ParameterError
from .simulate import DiscreteModel, Trajectory

__all__ = [
    "fmt",
    "render_json",
    "render_r_curve_csv",
    "parse_r_curve_csv",
    "render_report_csv",
    "parse_report_csv",
    "render_coupling_csv",
    "parse_coupling_csv",
    "analytic_to_dict",
    "estimate_to_dict",
    "diagnostics_to_dict",
    "independence_to_dict",
    "model_to_dict",
    "model_from_dict",
    "trajectory_to_dict",
    "trajectory_from_dict",
]

R_CURVE_SCHEMA = "r-curve/1"
REPORT_SCHEMA = "report/1"
COUPLING_SCHEMA = "coupling-rates/1"


def fmt(x) -> str:
    """17-significant-digit decimal rendering; empty string for None."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def render_json(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _check_schema_line(lines: list[str], expected: str) -> list[str]:
    if not lines or lines[0].strip() != f"# schema: {expected}":
        raise ParameterError(f"missing or wrong schema stamp, expected {expected}")
    return lines[1:]


def _data_lines(lines: list[str]) -> list[str]:
    return [ln for ln in lines if ln.strip() and not ln.startswith("#")]


# -- R curve ---------------------------------------------------------------


def render_r_curve_csv(rows) -> str:
    rows = np.asarray(rows, dtype=float)
    out = [f"# schema: {R_CURVE_SCHEMA}", "p_b,R"]
    for pb, r in rows:
        out.append(f"{fmt(pb)},{fmt(r)}")
    return "\n".join(out) + "\n"


def parse_r_curve_csv(text: str) -> np.ndarray:
    lines = _check_schema_line(text.splitlines(), R_CURVE_SCHEMA)
    data = _data_lines(lines)
    if not data or data[0].strip() != "p_b,R":
        raise ParameterError("r-curve CSV must start with header p_b,R")
    return np.array(
        [[float(v) for v in ln.split(",")] for ln in data[1:]], dtype=float
    )


# -- counterexample report -------------------------------------------------

_REPORT_HEADER = "N,exact,pred_2_over_N,scaled,mc_p_hat,mc_std_err,R"


def render_report_csv(rows) -> str:
    out = [f"# schema: {REPORT_SCHEMA}", _REPORT_HEADER]
    for row in rows:
        out.append(
            ",".join(
                [
                    str(row.N),
                    fmt(row.exact),
                    fmt(row.predicted),
                    fmt(row.scaled),
                    fmt(row.mc_p_hat),
                    fmt(row.mc_std_err),
                    fmt(row.R),
                ]
            )
        )
    return "\n".join(out) + "\n"


def parse_report_csv(text: str) -> tuple[ReportRow, ...]:
    lines = _check_schema_line(text.splitlines(), REPORT_SCHEMA)
    data = _data_lines(lines)
    if not data or data[0].strip() != _REPORT_HEADER:
        raise ParameterError(f"report CSV must start with header {_REPORT_HEADER}")
    rows = []
    for ln in data[1:]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise ParameterError(f"malformed report row: {ln!r}")
        rows.append(
            ReportRow(
                N=int(parts[0]),
                exact=float(parts[1]),
                predicted=float(parts[2]),
                scaled=float(parts[3]),
                mc_p_hat=float(parts[4]) if parts[4] else None,
                mc_std_err=float(parts[5]) if parts[5] else None,
                R=float(parts[6]),
            )
        )
    return tuple(rows)


# -- coupling mismatch rates -------------------------------------------------

_COUPLING_HEADER = "N,tilde_mismatch,tilde_se,hat_mismatch,hat_se"


def render_coupling_csv(report: MismatchReport) -> str:
    out = [
        f"# schema: {COUPLING_SCHEMA}",
        f"# reps={report.reps}",
        f"# seed={report.seed}",
        f"# tilde_slope={fmt(report.tilde_slope)}",
        f"# hat_slope={fmt(report.hat_slope)}",
        _COUPLING_HEADER,
    ]
    for row in report.rows:
        out.append(
            ",".join(
                [
                    str(row.N),
                    fmt(row.tilde_mismatch),
                    fmt(row.tilde_se),
                    fmt(row.hat_mismatch),
                    fmt(row.hat_se),
                ]
            )
        )
    return "\n".join(out) + "\n"


def parse_coupling_csv(text: str) -> MismatchReport:
    lines = _check_schema_line(text.splitlines(), COUPLING_SCHEMA)
    meta = {}
    for ln in lines:
        if ln.startswith("# ") and "=" in ln:
            key, _, value = ln[2:].partition("=")
            meta[key.strip()] = value.strip()
    data = _data_lines(lines)
    if not data or data[0].strip() != _COUPLING_HEADER:
        raise ParameterError(f"coupling CSV must start with header {_COUPLING_HEADER}")
    rows = []
    for ln in data[1:]:
        parts = ln.split(",")
        if len(parts) != 5:
            raise ParameterError(f"malformed coupling row: {ln!r}")
        rows.append(
            MismatchRow(
                N=int(parts[0]),
                tilde_mismatch=float(parts[1]),
                tilde_se=float(parts[2]),
                hat_mismatch=float(parts[3]),
                hat_se=float(parts[4]),
            )
        )
    return MismatchReport(
        reps=int(meta.get("reps", 0)),
        seed=int(meta.get("seed", 0)),
        rows=tuple(rows),
        tilde_slope=float(meta["tilde_slope"]) if meta.get("tilde_slope") else None,
        hat_slope=float(meta["hat_slope"]) if meta.get("hat_slope") else None,
    )


# -- JSON payloads -----------------------------------------------------------


def analytic_to_dict(params: CounterexampleParams, report: AnalyticReport) -> dict:
    return {
        "schema": "analytic-report/1",
        "alpha": params.alpha,
        "p_a": params.p_a,
        "p_b": params.p_b,
        "q_a": report.q_a,
        "q_b": report.q_b,
        "q_a_prime": report.q_a_prime,
        "q_b_prime": report.q_b_prime,
        "t1": report.t1,
        "t2": report.t2,
        "t3": report.t3,
        "R": report.R,
    }


def estimate_to_dict(N: int, est: ConditionalEstimate) -> dict:
    return {
        "schema": "conditional-estimate/1",
        "N": int(N),
        "raw_reps": est.raw_reps,
        "conditioned_hits": est.conditioned_hits,
        "target_hits": est.target_hits,
        "p_hat": est.p_hat,
        "scaled": est.scaled,
        "std_err": est.std_err,
        "seed": est.seed,
    }


def diagnostics_to_dict(report: DiagnosticsReport) -> dict:
    return {
        "schema": "diagnostics/1",
        "alpha": report.alpha,
        "p_a": report.p_a,
        "p_b": report.p_b,
        "N": report.N,
        "reps": report.reps,
        "seed": report.seed,
        "entries": [
            {
                "name": e.name,
                "empirical": e.empirical,
                "std_err": e.std_err,
                "analytic": e.analytic,
                "samples": e.samples,
            }
            for e in report.entries
        ],
    }


def diagnostics_from_dict(d: dict) -> DiagnosticsReport:
    if d.get("schema") != "diagnostics/1":
        raise ParameterError("not a diagnostics payload")
    return DiagnosticsReport(
        alpha=d["alpha"],
        p_a=d["p_a"],
        p_b=d["p_b"],
        N=d["N"],
        reps=d["reps"],
        seed=d["seed"],
        entries=tuple(
            DiagnosticEntry(
                name=e["name"],
                empirical=e["empirical"],
                std_err=e["std_err"],
                analytic=e["analytic"],
                samples=e["samples"],
            )
            for e in d["entries"]
        ),
    )


def independence_to_dict(result: IndependenceResult, N: int, reps: int, seed) -> dict:
    return {
        "schema": "independence/1",
        "N": int(N),
        "reps": int(reps),
        "seed": int(seed),
        "table": [[int(v) for v in row] for row in result.table],
        "row_labels": list(result.row_labels),
        "col_labels": list(result.col_labels),
        "chi2": result.chi2,
        "dof": result.dof,
        "p_value": result.p_value,
    }


# -- model / trajectory ------------------------------------------------------


def model_to_dict(model: DiscreteModel) -> dict:
    return {
        "schema": "model/1",
        "labels": list(model.labels),
        "initial_law": [float(x) for x in model.initial_law],
        "kernel": [[float(x) for x in row] for row in model.kernel],
        "potential": [float(x) for x in model.potential],
    }


def model_from_dict(d: dict) -> DiscreteModel:
    for key in ("labels", "initial_law", "kernel", "potential"):
        if key not in d:
            raise ParameterError(f"model JSON missing field {key!r}")
    return DiscreteModel(
        labels=tuple(d["labels"]),
        initial_law=np.asarray(d["initial_law"], dtype=float),
        kernel=np.asarray(d["kernel"], dtype=float),
        potential=np.asarray(d["potential"], dtype=float),
    )


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "schema": "trajectory/1",
        "N": traj.N,
        "T": traj.T,
        "seed": traj.seed,
        "labels": list(traj.labels),
        "positions": [[int(v) for v in row] for row in traj.positions],
        "weights": [[float(v) for v in row] for row in traj.weights],
        "ancestors": [[int(v) for v in row] for row in traj.ancestors],
    }


def trajectory_from_dict(d: dict) -> Trajectory:
    for key in ("N", "T", "seed", "labels", "positions", "weights", "ancestors"):
        if key not in d:
            raise ParameterError(f"trajectory JSON missing field {key!r}")
    return Trajectory(
        N=int(d["N"]),
        T=int(d["T"]),
        seed=int(d["seed"]),
        labels=tuple(d["labels"]),
        positions=np.asarray(d["positions"], dtype=np.int64),
        weights=np.asarray(d["weights"], dtype=float),
        ancestors=np.asarray(d["ancestors"], dtype=np.int64),
    )
