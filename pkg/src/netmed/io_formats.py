"""Loading of edge lists and covariate tables; serialization of reports.

Node identity convention: the row order of the covariate file is
authoritative, and edge-list node ids index those rows. Numbers are written
with full round-trip precision so reports can be diffed byte-for-byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, InputError, ParseError

__all__ = ["CovariateTable", "load_edgelist", "load_covariates", "emit_report"]


@dataclass(frozen=True, eq=False)
class CovariateTable:
    """Node-level covariates with outcome/treatment/control role bindings.

    ``columns`` maps each bound column name to a finite float array; all bound
    arrays share the same length, which defines the node count and node order.
    """

    columns: dict
    outcome: str
    treatment: str
    controls: tuple
    ids: np.ndarray | None = None

    def __post_init__(self):
        bound = [self.outcome, self.treatment, *self.controls]
        if len(set(bound)) != len(bound):
            raise InputError(f"role bindings overlap: {bound}")
        lengths = set()
        for name in bound:
            if name not in self.columns:
                raise InputError(f"bound column {name!r} not present in table")
            col = np.asarray(self.columns[name], dtype=np.float64)
            if col.ndim != 1:
                raise InputError(f"column {name!r} must be 1-dimensional")
            if not np.all(np.isfinite(col)):
                raise InputError(f"column {name!r} contains missing or non-finite values")
            self.columns[name] = col
            lengths.add(col.shape[0])
        if len(lengths) != 1:
            raise InputError(f"bound columns have differing lengths: {sorted(lengths)}")

    @property
    def n(self) -> int:
        return self.columns[self.outcome].shape[0]

    @property
    def design_names(self) -> tuple:
        return ("intercept", self.treatment, *self.controls)

    def design_matrix(self) -> np.ndarray:
        """W = [1, T, C] in the bound column order."""
        cols = [np.ones(self.n), self.columns[self.treatment]]
        cols.extend(self.columns[name] for name in self.controls)
        return np.column_stack(cols)

    def outcome_values(self) -> np.ndarray:
        return self.columns[self.outcome]

    def treatment_values(self) -> np.ndarray:
        return self.columns[self.treatment]


def load_edgelist(
    path,
    n_hint: int | None = None,
    symmetrize: str = "none",
    weighted: bool = False,
    one_based: bool = False,
) -> np.ndarray:
    """Read a ``src,dst[,weight]`` edge list into a dense adjacency matrix.

    Duplicate edges are summed, then the symmetrize policy is applied:
    ``"none"`` keeps entries as accumulated, ``"max"`` takes max(A, A^T), and
    ``"mean"`` takes (A + A^T) / 2. Nodes up to ``n_hint`` that never appear
    are kept as zero rows; ids at or beyond ``n_hint`` are an error.
    """
    if symmetrize not in ("none", "max", "mean"):
        raise InputError(f"unknown symmetrize policy {symmetrize!r}")
    path = Path(path)
    edges = []
    max_id = -1
    with path.open("r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if weighted:
                if len(parts) not in (2, 3):
                    raise ParseError(
                        f"{path}:{lineno}: expected 'src,dst[,weight]', got {line!r}",
                        line=lineno,
                    )
            elif len(parts) != 2:
                raise ParseError(
                    f"{path}:{lineno}: expected 'src,dst', got {line!r}", line=lineno
                )
            try:
                src = int(parts[0])
                dst = int(parts[1])
                weight = float(parts[2]) if weighted and len(parts) == 3 else 1.0
            except ValueError:
                raise ParseError(
                    f"{path}:{lineno}: could not parse row {line!r}", line=lineno
                ) from None
            if one_based:
                src -= 1
                dst -= 1
            if src < 0 or dst < 0:
                raise ParseError(
                    f"{path}:{lineno}: negative node id after base adjustment", line=lineno
                )
            edges.append((src, dst, weight))
            max_id = max(max_id, src, dst)

    if n_hint is not None:
        if max_id >= n_hint:
            raise InputError(
                f"{path}: node id {max_id} out of bounds for n_hint={n_hint}"
            )
        n = n_hint
    else:
        if max_id < 0:
            raise InputError(f"{path}: empty edge list and no n_hint given")
        n = max_id + 1

    a = np.zeros((n, n))
    for src, dst, weight in edges:
        a[src, dst] += weight

    if symmetrize == "max":
        a = np.maximum(a, a.T)
    elif symmetrize == "mean":
        a = (a + a.T) / 2.0
    return a


def load_covariates(
    path,
    outcome: str,
    treatment: str,
    controls=(),
    id_column: str | None = None,
) -> CovariateTable:
    """Read a headered CSV of node covariates and bind column roles.

    Row order defines the node index, aligning rows with the adjacency
    matrix. Only bound columns (and the optional id column) are parsed; they
    must be numeric with no missing cells.
    """
    path = Path(path)
    controls = tuple(controls)
    wanted = [outcome, treatment, *controls]
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty, expected a header row", line=1) from None
        header = [h.strip() for h in header]
        missing = [name for name in wanted if name not in header]
        if missing:
            raise InputError(
                f"{path}: bound column(s) {missing} not found in header {header}"
            )
        if id_column is not None and id_column not in header:
            raise InputError(f"{path}: id column {id_column!r} not found in header")

        col_idx = {name: header.index(name) for name in wanted}
        if id_column is not None:
            col_idx[id_column] = header.index(id_column)

        values: dict[str, list[float]] = {name: [] for name in col_idx}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}",
                    line=lineno,
                )
            for name, idx in col_idx.items():
                cell = row[idx].strip()
                if cell == "":
                    raise InputError(f"{path}:{lineno}: missing value in column {name!r}")
                try:
                    values[name].append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {name!r}"
                    ) from None

    ids = np.asarray(values.pop(id_column), dtype=np.float64) if id_column else None
    columns = {name: np.asarray(vals, dtype=np.float64) for name, vals in values.items()}
    if not columns[outcome].shape[0]:
        raise InputError(f"{path}: no data rows")
    return CovariateTable(
        columns=columns, outcome=outcome, treatment=treatment, controls=controls, ids=ids
    )


def _effect_dict(effect) -> dict:
    return {
        "point": effect.point,
        "sigma2": effect.sigma2,
        "ci_low": effect.ci_low,
        "ci_high": effect.ci_high,
    }


def mediation_report_dict(report) -> dict:
    """JSON-ready dictionary for a MediationReport."""
    payload = {
        "n": report.n,
        "d": report.d,
        "side": report.side,
        "contrast": list(report.contrast),
        "alpha": report.alpha,
        "effects": {
            "nde": _effect_dict(report.nde),
            "nie": _effect_dict(report.nie),
            "total": _effect_dict(report.total),
        },
        "coefficients": {
            "outcome": {
                "names": list(report.coef_names),
                "estimate": report.beta.tolist(),
                "std_error": report.beta_se.tolist(),
            },
            "mediator": {
                "rows": list(report.coef_names[: report.theta.shape[0]]),
                "estimate": report.theta.tolist(),
            },
        },
        "sensitivity": None,
    }
    if report.sensitivity is not None:
        payload["sensitivity"] = [_curve_row_dicts(row) for row in report.sensitivity]
    return payload


def _curve_row_dicts(row) -> dict:
    entry = {"d": row.d, "error": row.error}
    for kind in ("nde", "nie", "total"):
        effect = getattr(row, kind)
        entry[kind] = _effect_dict(effect) if effect is not None else None
    return entry


def curve_csv_rows(rows) -> list[list]:
    """Flatten sensitivity rows into ``d,effect,point,ci_low,ci_high`` records."""
    records = []
    for row in rows:
        for kind in ("nde", "nie", "total"):
            effect = getattr(row, kind)
            if effect is None:
                records.append([row.d, kind, float("nan"), float("nan"), float("nan")])
            else:
                records.append([row.d, kind, effect.point, effect.ci_low, effect.ci_high])
    return records


_CELL_FIELDS = (
    "n",
    "d_fit",
    "rep_count",
    "excluded",
    "mse_nde",
    "mse_nie",
    "bias_nde",
    "bias_nie",
    "bias_se_nde",
    "bias_se_nie",
    "coverage_nde",
    "coverage_nie",
    "theta_err",
    "beta_err",
)


def _write_curve_csv(rows, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["d", "effect", "point", "ci_low", "ci_high"])
        for record in curve_csv_rows(rows):
            writer.writerow([repr(v) if isinstance(v, float) else v for v in record])


def _write_cells_csv(report, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CELL_FIELDS)
        for cell in report.cells:
            row = []
            for name in _CELL_FIELDS:
                value = getattr(cell, name)
                row.append(repr(value) if isinstance(value, float) else value)
            writer.writerow(row)


def emit_report(report, path, format: str = "json") -> None:
    """Serialize a report to ``path``.

    Accepts a MediationReport (``json`` for the full report, ``csv`` for its
    sensitivity curve), a list of sensitivity rows (``csv``), or a SimReport
    (``csv`` for the per-cell table, ``json`` for the summary document).
    Floats are written with full round-trip precision.
    """
    from .mediation import MediationReport
    from .simharness import SimReport

    path = Path(path)
    if format not in ("json", "csv"):
        raise InputError(f"unknown report format {format!r}")

    if isinstance(report, MediationReport):
        if format == "json":
            with path.open("w", encoding="utf-8") as handle:
                json.dump(mediation_report_dict(report), handle, indent=2)
                handle.write("\n")
        else:
            rows = report.sensitivity
            if rows is None:
                raise InputError("mediation report has no sensitivity curve to write as CSV")
            _write_curve_csv(rows, path)
    elif isinstance(report, SimReport):
        if format == "csv":
            _write_cells_csv(report, path)
        else:
            with path.open("w", encoding="utf-8") as handle:
                json.dump(report.summary_dict(), handle, indent=2)
                handle.write("\n")
    elif isinstance(report, (list, tuple)):
        if format != "csv":
            raise InputError("sensitivity curves are written as CSV")
        _write_curve_csv(report, path)
    else:
        raise InputError(f"cannot serialize object of type {type(report).__name__}")
