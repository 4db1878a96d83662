"""Trace and report artifacts on disk.

Traces are written as CSV (one row per step) with a JSON sidecar holding the
run metadata. ``RunStorage`` keeps both, plus optional optimizer checkpoints,
in a run directory.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

from manifold_sgd.config import get_settings
from manifold_sgd.models import CheckReport, OptimizerConfig, Trace, TraceRow

TRACE_COLUMNS = ("step", "loss", "grad_norm")
DIST_COLUMN = "dist_to_opt"


def _fmt(value: float | None) -> str:
    """17 significant digits: round-trips any double exactly."""
    if value is None:
        return ""
    return f"{value:.17g}"


def write_trace_csv(trace: Trace, path: Path | str) -> Path:
    """
    Write a trace as CSV with LF line endings.

    The ``dist_to_opt`` column is present only when the trace carries it.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(TRACE_COLUMNS) + ([DIST_COLUMN] if trace.has_distance else [])
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in trace.rows:
            line = [str(row.step), _fmt(row.loss), _fmt(row.grad_norm)]
            if trace.has_distance:
                line.append(_fmt(row.dist_to_opt))
            writer.writerow(line)
    return path


def read_trace_csv(path: Path | str) -> list[TraceRow]:
    """
    Read rows written by ``write_trace_csv``.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the header is not a trace header
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ())[:3] != TRACE_COLUMNS:
            raise ValueError(f"{path}: not a trace CSV (header {reader.fieldnames})")
        rows = []
        for rec in reader:
            dist = rec.get(DIST_COLUMN)
            rows.append(
                TraceRow(
                    step=int(rec["step"]),
                    loss=float(rec["loss"]),
                    grad_norm=float(rec["grad_norm"]),
                    dist_to_opt=float(dist) if dist else None,
                )
            )
    return rows


def load_trace(path: Path | str) -> Trace:
    """Trace from a CSV, with metadata from its ``.json`` sidecar when present."""
    path = Path(path)
    rows = read_trace_csv(path)
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        meta.pop("rows", None)
        return Trace(**meta, rows=rows)
    return Trace(run_id=path.stem, problem=path.stem, config=OptimizerConfig(), seed=0, rows=rows)


def write_report_json(report: CheckReport | list[CheckReport], path: Path | str) -> Path:
    """Write one report, or a list of them, as indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(report, CheckReport):
        data: Any = report.to_json_dict()
    else:
        data = [r.to_json_dict() for r in report]
    # inf tolerances/errors are not valid JSON numbers
    text = json.dumps(_finite(data), indent=2)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _finite(data: Any) -> Any:
    if isinstance(data, float) and not math.isfinite(data):
        return str(data)
    if isinstance(data, dict):
        return {k: _finite(v) for k, v in data.items()}
    if isinstance(data, list):
        return [_finite(v) for v in data]
    return data


class RunStorage:
    """File-based storage for benchmark runs."""

    def __init__(self, storage_dir: Path | str | None = None):
        """
        Initialize run storage.

        Args:
            storage_dir: Directory for runs (default: ``Settings.runs_dir``)
        """
        self.storage_dir = Path(storage_dir) if storage_dir is not None else get_settings().runs_dir
        self.storage_dir.mkdir(parents=True, exist_ok=True)

    def _paths(self, run_id: str) -> tuple[Path, Path]:
        return self.storage_dir / f"{run_id}.csv", self.storage_dir / f"{run_id}.json"

    def save(self, trace: Trace) -> Path:
        """
        Save a trace (CSV + metadata).

        Returns:
            Path to the CSV file

        Raises:
            ValueError: If the trace has no ``run_id``
        """
        if not trace.run_id:
            raise ValueError("trace needs a run_id to be stored")
        csv_path, meta_path = self._paths(trace.run_id)
        write_trace_csv(trace, csv_path)
        meta = trace.model_dump(mode="json", exclude={"rows"})
        meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        return csv_path

    def load(self, run_id: str) -> Trace:
        """
        Load a stored trace.

        Raises:
            FileNotFoundError: If the run doesn't exist
        """
        csv_path, _ = self._paths(run_id)
        if not csv_path.exists():
            raise FileNotFoundError(f"Run not found: {run_id}")
        return load_trace(csv_path)

    def list_runs(self) -> list[str]:
        """Stored run IDs, sorted."""
        return sorted(p.stem for p in self.storage_dir.glob("*.csv"))

    def exists(self, run_id: str) -> bool:
        return self._paths(run_id)[0].exists()

    def delete(self, run_id: str) -> bool:
        """
        Delete a run and its checkpoint.

        Returns:
            True if deleted, False if not found
        """
        found = False
        for p in (*self._paths(run_id), self.checkpoint_path(run_id)):
            if p.exists():
                p.unlink()
                found = True
        return found

    def get_metadata(self, run_id: str) -> dict[str, Any]:
        """
        Run metadata without reading the trace rows.

        Raises:
            FileNotFoundError: If the run has no metadata
        """
        _, meta_path = self._paths(run_id)
        if not meta_path.exists():
            raise FileNotFoundError(f"Run not found: {run_id}")
        data = json.loads(meta_path.read_text(encoding="utf-8"))
        return {
            "run_id": data.get("run_id"),
            "problem": data.get("problem"),
            "algorithm": data.get("config", {}).get("algorithm"),
            "seed": data.get("seed"),
            "precision": data.get("precision"),
            "aborted": data.get("aborted", False),
        }

    def checkpoint_path(self, run_id: str) -> Path:
        return self.storage_dir / f"{run_id}.ckpt"

    def save_checkpoint(self, run_id: str, blob: bytes) -> Path:
        path = self.checkpoint_path(run_id)
        path.write_bytes(blob)
        return path

    def load_checkpoint(self, run_id: str) -> bytes:
        """
        Raises:
            FileNotFoundError: If no checkpoint was saved for the run
        """
        path = self.checkpoint_path(run_id)
        if not path.exists():
            raise FileNotFoundError(f"No checkpoint for run: {run_id}")
        return path.read_bytes()
