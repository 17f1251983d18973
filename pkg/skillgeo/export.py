"""
Skillgeo Export - Serialize reports to JSON, JSON lines and CSV

Supports:
- JSON (one document per command)
- JSON lines (bound reports, one per line)
- CSV (sample batches: dim_0..dim_{d-1}, optional skill column)

Floats are written with 12 significant digits; non-finite values become the
strings "inf", "-inf" and "nan" so documents stay strict JSON.
"""

import csv
import io
import json
import math
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from . import config
from .adaptation import BoundReport
from .errors import MalformedSpec
from .estimators import SampleBatch
from .geometry import MislSolution, TiebreakResult
from .mdp import Polytope
from .wdsl import PathologyReport, PwsepState


def format_float(value: float, digits: Optional[int] = None) -> Any:
    """Round to ``digits`` significant digits, or name a non-finite value."""
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    digits = digits or config.get("float_digits")
    rounded = float(f"{value:.{digits}g}")
    return 0.0 if rounded == 0 else rounded


def clean(obj: Any) -> Any:
    """Recursively convert numpy values and round floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    return obj


class Exporter:
    """Convert skillgeo results to serializable documents and text."""

    @staticmethod
    def to_json(doc: Any, indent: int = 2) -> str:
        return json.dumps(clean(doc), indent=indent)

    @staticmethod
    def to_jsonl(rows: Iterable[Any]) -> str:
        return "".join(json.dumps(clean(row)) + "\n" for row in rows)

    @staticmethod
    def polytope_to_dict(polytope: Polytope) -> Dict[str, Any]:
        return {
            "num_states": polytope.num_states,
            "vertices": [v.to_list() for v in polytope.vertices],
            "provenance": [
                p.to_list() if p is not None else None for p in polytope.provenance
            ],
        }

    @staticmethod
    def solution_to_dict(solution: MislSolution) -> Dict[str, Any]:
        return {
            "center": solution.center.to_list(),
            "radius": solution.radius,
            "active": solution.active,
            "weights": solution.weights,
            "iterations": solution.trace.iterations,
            "gap": solution.trace.gap,
        }

    @staticmethod
    def tiebreak_to_dict(result: TiebreakResult) -> Dict[str, Any]:
        return {
            "weights": result.weights,
            "lsepin": result.lsepin,
            "heuristic_weights": result.heuristic_weights,
            "heuristic_lsepin": result.heuristic_lsepin,
            "seeds": result.seeds,
        }

    @staticmethod
    def pwsep_to_dict(state: PwsepState) -> Dict[str, Any]:
        return {
            "discovered": [d.to_list() for d in state.discovered],
            "history": [
                {
                    "iter": step.iteration,
                    "candidate": step.candidate,
                    "distance": step.distance,
                    "lambda": step.weights,
                    "tie": step.tie,
                }
                for step in state.history
            ],
            "last_projected_distance": state.last_projected_distance,
            "cost": state.cost,
        }

    @staticmethod
    def bound_to_dict(report: BoundReport) -> Dict[str, Any]:
        return {
            "variant": report.variant,
            "bound": report.bound,
            "measured": report.measured,
            "satisfied": report.satisfied,
            "slack": report.slack,
            "witness": report.witness,
            "tags": report.tags,
        }

    @staticmethod
    def pathology_to_dict(report: PathologyReport) -> Dict[str, Any]:
        if report.empty:
            return {}
        return {
            "epsilon": report.epsilon,
            "delta": report.delta,
            "found": report.found,
            "near": {"skills": report.near, "klsep": report.klsep_near, "wsep": report.wsep_near},
            "spread": {
                "skills": report.spread,
                "klsep": report.klsep_spread,
                "wsep": report.wsep_spread,
            },
        }

    @staticmethod
    def batch_to_csv(batch: SampleBatch) -> str:
        """
        Write a sample batch as CSV.

        Columns are dim_0..dim_{d-1} followed by ``skill`` when labeled.
        """
        output = io.StringIO()
        writer = csv.writer(output, lineterminator="\n")
        header = [f"dim_{i}" for i in range(batch.dim)]
        if batch.labels is not None:
            header.append("skill")
        writer.writerow(header)
        for i, point in enumerate(batch.points):
            row: List[Any] = [repr(float(x)) for x in point]
            if batch.labels is not None:
                row.append(int(batch.labels[i]))
            writer.writerow(row)
        return output.getvalue()

    @staticmethod
    def batch_from_csv(text: str, seed: int = 0) -> SampleBatch:
        """Read a batch written by batch_to_csv."""
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise MalformedSpec("sample CSV is empty")
        header, body = rows[0], rows[1:]
        labeled = bool(header) and header[-1] == "skill"
        dims = header[:-1] if labeled else header
        if dims != [f"dim_{i}" for i in range(len(dims))] or not dims:
            raise MalformedSpec(f"unexpected sample CSV header {header}")
        try:
            points = np.array([[float(x) for x in r[: len(dims)]] for r in body])
            labels = np.array([int(r[-1]) for r in body]) if labeled else None
        except (ValueError, IndexError) as e:
            raise MalformedSpec(f"bad sample CSV row: {e}") from e
        return SampleBatch(points.reshape(len(body), len(dims)), labels, seed)


def export_report(doc: Any, format: str = "json") -> str:
    """
    Serialize a report document.

    Args:
        doc: A dict (json) or a list of rows (jsonl)
        format: json or jsonl

    Returns:
        Formatted string
    """
    format = format.lower()
    exporter = Exporter()

    if format == "json":
        return exporter.to_json(doc) + "\n"
    elif format == "jsonl":
        return exporter.to_jsonl(doc)
    else:
        raise ValueError(f"Unknown format: {format}. Use json or jsonl.")
