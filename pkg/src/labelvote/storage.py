"""Readers and writers for the interchange files.

Annotations and predictions are JSONL (one object per line, UTF-8, LF);
a weights report is a single JSON document. Readers are strict: unknown
fields, missing fields, and wrong types are errors, never coerced.
Writers emit a fixed key order and rely on Python's shortest-roundtrip
float formatting, so output is byte-deterministic for identical inputs
and floats survive a write/read cycle exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

from .core import AnnotationMatrix, AnnotationRecord, AttributeSchema, ExtendedLabel
from .extract import ProductText

_ANNOTATION_FIELDS = ("annotator_id", "item_id", "attribute", "raw_label")
_PREDICTION_FIELDS = ("item_id", "attribute", "label")
_PRODUCT_FIELDS = ("item_id", "title", "description")
_WEIGHTS_FIELDS = ("attribute", "weights", "accuracies", "iterations_run", "converged")


@dataclass(frozen=True)
class PredictionRecord:
    """One consensus label as stored on disk; label None means abstention."""

    item_id: str
    attribute: str
    label: str | None


@dataclass(frozen=True)
class WeightsReport:
    """Persisted form of a run's learned weights and accuracy estimates."""

    attribute: str
    weights: dict[str, float]
    accuracies: dict[str, float]
    iterations_run: int
    converged: bool

    def __post_init__(self):
        if set(self.weights) != set(self.accuracies):
            raise ValueError("weights and accuracies must cover the same annotators")
        for annotator, value in self.accuracies.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"accuracy for {annotator!r} outside [0, 1]: {value}")

    @classmethod
    def from_state(cls, attribute, annotator_ids, state) -> "WeightsReport":
        """Pair an EnsembleState's vectors with their annotator ids."""
        return cls(
            attribute=attribute,
            weights=dict(zip(annotator_ids, state.weights)),
            accuracies=dict(zip(annotator_ids, state.accuracies)),
            iterations_run=state.iterations_run,
            converged=state.converged,
        )


def _parse_line(path, line_no: int, line: str, fields: tuple[str, ...]) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ValueError(f"{path}:{line_no}: expected a JSON object")
    missing = [f for f in fields if f not in obj]
    if missing:
        raise ValueError(f"{path}:{line_no}: missing field(s) {', '.join(missing)}")
    unknown = [k for k in obj if k not in fields]
    if unknown:
        raise ValueError(f"{path}:{line_no}: unknown field(s) {', '.join(unknown)}")
    return obj


def read_annotations(path) -> list[AnnotationRecord]:
    """Read annotation records from JSONL, preserving file order.

    An empty file is valid and yields an empty list; any malformed line
    raises with its line number.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                raise ValueError(f"{path}:{line_no}: blank line")
            obj = _parse_line(path, line_no, line, _ANNOTATION_FIELDS)
            for name in _ANNOTATION_FIELDS:
                if not isinstance(obj[name], str) or not obj[name].strip():
                    raise ValueError(
                        f"{path}:{line_no}: field {name!r} must be a non-empty string"
                    )
            records.append(AnnotationRecord(**obj))
    return records


def write_annotations(path, records: Sequence[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "annotator_id": r.annotator_id,
                        "item_id": r.item_id,
                        "attribute": r.attribute,
                        "raw_label": r.raw_label,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_predictions(
    path,
    item_ids: Sequence[str],
    predictions: Sequence[ExtendedLabel],
    schema: AttributeSchema,
) -> None:
    """Write consensus labels as JSONL; abstentions serialize as null."""
    if len(item_ids) != len(predictions):
        raise ValueError(
            f"length mismatch: {len(item_ids)} item ids vs {len(predictions)} predictions"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item_id, value in zip(item_ids, predictions):
            label = None if value == 0 else schema.labels[value - 1]
            fh.write(
                json.dumps(
                    {
                        "item_id": item_id,
                        "attribute": schema.attribute_name,
                        "label": label,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_predictions(path) -> list[PredictionRecord]:
    """Read a predictions (or ground-truth) JSONL file, preserving order."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                raise ValueError(f"{path}:{line_no}: blank line")
            obj = _parse_line(path, line_no, line, _PREDICTION_FIELDS)
            for name in ("item_id", "attribute"):
                if not isinstance(obj[name], str) or not obj[name].strip():
                    raise ValueError(
                        f"{path}:{line_no}: field {name!r} must be a non-empty string"
                    )
            if obj["label"] is not None and not isinstance(obj["label"], str):
                raise ValueError(f"{path}:{line_no}: field 'label' must be a string or null")
            rows.append(PredictionRecord(**obj))
    return rows


def read_products(path) -> list[ProductText]:
    """Read product texts from JSONL: item_id, title, optional description."""
    products = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                raise ValueError(f"{path}:{line_no}: blank line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{line_no}: expected a JSON object")
            unknown = [k for k in obj if k not in _PRODUCT_FIELDS]
            if unknown:
                raise ValueError(f"{path}:{line_no}: unknown field(s) {', '.join(unknown)}")
            for name in ("item_id", "title"):
                if not isinstance(obj.get(name), str) or not obj[name].strip():
                    raise ValueError(
                        f"{path}:{line_no}: field {name!r} must be a non-empty string"
                    )
            description = obj.get("description", "")
            if not isinstance(description, str):
                raise ValueError(f"{path}:{line_no}: field 'description' must be a string")
            products.append(
                ProductText(item_id=obj["item_id"], title=obj["title"], description=description)
            )
    return products


def write_weights(path, report: WeightsReport) -> None:
    """Write a weights report as one indented JSON document."""
    document = {
        "attribute": report.attribute,
        "weights": report.weights,
        "accuracies": report.accuracies,
        "iterations_run": report.iterations_run,
        "converged": report.converged,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def read_weights(path) -> WeightsReport:
    """Read a weights report, rejecting any deviation from the schema."""
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: expected a JSON object")
    missing = [f for f in _WEIGHTS_FIELDS if f not in obj]
    if missing:
        raise ValueError(f"{path}: missing field(s) {', '.join(missing)}")
    unknown = [k for k in obj if k not in _WEIGHTS_FIELDS]
    if unknown:
        raise ValueError(f"{path}: unknown field(s) {', '.join(unknown)}")
    if not isinstance(obj["attribute"], str) or not obj["attribute"].strip():
        raise ValueError(f"{path}: 'attribute' must be a non-empty string")
    for name in ("weights", "accuracies"):
        mapping = obj[name]
        if not isinstance(mapping, dict):
            raise ValueError(f"{path}: {name!r} must be an object")
        for key, value in mapping.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{path}: {name}[{key!r}] must be a number")
    if not isinstance(obj["iterations_run"], int) or isinstance(obj["iterations_run"], bool):
        raise ValueError(f"{path}: 'iterations_run' must be an integer")
    if obj["iterations_run"] < 0:
        raise ValueError(f"{path}: 'iterations_run' must be >= 0")
    if not isinstance(obj["converged"], bool):
        raise ValueError(f"{path}: 'converged' must be a boolean")
    try:
        return WeightsReport(
            attribute=obj["attribute"],
            weights={k: float(v) for k, v in obj["weights"].items()},
            accuracies={k: float(v) for k, v in obj["accuracies"].items()},
            iterations_run=obj["iterations_run"],
            converged=obj["converged"],
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def write_matrix_csv(path, matrix: AnnotationMatrix) -> None:
    """Dense CSV dump of a matrix, for small-matrix debugging only."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["annotator_id", *matrix.item_ids])
        for i, annotator_id in enumerate(matrix.annotator_ids):
            row = []
            for j in range(matrix.n_items):
                value = matrix.label_for(i, j)
                row.append("" if value == 0 else matrix.schema.labels[value - 1])
            writer.writerow([annotator_id, *row])
