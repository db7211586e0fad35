"""Attribute vocabularies, label encoding, and the sparse annotation matrix.

Labels are encoded as small integers: 1..L index into the attribute's
vocabulary, and 0 is reserved for "missing" (an annotator that never
labeled the item, or a label outside the vocabulary). The annotation
matrix stores only non-missing entries; absence of a key encodes 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

# An extended label: 0 = missing, 1..L = position in the vocabulary.
ExtendedLabel = int


class ConflictError(ValueError):
    """Two annotations for the same (annotator, item) pair disagree."""


def _canon(text: str) -> str:
    return text.strip().casefold()


@dataclass(frozen=True)
class AttributeSchema:
    """An attribute name plus its closed, ordered label vocabulary.

    Label names keep the case they were declared with; matching during
    encoding is trim- and case-insensitive. Encoded indices are 1-based
    so that 0 stays free for the missing sentinel.
    """

    attribute_name: str
    labels: tuple[str, ...]

    def __init__(self, attribute_name: str, labels: Sequence[str]):
        object.__setattr__(self, "attribute_name", attribute_name.strip())
        object.__setattr__(self, "labels", tuple(l.strip() for l in labels))
        if not self.attribute_name:
            raise ValueError("attribute_name must be non-empty")
        if len(self.labels) < 2:
            raise ValueError("a schema needs at least 2 labels")
        if any(not l for l in self.labels):
            raise ValueError("label names must be non-empty")
        if len({_canon(l) for l in self.labels}) != len(self.labels):
            raise ValueError(
                "label names must be distinct after trimming and case-folding"
            )

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {_canon(l): k for k, l in enumerate(self.labels, start=1)}


def encode_label(schema: AttributeSchema, raw: str) -> ExtendedLabel:
    """Map raw text to its 1-based label index, or 0 if out of vocabulary.

    Matching trims whitespace and case-folds; anything else (synonyms,
    punctuation stripping) is the caller's job. Unmatched input maps to
    missing rather than raising: free-text sources routinely produce
    values outside the vocabulary, and missingness is first-class here.
    """
    return schema._index.get(_canon(raw), 0)


def decode_label(schema: AttributeSchema, value: ExtendedLabel) -> str | None:
    """Inverse of :func:`encode_label`: canonical label name, or None for 0."""
    if not 0 <= value <= schema.n_labels:
        raise ValueError(f"encoded label {value} out of range 0..{schema.n_labels}")
    return None if value == 0 else schema.labels[value - 1]


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's raw label for one item: the interchange unit."""

    annotator_id: str
    item_id: str
    attribute: str
    raw_label: str

    def __post_init__(self):
        for name in ("annotator_id", "item_id", "attribute", "raw_label"):
            if not str(getattr(self, name)).strip():
                raise ValueError(f"AnnotationRecord.{name} must be non-empty")


@dataclass(frozen=True)
class AnnotationMatrix:
    """Sparse N x P matrix of encoded labels over one attribute.

    ``entries`` maps (annotator index, item index) to a 1..L label; a
    missing key means the entry is unobserved (value 0). The observation
    indicator is therefore implicit: T[i, j] = 1 iff (i, j) is a key.
    Instances are immutable after construction and safe to share across
    threads.
    """

    schema: AttributeSchema
    annotator_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    entries: Mapping[tuple[int, int], ExtendedLabel]

    def __init__(
        self,
        schema: AttributeSchema,
        annotator_ids: Sequence[str],
        item_ids: Sequence[str],
        entries: Mapping[tuple[int, int], ExtendedLabel],
    ):
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "annotator_ids", tuple(annotator_ids))
        object.__setattr__(self, "item_ids", tuple(item_ids))
        object.__setattr__(self, "entries", dict(entries))
        if len(set(self.annotator_ids)) != len(self.annotator_ids):
            raise ValueError("duplicate annotator ids")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise ValueError("duplicate item ids")
        n, p, n_labels = len(self.annotator_ids), len(self.item_ids), schema.n_labels
        for (i, j), value in self.entries.items():
            if not (0 <= i < n and 0 <= j < p):
                raise ValueError(f"entry index ({i}, {j}) out of range")
            if not 1 <= value <= n_labels:
                raise ValueError(
                    f"entry ({i}, {j}) has value {value}, expected 1..{n_labels}"
                )

    @property
    def n_annotators(self) -> int:
        return len(self.annotator_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def observed_count(self) -> int:
        return len(self.entries)

    def label_for(self, annotator: int, item: int) -> ExtendedLabel:
        return self.entries.get((annotator, item), 0)

    @cached_property
    def by_item(self) -> tuple[tuple[tuple[int, ExtendedLabel], ...], ...]:
        """Per-item vote lists: by_item[j] = ((annotator index, label), ...)."""
        cols: list[list[tuple[int, ExtendedLabel]]] = [[] for _ in range(self.n_items)]
        for (i, j) in sorted(self.entries):
            cols[j].append((i, self.entries[(i, j)]))
        return tuple(tuple(c) for c in cols)

    @cached_property
    def by_annotator(self) -> tuple[tuple[tuple[int, ExtendedLabel], ...], ...]:
        """Per-annotator label lists: by_annotator[i] = ((item index, label), ...)."""
        rows: list[list[tuple[int, ExtendedLabel]]] = [
            [] for _ in range(self.n_annotators)
        ]
        for (i, j) in sorted(self.entries):
            rows[i].append((j, self.entries[(i, j)]))
        return tuple(tuple(r) for r in rows)

    def to_records(self) -> list[AnnotationRecord]:
        """Decode stored entries back to records, annotator-major order."""
        return [
            AnnotationRecord(
                annotator_id=self.annotator_ids[i],
                item_id=self.item_ids[j],
                attribute=self.schema.attribute_name,
                raw_label=self.schema.labels[self.entries[(i, j)] - 1],
            )
            for (i, j) in sorted(self.entries)
        ]


def build_matrix(
    schema: AttributeSchema, records: Iterable[AnnotationRecord]
) -> AnnotationMatrix:
    """Assemble an annotation matrix from records for one attribute.

    Annotator and item orderings are first-appearance order among records
    that carry an in-vocabulary label. Records whose raw_label encodes to
    missing contribute nothing at all (not even id registration), so an
    out-of-vocabulary record is indistinguishable from an omitted one.

    Raises ConflictError when the same (annotator, item) pair carries two
    different in-vocabulary labels; a silent overwrite would corrupt every
    downstream accuracy estimate.
    """
    annotator_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    entries: dict[tuple[int, int], ExtendedLabel] = {}
    for record in records:
        if record.attribute != schema.attribute_name:
            raise ValueError(
                f"record attribute {record.attribute!r} does not match "
                f"schema attribute {schema.attribute_name!r}"
            )
        value = encode_label(schema, record.raw_label)
        if value == 0:
            continue
        i = annotator_index.setdefault(record.annotator_id, len(annotator_index))
        j = item_index.setdefault(record.item_id, len(item_index))
        previous = entries.get((i, j))
        if previous is not None and previous != value:
            raise ConflictError(
                f"conflicting labels for annotator {record.annotator_id!r} on "
                f"item {record.item_id!r}: "
                f"{schema.labels[previous - 1]!r} vs {schema.labels[value - 1]!r}"
            )
        entries[(i, j)] = value
    return AnnotationMatrix(
        schema=schema,
        annotator_ids=tuple(annotator_index),
        item_ids=tuple(item_index),
        entries=entries,
    )
