"""Shared fixtures and matrix generators for the test suite."""

import random

import pytest

from labelvote import AnnotationMatrix, AttributeSchema


@pytest.fixture
def gender_schema():
    return AttributeSchema("gender", ["male", "female", "unisex"])


def make_matrix(rows, labels=None, attribute="attr"):
    """Build a matrix from dense rows (lists of 0..L values, 0 = missing)."""
    n_labels = max(2, max((v for row in rows for v in row), default=2))
    if labels is None:
        labels = [f"label{k}" for k in range(1, n_labels + 1)]
    schema = AttributeSchema(attribute, labels)
    entries = {
        (i, j): value
        for i, row in enumerate(rows)
        for j, value in enumerate(row)
        if value != 0
    }
    return AnnotationMatrix(
        schema=schema,
        annotator_ids=[f"a{i}" for i in range(len(rows))],
        item_ids=[f"p{j}" for j in range(len(rows[0]) if rows else 0)],
        entries=entries,
    )


def random_sparse_rows(rng: random.Random, max_annotators=6, max_items=50, max_labels=4,
                       max_missing=0.5):
    """Random dense-list matrix with at least one observed entry."""
    n = rng.randint(1, max_annotators)
    p = rng.randint(1, max_items)
    n_labels = rng.randint(2, max_labels)
    missing_rate = rng.uniform(0.0, max_missing)
    while True:
        rows = [
            [0 if rng.random() < missing_rate else rng.randint(1, n_labels) for _ in range(p)]
            for _ in range(n)
        ]
        if any(any(row) for row in rows):
            return rows, n_labels
