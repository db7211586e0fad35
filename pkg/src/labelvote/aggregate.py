"""Iterative weighted majority voting with per-annotator weight learning.

The aggregation loop alternates three steps until the consensus stops
moving: vote on every item with the current weights, estimate each
annotator's accuracy against the consensus, and map accuracies to new
weights with weight = L * accuracy - 1 (L being the vocabulary size).
The rule zeroes out annotators at chance level (accuracy 1/L), gives
perfect annotators the maximal weight L - 1, and leaves consistently
wrong annotators with negative weight so their votes count as evidence
against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .core import AnnotationMatrix, ExtendedLabel

TIE_BREAK_RULES = ("lowest-index", "highest-index")

IterationCallback = Callable[[int, list[ExtendedLabel], list[float], list[float]], None]


@dataclass(frozen=True)
class EnsembleConfig:
    """Loop guard for the aggregation: iteration cap, weight tolerance, ties."""

    max_iterations: int = 100
    weight_tolerance: float = 1e-6
    tie_break: str = "lowest-index"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.weight_tolerance < 0:
            raise ValueError("weight_tolerance must be >= 0")
        if self.tie_break not in TIE_BREAK_RULES:
            raise ValueError(
                f"unknown tie_break {self.tie_break!r}, expected one of {TIE_BREAK_RULES}"
            )


@dataclass
class EnsembleState:
    """Converged (or capped) result of one aggregation run."""

    weights: list[float]
    accuracies: list[float]
    predictions: list[ExtendedLabel]
    iterations_run: int
    converged: bool


def _argmax_label(scores: Sequence[float], tie_break: str) -> ExtendedLabel:
    best = 0
    if tie_break == "highest-index":
        for k in range(1, len(scores)):
            if scores[k] >= scores[best]:
                best = k
    else:
        for k in range(1, len(scores)):
            if scores[k] > scores[best]:
                best = k
    return best + 1


def weighted_vote(
    matrix: AnnotationMatrix,
    item: int,
    weights: Sequence[float],
    tie_break: str = "lowest-index",
) -> ExtendedLabel:
    """Weighted plurality label for one item.

    Each observed vote adds its annotator's weight to the voted label's
    score; every label in 1..L competes, including labels nobody voted
    for (score 0), which matters when weights go negative. Returns 0 when
    the item has no observed votes at all.
    """
    if len(weights) != matrix.n_annotators:
        raise ValueError(
            f"got {len(weights)} weights for {matrix.n_annotators} annotators"
        )
    if not 0 <= item < matrix.n_items:
        raise ValueError(f"item index {item} out of range 0..{matrix.n_items - 1}")
    votes = matrix.by_item[item]
    if not votes:
        return 0
    scores = [0.0] * matrix.schema.n_labels
    for i, label in votes:
        scores[label - 1] += weights[i]
    return _argmax_label(scores, tie_break)


def estimate_accuracies(
    matrix: AnnotationMatrix, predictions: Sequence[ExtendedLabel]
) -> list[float]:
    """Per-annotator agreement rate with the current predictions.

    Items whose prediction is 0 (no votes) are excluded from both the
    numerator and the denominator. An annotator with no countable
    observations gets the chance level 1/L, which the weight rule maps
    to exactly 0.
    """
    if len(predictions) != matrix.n_items:
        raise ValueError(
            f"got {len(predictions)} predictions for {matrix.n_items} items"
        )
    chance = 1.0 / matrix.schema.n_labels
    accuracies = []
    for row in matrix.by_annotator:
        matches = observed = 0
        for j, label in row:
            if predictions[j] == 0:
                continue
            observed += 1
            if label == predictions[j]:
                matches += 1
        accuracies.append(matches / observed if observed else chance)
    return accuracies


def update_weights(accuracies: Sequence[float], n_labels: int) -> list[float]:
    """Map accuracies to vote weights: v = L * accuracy - 1, elementwise."""
    if n_labels < 2:
        raise ValueError("n_labels must be >= 2")
    for a in accuracies:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"accuracy {a} outside [0, 1]")
    return [n_labels * a - 1.0 for a in accuracies]


def oracle_weights(true_accuracies: Sequence[float], n_labels: int) -> list[float]:
    """Idealized weights from known annotator accuracies.

    Same rule as :func:`update_weights` but fed true accuracies instead of
    estimates; the iterative run approximates these.
    """
    return update_weights(true_accuracies, n_labels)


def majority_vote(
    matrix: AnnotationMatrix, tie_break: str = "lowest-index"
) -> list[ExtendedLabel]:
    """Uniform-weight baseline: every annotator counts 1."""
    ones = [1.0] * matrix.n_annotators
    return [weighted_vote(matrix, j, ones, tie_break) for j in range(matrix.n_items)]


def run_ensemble(
    matrix: AnnotationMatrix,
    config: EnsembleConfig | None = None,
    on_iteration: IterationCallback | None = None,
) -> EnsembleState:
    """Run the full aggregation loop to a fixed point (or the iteration cap).

    Weights start uniform at 1, so iteration 1's predictions are exactly
    the plain majority vote. Convergence means: this iteration's
    predictions equal the previous iteration's, and no weight moved by
    weight_tolerance or more. When predictions repeat, the recomputed
    weights are bitwise identical too, so the returned state is
    self-consistent: predictions == the weighted vote under the returned
    weights.

    ``on_iteration`` (if given) is called after each iteration with
    (iteration number, predictions, accuracies, updated weights); handy
    for instrumentation and convergence traces.

    Deterministic: identical matrix and config produce an identical state.
    """
    if config is None:
        config = EnsembleConfig()
    if matrix.observed_count == 0:
        raise ValueError("annotation matrix has no observed entries")
    n_labels = matrix.schema.n_labels
    weights = [1.0] * matrix.n_annotators
    previous_predictions: list[ExtendedLabel] | None = None
    predictions: list[ExtendedLabel] = []
    accuracies: list[float] = []
    converged = False
    iterations_run = 0
    for iteration in range(1, config.max_iterations + 1):
        predictions = [
            weighted_vote(matrix, j, weights, config.tie_break)
            for j in range(matrix.n_items)
        ]
        accuracies = estimate_accuracies(matrix, predictions)
        new_weights = update_weights(accuracies, n_labels)
        delta = max(abs(n - o) for n, o in zip(new_weights, weights))
        iterations_run = iteration
        if on_iteration is not None:
            on_iteration(iteration, predictions, accuracies, new_weights)
        stable = (
            previous_predictions is not None
            and predictions == previous_predictions
            and delta < config.weight_tolerance
        )
        weights = new_weights
        if stable:
            converged = True
            break
        previous_predictions = predictions
    return EnsembleState(
        weights=weights,
        accuracies=accuracies,
        predictions=predictions,
        iterations_run=iterations_run,
        converged=converged,
    )
