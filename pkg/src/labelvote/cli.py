"""Single executable for the pipeline: simulate, extract, aggregate, evaluate.

Exit codes: 0 success, 1 environment or I/O failure, 2 invalid input.
Results go to files; diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter

from . import storage
from .aggregate import EnsembleConfig, run_ensemble
from .core import AttributeSchema, ConflictError, build_matrix
from .extract import PromptTemplate, SynonymMap, default_template, extract_labels
from .providers import ProviderError, load_providers
from .simulate import (
    SimulationConfig,
    WorkerProfile,
    generate_ground_truth,
    score_accuracy,
    simulate_annotations,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _schema_from_args(args) -> AttributeSchema:
    """Resolve the attribute schema from --labels/--attribute or --schema.

    Inline flags win over the schema file, with a warning on conflict.
    """
    file_attribute = None
    file_labels = None
    if getattr(args, "schema", None):
        with open(args.schema, encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{args.schema}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "attribute" not in obj or "labels" not in obj:
            raise ValueError(f"{args.schema}: expected an object with attribute and labels")
        file_attribute = obj["attribute"]
        file_labels = obj["labels"]
        if not isinstance(file_labels, list) or not all(
            isinstance(l, str) for l in file_labels
        ):
            raise ValueError(f"{args.schema}: labels must be an array of strings")

    labels = None
    if getattr(args, "labels", None):
        labels = [l.strip() for l in args.labels.split(",")]
        if file_labels is not None and labels != file_labels:
            _warn("--labels overrides the labels in the schema file")
    elif file_labels is not None:
        labels = file_labels
    if labels is None:
        raise ValueError("no label set given: pass --labels or --schema")

    attribute = getattr(args, "attribute", None)
    if attribute and file_attribute and attribute != file_attribute:
        _warn("--attribute overrides the attribute in the schema file")
    attribute = attribute or file_attribute
    if not attribute:
        raise ValueError("no attribute name given: pass --attribute or --schema")
    return AttributeSchema(attribute, labels)


def cmd_aggregate(args) -> int:
    schema = _schema_from_args(args)
    records = storage.read_annotations(args.input)
    if not records:
        print("no annotations", file=sys.stderr)
        return EXIT_FAILURE
    matrix = build_matrix(schema, records)
    if matrix.observed_count == 0:
        print("no annotations", file=sys.stderr)
        return EXIT_FAILURE
    config = EnsembleConfig(max_iterations=args.max_iter, weight_tolerance=args.tol)
    state = run_ensemble(matrix, config)
    storage.write_predictions(args.out, matrix.item_ids, state.predictions, schema)
    if args.weights_out:
        report = storage.WeightsReport.from_state(
            schema.attribute_name, matrix.annotator_ids, state
        )
        storage.write_weights(args.weights_out, report)
    print(
        f"iterations_run={state.iterations_run} converged={state.converged}",
        file=sys.stderr,
    )
    return EXIT_OK


def _load_workers(path) -> list[WorkerProfile]:
    with open(path, encoding="utf-8") as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{path}: expected a non-empty JSON array of workers")
    workers = []
    for n, entry in enumerate(entries, start=1):
        if not isinstance(entry, dict):
            raise ValueError(f"{path}: worker #{n} must be an object")
        unknown = [k for k in entry if k not in ("worker_id", "accuracy", "missing_rate")]
        if unknown:
            raise ValueError(f"{path}: worker #{n}: unknown field(s) {', '.join(unknown)}")
        try:
            workers.append(WorkerProfile(**entry))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: worker #{n}: {exc}") from exc
    return workers


def cmd_simulate(args) -> int:
    schema = _schema_from_args(args)
    workers = _load_workers(args.workers)
    config = SimulationConfig(
        n_items=args.items, schema=schema, workers=workers, seed=args.seed
    )
    truth = generate_ground_truth(config)
    matrix = simulate_annotations(config, truth)
    storage.write_annotations(args.out, matrix.to_records())
    if args.truth_out:
        storage.write_predictions(args.truth_out, matrix.item_ids, truth, schema)
    print(
        f"simulated {len(workers)} workers on {args.items} items "
        f"({matrix.observed_count} annotations)",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    predicted = storage.read_predictions(args.predictions)
    actual = storage.read_predictions(args.truth)
    for name, rows in (("predictions", predicted), ("truth", actual)):
        ids = [r.item_id for r in rows]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate item ids in {name} file")
    if {r.item_id for r in predicted} != {r.item_id for r in actual}:
        raise ValueError("item-id mismatch between predictions and truth")
    if {r.attribute for r in predicted} != {r.attribute for r in actual}:
        raise ValueError("attribute mismatch between predictions and truth")
    if any(r.label is None for r in actual):
        raise ValueError("truth file contains null labels")

    # Encode against the truth vocabulary so score_accuracy does the math;
    # prediction labels outside it count as wrong, as do abstentions.
    label_codes: dict[str, int] = {}
    for row in actual:
        label_codes.setdefault(row.label.strip().casefold(), len(label_codes) + 1)
    by_id = {r.item_id: r.label for r in predicted}
    truth_encoded = [label_codes[r.label.strip().casefold()] for r in actual]
    predicted_encoded = []
    for row in actual:
        label = by_id[row.item_id]
        code = 0 if label is None else label_codes.get(label.strip().casefold(), 0)
        predicted_encoded.append(code)
    accuracy = score_accuracy(predicted_encoded, truth_encoded)
    print(f"{accuracy:.4f}")
    return EXIT_OK


def cmd_extract(args) -> int:
    schema = _schema_from_args(args)
    products = storage.read_products(args.products)
    if not products:
        print("no products", file=sys.stderr)
        return EXIT_FAILURE
    providers = load_providers(args.providers)
    template = default_template()
    if args.template:
        with open(args.template, encoding="utf-8") as fh:
            template = PromptTemplate(fh.read())
    synonyms = None
    if args.synonyms:
        with open(args.synonyms, encoding="utf-8") as fh:
            try:
                mapping = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{args.synonyms}: invalid JSON ({exc.msg})") from exc
        if not isinstance(mapping, dict) or not all(
            isinstance(v, str) for v in mapping.values()
        ):
            raise ValueError(f"{args.synonyms}: expected an object of string pairs")
        synonyms = SynonymMap.validated(mapping, schema)

    records = extract_labels(
        products,
        schema,
        providers,
        template=template,
        synonyms=synonyms,
        max_in_flight=args.max_in_flight,
    )
    per_provider = Counter(r.annotator_id for r in records)
    for provider in providers:
        succeeded = per_provider.get(provider.provider_id, 0)
        print(
            f"provider {provider.provider_id}: {succeeded}/{len(products)} responses, "
            f"{len(products) - succeeded} failed",
            file=sys.stderr,
        )
    if not records:
        print("no providers reachable", file=sys.stderr)
        return EXIT_FAILURE
    storage.write_annotations(args.out, records)
    return EXIT_OK


def _add_schema_flags(parser, attribute_default=None):
    parser.add_argument("--attribute", default=attribute_default, help="attribute name")
    parser.add_argument("--labels", help="comma-separated label set")
    parser.add_argument("--schema", help="JSON schema file with attribute and labels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelvote",
        description="Consensus labels from multiple noisy annotators.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("aggregate", help="run weighted-vote aggregation on annotations")
    p.add_argument("--input", required=True, help="annotations JSONL")
    _add_schema_flags(p)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True, help="predictions JSONL to write")
    p.add_argument("--weights-out", help="weights report JSON to write")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("simulate", help="generate synthetic annotations and truth")
    p.add_argument("--items", type=int, required=True)
    _add_schema_flags(p, attribute_default="attr")
    p.add_argument("--workers", required=True, help="worker profiles JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="annotations JSONL to write")
    p.add_argument("--truth-out", help="ground-truth JSONL to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("extract", help="query label providers about products")
    p.add_argument("--products", required=True, help="products JSONL")
    _add_schema_flags(p)
    p.add_argument("--providers", required=True, help="providers JSON")
    p.add_argument("--template", help="prompt template file")
    p.add_argument("--synonyms", help="synonym map JSON")
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--out", required=True, help="annotations JSONL to write")
    p.set_defaults(func=cmd_extract)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConflictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ProviderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
