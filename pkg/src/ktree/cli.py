"""Command line driver.

    ktree prepare corpus.mat --keep-terms 8000 --out culled.mat
    ktree build culled.mat --order 40 --out tree.kt
    ktree cluster culled.mat --order 40 --labels corpus.rclass --out runs.csv
    ktree sampled culled.mat --fraction 0.1 --order 40 --labels corpus.rclass
    ktree search tree.kt --query-doc 17 --top 5
    ktree dump tree.kt --depth-limit 2
    ktree eval solution.txt --labels corpus.rclass
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from .corpus import FormatError, cull_terms, read_labels, read_matrix, tfidf_weight, write_matrix, write_term_map
from .evaluation import evaluate
from .pipeline import RunReport, run_ktree, run_sampled
from .solution import read_solution, write_solution
from .tree import MAGIC, MODES, KTree, KTreeConfig, SerializationError, deserialize
from .vectors import estimate_storage, format_size

CSV_FIELDS = [
    "command", "k", "purity", "entropy", "seconds", "level",
    "order", "mode", "split_k", "seed", "fraction", "achieved_fraction",
]


class CliError(Exception):
    pass


def storage_report(n_docs: int, n_terms: int, nnz: int) -> list[str]:
    dense, sparse = estimate_storage(n_docs, n_terms, nnz)
    return [
        f"documents: {n_docs}",
        f"terms: {n_terms}",
        f"nnz: {nnz}",
        f"dense storage: {dense} bytes ({format_size(dense)})",
        f"sparse storage: {sparse} bytes ({format_size(sparse)})",
    ]


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError("fraction must lie in (0, 1]")
    return value


def _order(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("order must be >= 2")
    return value


def _config(args) -> KTreeConfig:
    return KTreeConfig(order=args.order, mode=args.mode, split_k=args.split_k, seed=args.seed)


def _load_tree(path: str) -> KTree:
    try:
        return deserialize(Path(path).read_bytes())
    except OSError as exc:
        raise CliError(f"cannot read tree {path}: {exc.strerror}") from None


def _is_tree_file(path: str) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def _emit_csv(rows: list[dict], out: str | None, append: bool) -> None:
    if out is None:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return
    path = Path(out)
    fresh = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if not fresh else "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        if fresh:
            writer.writeheader()
        writer.writerows(rows)


def _csv_row(command: str, record: dict, level: int | None = None) -> dict:
    row = {key: record.get(key) for key in CSV_FIELDS}
    row["command"] = command
    row["level"] = level
    for key in ("purity", "entropy"):
        if row[key] is not None:
            row[key] = f"{row[key]:.4f}"
    return {k: "" if v is None else v for k, v in row.items()}


# -- commands ----------------------------------------------------------------


def cmd_prepare(args) -> int:
    corpus = read_matrix(args.matrix)
    weighted = tfidf_weight(corpus)
    culled, term_map = cull_terms(weighted, args.keep_terms)
    write_matrix(culled, args.out)
    term_map_path = args.term_map or f"{args.out}.terms"
    write_term_map(term_map, term_map_path)
    print(f"input: {corpus.n_docs} documents, {corpus.vocab_size} terms, {corpus.nnz} nnz")
    for line in storage_report(culled.n_docs, culled.vocab_size, culled.nnz):
        print(line)
    return 0


def cmd_build(args) -> int:
    corpus = read_matrix(args.matrix)
    if corpus.n_docs == 0:
        raise CliError("matrix holds no documents")
    report = run_ktree(corpus, _config(args), shuffle=args.shuffle)
    data = report.tree.to_bytes()
    Path(args.out).write_bytes(data)
    stats = report.tree_stats.as_dict()
    stats["seconds"] = round(report.wall_time_seconds, 6)
    print(json.dumps(stats))
    return 0


def _labels_for(args, n_docs: int):
    if not args.labels:
        return None
    return read_labels(args.labels, n_docs)


def cmd_cluster(args) -> int:
    timing = not args.no_timing
    if _is_tree_file(args.input):
        tree = _load_tree(args.input)
        if tree.root is None:
            raise CliError("tree is empty")
        level = args.level or 1
        start = time.perf_counter()
        try:
            solution = tree.clusters_at_level(level)
        except ValueError as exc:
            raise CliError(str(exc)) from None
        elapsed = time.perf_counter() - start
        report = RunReport(solution, elapsed, tree.stats(), tree.config, tree=tree)
        labels = _labels_for(args, tree.size)
    else:
        if args.level not in (None, 1):
            raise CliError("--level needs a tree file as input")
        level = 1
        corpus = read_matrix(args.input)
        if corpus.n_docs == 0:
            raise CliError("matrix holds no documents")
        labels = _labels_for(args, corpus.n_docs)
        report = run_ktree(corpus, _config(args), shuffle=args.shuffle)
    return _finish(args, "cluster", report, labels, timing, level)


def cmd_sampled(args) -> int:
    corpus = read_matrix(args.matrix)
    if corpus.n_docs == 0:
        raise CliError("matrix holds no documents")
    labels = _labels_for(args, corpus.n_docs)
    report = run_sampled(corpus, args.fraction, _config(args), calibrate=not args.no_calibrate)
    return _finish(args, "sampled", report, labels, not args.no_timing, 1)


def _finish(args, command: str, report: RunReport, labels, timing: bool, level: int) -> int:
    try:
        record = report.record(labels, timing)
    except KeyError as exc:
        raise CliError(f"labels do not cover the clustered documents: {exc}") from None
    if args.solution_out:
        write_solution(report.solution, args.solution_out)
    if args.json:
        print(json.dumps(record, separators=(",", ":")))
    _emit_csv([_csv_row(command, record, level)], args.out, args.append)
    return 0


def cmd_search(args) -> int:
    tree = _load_tree(args.tree)
    if tree.root is None:
        raise CliError("tree is empty")
    if args.query_doc is not None:
        if args.query_doc not in tree:
            raise CliError(f"doc {args.query_doc} is not in the tree")
        queries = [tree.vector(args.query_doc)]
    else:
        queries = read_matrix(args.query_file).docs
        if not queries:
            raise CliError("query file holds no vectors")
    for qi, q in enumerate(queries):
        if q.dim != tree.dim:
            raise CliError(f"query {qi} has dimension {q.dim}, tree has {tree.dim}")
        for doc, dist in tree.nearest_in_leaf(q, args.top):
            print(f"{qi} {doc} {dist:.6f}")
    return 0


def cmd_dump(args) -> int:
    tree = _load_tree(args.tree)
    text = tree.dump(args.depth_limit, args.top_terms)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    solution = read_solution(args.solution)
    labels = read_labels(args.labels, solution.n_docs)
    purity, entropy = evaluate(solution, labels)
    record = {"k": solution.k, "purity": purity, "entropy": entropy}
    _emit_csv([_csv_row("eval", record)], args.out, args.append)
    return 0


# -- parser ------------------------------------------------------------------


def _tree_flags(p: argparse.ArgumentParser, order_default: int = 10) -> None:
    p.add_argument("--order", type=_order, default=order_default, help="maximum entries per node")
    p.add_argument("--mode", choices=MODES, default="classic")
    p.add_argument("--split-k", type=int, default=2, help="clusters per node split")
    p.add_argument("--seed", type=int, default=0)


def _report_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--labels", help="class label file, one token per line")
    p.add_argument("--out", help="CSV destination (default: stdout)")
    p.add_argument("--append", action="store_true", help="append a row to an existing CSV")
    p.add_argument("--solution-out", help="write the clustering, one cluster index per line")
    p.add_argument("--json", action="store_true", help="also print the run record as JSON")
    p.add_argument("--no-timing", action="store_true", help="leave the seconds column empty")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ktree", description="K-tree document clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="TF-IDF weight and cull a matrix")
    p.add_argument("matrix")
    p.add_argument("--keep-terms", type=int, default=8000)
    p.add_argument("--out", required=True)
    p.add_argument("--term-map", help="surviving term list (default: OUT.terms)")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("build", help="build and save a K-tree")
    p.add_argument("matrix")
    _tree_flags(p)
    p.add_argument("--shuffle", action="store_true", help="insert in seeded random order")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("cluster", help="cluster a matrix or cut a saved tree")
    p.add_argument("input", help="matrix file or saved tree")
    p.add_argument("--level", type=int, help="tree level to cut (tree input only)")
    _tree_flags(p)
    p.add_argument("--shuffle", action="store_true")
    _report_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sampled", help="medoid-sampled K-tree clustering")
    p.add_argument("matrix")
    p.add_argument("--fraction", type=_fraction, default=0.1)
    p.add_argument("--no-calibrate", action="store_true", help="use the sampling order as-is")
    _tree_flags(p)
    _report_flags(p)
    p.set_defaults(func=cmd_sampled)

    p = sub.add_parser("search", help="nearest-neighbour search in a saved tree")
    p.add_argument("tree")
    q = p.add_mutually_exclusive_group(required=True)
    q.add_argument("--query-doc", type=int)
    q.add_argument("--query-file", help="matrix file, one query per row")
    p.add_argument("--top", type=int, default=1, help="results from the reached leaf")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("dump", help="print the tree structure")
    p.add_argument("tree")
    p.add_argument("--depth-limit", type=int)
    p.add_argument("--top-terms", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("eval", help="score a clustering against labels")
    p.add_argument("solution")
    p.add_argument("--labels", required=True)
    p.add_argument("--out")
    p.add_argument("--append", action="store_true")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, FormatError, SerializationError, ValueError, KeyError, LookupError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"ktree {args.command}: error: {msg}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ktree {args.command}: error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
