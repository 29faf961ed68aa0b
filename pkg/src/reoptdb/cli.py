"""Command-line driver.

Exit codes: 0 success, 1 bad input data (catalog, query, files), 2 usage
error, 3 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import ball, bench
from .catalog import Catalog, open_catalog, save_catalog
from .errors import InvariantViolation, ReoptError
from .executor import execute
from .optimizer import BUSHY, LEFT_DEEP, CardinalitySource, OptimizerConfig, explain_plan, optimize
from .ott import OttConfig, generate_ott
from .plan import Gamma, render_text, to_json
from .reopt import DEFAULT_MAX_ITERS, reoptimize
from .sql import parse

SCHEMA_VERSION = 1
SEED_ENV = "REOPTDB_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


class UsageError(Exception):
    pass


def _emit_json(obj, out) -> None:
    out.write(json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True))
    out.write("\n")


def _read_query(text: str):
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    return parse(text)


def _opt_config(args) -> OptimizerConfig:
    return OptimizerConfig(tree_shape=args.tree_shape, allow_cross_products=args.cross_products)


def _int_list(s: str) -> list[int]:
    try:
        out = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def cmd_gen_ott(args, out):
    cfg = OttConfig(K=args.K, rows_per_table=args.rows, rows_per_value=args.rows_per_value,
                    seed=default_seed() if args.seed is None else args.seed)
    cat = Catalog()
    for rel in generate_ott(cfg):
        cat.add(rel)
    save_catalog(cat, args.catalog)
    if args.json:
        _emit_json({"catalog": str(args.catalog), "relations": sorted(cat.relations),
                    "rows_per_table": cfg.rows_per_table, "domain_size": cfg.domain_size}, out)
    else:
        out.write(f"wrote {len(cat.relations)} relations to {args.catalog}\n")


def cmd_analyze(args, out):
    cat = open_catalog(args.catalog)
    cat.analyze(args.mcv_limit, args.buckets)
    save_catalog(cat, args.catalog)
    if args.json:
        _emit_json({"stats": {r: {c: s.to_json() for c, s in cols.items()}
                              for r, cols in sorted(cat.stats.items())}}, out)
    else:
        for r, cols in sorted(cat.stats.items()):
            for c, s in sorted(cols.items()):
                out.write(f"{r}.{c}: rows={s.row_count} distinct={s.n_distinct} mcvs={len(s.mcvs)}\n")


def cmd_sample(args, out):
    cat = open_catalog(args.catalog)
    cat.sample(args.fraction, default_seed() if args.seed is None else args.seed)
    save_catalog(cat, args.catalog)
    sizes = {n: s.size for n, s in sorted(cat.samples.items())}
    if args.json:
        _emit_json({"fraction": args.fraction, "sizes": sizes}, out)
    else:
        for n, k in sizes.items():
            out.write(f"{n}: {k} sample rows\n")


def _require_stats(cat):
    if not cat.stats:
        raise UsageError("catalog has no statistics; run analyze first")


def cmd_explain(args, out):
    cat = open_catalog(args.catalog)
    _require_stats(cat)
    q = _read_query(args.query)
    gamma = Gamma()
    if args.gamma:
        gamma = Gamma.from_json(json.loads(Path(args.gamma).read_text()))
    cfg = _opt_config(args)
    card = CardinalitySource.from_stats(q, cat.stats, gamma)
    plan = optimize(q, card, cfg)
    text = explain_plan(plan, q, card, cfg.cost_model)
    if args.json:
        _emit_json({"query": q.to_sql(), "plan": to_json(plan), "text": render_text(plan),
                    "explain": text}, out)
    else:
        out.write(text + "\n")


def cmd_reopt(args, out):
    cat = open_catalog(args.catalog)
    _require_stats(cat)
    q = _read_query(args.query)
    cfg = _opt_config(args)
    rep = reoptimize(q, cat, cfg, args.max_iters, floor=args.floor)
    if args.json:
        _emit_json({**rep.to_json(), "trace": rep.trace}, out)
        return
    for block in rep.trace:
        out.write(block + "\n")
    for note in rep.notices:
        out.write(f"notice: {note}\n")
    final = CardinalitySource.from_stats(q, cat.stats, rep.gamma_final)
    out.write(f"final plan after {rep.iterations} rounds:\n")
    out.write(explain_plan(rep.final_plan, q, final, cfg.cost_model) + "\n")


def cmd_run(args, out):
    cat = open_catalog(args.catalog)
    _require_stats(cat)
    q = _read_query(args.query)
    cfg = _opt_config(args)
    if args.plan == "original":
        plan = optimize(q, CardinalitySource.from_stats(q, cat.stats), cfg)
    else:
        plan = reoptimize(q, cat, cfg, args.max_iters).final_plan
    tables = {a: cat.relation(q.relation_of(a)) for a in q.aliases}
    rep = execute(plan, tables, q)
    if args.json:
        _emit_json({"plan": render_text(plan), "report": rep.to_json()}, out)
    else:
        out.write(f"{render_text(plan)}\ncount={rep.result_rows} rows_processed={rep.rows_processed} "
                  f"time={rep.wall_time:.4f}s\n")


SN_FIELDS = ["n", "closed_form", "sqrt_ratio", "monte_carlo_mean", "monte_carlo_stderr", "trials"]


def cmd_simulate_sn(args, out):
    seed = default_seed() if args.seed is None else args.seed
    rows = []
    for n in args.n_list:
        cf = ball.sn_closed_form(n)
        row = {"n": n, "closed_form": cf, "sqrt_ratio": cf / n ** 0.5,
               "monte_carlo_mean": None, "monte_carlo_stderr": None, "trials": 0}
        if args.trials > 0:
            r = ball.sn_monte_carlo(n, args.trials, seed)
            row.update(monte_carlo_mean=r.monte_carlo_mean, monte_carlo_stderr=r.monte_carlo_stderr,
                       trials=args.trials)
        rows.append(row)
    if args.json:
        _emit_json({"rows": rows}, out)
    else:
        w = csv.DictWriter(out, fieldnames=SN_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: "" if v is None else v for k, v in r.items()})
    if args.figure:
        from .plotting import plot_sn
        plot_sn(rows, args.figure)


def cmd_bench_ott(args, out):
    seed = default_seed() if args.seed is None else args.seed
    cfg = OttConfig(K=args.K, rows_per_table=args.rows, rows_per_value=args.rows_per_value, seed=seed)
    result = bench.run_bench(cfg, n_join=args.joins, m=args.m, fraction=args.fraction,
                             sample_seed=seed, opt=_opt_config(args))
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        out.write(text + "\n")
    if args.figure:
        from .plotting import plot_bench
        plot_bench(result, args.figure)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reoptdb", description="Sampling-based query re-optimization toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log debug output to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def opt_flags(sp):
        sp.add_argument("--tree-shape", choices=[BUSHY, LEFT_DEEP], default=BUSHY)
        sp.add_argument("--cross-products", action="store_true", help="allow Cartesian products")

    def ott_flags(sp, rows, rpv):
        sp.add_argument("--K", type=int, default=5, help="number of tables")
        sp.add_argument("--rows", type=int, default=rows, help="rows per table")
        sp.add_argument("--rows-per-value", type=int, default=rpv, help="M")
        sp.add_argument("--seed", type=int, default=None)

    s = sub.add_parser("gen-ott", help="generate OTT tables into a catalog directory")
    s.add_argument("catalog", type=Path)
    ott_flags(s, 1000, 10)
    s.set_defaults(fn=cmd_gen_ott)

    s = sub.add_parser("analyze", help="compute column statistics")
    s.add_argument("catalog", type=Path)
    s.add_argument("--mcv-limit", type=int, default=100)
    s.add_argument("--buckets", type=int, default=100)
    s.set_defaults(fn=cmd_analyze)

    s = sub.add_parser("sample", help="draw per-relation samples")
    s.add_argument("catalog", type=Path)
    s.add_argument("--fraction", type=float, default=0.05)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(fn=cmd_sample)

    s = sub.add_parser("explain", help="show the optimizer's plan")
    s.add_argument("catalog", type=Path)
    s.add_argument("query", help="SQL text, or @file")
    s.add_argument("--gamma", help="JSON file of validated cardinalities")
    opt_flags(s)
    s.set_defaults(fn=cmd_explain)

    s = sub.add_parser("reopt", help="re-optimize a query using samples")
    s.add_argument("catalog", type=Path)
    s.add_argument("query", help="SQL text, or @file")
    s.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    s.add_argument("--floor", type=float, default=None, help="replace zero sample counts by this many rows")
    opt_flags(s)
    s.set_defaults(fn=cmd_reopt)

    s = sub.add_parser("run", help="execute a query")
    s.add_argument("catalog", type=Path)
    s.add_argument("query", help="SQL text, or @file")
    s.add_argument("--plan", choices=["original", "reopt"], default="reopt")
    s.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    opt_flags(s)
    s.set_defaults(fn=cmd_run)

    s = sub.add_parser("simulate-sn", help="ball-model expected steps (CSV)")
    s.add_argument("--n-list", type=_int_list, default=[10, 100, 1000])
    s.add_argument("--trials", type=int, default=0)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--figure", type=Path, help="write a PNG/PDF plot here")
    s.set_defaults(fn=cmd_simulate_sn)

    s = sub.add_parser("bench-ott", help="OTT benchmark (JSON)")
    ott_flags(s, 1000, 10)
    s.add_argument("--joins", type=int, default=4)
    s.add_argument("--m", type=int, default=4)
    s.add_argument("--fraction", type=float, default=0.05)
    s.add_argument("--output", type=Path, help="write JSON here instead of stdout")
    s.add_argument("--figure", type=Path)
    opt_flags(s)
    s.set_defaults(fn=cmd_bench_ott)

    for name, sp in sub.choices.items():
        if name != "bench-ott":
            sp.add_argument("--json", action="store_true", help="emit JSON")
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
    try:
        args.fn(args, out)
    except UsageError as e:
        print(f"reoptdb: {e}", file=sys.stderr)
        return 2
    except InvariantViolation as e:
        print(f"reoptdb: invariant violated: {e}", file=sys.stderr)
        return 3
    except (ReoptError, OSError, ValueError) as e:
        print(f"reoptdb: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
