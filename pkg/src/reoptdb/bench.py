"""OTT benchmark: histogram-only plans versus re-optimized plans, executed."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

from .catalog import Catalog
from .executor import execute
from .optimizer import CardinalitySource, OptimizerConfig, optimize, plan_cost
from .ott import OttConfig, generate_ott, ott_queries, true_cardinality
from .plan import render_text
from .reopt import reoptimize

SCHEMA_VERSION = 1


@dataclass
class BenchRow:
    query: str
    constants: list[int]
    true_rows: int
    iterations: int
    plan_original: str
    plan_reopt: str
    cost_original: float
    cost_reopt: float
    rows_processed_original: int
    rows_processed_reopt: int
    join_rows_original: int
    join_rows_reopt: int
    result_rows: int
    reopt_time: float
    exec_time_original: float
    exec_time_reopt: float


def build_catalog(config: OttConfig, fraction: float, sample_seed: int) -> Catalog:
    cat = Catalog()
    for rel in generate_ott(config):
        cat.add(rel)
    cat.analyze()
    cat.sample(fraction, sample_seed)
    return cat


def run_bench(config: OttConfig, *, n_join: int = 4, m: int = 4, fraction: float = 0.05,
              sample_seed: int = 0, opt: OptimizerConfig | None = None,
              catalog: Catalog | None = None) -> dict:
    opt = opt or OptimizerConfig()
    cat = catalog or build_catalog(config, fraction, sample_seed)
    rows = []
    for q in ott_queries(config, n_join, m):
        spec = q.spec()
        tables = {a: cat.relation(spec.relation_of(a)) for a in spec.aliases}
        hist = CardinalitySource.from_stats(spec, cat.stats)
        original = optimize(spec, hist, opt)

        t0 = time.perf_counter()
        rep = reoptimize(spec, cat, opt)
        t_reopt = time.perf_counter() - t0
        e0 = execute(original, tables, spec)
        e1 = execute(rep.final_plan, tables, spec)
        if e0.result_rows != e1.result_rows:
            raise AssertionError(f"plans disagree on {q.sql()}: {e0.result_rows} vs {e1.result_rows}")
        oracle = CardinalitySource.from_stats(spec, cat.stats, rep.gamma_final)
        rows.append(BenchRow(
            query=q.sql(), constants=list(q.constants), true_rows=true_cardinality(config, q),
            iterations=rep.iterations,
            plan_original=render_text(original), plan_reopt=render_text(rep.final_plan),
            cost_original=plan_cost(original, hist, opt.cost_model),
            cost_reopt=plan_cost(rep.final_plan, oracle, opt.cost_model),
            rows_processed_original=e0.rows_processed, rows_processed_reopt=e1.rows_processed,
            join_rows_original=e0.join_rows, join_rows_reopt=e1.join_rows,
            result_rows=e1.result_rows, reopt_time=t_reopt,
            exec_time_original=e0.wall_time, exec_time_reopt=e1.wall_time,
        ))
    total_o = sum(r.rows_processed_original for r in rows)
    total_r = sum(r.rows_processed_reopt for r in rows)
    return {
        "schema_version": SCHEMA_VERSION,
        "config": {**asdict(config), "n_join": n_join, "m": m, "fraction": fraction,
                   "sample_seed": sample_seed, "optimizer": opt.to_json()},
        "queries": [asdict(r) for r in rows],
        "summary": {
            "rows_processed_original": total_o,
            "rows_processed_reopt": total_r,
            "ratio": total_o / total_r if total_r else None,
            "max_iterations": max((r.iterations for r in rows), default=0),
        },
    }
