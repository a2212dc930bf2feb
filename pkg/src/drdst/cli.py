"""Command-line entry point: single runs, parameter sweeps, shard benchmarks."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import os
import sys

import numpy as np

from . import sharding, sim
from .core import ConfigError, RsuNode, SimConfig, config_from_dict, load_config, \
    place_rsus, seeded_rng

SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("drdst")


def _setup_logging() -> None:
    level = os.environ.get("DRDST_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_metrics_csv(path: str, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.rng_seed = args.seed
            cfg.validate()
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = sim.run(cfg)
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("run failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    m = result.metrics.as_dict()
    m["schema_version"] = SCHEMA_VERSION
    m["seed"] = cfg.rng_seed
    columns = ["schema_version", "seed"] + sim.MetricsRecord.fields()
    epoch_cols = ["epoch", "shard_fitness", "healthy_shards", "committed",
                  "bytes_bits", "tree_bound_s"]
    epochs = [{c: getattr(e, c) for c in epoch_cols} for e in result.epochs]
    if args.format == "json":
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"metrics": m, "epochs": epochs}, fh, indent=2)
            fh.write("\n")
    else:
        _write_metrics_csv(args.out, [m], columns)
        _write_metrics_csv(args.out + ".epochs.csv", epochs, epoch_cols)
    if args.tx_log:
        _dump_tx_log(result, args.tx_log)
    if args.byte_log:
        _dump_byte_log(result, args.byte_log)
    if args.tree_dump:
        _dump_trees(result, args.tree_dump)
    if args.summary:
        lat = m["mean_latency_s"]
        print(f"committed {m['committed']}/{m['submitted']} txs, "
              f"mean latency {lat if lat is not None else 'n/a'} s, "
              f"throughput {m['throughput_tps']:.1f} tps, "
              f"success {m['success_rate']:.4f}, "
              f"traffic {m['node_traffic_mb']:.2f} MB/node")
    return EXIT_OK


def _dump_tx_log(result: sim.RunResult, path: str) -> None:
    txlog = result.txlog
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tx_id", "vehicle", "origin_rsu", "origin_shard", "kind",
                    "t_sub", "t_con_or_empty", "status"])
        kinds = {0: "normal", 1: "cross_shard"}
        statuses = {0: "pending", 1: "committed", 2: "rejected"}
        for i in range(len(txlog)):
            tcon = "" if np.isnan(txlog.t_con[i]) else repr(float(txlog.t_con[i]))
            w.writerow([txlog.id[i], txlog.vehicle[i], txlog.origin_rsu[i],
                        txlog.origin_shard[i], kinds[int(txlog.kind[i])],
                        repr(float(txlog.t_sub[i])), tcon,
                        statuses[int(txlog.status[i])]])


def _dump_byte_log(result: sim.RunResult, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "node", "bytes_sent"])
        for epoch, node, bits in result.byte_log:
            w.writerow([int(epoch), int(node), repr(float(bits) / 8.0)])


def _dump_trees(result: sim.RunResult, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "shard", "parent", "child", "edge_latency_s",
                    "is_cross_shard"])
        for row in result.tree_rows:
            w.writerow(list(row))


def _one_sweep_run(cfg_dict: dict):
    cfg = config_from_dict(cfg_dict)
    return sim.run(cfg).metrics.as_dict()


def cmd_sweep(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        base = spec.get("base", {})
        axes = spec.get("axes", {})
        seeds = spec.get("seeds", [0])
        cap = spec.get("max_runs", 10000)
        axis_names = list(axes.keys())
        grid = list(itertools.product(*(axes[a] for a in axis_names))) or [()]
        if len(grid) * len(seeds) > cap:
            raise ConfigError(f"sweep size {len(grid) * len(seeds)} exceeds cap {cap}")
        # validate every grid point up front
        jobs = []
        for combo in grid:
            for seed in seeds:
                cfg_dict = dict(base)
                for name, value in zip(axis_names, combo):
                    cfg_dict[name] = value
                cfg_dict["rng_seed"] = seed
                config_from_dict(cfg_dict)  # raises ConfigError on bad points
                jobs.append((combo, seed, cfg_dict))
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    results = [None] * len(jobs)
    failed = False
    if args.jobs > 1:
        import concurrent.futures
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
            futs = {ex.submit(_one_sweep_run, cfg_dict): i
                    for i, (_, _, cfg_dict) in enumerate(jobs)}
            for fut in concurrent.futures.as_completed(futs):
                i = futs[fut]
                try:
                    results[i] = fut.result()
                except Exception as exc:
                    log.error("sweep run %d failed: %s", i, exc)
                    results[i] = None
                    failed = True
    else:
        for i, (_, _, cfg_dict) in enumerate(jobs):
            try:
                results[i] = _one_sweep_run(cfg_dict)
            except Exception as exc:
                log.error("sweep run %d failed: %s", i, exc)
                failed = True

    columns = (["schema_version", "run_id", "seed", "status"] + axis_names
               + sim.MetricsRecord.fields())
    rows = []
    for i, ((combo, seed, _), res) in enumerate(zip(jobs, results)):
        row = {"schema_version": SCHEMA_VERSION, "run_id": i, "seed": seed,
               "status": "ok" if res is not None else "failed"}
        for name, value in zip(axis_names, combo):
            row[name] = value
        if res is not None:
            row.update(res)
        rows.append(row)
    _write_metrics_csv(os.path.join(args.out, "sweep.csv"), rows, columns)
    return EXIT_PARTIAL if failed else EXIT_OK


def bench_instance(cfg: SimConfig) -> list[RsuNode]:
    """A standalone node population for shard benchmarks: scored but static."""
    hub = seeded_rng(cfg.rng_seed)
    rng = hub.stream("bench")
    nodes = place_rsus(cfg, hub.stream("placement"))
    for nd in nodes:
        nd.trust = float(rng.uniform(0.0, 10.0))
        nd.stability = float(rng.uniform(0.0, 1.0))
    return nodes


def cmd_shard_bench(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        nodes = bench_instance(cfg)
        stab_max = max(nd.stability for nd in nodes)
        params = sharding.GsaParams(cfg.gsa.population_size, cfg.gsa.generations,
                                    cfg.gsa.mutation_factor, cfg.gsa.crossover_prob,
                                    max(stab_max, 1e-9))
        hub = seeded_rng(cfg.rng_seed)
        rows = []
        for algo, runner in (("gsa", sharding.gsa_run), ("ga", sharding.ga_baseline_run)):
            for run_id in range(args.runs):
                rng = hub.stream(f"{algo}-{run_id}")
                _, _, history = runner(nodes, cfg.shard_count, params,
                                       cfg.thresholds, rng)
                for gen, best in enumerate(history):
                    rows.append({"schema_version": SCHEMA_VERSION,
                                 "generation": gen, "algorithm": algo,
                                 "run_id": run_id, "best_fitness": best})
        _write_metrics_csv(args.out, rows,
                           ["schema_version", "generation", "algorithm",
                            "run_id", "best_fitness"])
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("shard-bench failed")
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drdst")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one simulation")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--format", choices=["csv", "json"], default="csv")
    p_run.add_argument("--summary", action="store_true")
    p_run.add_argument("--tx-log")
    p_run.add_argument("--byte-log")
    p_run.add_argument("--tree-dump")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid")
    p_sweep.add_argument("--spec", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_bench = sub.add_parser("shard-bench", help="GSA vs plain-GA convergence")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--runs", type=int, default=100)
    p_bench.set_defaults(func=cmd_shard_bench)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
