"""Command-line driver.

Each subcommand reads a YAML run config plus the dataset/schema it names,
and writes its artifacts into --out. Stage commands (train, prune, cluster,
extract, evaluate) pick up the previous stage's files from the same
directory, so `rulenet train ... && rulenet prune ...` chains like the
in-process pipeline.

Exit codes: 0 success, 1 config error, 2 data error, 3 stage failure.
"""

import argparse
import dataclasses
import os
import sys

from .clustering import ClusterModel, discretized_accuracy, search_epsilon
from .data import DatasetError
from .network import Network
from .pipeline import (ConfigError, Prepared, RunConfig, StageError,
                       load_config, run_experiment, run_pipeline)
from .pruning import prune_network, remove_dead_nodes
from .rules import (default_rule, evaluate_table, extract_hidden_rules,
                    extract_output_rules, merge_rules, parse_rules,
                    prune_rules, render_rules, table_from_dataset)
from .training import accuracy, constructive_train, evaluate_set


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="rulenet",
                     description="train compact classifiers and extract rules")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("train", "constructive training only"),
            ("prune", "prune a trained network"),
            ("cluster", "discretize hidden activations"),
            ("extract", "generate rules from a clustered network"),
            ("evaluate", "evaluate a rule file on the configured dataset"),
            ("pipeline", "run every stage for one seed"),
            ("experiment", "run all configured seeds and report")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--out", default="out", help="artifact directory")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for single-run commands")
        p.add_argument("--seeds", type=str, default=None,
                       help="comma-separated seed list (experiment)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config entry by dotted key")
    return parser


def _write(path, text):
    with open(path, "w") as f:
        f.write(text)


def _load_net(outdir, name):
    path = os.path.join(outdir, name)
    if not os.path.exists(path):
        raise ConfigError(f"missing {path}; run the earlier stage first")
    with open(path) as f:
        return Network.from_text(f.read())


def _scaled_note(rs, prep):
    """Threshold renderings in scaled [0,1] units, for the rule report."""
    lines = []
    enc = prep.encoder
    for a, attr in enumerate(rs.attributes):
        if attr.kind != "ordinal" or not attr.cuts:
            continue
        lo, hi = enc.scale[a]
        if hi == lo:
            continue
        scaled = ", ".join(f"{c!r} -> {(c - lo) / (hi - lo):.3f}" for c in attr.cuts)
        lines.append(f"# {attr.name}: raw cut -> scaled: {scaled}")
    return "\n".join(lines)


def _run_refine(cfg, prep, net, model, merged):
    floor = discretized_accuracy(net, model, prep.X_tb, prep.T_tb) \
        - cfg.rule_floor_drop
    rs = merged
    while True:
        cand = default_rule(prune_rules(rs, prep.block_table,
                                        cfg.rule_delete_order),
                            prep.block_table)
        if evaluate_table(cand, prep.block_table).accuracy < floor:
            return rs
        if cand.rules == rs.rules and cand.default == rs.default:
            return cand
        rs = cand


def _metrics_text(rs, prep):
    lines = []
    m = evaluate_table(rs, prep.block_table)
    lines.append(f"train: accuracy {m.accuracy:.6f} coverage {m.coverage:.6f} "
                 f"rules {m.n_rules} mean_conditions {m.mean_conditions:.4f} "
                 f"ambiguous {m.ambiguous}")
    if prep.test_table is not None:
        mt = evaluate_table(rs, prep.test_table)
        lines.append(f"test: accuracy {mt.accuracy:.6f} coverage {mt.coverage:.6f}")
    return "\n".join(lines) + "\n"


def _cmd_train(cfg, prep, outdir, seed):
    net, trace = constructive_train((prep.X_tr, prep.T_tr),
                                    (prep.X_va, prep.T_va), cfg.train, seed)
    _write(os.path.join(outdir, "network_constructive.txt"), net.to_text())
    _write(os.path.join(outdir, "trace.csv"), trace.to_csv())
    print(f"trained: h={net.h} epochs={trace.epochs} "
          f"train_acc={accuracy(net, prep.X_tb, prep.T_tb):.4f}")


def _cmd_prune(cfg, prep, outdir, seed):
    net = _load_net(outdir, "network_constructive.txt")
    net, log = prune_network(net, (prep.X_tb, prep.T_tb),
                             (prep.X_va, prep.T_va), cfg.prune, cfg.train)
    net = remove_dead_nodes(net)
    _write(os.path.join(outdir, "network_pruned.txt"), net.to_text())
    _write(os.path.join(outdir, "prune_log.csv"), log.to_csv())
    print(f"pruned: connections={net.connection_count()} "
          f"nodes={net.node_count()} retrain_epochs={log.epochs}")


def _cmd_cluster(cfg, prep, outdir, seed):
    net = _load_net(outdir, "network_pruned.txt")
    model = search_epsilon(net, prep.X_tb, prep.T_tb, cfg.cluster)
    _write(os.path.join(outdir, "clusters.json"), model.to_json())
    _write(os.path.join(outdir, "cluster_report.txt"), model.report())
    acc = discretized_accuracy(net, model, prep.X_tb, prep.T_tb)
    print(f"clustered: D={[nc.D for nc in model.nodes]} "
          f"discretized_train_acc={acc:.4f}")


def _cmd_extract(cfg, prep, outdir, seed):
    net = _load_net(outdir, "network_pruned.txt")
    path = os.path.join(outdir, "clusters.json")
    if not os.path.exists(path):
        raise ConfigError(f"missing {path}; run `cluster` first")
    with open(path) as f:
        model = ClusterModel.from_json(f.read())
    _, _, _, acts = evaluate_set(net, prep.X_tb, prep.T_tb)
    output_rs, _ = extract_output_rules(net, model, acts, prep.dataset.classes)
    hidden_rs = extract_hidden_rules(net, model, acts, prep.block_table,
                                     prep.encoder.input_attr)
    merged = merge_rules(output_rs, hidden_rs, prep.block_table,
                         cfg.rule_delete_order)
    rs = _run_refine(cfg, prep, net, model, merged)
    _write(os.path.join(outdir, "rules_output.txt"), render_rules(output_rs))
    for m, hrs in enumerate(hidden_rs):
        _write(os.path.join(outdir, f"rules_hidden_H{m + 1}.txt"),
               render_rules(hrs))
    _write(os.path.join(outdir, "rules.txt"), render_rules(rs))
    note = _scaled_note(rs, prep)
    _write(os.path.join(outdir, "rule_report.txt"),
           render_rules(rs) + (note + "\n" if note else ""))
    print(f"extracted: {len(rs.rules)} rules + default")


def _cmd_evaluate(cfg, prep, outdir, seed):
    path = os.path.join(outdir, "rules.txt")
    if not os.path.exists(path):
        raise ConfigError(f"missing {path}; run `extract` first")
    with open(path) as f:
        rs = parse_rules(f.read(), prep.block_table.attributes,
                         prep.dataset.classes)
    text = _metrics_text(rs, prep)
    _write(os.path.join(outdir, "metrics.txt"), text)
    print(text, end="")


def _cmd_pipeline(cfg, prep, outdir, seed):
    res = run_pipeline(cfg, seed, prepared=prep)
    _write(os.path.join(outdir, "network_pruned.txt"), res.network.to_text())
    _write(os.path.join(outdir, "trace.csv"), res.trace.to_csv())
    _write(os.path.join(outdir, "prune_log.csv"), res.prune_log.to_csv())
    _write(os.path.join(outdir, "clusters.json"), res.model.to_json())
    _write(os.path.join(outdir, "cluster_report.txt"), res.model.report())
    _write(os.path.join(outdir, "rules_output.txt"),
           render_rules(res.output_rules))
    for m, hrs in enumerate(res.hidden_rules):
        _write(os.path.join(outdir, f"rules_hidden_H{m + 1}.txt"),
               render_rules(hrs))
    _write(os.path.join(outdir, "rules.txt"), render_rules(res.ruleset))
    note = _scaled_note(res.ruleset, prep)
    _write(os.path.join(outdir, "rule_report.txt"),
           render_rules(res.ruleset) + (note + "\n" if note else ""))
    _write(os.path.join(outdir, "metrics.txt"),
           _metrics_text(res.ruleset, prep))
    r = res.row
    print(f"seed {r.seed}: {r.rules} rules, train {r.acc_train_rules:.4f}, "
          f"test {r.acc_test_rules:.4f}, epochs {r.epochs}")


def _cmd_experiment(cfg, prep, outdir, seed):
    report, results = run_experiment(cfg)
    _write(os.path.join(outdir, "report.csv"), report.to_csv())
    _write(os.path.join(outdir, "report.txt"), report.to_text())
    best = results[report.best_seed]
    bestdir = os.path.join(outdir, "best")
    os.makedirs(bestdir, exist_ok=True)
    _write(os.path.join(bestdir, "network_pruned.txt"), best.network.to_text())
    _write(os.path.join(bestdir, "clusters.json"), best.model.to_json())
    _write(os.path.join(bestdir, "rules.txt"), render_rules(best.ruleset))
    print(report.to_text(), end="")


_COMMANDS = {
    "train": _cmd_train,
    "prune": _cmd_prune,
    "cluster": _cmd_cluster,
    "extract": _cmd_extract,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
    "experiment": _cmd_experiment,
}


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_config(args.config, args.overrides)
        if args.seeds is not None:
            seeds = tuple(int(s) for s in args.seeds.split(","))
            cfg = dataclasses.replace(cfg, seeds=seeds)
        seed = args.seed if args.seed is not None else cfg.seeds[0]
        os.makedirs(args.out, exist_ok=True)
        prep = Prepared(cfg)
        _COMMANDS[args.command](cfg, prep, args.out, seed)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # stage-level failures outside run_pipeline
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
