"""End-to-end driver: train, prune, cluster, extract, iterate rule pruning.

A run is fully determined by (config, seed). The experiment harness runs a
seed list, aggregates mean/min/max over the per-run rows, and selects a
best run (highest rule test accuracy, then train accuracy, then the lowest
seed). Reports carry no timestamps so identical configs reproduce
byte-identical files.
"""

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .clustering import (ClusterSearchConfig, discretized_accuracy,
                         search_epsilon)
from .data import (DatasetError, DiscretizePolicy, Encoder, discretize_inputs,
                   load_dataset, load_schema, split_dataset)
from .pruning import PruneConfig, prune_network, remove_dead_nodes
from .rules import (default_rule, evaluate_table, extract_hidden_rules,
                    extract_output_rules, merge_rules, prune_rules,
                    table_from_dataset)
from .training import TrainConfig, accuracy, constructive_train, evaluate_set


class ConfigError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    dataset: str
    schema: str
    split: tuple = None            # (train, test); None = everything trains
    validation_fraction: float = 0.2
    rule_floor_drop: float = 0.01  # rule accuracy may drop this below the
                                   # discretized net before pruning reverts
    rule_delete_order: str = "largest"  # which rule group collapses into the
                                        # default: "largest" or "smallest"
    seeds: tuple = tuple(range(10))
    train: TrainConfig = field(default_factory=TrainConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)
    cluster: ClusterSearchConfig = field(default_factory=ClusterSearchConfig)
    discretize: DiscretizePolicy = field(default_factory=DiscretizePolicy)

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if self.rule_delete_order not in ("largest", "smallest"):
            raise ConfigError("rule_delete_order must be largest or smallest")


_SECTIONS = {"train": TrainConfig, "prune": PruneConfig,
             "cluster": ClusterSearchConfig, "discretize": DiscretizePolicy}


def config_from_dict(raw):
    raw = dict(raw)
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = raw.pop(name, {})
        known = {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - known
        if bad:
            raise ConfigError(f"unknown {name} keys: {sorted(bad)}")
        try:
            kwargs[name] = cls(**section)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad {name} section: {exc}") from exc
    known = {f.name for f in dataclasses.fields(RunConfig)} - set(_SECTIONS)
    bad = set(raw) - known
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    if "split" in raw and raw["split"] is not None:
        raw["split"] = tuple(raw["split"])
    if "seeds" in raw:
        raw["seeds"] = tuple(raw["seeds"])
    try:
        return RunConfig(**raw, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def apply_overrides(raw, overrides):
    """Apply `a.b=value` strings onto the raw config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = raw
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot descend into {key!r}")
        node[parts[-1]] = yaml.safe_load(value)
    return raw


def load_config(path, overrides=()):
    """Read a YAML run config; dataset paths resolve against the file."""
    try:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = apply_overrides(raw, overrides)
    base = os.path.dirname(os.path.abspath(path))
    for key in ("dataset", "schema"):
        if key in raw and raw[key] and not os.path.isabs(raw[key]):
            local = os.path.join(base, raw[key])
            parent = os.path.normpath(os.path.join(base, os.pardir, raw[key]))
            raw[key] = local if os.path.exists(local) else parent
    return config_from_dict(raw)


class Prepared:
    """Everything derived deterministically from the config's data section."""

    def __init__(self, cfg):
        schema = load_schema(cfg.schema)
        self.dataset = load_dataset(cfg.dataset, schema)
        split = cfg.split if cfg.split is not None else (len(self.dataset), 0)
        self.train_ds, self.valid_ds, self.test_ds = split_dataset(
            self.dataset, split, cfg.validation_fraction)
        # the full named train block: what accuracy reporting, pruning,
        # clustering, and rule extraction all operate on
        block = self.train_ds.patterns + self.valid_ds.patterns
        self.block_ds = self.dataset.replace_patterns(block)
        self.encoder = Encoder(self.block_ds)
        self.X_tr, self.T_tr, _ = self.encoder.encode_all(self.train_ds)
        self.X_va, self.T_va, _ = self.encoder.encode_all(self.valid_ds)
        self.X_tb, self.T_tb, self.y_tb = self.encoder.encode_all(self.block_ds)
        self.X_te, self.T_te, self.y_te = self.encoder.encode_all(self.test_ds)
        self.scheme = discretize_inputs(self.block_ds, cfg.discretize)
        self.block_table = table_from_dataset(self.block_ds, self.scheme)
        self.test_table = (table_from_dataset(self.test_ds, self.scheme)
                           if len(self.test_ds) else None)


@dataclass
class ReportRow:
    seed: int
    init_nodes: int
    init_conns: int
    inter_nodes: int
    inter_conns: int
    final_nodes: int
    final_conns: int
    epochs_constructive: int
    epochs_pruning: int
    epochs: int
    acc_train_net: float
    acc_test_net: float
    acc_train_disc: float
    acc_test_disc: float
    rules: int
    conds_mean: float
    acc_train_rules: float
    acc_test_rules: float
    coverage_train: float
    ambiguous_train: int


NUMERIC_FIELDS = [f.name for f in dataclasses.fields(ReportRow)]


@dataclass
class PipelineResult:
    network: object
    model: object
    output_rules: object
    hidden_rules: list
    ruleset: object
    trace: object
    prune_log: object
    row: ReportRow


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (DatasetError, ConfigError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_pipeline(cfg, seed, prepared=None):
    """One seeded run of the whole extraction pipeline."""
    prep = prepared if prepared is not None else Prepared(cfg)
    n_enc = prep.encoder.n
    C = len(prep.dataset.classes)

    net, trace = _stage("train", constructive_train,
                        (prep.X_tr, prep.T_tr), (prep.X_va, prep.T_va),
                        cfg.train, seed)
    inter_nodes = n_enc + net.h + C
    inter_conns = net.connection_count()

    net, prune_log = _stage("prune", prune_network, net,
                            (prep.X_tb, prep.T_tb), (prep.X_va, prep.T_va),
                            cfg.prune, cfg.train)
    net = _stage("prune", remove_dead_nodes, net)

    model = _stage("cluster", search_epsilon, net, prep.X_tb, prep.T_tb,
                   cfg.cluster)

    has_test = len(prep.X_te) > 0
    acc_train_disc = discretized_accuracy(net, model, prep.X_tb, prep.T_tb)
    acc_test_disc = (discretized_accuracy(net, model, prep.X_te, prep.T_te)
                     if has_test else acc_train_disc)

    def extract():
        _, _, _, acts = evaluate_set(net, prep.X_tb, prep.T_tb)
        output_rs, _ = extract_output_rules(net, model, acts,
                                            prep.dataset.classes)
        hidden_rs = extract_hidden_rules(net, model, acts, prep.block_table,
                                         prep.encoder.input_attr)
        merged = merge_rules(output_rs, hidden_rs, prep.block_table,
                             cfg.rule_delete_order)
        return output_rs, hidden_rs, merged

    output_rs, hidden_rs, merged = _stage("extract", extract)

    def refine(rs):
        """Step 5/6 loop: keep pruning the rule set until it stops changing;
        revert the last pruning pass if it drops accuracy below the floor."""
        floor = acc_train_disc - cfg.rule_floor_drop
        while True:
            cand = default_rule(prune_rules(rs, prep.block_table,
                                            cfg.rule_delete_order),
                                prep.block_table)
            if evaluate_table(cand, prep.block_table).accuracy < floor:
                return rs
            if cand.rules == rs.rules and cand.default == rs.default:
                return cand
            rs = cand

    ruleset = _stage("rules", refine, merged)

    m_train = evaluate_table(ruleset, prep.block_table)
    m_test = (evaluate_table(ruleset, prep.test_table)
              if prep.test_table is not None else None)

    acc_train_net = accuracy(net, prep.X_tb, prep.T_tb)
    row = ReportRow(
        seed=seed,
        init_nodes=n_enc + 1 + C,
        init_conns=n_enc + C,
        inter_nodes=inter_nodes,
        inter_conns=inter_conns,
        final_nodes=net.node_count(),
        final_conns=net.connection_count(),
        epochs_constructive=trace.epochs,
        epochs_pruning=prune_log.epochs,
        epochs=trace.epochs + prune_log.epochs,
        acc_train_net=acc_train_net,
        acc_test_net=accuracy(net, prep.X_te, prep.T_te) if has_test else acc_train_net,
        acc_train_disc=acc_train_disc,
        acc_test_disc=acc_test_disc,
        rules=m_train.n_rules,
        conds_mean=m_train.mean_conditions,
        acc_train_rules=m_train.accuracy,
        acc_test_rules=m_test.accuracy if m_test is not None else m_train.accuracy,
        coverage_train=m_train.coverage,
        ambiguous_train=m_train.ambiguous,
    )
    return PipelineResult(net, model, output_rs, hidden_rs, ruleset, trace,
                          prune_log, row)


@dataclass
class RunReport:
    rows: list
    failures: list          # (seed, stage, message)
    best_seed: int

    def aggregate(self):
        """mean/min/max per numeric column, recomputed from the rows."""
        out = {}
        for name in NUMERIC_FIELDS:
            if name == "seed":
                continue
            vals = [getattr(r, name) for r in self.rows]
            out[name] = (float(np.mean(vals)), min(vals), max(vals))
        return out

    def best_row(self):
        return next(r for r in self.rows if r.seed == self.best_seed)

    def to_csv(self):
        lines = [",".join(NUMERIC_FIELDS)]
        for r in self.rows:
            lines.append(",".join(_fmt(getattr(r, n)) for n in NUMERIC_FIELDS))
        agg = self.aggregate()
        for stat, idx in (("mean", 0), ("min", 1), ("max", 2)):
            cells = [stat]
            for name in NUMERIC_FIELDS[1:]:
                cells.append(_fmt(agg[name][idx]))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_text(self):
        lines = ["run report"]
        lines.append(f"runs: {len(self.rows)}  failures: {len(self.failures)}"
                     f"  best seed: {self.best_seed}")
        agg = self.aggregate()
        lines.append("")
        lines.append(f"{'metric':<22}{'mean':>12}{'min':>12}{'max':>12}")
        for name in NUMERIC_FIELDS[1:]:
            mean, lo, hi = agg[name]
            lines.append(f"{name:<22}{_fmt(mean):>12}{_fmt(lo):>12}{_fmt(hi):>12}")
        if self.failures:
            lines.append("")
            for seed, stage, msg in self.failures:
                lines.append(f"seed {seed} failed in {stage}: {msg}")
        return "\n".join(lines) + "\n"


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.6f}"


def run_experiment(cfg):
    """All seeds of the config; failures are recorded and excluded."""
    prep = Prepared(cfg)
    rows = []
    results = {}
    failures = []
    for seed in cfg.seeds:
        try:
            res = run_pipeline(cfg, seed, prepared=prep)
            rows.append(res.row)
            results[seed] = res
        except StageError as exc:
            failures.append((seed, exc.stage, str(exc.cause)))
    if not rows:
        raise StageError("experiment", RuntimeError("every run failed"))
    best = max(rows, key=lambda r: (r.acc_test_rules, r.acc_train_rules,
                                    -r.seed))
    return RunReport(rows, failures, best.seed), results
