"""Covering-rule generation over discrete tables, and the three-phase
composition that turns a clustered network into input-level rules.

Rules are conjunctions of per-attribute conditions with a class consequent
plus one default rule. Matching is order-insensitive: any matching
non-default rule may fire; the generator guarantees that rules matching a
common training pattern agree on the consequent.

Conditions are stored as inclusive code intervals [lo, hi] over an
attribute's discrete codes. Categorical and cluster attributes only ever
carry point conditions (lo == hi); ordinal attributes render as at-most /
at-least / in-interval with thresholds mapped back to raw cut values.
A rendered ``>= c`` stands for "above the cut at c": evaluation always
goes through interval codes, where a raw value exactly equal to a cut
falls in the lower interval.
"""

from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np


@dataclass(frozen=True)
class RuleAttribute:
    name: str
    kind: str            # "categorical" | "ordinal" | "cluster"
    n_values: int
    labels: tuple = None     # rendering labels (categories / centroid text)
    cuts: tuple = None       # raw cut points, ordinal only
    impute: object = None    # raw fallback for missing values

    def code(self, raw):
        if raw is None:
            raw = self.impute
        if self.kind == "ordinal":
            return bisect_left(self.cuts, raw)
        return int(raw)

    def value_text(self, code):
        if self.labels is not None:
            return str(self.labels[code])
        return str(code)


@dataclass(frozen=True, order=True)
class Condition:
    attr: int
    lo: int
    hi: int

    def matches(self, code):
        return self.lo <= code <= self.hi


@dataclass(frozen=True)
class Rule:
    conditions: tuple      # sorted by attribute index, one per attribute
    consequent: int
    support: int = 0


class RuleSet:
    def __init__(self, rules, default, attributes, class_names, provenance=""):
        self.rules = list(rules)
        self.default = default
        self.attributes = tuple(attributes)
        self.class_names = tuple(class_names)
        self.provenance = provenance

    def __len__(self):
        return len(self.rules)

    def copy(self):
        return RuleSet(list(self.rules), self.default, self.attributes,
                       self.class_names, self.provenance)


class Table:
    """Discrete feature rows with labels; the substrate rules are built on."""

    def __init__(self, rows, labels, attributes, class_names):
        self.rows = np.asarray(rows, dtype=np.intp).reshape(len(rows), -1)
        self.labels = np.asarray(labels, dtype=np.intp)
        self.attributes = tuple(attributes)
        self.class_names = tuple(class_names)

    def __len__(self):
        return len(self.rows)


# ---------------------------------------------------------------------------
# matching and evaluation

def rule_mask(rule, rows):
    mask = np.ones(len(rows), dtype=bool)
    for c in rule.conditions:
        col = rows[:, c.attr]
        mask &= (col >= c.lo) & (col <= c.hi)
    return mask


def classify_rows(rules, default, rows, n_classes):
    """Order-insensitive classification: majority consequent among matching
    rules (ties to the lower class); default when nothing matches.

    Returns (predictions, matched mask, ambiguous mask)."""
    k = len(rows)
    votes = np.zeros((k, n_classes), dtype=np.intp)
    for r in rules:
        votes[rule_mask(r, rows), r.consequent] += 1
    matched = votes.sum(axis=1) > 0
    ambiguous = (votes > 0).sum(axis=1) > 1
    preds = np.where(matched, votes.argmax(axis=1), default)
    return preds, matched, ambiguous


def _provisional_default(rules, table):
    """The default that default_rule would choose for the current rules."""
    if not rules:
        return _majority(table.labels, len(table.class_names))
    covered = np.zeros(len(table), dtype=bool)
    for r in rules:
        covered |= rule_mask(r, table.rows)
    if not covered.all():
        return _majority(table.labels[~covered], len(table.class_names))
    groups = {}
    for r in rules:
        n, s = groups.get(r.consequent, (0, 0))
        groups[r.consequent] = (n + 1, s + r.support)
    return max(groups, key=lambda c: (groups[c][0], groups[c][1], -c))


def _majority(labels, n_classes):
    counts = np.bincount(labels, minlength=n_classes)
    return int(np.argmax(counts))


def _error_rate(rules, table):
    default = _provisional_default(rules, table)
    preds, _, _ = classify_rows(rules, default, table.rows,
                                len(table.class_names))
    return float(np.mean(preds != table.labels))


def is_consistent(rules, rows):
    """No two rules with different consequents match a common row."""
    k = len(rows)
    seen = np.full(k, -1, dtype=np.intp)
    for r in rules:
        m = rule_mask(r, rows)
        clash = m & (seen >= 0) & (seen != r.consequent)
        if clash.any():
            return False
        seen[m] = r.consequent
    return True


@dataclass
class RuleMetrics:
    accuracy: float
    coverage: float
    n_rules: int            # including the default rule
    n_explicit: int         # non-default rules
    mean_conditions: float
    ambiguous: int


def evaluate_table(rs, table):
    preds, matched, ambiguous = classify_rows(
        rs.rules, rs.default, table.rows, len(table.class_names))
    n_conds = [len(r.conditions) for r in rs.rules]
    return RuleMetrics(
        accuracy=float(np.mean(preds == table.labels)) if len(table) else 0.0,
        coverage=float(np.mean(matched)) if len(table) else 0.0,
        n_rules=len(rs.rules) + 1,
        n_explicit=len(rs.rules),
        mean_conditions=float(np.mean(n_conds)) if n_conds else 0.0,
        ambiguous=int(ambiguous.sum()),
    )


def dataset_table(rs, ds):
    """Code a raw dataset against a rule set's attribute descriptors."""
    rows = [[attr.code(p.values[a]) for a, attr in enumerate(rs.attributes)]
            for p in ds.patterns]
    return Table(rows, [p.label for p in ds.patterns], rs.attributes,
                 rs.class_names)


def evaluate_ruleset(rs, ds):
    """Apply a rule set to a dataset in raw units; order-insensitive."""
    return evaluate_table(rs, dataset_table(rs, ds))


def attributes_from_scheme(scheme):
    """RuleAttribute descriptors for a dataset's discretization scheme."""
    out = []
    for i, attr in enumerate(scheme.attributes):
        if attr.kind == "categorical":
            out.append(RuleAttribute(attr.name, "categorical",
                                     len(attr.categories), labels=attr.categories,
                                     impute=scheme.impute[i]))
        else:
            out.append(RuleAttribute(attr.name, "ordinal",
                                     len(scheme.cuts[i]) + 1,
                                     cuts=scheme.cuts[i],
                                     impute=scheme.impute[i]))
    return tuple(out)


def table_from_dataset(ds, scheme):
    """Discrete view of a dataset, labeled with its true classes."""
    rows = [scheme.view(p) for p in ds.patterns]
    return Table(rows, ds.labels, attributes_from_scheme(scheme), ds.classes)


# ---------------------------------------------------------------------------
# the covering generator

def _generate_rules(table, allowed_attrs=None):
    """Greedy shortest-conjunction covering of the deduplicated table.

    The most frequent uncovered tuple seeds each rule; single conditions on
    the tuple's own values are added greedily, each step excluding the most
    still-matching tuples of other labels. Opposition is checked against the
    full table, which keeps the emitted set order-insensitive; tuples whose
    (allowed) features coincide with the seed are exempt and absorbed as
    rule error. Returns rules without a default.
    """
    attrs = table.attributes
    A = len(attrs)
    if allowed_attrs is None:
        allowed_attrs = range(A)
    allowed = sorted(allowed_attrs)

    counts = Counter()
    for row, lab in zip(table.rows, table.labels):
        counts[(tuple(int(x) for x in row), int(lab))] += 1
    all_items = list(counts.items())
    remaining = dict(counts)

    def key(item):
        (codes, lab), cnt = item
        return (-cnt, codes, lab)

    order = sorted(all_items, key=key)
    rules = []
    for (codes, label), _cnt in order:
        if (codes, label) not in remaining:
            continue
        restricted = tuple(codes[a] for a in allowed)
        opposing = [c for (c, l), _ in all_items
                    if l != label and tuple(c[a] for a in allowed) != restricted]
        bounds = {}

        def matches(c):
            return all(lo <= c[a] <= hi for a, (lo, hi) in bounds.items())

        live = opposing
        while live:
            best = None  # (-excluded, attr, side, newbounds)
            for a in allowed:
                vb = codes[a]
                nv = attrs[a].n_values
                lo, hi = bounds.get(a, (0, nv - 1))
                options = []
                if attrs[a].kind == "ordinal":
                    if vb < hi:
                        options.append((1, (lo, vb)))       # at-most
                    if vb > lo:
                        options.append((2, (vb, hi)))       # at-least
                else:
                    if (lo, hi) != (vb, vb):
                        options.append((0, (vb, vb)))       # equals
                for side, nb in options:
                    excl = sum(1 for c in live if not nb[0] <= c[a] <= nb[1])
                    cand = (-excl, a, side, nb)
                    if best is None or cand < best:
                        best = cand
            _negexcl, a, _side, nb = best
            bounds[a] = nb
            live = [c for c in live if nb[0] <= c[a] <= nb[1]]
        if not bounds:
            break  # nothing to separate: the remainder belongs to the default
        conds = tuple(Condition(a, lo, hi) for a, (lo, hi) in sorted(bounds.items()))
        rule = Rule(conds, label)
        support = int(rule_mask(rule, table.rows).sum())
        rules.append(replace(rule, support=support))
        for ckey in [ck for ck in remaining if matches(ck[0])]:
            del remaining[ckey]
    return rules


def cluster_rules(rs):
    """Group by consequent; drop rules whose condition set contains another
    same-group rule's condition set (more specific duplicates)."""
    kept = []
    ordered = sorted(rs.rules, key=lambda r: (r.consequent, len(r.conditions),
                                              r.conditions))
    for r in ordered:
        cset = set(r.conditions)
        dominated = any(k.consequent == r.consequent
                        and set(k.conditions) <= cset for k in kept)
        if not dominated:
            kept.append(r)
    out = rs.copy()
    out.rules = kept
    return out


def _drop_conditions(rs, table):
    """Generalize rules by dropping conditions while the table error rate
    does not increase and order-insensitive consistency is preserved."""
    rules = list(rs.rules)
    err = _error_rate(rules, table)
    for i in range(len(rules)):
        changed = True
        while changed and len(rules[i].conditions) > 1:
            changed = False
            for c in rules[i].conditions:
                trial = replace(rules[i], conditions=tuple(
                    x for x in rules[i].conditions if x != c))
                cand = rules[:i] + [trial] + rules[i + 1:]
                if not is_consistent(cand, table.rows):
                    continue
                cand_err = _error_rate(cand, table)
                if cand_err <= err:
                    trial = replace(trial, support=int(
                        rule_mask(trial, table.rows).sum()))
                    rules = rules[:i] + [trial] + rules[i + 1:]
                    err = cand_err
                    changed = True
                    break
    out = rs.copy()
    out.rules = rules
    return out


def _delete_rules(rs, table, order="largest"):
    """Remove rules whose deletion does not raise the table error rate.

    Deletion is attempted group by group, so one rule group collapses into
    the default while the rest survive their error checks. Which group goes
    first is the one free choice the method leaves open; ``order`` picks the
    largest (by rule count, then support: the most compact result) or the
    smallest group as the collapse candidate.
    """
    sign = -1 if order == "largest" else 1
    rules = list(rs.rules)
    err = _error_rate(rules, table)
    groups = {}
    for r in rules:
        n, s = groups.get(r.consequent, (0, 0))
        groups[r.consequent] = (n + 1, s + r.support)
    ordered = sorted(rules, key=lambda r: (sign * groups[r.consequent][0],
                                           sign * groups[r.consequent][1],
                                           r.consequent, -r.support,
                                           r.conditions))
    for r in ordered:
        cand = [x for x in rules if x is not r]
        cand_err = _error_rate(cand, table)
        if cand_err <= err:
            rules = cand
            err = cand_err
    out = rs.copy()
    out.rules = rules
    return out


def prune_rules(rs, table, delete_order="largest"):
    """Generalize conditions, then delete redundant or noise rules."""
    return _delete_rules(_drop_conditions(rs, table), table, delete_order)


def default_rule(rs, table):
    """Pick the default: majority label among uncovered patterns, or the
    consequent of the largest rule group when everything is covered."""
    out = rs.copy()
    out.default = _provisional_default(out.rules, table)
    return out


def rg(table, finalize=True, allowed_attrs=None, delete_order="largest"):
    """The full covering pipeline over a discrete table.

    ``finalize=False`` keeps one rule group per class (no redundancy
    deletion): intermediate rule sets must retain every consequent so the
    phase-3 merge can still ground them.
    """
    rules = _generate_rules(table, allowed_attrs)
    rs = RuleSet(rules, 0, table.attributes, table.class_names)
    rs = cluster_rules(rs)
    rs = _drop_conditions(rs, table)
    rs = cluster_rules(rs)
    if finalize:
        rs = _delete_rules(rs, table, delete_order)
    rs = default_rule(rs, table)
    return rs


# ---------------------------------------------------------------------------
# three-phase extraction

def cluster_value_text(centroid):
    return f"{centroid:.6g}"


def extract_output_rules(net, model, acts, class_names):
    """Phase 1: the network's discretized classification in terms of the
    hidden nodes' cluster values."""
    from .clustering import assign_all, discretized_predictions

    codes = assign_all(model, acts)
    labels = discretized_predictions(net, model, acts)
    attrs = [RuleAttribute(name=f"H{m + 1}", kind="cluster",
                           n_values=model.nodes[m].D,
                           labels=tuple(cluster_value_text(c)
                                        for c in model.nodes[m].centroids))
             for m in range(len(model))]
    table = Table(codes, labels, attrs, class_names)
    rs = rg(table, finalize=False)
    rs.provenance = "output-layer"
    return rs, table


def extract_hidden_rules(net, model, acts, input_table, input_attr_of_column):
    """Phase 2: each node's cluster code in terms of the (relevant) inputs.

    ``input_table`` holds the discrete input view; conditions are restricted
    to original attributes with at least one active connection to the node.
    Returns one RuleSet per hidden node (consequents are cluster codes)."""
    from .clustering import assign_all

    codes = assign_all(model, acts)
    out = []
    for m in range(net.h):
        relevant = sorted({input_attr_of_column[l]
                           for l in range(net.n) if net.active_w[m, l]})
        cluster_names = tuple(cluster_value_text(c)
                              for c in model.nodes[m].centroids)
        table = Table(input_table.rows, codes[:, m], input_table.attributes,
                      cluster_names)
        rs = rg(table, finalize=False, allowed_attrs=relevant)
        rs.provenance = f"hidden-layer H{m + 1}"
        out.append(rs)
    return out


def _intersect(attrs, conds_a, conds_b):
    """Conjunction of two condition tuples; None when contradictory."""
    bounds = {c.attr: (c.lo, c.hi) for c in conds_a}
    for c in conds_b:
        lo, hi = bounds.get(c.attr, (0, attrs[c.attr].n_values - 1))
        lo, hi = max(lo, c.lo), min(hi, c.hi)
        if lo > hi:
            return None
        bounds[c.attr] = (lo, hi)
    return tuple(Condition(a, lo, hi) for a, (lo, hi) in sorted(bounds.items()))


def merge_rules(output_rs, hidden_rs_list, input_table, delete_order="largest"):
    """Phase 3: substitute input-level derivations for cluster conditions.

    Every cluster condition of an output rule is replaced by each hidden
    rule deriving that cluster (cross product over conditions); output rules
    with an underivable cluster are dropped and fall to the default.
    Contradictory expansions are discarded. The merged set then goes through
    the standard cluster/prune/default passes against the input table."""
    attrs = input_table.attributes
    merged = {}
    for orule in output_rs.rules:
        per_condition = []
        ok = True
        for c in orule.conditions:
            assert c.lo == c.hi, "cluster conditions are point conditions"
            cands = [hr for hr in hidden_rs_list[c.attr].rules
                     if hr.consequent == c.lo]
            if not cands:
                ok = False
                break
            per_condition.append(cands)
        if not ok:
            continue
        for combo in product(*per_condition):
            conds = ()
            for hr in combo:
                conds = _intersect(attrs, conds, hr.conditions)
                if conds is None:
                    break
            if conds is None or not conds:
                continue
            key = (conds, orule.consequent)
            if key not in merged:
                r = Rule(conds, orule.consequent)
                merged[key] = replace(
                    r, support=int(rule_mask(r, input_table.rows).sum()))
    rules = [r for r in merged.values() if r.support > 0]
    rules = _repair_consistency(rules, input_table)
    rs = RuleSet(rules, 0, attrs, input_table.class_names, "merged")
    rs = cluster_rules(rs)
    rs = prune_rules(rs, input_table, delete_order)
    rs = default_rule(rs, input_table)
    return rs


def _repair_consistency(rules, table):
    """Drop lower-support rules until no two rules with different
    consequents match a common training row."""
    rules = sorted(rules, key=lambda r: (-r.support, r.consequent, r.conditions))
    kept = []
    claimed = np.full(len(table), -1, dtype=np.intp)
    for r in rules:
        m = rule_mask(r, table.rows)
        if ((claimed >= 0) & m & (claimed != r.consequent)).any():
            continue
        claimed[m] = r.consequent
        kept.append(r)
    return kept


# ---------------------------------------------------------------------------
# text form

def _render_condition(attrs, c):
    attr = attrs[c.attr]
    if attr.kind != "ordinal":
        return f"{attr.name} = {attr.value_text(c.lo)}"
    top = attr.n_values - 1
    if c.lo == 0 and c.hi < top:
        return f"{attr.name} <= {attr.cuts[c.hi]!r}"
    if c.lo > 0 and c.hi == top:
        return f"{attr.name} >= {attr.cuts[c.lo - 1]!r}"
    return f"{attr.name} IN [{attr.cuts[c.lo - 1]!r}, {attr.cuts[c.hi]!r}]"


def render_rules(rs):
    lines = []
    for r in rs.rules:
        conds = " AND ".join(_render_condition(rs.attributes, c)
                             for c in r.conditions)
        lines.append(f"IF {conds} THEN {rs.class_names[r.consequent]}")
    lines.append(f"DEFAULT {rs.class_names[rs.default]}")
    return "\n".join(lines) + "\n"


def parse_rules(text, attributes, class_names):
    """Inverse of render_rules, up to code-interval equality."""
    by_name = {a.name: i for i, a in enumerate(attributes)}
    rules = []
    default = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("DEFAULT "):
            default = class_names.index(line[len("DEFAULT "):])
            continue
        if not line.startswith("IF ") or " THEN " not in line:
            raise ValueError(f"bad rule line: {line!r}")
        body, cls = line[3:].rsplit(" THEN ", 1)
        consequent = class_names.index(cls)
        conds = []
        for part in body.split(" AND "):
            conds.append(_parse_condition(part, attributes, by_name))
        rule = Rule(tuple(sorted(conds, key=lambda c: c.attr)), consequent)
        rules.append(rule)
    if default is None:
        raise ValueError("missing DEFAULT line")
    return RuleSet(rules, default, attributes, class_names, "parsed")


def _parse_condition(part, attributes, by_name):
    for op in (" <= ", " >= ", " IN ", " = "):
        if op in part:
            name, value = part.split(op, 1)
            a = by_name[name.strip()]
            attr = attributes[a]
            op = op.strip()
            break
    else:
        raise ValueError(f"bad condition: {part!r}")
    top = attr.n_values - 1
    if op == "=":
        code = list(attr.labels).index(value.strip())
        return Condition(a, code, code)
    if op == "<=":
        cut = float(value)
        return Condition(a, 0, attr.cuts.index(cut))
    if op == ">=":
        cut = float(value)
        return Condition(a, attr.cuts.index(cut) + 1, top)
    lo_s, hi_s = value.strip()[1:-1].split(",")
    return Condition(a, attr.cuts.index(float(lo_s)) + 1,
                     attr.cuts.index(float(hi_s)))
