import itertools
from collections import Counter

import numpy as np
import pytest

from conftest import dataset_path, schema_path
from rulenet.data import discretize_inputs, load_dataset, load_schema
from rulenet.rules import (Condition, Rule, RuleAttribute, RuleSet, Table,
                           cluster_rules, dataset_table, default_rule,
                           evaluate_ruleset, evaluate_table, merge_rules,
                           parse_rules, prune_rules, render_rules, rg,
                           rule_mask, table_from_dataset)


def load_table(name):
    ds = load_dataset(dataset_path(name), load_schema(schema_path(name)))
    scheme = discretize_inputs(ds)
    return ds, table_from_dataset(ds, scheme)


def cat_attrs(n_attrs, n_values):
    return tuple(RuleAttribute(f"a{i}", "categorical", n_values,
                               labels=tuple(str(v) for v in range(n_values)))
                 for i in range(n_attrs))


# ---------------------------------------------------------------------------
# the covering generator


def test_rg_single_label_table_is_default_only():
    attrs = cat_attrs(2, 3)
    table = Table([(0, 1), (1, 2), (2, 0)], [1, 1, 1], attrs, ("x", "y"))
    rs = rg(table)
    assert rs.rules == []
    assert rs.default == 1
    assert evaluate_table(rs, table).accuracy == 1.0


def test_rg_golf_matches_published_rules():
    ds, table = load_table("golf")
    rs = rg(table)
    assert len(rs.rules) == 2
    assert rs.class_names[rs.default] == "play"
    assert evaluate_table(rs, table).accuracy == 1.0
    text = render_rules(rs)
    assert "Outlook = sunny AND Humidity >= 82.5 THEN dont_play" in text
    assert "Outlook = rainy AND Wind = strong THEN dont_play" in text


def test_rg_lenses_counts():
    ds, table = load_table("lenses")
    rs = rg(table, delete_order="smallest")
    assert len(rs.rules) == 7  # 8 rules counting the default
    assert evaluate_table(rs, table).accuracy == 1.0


def test_rg_season():
    ds, table = load_table("season")
    rs = rg(table)
    m = evaluate_table(rs, table)
    assert m.accuracy == 1.0
    assert m.n_rules == 4
    text = render_rules(rs)
    assert "Tree = green AND Temperature = medium THEN spring" in text
    assert "Temperature = high THEN summer" in text
    assert "Temperature = low THEN winter" in text


def random_table(rng, n_attrs=None, n_values=None, n_rows=None):
    n_attrs = n_attrs or rng.integers(2, 7)
    n_values = n_values or rng.integers(2, 5)
    n_rows = n_rows or rng.integers(10, 201)
    n_classes = rng.integers(2, 4)
    attrs = cat_attrs(n_attrs, n_values)
    # labels depend on the features plus injected inconsistencies
    rows = rng.integers(0, n_values, (n_rows, n_attrs))
    labels = (rows.sum(axis=1) + rng.integers(0, 2, n_rows)) % n_classes
    flip = rng.random(n_rows) < 0.1
    labels[flip] = rng.integers(0, n_classes, flip.sum())
    names = tuple(f"c{i}" for i in range(n_classes))
    return Table(rows, labels, attrs, names)


def inconsistency_rate(table):
    """Brute force: patterns whose identical feature vector carries a
    minority label can never be classified correctly."""
    groups = Counter()
    for row, lab in zip(table.rows, table.labels):
        groups[tuple(row), int(lab)] += 1
    by_vec = {}
    for (vec, lab), c in groups.items():
        by_vec.setdefault(vec, []).append(c)
    wrong = sum(sum(cs) - max(cs) for cs in by_vec.values())
    return wrong / len(table)


@pytest.mark.parametrize("seed", range(50))
def test_rg_error_bounded_by_inconsistency_rate(seed):
    rng = np.random.default_rng(1000 + seed)
    table = random_table(rng)
    rs = rg(table)
    m = evaluate_table(rs, table)
    assert 1.0 - m.accuracy <= inconsistency_rate(table) + 1e-12


def test_rg_consistency_no_ambiguous_train_matches():
    for seed in range(10):
        rng = np.random.default_rng(2000 + seed)
        table = random_table(rng)
        rs = rg(table)
        assert evaluate_table(rs, table).ambiguous == 0


def test_rule_order_never_matters():
    for name in ("golf", "lenses", "season"):
        ds, table = load_table(name)
        rs = rg(table)
        base = evaluate_table(rs, table)
        rng = np.random.default_rng(5)
        for _ in range(10):
            shuffled = rs.copy()
            rng.shuffle(shuffled.rules)
            m = evaluate_table(shuffled, table)
            assert (m.accuracy, m.coverage, m.ambiguous) == \
                (base.accuracy, base.coverage, base.ambiguous)


# ---------------------------------------------------------------------------
# cluster / prune / default passes


def test_cluster_rules_removes_same_group_supersets():
    attrs = cat_attrs(2, 3)
    general = Rule((Condition(0, 1, 1),), 0, support=5)
    specific = Rule((Condition(0, 1, 1), Condition(1, 2, 2)), 0, support=2)
    other = Rule((Condition(0, 1, 1), Condition(1, 2, 2)), 1, support=2)
    rs = RuleSet([specific, general, other], 0, attrs, ("x", "y"))
    out = cluster_rules(rs)
    assert general in out.rules
    assert specific not in out.rules
    assert other in out.rules  # different consequent group survives


def test_cluster_rules_no_redundancy_is_identity():
    attrs = cat_attrs(2, 3)
    rules = [Rule((Condition(0, 0, 0),), 0, 3),
             Rule((Condition(1, 1, 1),), 1, 3)]
    rs = RuleSet(list(rules), 0, attrs, ("x", "y"))
    assert sorted(cluster_rules(rs).rules, key=str) == sorted(rules, key=str)


def test_cluster_rules_leaves_no_subset_pairs():
    # brute pairwise scan over the output of rg on random tables
    for seed in range(10):
        rng = np.random.default_rng(3000 + seed)
        table = random_table(rng)
        rs = rg(table)
        for a, b in itertools.permutations(rs.rules, 2):
            if a.consequent == b.consequent:
                assert not set(a.conditions) < set(b.conditions)


def test_prune_drops_vacuous_condition():
    attrs = cat_attrs(2, 2)
    rows = [(0, 0), (0, 1), (1, 0), (1, 1)]
    labels = [0, 0, 1, 1]
    table = Table(rows, labels, attrs, ("x", "y"))
    vacuous = Rule((Condition(0, 0, 0), Condition(1, 0, 1)), 0, 2)
    keep = Rule((Condition(0, 1, 1),), 1, 2)
    rs = RuleSet([vacuous, keep], 0, attrs, ("x", "y"))
    out = prune_rules(rs, table)
    for r in out.rules:
        if r.consequent == 0:
            assert r.conditions == (Condition(0, 0, 0),)


def test_prune_removes_duplicates():
    attrs = cat_attrs(1, 2)
    table = Table([(0,), (1,)], [0, 1], attrs, ("x", "y"))
    dup = Rule((Condition(0, 0, 0),), 0, 1)
    rs = RuleSet([dup, Rule((Condition(0, 0, 0),), 0, 1)], 1, attrs, ("x", "y"))
    out = prune_rules(rs, table)
    assert len(out.rules) <= 1


def test_prune_never_increases_error():
    for seed in range(10):
        rng = np.random.default_rng(4000 + seed)
        table = random_table(rng)
        rs = rg(table, finalize=False)
        before = evaluate_table(default_rule(rs, table), table).accuracy
        pruned = default_rule(prune_rules(rs, table), table)
        after = evaluate_table(pruned, table).accuracy
        assert after >= before - 1e-12


def paper_lenses_rules(table):
    """The published seven lenses rules, rebuilt as structured conditions."""
    A = {a.name: i for i, a in enumerate(table.attributes)}
    cats = {i: list(table.attributes[i].labels) for i in A.values()}

    def eq(name, value):
        i = A[name]
        code = cats[i].index(value)
        return Condition(i, code, code)

    age, rx, ast, tear = ("Age", "Spectacle Prescription", "Astigmatic",
                          "Tear Production Rate")
    NONE, HARD = 2, 0
    mk = lambda conds, cls: Rule(tuple(sorted(conds, key=lambda c: c.attr)), cls, 1)
    return [
        mk([eq(tear, "reduced")], NONE),
        mk([eq(age, "presbyopic"), eq(rx, "hypermetrope"), eq(ast, "yes")], NONE),
        mk([eq(age, "presbyopic"), eq(rx, "myope"), eq(ast, "no")], NONE),
        mk([eq(age, "pre-presbyopic"), eq(rx, "hypermetrope"), eq(ast, "yes"),
            eq(tear, "normal")], NONE),
        mk([eq(rx, "myope"), eq(ast, "yes"), eq(tear, "normal")], HARD),
        mk([eq(age, "pre-presbyopic"), eq(rx, "myope"), eq(ast, "yes"),
            eq(tear, "normal")], HARD),
        mk([eq(age, "young"), eq(rx, "myope"), eq(ast, "yes"),
            eq(tear, "normal")], HARD),
    ]


def test_default_rule_published_lenses_default_is_soft():
    ds, table = load_table("lenses")
    rules = paper_lenses_rules(table)
    rs = RuleSet(rules, 0, table.attributes, table.class_names)
    out = default_rule(rs, table)
    assert out.class_names[out.default] == "soft"


def test_default_rule_golf_default_is_play():
    ds, table = load_table("golf")
    rs = rg(table)  # two dont_play rules survive
    out = default_rule(rs, table)
    assert out.class_names[out.default] == "play"


def test_default_rule_empty_ruleset_is_global_majority():
    ds, table = load_table("lenses")
    rs = RuleSet([], 0, table.attributes, table.class_names)
    out = default_rule(rs, table)
    assert out.class_names[out.default] == "none"  # 15 of 24


# ---------------------------------------------------------------------------
# merge and evaluation


def test_merge_identity_substitution():
    in_attrs = cat_attrs(2, 2)
    table = Table([(0, 0), (0, 1), (1, 0), (1, 1)], [0, 0, 1, 1],
                  in_attrs, ("x", "y"))
    cl_attr = (RuleAttribute("H1", "cluster", 2, labels=("lo", "hi")),)
    output_rs = RuleSet([Rule((Condition(0, 1, 1),), 1, 2)], 0, cl_attr,
                        ("x", "y"))
    hidden = RuleSet([Rule((Condition(0, 0, 0),), 0, 2),
                      Rule((Condition(0, 1, 1),), 1, 2)],
                     0, in_attrs, ("lo", "hi"))
    merged = merge_rules(output_rs, [hidden], table)
    assert len(merged.rules) == 1
    assert merged.rules[0].conditions == (Condition(0, 1, 1),)
    assert merged.rules[0].consequent == 1
    assert evaluate_table(merged, table).accuracy == 1.0


def test_merge_discards_contradictions():
    in_attrs = cat_attrs(1, 3)
    table = Table([(0,), (1,), (2,)], [0, 1, 1], in_attrs, ("x", "y"))
    cl_attr = (RuleAttribute("H1", "cluster", 2, labels=("a", "b")),
               RuleAttribute("H2", "cluster", 2, labels=("a", "b")))
    output_rs = RuleSet(
        [Rule((Condition(0, 1, 1), Condition(1, 1, 1)), 1, 1)], 0, cl_attr,
        ("x", "y"))
    h1 = RuleSet([Rule((Condition(0, 1, 1),), 1, 1)], 0, in_attrs, ("a", "b"))
    h2 = RuleSet([Rule((Condition(0, 2, 2),), 1, 1)], 0, in_attrs, ("a", "b"))
    merged = merge_rules(output_rs, [h1, h2], table)
    # value-1 and value-2 point conditions on one attribute cannot coexist
    assert merged.rules == []


def test_merge_drops_ungroundable_output_rules():
    in_attrs = cat_attrs(1, 2)
    table = Table([(0,), (1,)], [0, 1], in_attrs, ("x", "y"))
    cl_attr = (RuleAttribute("H1", "cluster", 2, labels=("a", "b")),)
    output_rs = RuleSet([Rule((Condition(0, 0, 0),), 0, 1),
                         Rule((Condition(0, 1, 1),), 1, 1)], 0, cl_attr,
                        ("x", "y"))
    hidden = RuleSet([Rule((Condition(0, 1, 1),), 1, 1)], 0, in_attrs,
                     ("a", "b"))  # cluster "a" has no deriving rule
    merged = merge_rules(output_rs, [hidden], table)
    assert all(r.consequent == 1 for r in merged.rules)


def test_evaluate_default_only_equals_majority():
    ds, table = load_table("lenses")
    rs = RuleSet([], 2, table.attributes, table.class_names)
    m = evaluate_table(rs, table)
    assert m.accuracy == 15 / 24
    assert m.coverage == 0.0
    assert m.n_rules == 1


def test_evaluate_ruleset_on_raw_dataset():
    ds, table = load_table("golf")
    rs = rg(table)
    m_table = evaluate_table(rs, table)
    m_ds = evaluate_ruleset(rs, ds)
    assert m_ds.accuracy == m_table.accuracy
    assert m_ds.coverage == m_table.coverage


def test_ambiguous_matches_counted_and_majority_resolved():
    attrs = cat_attrs(2, 2)
    table = Table([(0, 0)], [0], attrs, ("x", "y"))
    rs = RuleSet([Rule((Condition(0, 0, 0),), 0, 1),
                  Rule((Condition(1, 0, 0),), 1, 1),
                  Rule((Condition(0, 0, 0), Condition(1, 0, 0)), 0, 1)],
                 1, attrs, ("x", "y"))
    m = evaluate_table(rs, table)
    assert m.ambiguous == 1
    assert m.accuracy == 1.0  # two votes for x beat one for y


# ---------------------------------------------------------------------------
# text round trip


@pytest.mark.parametrize("name", ["golf", "lenses", "season"])
def test_render_parse_round_trip(name):
    ds, table = load_table(name)
    rs = rg(table)
    back = parse_rules(render_rules(rs), table.attributes, table.class_names)
    assert back.default == rs.default
    assert sorted((r.conditions, r.consequent) for r in back.rules) == \
        sorted((r.conditions, r.consequent) for r in rs.rules)
    m1, m2 = evaluate_table(rs, table), evaluate_table(back, table)
    assert (m1.accuracy, m1.coverage) == (m2.accuracy, m2.coverage)


def test_render_interval_condition():
    attr = (RuleAttribute("x", "ordinal", 3, cuts=(1.5, 3.5)),)
    rs = RuleSet([Rule((Condition(0, 1, 1),), 0, 1)], 1, attr, ("a", "b"))
    text = render_rules(rs)
    assert "x IN [1.5, 3.5]" in text
    back = parse_rules(text, attr, ("a", "b"))
    assert back.rules[0].conditions == (Condition(0, 1, 1),)


def test_rule_mask_semantics():
    attr = (RuleAttribute("x", "ordinal", 3, cuts=(1.5, 3.5)),)
    rows = np.array([[0], [1], [2]])
    assert list(rule_mask(Rule((Condition(0, 0, 1),), 0), rows)) == \
        [True, True, False]
    # raw values code upper-closed at the cuts
    assert attr[0].code(1.5) == 0
    assert attr[0].code(1.6) == 1
    assert attr[0].code(3.5) == 1
    assert attr[0].code(99.0) == 2
