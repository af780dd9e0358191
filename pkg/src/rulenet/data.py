"""Dataset loading, splitting, encoding, and supervised discretization.

Input format: comma-separated text, one pattern per row, last column the
class label. The attribute schema (names, kinds, category lists) lives in a
JSON sidecar. Datasets are immutable after construction.
"""

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from math import log2

import numpy as np


class DatasetError(Exception):
    """Malformed input data or an impossible split request."""


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "continuous" | "categorical"
    categories: tuple = None
    bounds: tuple = None  # optional declared (min, max) for continuous

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise DatasetError(f"unknown attribute kind {self.kind!r}")
        if self.kind == "categorical":
            if not self.categories:
                raise DatasetError(f"{self.name}: empty category list")
            if len(set(self.categories)) != len(self.categories):
                raise DatasetError(f"{self.name}: duplicate categories")
        elif self.bounds is not None and self.bounds[0] > self.bounds[1]:
            raise DatasetError(f"{self.name}: min > max in declared range")


@dataclass(frozen=True)
class Pattern:
    values: tuple  # float / category index / None for missing
    label: int


class Dataset:
    def __init__(self, attributes, classes, patterns):
        self.attributes = tuple(attributes)
        self.classes = tuple(classes)
        self.patterns = tuple(patterns)
        if len(self.classes) < 2:
            raise DatasetError("need at least 2 classes")
        for p in self.patterns:
            if len(p.values) != len(self.attributes):
                raise DatasetError("pattern arity mismatch")
            if not 0 <= p.label < len(self.classes):
                raise DatasetError("label out of range")

    def __len__(self):
        return len(self.patterns)

    def replace_patterns(self, patterns):
        return Dataset(self.attributes, self.classes, patterns)

    @property
    def labels(self):
        return [p.label for p in self.patterns]


def load_schema(path):
    with open(path) as f:
        raw = json.load(f)
    attributes = []
    for a in raw["attributes"]:
        attributes.append(Attribute(
            name=a["name"],
            kind=a["kind"],
            categories=tuple(a["categories"]) if "categories" in a else None,
            bounds=tuple(a["range"]) if "range" in a else None,
        ))
    return {
        "attributes": tuple(attributes),
        "classes": tuple(raw["classes"]),
        "missing": raw.get("missing", "?"),
    }


def _parse_value(token, attr, missing, row):
    if token == missing:
        return None
    if attr.kind == "categorical":
        try:
            return attr.categories.index(token)
        except ValueError:
            raise DatasetError(
                f"row {row}: unknown category {token!r} for {attr.name}") from None
    try:
        val = float(token)
    except ValueError:
        raise DatasetError(
            f"row {row}: malformed value {token!r} for {attr.name}") from None
    if attr.bounds is not None and not attr.bounds[0] <= val <= attr.bounds[1]:
        raise DatasetError(f"row {row}: {attr.name}={val} outside declared range")
    return val


def load_dataset(source, schema):
    """Parse a CSV source against a schema. Rejects bad rows by index."""
    attributes = schema["attributes"]
    classes = schema["classes"]
    missing = schema["missing"]
    if isinstance(source, str):
        with open(source) as f:
            lines = f.readlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = list(source)

    patterns = []
    for row, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        tokens = [t.strip() for t in line.split(",")]
        if len(tokens) != len(attributes) + 1:
            raise DatasetError(
                f"row {row}: expected {len(attributes) + 1} fields, got {len(tokens)}")
        values = tuple(_parse_value(tok, attr, missing, row)
                       for tok, attr in zip(tokens, attributes))
        try:
            label = classes.index(tokens[-1])
        except ValueError:
            raise DatasetError(
                f"row {row}: unknown class label {tokens[-1]!r}") from None
        patterns.append(Pattern(values, label))
    if not patterns:
        raise DatasetError("no patterns")
    return Dataset(attributes, classes, patterns)


def split_dataset(ds, counts, validation_fraction=0.0):
    """File-order split into (train, validation, test).

    ``counts`` is (train, test) taken as consecutive blocks from the start;
    the validation set is carved from the tail of the train block.
    """
    n_train, n_test = counts
    if n_train + n_test > len(ds):
        raise DatasetError(
            f"split {counts} exceeds {len(ds)} available patterns")
    if not 0.0 <= validation_fraction < 1.0:
        raise DatasetError("validation fraction must be in [0, 1)")
    n_valid = int(n_train * validation_fraction)
    block = ds.patterns[:n_train]
    return (
        ds.replace_patterns(block[:n_train - n_valid]),
        ds.replace_patterns(block[n_train - n_valid:]),
        ds.replace_patterns(ds.patterns[n_train:n_train + n_test]),
    )


def _observed(ds, i):
    return [p.values[i] for p in ds.patterns if p.values[i] is not None]


class Encoder:
    """Maps raw patterns to network input/target vectors.

    Continuous attributes are scaled to [0, 1] by the min/max of the fitted
    (train) split; categorical attributes are one-hot. Missing values are
    imputed with the fitted split's median (continuous) or mode
    (categorical). ``slices`` maps each attribute to its input columns.
    """

    def __init__(self, train):
        self.attributes = train.attributes
        self.classes = train.classes
        self.scale = []
        self.impute = []
        self.slices = []
        pos = 0
        for i, attr in enumerate(self.attributes):
            vals = _observed(train, i)
            if attr.kind == "continuous":
                if not vals:
                    raise DatasetError(f"{attr.name}: no observed values")
                lo, hi = min(vals), max(vals)
                self.scale.append((lo, hi))
                self.impute.append(float(np.median(vals)))
                self.slices.append(slice(pos, pos + 1))
                pos += 1
            else:
                counts = [0] * len(attr.categories)
                for v in vals:
                    counts[v] += 1
                self.scale.append(None)
                self.impute.append(int(np.argmax(counts)))
                self.slices.append(slice(pos, pos + len(attr.categories)))
                pos += len(attr.categories)
        self.n = pos
        self.input_names = []
        self.input_attr = []  # attribute index behind each input column
        for i, attr in enumerate(self.attributes):
            if attr.kind == "continuous":
                self.input_names.append(attr.name)
                self.input_attr.append(i)
            else:
                for c in attr.categories:
                    self.input_names.append(f"{attr.name}={c}")
                    self.input_attr.append(i)

    def encode(self, p):
        x = np.zeros(self.n)
        for i, attr in enumerate(self.attributes):
            val = p.values[i] if p.values[i] is not None else self.impute[i]
            if attr.kind == "continuous":
                lo, hi = self.scale[i]
                x[self.slices[i]] = 0.0 if hi == lo else (val - lo) / (hi - lo)
            else:
                x[self.slices[i].start + val] = 1.0
        t = np.zeros(len(self.classes))
        t[p.label] = 1.0
        return x, t

    def encode_all(self, ds):
        """Returns (X, T, y) arrays for a whole dataset."""
        X = np.empty((len(ds), self.n))
        T = np.zeros((len(ds), len(self.classes)))
        y = np.empty(len(ds), dtype=np.intp)
        for j, p in enumerate(ds.patterns):
            X[j], T[j] = self.encode(p)
            y[j] = p.label
        return X, T, y

    def decode_category(self, attr_index, code):
        return self.attributes[attr_index].categories[code]

    def to_raw(self, attr_index, scaled):
        """Map a scaled [0,1] value back to raw attribute units."""
        lo, hi = self.scale[attr_index]
        return lo + scaled * (hi - lo)


def encode(ds, p):
    """Encode one pattern using statistics of ``ds`` (cached on the dataset)."""
    enc = getattr(ds, "_encoder", None)
    if enc is None:
        enc = Encoder(ds)
        ds._encoder = enc
    return enc.encode(p)


@dataclass(frozen=True)
class DiscretizePolicy:
    max_intervals: int = 3
    min_gain: float = 0.15  # relative entropy reduction a cut must achieve


def _entropy(counts):
    total = sum(counts)
    if total == 0:
        return 0.0
    ent = 0.0
    for c in counts:
        if c:
            p = c / total
            ent -= p * log2(p)
    return ent


def _segment_entropy(pairs, cuts):
    """Weighted class entropy of `pairs` split at `cuts` (upper-closed)."""
    n_seg = len(cuts) + 1
    seg_counts = [{} for _ in range(n_seg)]
    for val, lab in pairs:
        seg = bisect_left(cuts, val)
        seg_counts[seg][lab] = seg_counts[seg].get(lab, 0) + 1
    total = len(pairs)
    return sum(_entropy(list(sc.values())) * sum(sc.values()) / total
               for sc in seg_counts if sc)


def _best_cuts(pairs, policy):
    """Greedy entropy-minimizing cuts, at most max_intervals - 1 of them."""
    values = sorted({v for v, _ in pairs})
    candidates = [(a + b) / 2.0 for a, b in zip(values, values[1:])]
    cuts = []
    current = _segment_entropy(pairs, cuts)
    while len(cuts) < policy.max_intervals - 1 and current > 0.0:
        best = None
        best_ent = current
        for c in candidates:
            if c in cuts:
                continue
            ent = _segment_entropy(pairs, sorted(cuts + [c]))
            if ent < best_ent - 1e-12:
                best, best_ent = c, ent
        if best is None or (current - best_ent) / current < policy.min_gain:
            break
        cuts = sorted(cuts + [best])
        current = best_ent
    return tuple(cuts)


class DiscretizationScheme:
    """Per-attribute cut points (continuous) or identity (categorical).

    Interval coding is upper-closed: code = number of cuts strictly below
    the value, so a raw value equal to a cut falls in the lower interval.
    """

    def __init__(self, attributes, cuts, impute):
        self.attributes = tuple(attributes)
        self.cuts = tuple(cuts)      # tuple per continuous attr, None otherwise
        self.impute = tuple(impute)

    def n_values(self, i):
        attr = self.attributes[i]
        if attr.kind == "categorical":
            return len(attr.categories)
        return len(self.cuts[i]) + 1

    def code(self, i, raw):
        if raw is None:
            raw = self.impute[i]
        if self.attributes[i].kind == "categorical":
            return int(raw)
        return bisect_left(self.cuts[i], raw)

    def view(self, pattern):
        return tuple(self.code(i, v) for i, v in enumerate(pattern.values))


def discretize_inputs(train, policy=DiscretizePolicy()):
    """Entropy-based cut points for every continuous attribute of the split."""
    if len(train) == 0:
        raise DatasetError("empty train split")
    cuts = []
    impute = []
    for i, attr in enumerate(train.attributes):
        if attr.kind == "categorical":
            cuts.append(None)
            vals = _observed(train, i)
            counts = [0] * len(attr.categories)
            for v in vals:
                counts[v] += 1
            impute.append(int(np.argmax(counts)))
            continue
        pairs = [(p.values[i], p.label) for p in train.patterns
                 if p.values[i] is not None]
        med = float(np.median([v for v, _ in pairs])) if pairs else 0.0
        impute.append(med)
        pairs += [(med, p.label) for p in train.patterns if p.values[i] is None]
        cuts.append(_best_cuts(pairs, policy))
    return DiscretizationScheme(train.attributes, cuts, impute)
