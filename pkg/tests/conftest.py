import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "scripts"))

ROOT = os.path.normpath(os.path.join(os.path.dirname(__file__), os.pardir))


def config_path(name):
    return os.path.join(ROOT, "configs", f"{name}.yaml")


def dataset_path(name):
    return os.path.join(ROOT, "datasets", f"{name}.csv")


def schema_path(name):
    return os.path.join(ROOT, "datasets", f"{name}.schema.json")


@pytest.fixture(scope="session")
def experiments():
    """One experiment per benchmark config, shared across the session."""
    from rulenet.pipeline import load_config, run_experiment

    out = {}
    for name in ("golf", "season", "lenses", "breast_cancer", "wine"):
        out[name] = run_experiment(load_config(config_path(name)))
    return out
