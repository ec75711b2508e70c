"""Shared fixtures: the 10-signal synthetic corpus and its decompositions."""
import time

import pytest

from comd.signalio import synthesize
from comd.solver import SolverConfig, decompose

from corpus_signals import corpus_recipe


@pytest.fixture(scope="session")
def corpus():
    entries = []
    for i in range(10):
        recipe = corpus_recipe(i)
        mixture, parts = synthesize(recipe)
        entries.append({"name": "corpus_%02d" % i, "signal": mixture,
                        "components": parts, "recipe": recipe})
    return entries


@pytest.fixture(scope="session")
def corpus_results(corpus):
    """Both methods run once over the whole corpus; reused by several
    acceptance criteria. elapsed_s covers all 20 decompositions."""
    comd_config = SolverConfig(k=3)
    vmd_config = SolverConfig(k=3, mode_kind="vmd_baseline")
    results = {"comd": [], "vmd": []}
    t0 = time.perf_counter()
    for entry in corpus:
        results["comd"].append(decompose(entry["signal"], comd_config))
        results["vmd"].append(decompose(entry["signal"], vmd_config))
    results["elapsed_s"] = time.perf_counter() - t0
    results["configs"] = {"comd": comd_config, "vmd": vmd_config}
    return results
