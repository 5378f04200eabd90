"""Acceptance suite: every criterion at its stated desk scale and tolerance.

Run with `pytest -v tests/test_acceptance.py` for one pass/fail line per
criterion, or `mixlyap check` for the CLI report.
"""

import json

import pytest

from mixlyap import acceptance

THREADS = 2


@pytest.mark.parametrize("name,func", acceptance.CRITERIA,
                         ids=[name.replace(" ", "_")
                              for name, _ in acceptance.CRITERIA])
def test_criterion(name, func):
    passed, details = func(threads=THREADS)
    assert passed, f"{name}: {json.dumps(details, default=float)[:600]}"


def test_seed_perturbation_robustness():
    # MC tolerances dominate seed noise: a perturbed seed still passes
    # (sampled on the two cheapest seed-dependent criteria)
    ok, details = acceptance.check_cocycle_degeneracy(
        seed=acceptance.DEFAULT_SEED + 1)
    assert ok, details
    ok, details = acceptance.check_norm_growth(
        seed=acceptance.DEFAULT_SEED + 1, threads=THREADS)
    assert ok, details
