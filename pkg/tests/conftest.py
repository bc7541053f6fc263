"""Shared fixtures and hypothesis settings for the test suite."""

from hypothesis import HealthCheck, settings

import pytest

from teamsem import Model, Relation, Team

# Exhaustive sub-checks inside single examples can be slow on small CI
# machines; verdicts are deterministic, so wall-clock deadlines only add
# flakiness.
settings.register_profile(
    "ci",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture
def m2():
    """Two-element model with P = {a}."""
    return Model(("a", "b"), {"P": Relation(1, frozenset({("a",)}))}, {})


@pytest.fixture
def m2_bare():
    """Two-element model with empty signature."""
    return Model(("a", "b"), {}, {})


@pytest.fixture
def m3():
    """Three-element model with P = {a, c} and a binary edge relation."""
    return Model(
        ("a", "b", "c"),
        {
            "P": Relation(1, frozenset({("a",), ("c",)})),
            "R": Relation(2, frozenset({("a", "b"), ("b", "c"), ("c", "a")})),
        },
        {"c0": "a"},
    )
