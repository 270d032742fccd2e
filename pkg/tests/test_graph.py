import numpy as np
import pytest
from hypothesis import given, strategies as st

from mgres.graph import (CommGraph, GraphError, neighborhood_tracking_error,
                         ring_graph, tracking_errors, validate)


def test_default_ring_is_valid():
    g = ring_graph(4)
    validate(g)
    assert g.in_neighbors(0) == [1, 3]  # DG1 hears DG2 and DG4
    assert g.pinning[0] == 1.0 and g.pinning[1:].sum() == 0


def test_pinned_singleton_is_valid():
    g = CommGraph(np.zeros((1, 1)), np.array([1.0]))
    assert g.n == 1


def test_disconnected_dg_is_rejected():
    with pytest.raises(GraphError, match="unreachable"):
        CommGraph(np.zeros((2, 2)), np.array([1.0, 0.0]))


@pytest.mark.parametrize("adj, pin, msg", [
    (np.array([[0.0, -1.0], [1.0, 0.0]]), np.array([1.0, 0.0]), "negative weight"),
    (np.array([[0.5, 1.0], [1.0, 0.0]]), np.array([1.0, 0.0]), "diagonal"),
    (np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([0.0, 0.0]), "no pinned"),
])
def test_invariant_violations(adj, pin, msg):
    with pytest.raises(GraphError, match=msg):
        CommGraph(adj, pin)


def test_consensus_fixed_point():
    g = ring_graph(4)
    values = np.full(4, 1.0)
    for i in range(4):
        assert neighborhood_tracking_error(g, i, values, 1.0) == 0.0


def test_two_dg_hand_case():
    g = CommGraph(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.0, 0.0]))
    e1 = neighborhood_tracking_error(g, 0, np.array([1.05, 1.00]), 1.00)
    assert e1 == pytest.approx(0.10, abs=1e-15)


def test_against_double_loop_oracle():
    rng = np.random.default_rng(42)
    adj = rng.uniform(0, 2, (4, 4))
    np.fill_diagonal(adj, 0.0)
    pin = rng.uniform(0, 1, 4)
    pin[0] = 1.0
    g = CommGraph(adj, pin)
    values = rng.uniform(0.9, 1.1, 4)
    ref = 1.02
    for i in range(4):
        # independent re-implementation of the weighted sum
        expect = sum(adj[i][j] * (values[i] - values[j]) for j in range(4))
        expect += pin[i] * (values[i] - ref)
        assert neighborhood_tracking_error(g, i, values, ref) == pytest.approx(
            expect, rel=1e-12)
        assert tracking_errors(g, values, ref)[i] == pytest.approx(expect, rel=1e-12)


def test_index_errors():
    g = ring_graph(4)
    with pytest.raises(IndexError):
        neighborhood_tracking_error(g, 4, np.ones(4), 1.0)
    with pytest.raises(IndexError):
        neighborhood_tracking_error(g, 0, np.ones(3), 1.0)


@given(st.floats(-10, 10), st.floats(-5, 5),
       st.lists(st.floats(-2, 2), min_size=4, max_size=4))
def test_linearity_and_translation(lam, shift, vals):
    g = ring_graph(4)
    values = np.array(vals)
    ref = 1.0
    e = tracking_errors(g, values, ref)
    np.testing.assert_allclose(tracking_errors(g, lam * values, lam * ref),
                               lam * e, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(tracking_errors(g, values + shift, ref + shift),
                               e, rtol=1e-9, atol=1e-9)
