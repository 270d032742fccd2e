import math

import numpy as np
import pytest

from mgres.attack import AttackSpec, NonPeriodic
from mgres.graph import CommGraph, ring_graph
from mgres.secondary import (ControllerConfigError, SecondaryGains,
                             SecondaryState, check_controller_name,
                             received_values, secondary_update)


def two_dg_graph():
    return CommGraph(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([1.0, 0.0]))


def clean_channels(graph, v, w):
    out = {}
    for (s, d) in graph.channels():
        out[(s, d, "voltage")] = v[s]
        out[(s, d, "frequency")] = w[s]
    return out


def test_received_values_without_attack_are_clean():
    g = ring_graph(4)
    v = np.array([1.01, 1.02, 1.03, 1.04])
    w = np.full(4, 377.0)
    rv = received_values(g, clean_channels(g, v, w), [], t=0.0)
    assert rv[0]["voltage"] == {0: 1.01, 1: 1.02, 3: 1.04}
    assert rv[2]["frequency"] == {1: 377.0, 2: 377.0, 3: 377.0}


def test_received_values_attack_targets_only_named_channel():
    g = ring_graph(4)
    v = np.full(4, 1.0)
    w = np.full(4, 377.0)
    atk = AttackSpec(src=1, dst=0, signal="voltage",
                     kind=NonPeriodic(alpha=0.5), tau=0.0)
    rv = received_values(g, clean_channels(g, v, w), [atk], t=1.0)
    assert rv[0]["voltage"][1] == pytest.approx(1.5)
    assert rv[0]["voltage"][0] == 1.0 and rv[0]["voltage"][3] == 1.0
    assert rv[0]["frequency"][1] == 377.0
    assert rv[1]["voltage"][0] == 1.0


def test_inbound_broadcast_corrupts_whole_controller_view():
    g = ring_graph(4)
    atk = AttackSpec(src="broadcast", dst=0, signal="voltage",
                     kind=NonPeriodic(alpha=0.5), tau=2.0)
    rv = received_values(g, clean_channels(g, np.full(4, 1.0), np.full(4, 377.0)),
                         [atk], t=3.0)
    assert all(u == pytest.approx(1.5) for u in rv[0]["voltage"].values())
    assert all(u == 1.0 for u in rv[1]["voltage"].values())


def test_missing_channel_is_an_error():
    g = two_dg_graph()
    chans = clean_channels(g, np.ones(2), np.full(2, 377.0))
    del chans[(1, 0, "voltage")]
    with pytest.raises(ControllerConfigError, match="missing channel"):
        received_values(g, chans, [], t=0.0)


def test_two_dg_hand_step():
    # DG1 pinned, v = [1.05, 1.00], reference 1.00:
    # e_1 = (1.05 - 1.00) + (1.05 - 1.00) = 0.10 -> dVn1 = -5 * 0.10 * 1e-3
    g = two_dg_graph()
    v = np.array([1.05, 1.00])
    rv = np.array([[0.0, 1.00], [1.05, 0.0]])
    w = np.full(2, 377.0)
    rw = np.array([[0.0, 377.0], [377.0, 0.0]])
    state = SecondaryState(v_n=np.array([1.05, 1.00]), w_n=w.copy())
    new = secondary_update(SecondaryGains(), g, v, rv, w, rw,
                           weighted_p=np.zeros(2), v_ref=1.0, w_ref=377.0,
                           state=state, dt=1e-3)
    assert new.v_n[0] == pytest.approx(1.05 - 5.0 * 0.10 * 1e-3, abs=1e-15)
    assert new.v_n[1] == pytest.approx(1.00 - 5.0 * (1.00 - 1.05) * 1e-3, abs=1e-15)
    np.testing.assert_array_equal(new.w_n, w)  # consensus + balanced power


def test_fixed_point_at_consensus():
    g = ring_graph(4)
    v = np.full(4, 1.0)
    w = np.full(4, 2 * math.pi * 60)
    rv = np.tile(v, (4, 1))
    rw = np.tile(w, (4, 1))
    state = SecondaryState(v_n=np.full(4, 1.02), w_n=w.copy())
    new = secondary_update(SecondaryGains(), g, v, rv, w, rw,
                           weighted_p=np.full(4, 0.7), v_ref=1.0,
                           w_ref=2 * math.pi * 60, state=state, dt=1e-4)
    np.testing.assert_array_equal(new.v_n, state.v_n)
    np.testing.assert_array_equal(new.w_n, state.w_n)


def test_power_sharing_term():
    g = two_dg_graph()
    v = np.ones(2)
    rv = np.array([[0.0, 1.0], [1.0, 0.0]])
    w = np.full(2, 377.0)
    rw = np.array([[0.0, 377.0], [377.0, 0.0]])
    state = SecondaryState(v_n=np.ones(2), w_n=w.copy())
    wp = np.array([0.8, 0.6])  # DG1 over-loaded by 0.2 (droop-weighted)
    new = secondary_update(SecondaryGains(), g, v, rv, w, rw, wp,
                           v_ref=1.0, w_ref=377.0, state=state, dt=1e-3)
    assert new.w_n[0] == pytest.approx(377.0 - 5.0 * 0.2 * 1e-3, abs=1e-12)
    assert new.w_n[1] == pytest.approx(377.0 + 5.0 * 0.2 * 1e-3, abs=1e-12)


def test_update_is_pure():
    g = two_dg_graph()
    state = SecondaryState(v_n=np.ones(2), w_n=np.full(2, 377.0))
    before = state.v_n.copy()
    secondary_update(SecondaryGains(), g, np.ones(2) * 1.1,
                     np.ones((2, 2)), np.full(2, 377.0),
                     np.full((2, 2), 377.0), np.zeros(2),
                     1.0, 377.0, state, 1e-3)
    np.testing.assert_array_equal(state.v_n, before)


def test_gain_and_name_validation():
    with pytest.raises(ValueError):
        SecondaryGains(c_v=0.0)
    assert check_controller_name("pi") == "pi"
    assert check_controller_name("ann") == "ann"
    with pytest.raises(ControllerConfigError, match="unknown controller"):
        check_controller_name("pid")
    g = two_dg_graph()
    with pytest.raises(ValueError, match="dt"):
        secondary_update(SecondaryGains(), g, np.ones(2), np.ones((2, 2)),
                         np.ones(2), np.ones((2, 2)), np.zeros(2),
                         1.0, 377.0,
                         SecondaryState(np.ones(2), np.ones(2)), dt=0.0)
