"""Closed-loop scenario execution: plant -> attack layer -> secondary control.

One scenario is one strictly sequential fixed-step simulation; the trace is
decimated to the configured sampling period.  Everything is deterministic:
the same configuration produces byte-identical CSV output.
"""

from __future__ import annotations

import numpy as np

from . import ann as annmod
from .attack import resolve_channels
from .plant import DivergenceError, apply_load_event, step_plant
from .scenario import ScenarioConfig
from .secondary import SecondaryState, secondary_update
from .trace import Trace


def _channel_list(graph) -> list[tuple[int, int, str]]:
    return [(s, d, sig) for (s, d) in graph.channels()
            for sig in ("voltage", "frequency")]


def run_scenario(config: ScenarioConfig, ann_params=None) -> Trace:
    """Simulate one scenario and return the recorded trace.

    Divergence is reported on the returned trace (``diverged`` flag and
    truncated arrays), not raised.
    """
    if "ann" in config.controllers and ann_params is None:
        if config.ann_model_path is None:
            raise ValueError("scenario uses the ANN controller but no model was given")
        ann_params = annmod.load_model(config.ann_model_path)

    graph = config.graph
    n = graph.n
    model = config.model
    channels = _channel_list(graph)
    n_ch = len(channels)
    ch_src = np.array([s for (s, _, _) in channels])
    ch_is_v = np.array([sig == "voltage" for (_, _, sig) in channels])
    v_idx = np.flatnonzero(ch_is_v)
    w_idx = np.flatnonzero(~ch_is_v)

    # consensus bookkeeping: self-loop channel per DG and (dst, src) matrix slots
    self_v = np.zeros(n, dtype=int)
    self_w = np.zeros(n, dtype=int)
    mat_v: list[tuple[int, int, int]] = []   # (dst, src, channel idx)
    mat_w: list[tuple[int, int, int]] = []
    for c, (s, d, sig) in enumerate(channels):
        if sig == "voltage":
            (mat_v.append((d, s, c)) if s != d else self_v.__setitem__(d, c))
        else:
            (mat_w.append((d, s, c)) if s != d else self_w.__setitem__(d, c))

    attack_targets = [np.array(resolve_channels(spec, channels))
                      for spec in config.attacks]

    # inbound voltage triples for ANN-controlled DGs (self first, then by src)
    ann_inputs: dict[int, np.ndarray] = {}
    for i, name in enumerate(config.controllers):
        if name == "ann":
            nbr = sorted(graph.in_neighbors(i))
            idx = [self_v[i]] + [next(c for (d, s, c) in
                                      ((d, s, c) for (d, s, c) in mat_v)
                                      if d == i and s == j) for j in nbr]
            if len(idx) != 3:
                raise ValueError(
                    f"ANN controller on DG{i + 1} needs exactly 2 in-neighbors")
            ann_inputs[i] = np.array(idx)

    m_p = model.m_p
    stride = config.sample_stride
    n_steps = config.n_steps
    n_samples = n_steps // stride + 1

    # preallocated record arrays
    rec_t = np.zeros(n_samples)
    rec_dg = {sig: np.zeros((n_samples, n)) for sig in ("v", "w", "P", "Q", "Vn", "wn")}
    rec_clean = np.zeros((n_samples, n_ch))
    rec_recv = np.zeros((n_samples, n_ch))
    rec_load = np.zeros((n_samples, len(model.network.loads)))
    rec_att = np.zeros(n_samples, dtype=int)

    state = model.initial_state()
    sec = SecondaryState(v_n=np.full(n, config.v_ref),
                         w_n=np.full(n, config.w_ref))
    events = list(config.load_events)
    ev_ptr = 0
    load_y = np.array([ld.admittance for ld in model.network.loads])
    load_bus = np.array([ld.bus for ld in model.network.loads], dtype=int)

    diverged = False
    diverged_time = None
    max_residual = 0.0
    sample = 0

    for k in range(n_steps + 1):
        t = k * config.dt
        while ev_ptr < len(events) and events[ev_ptr].t <= t + 1e-12:
            ev = events[ev_ptr]
            model = apply_load_event(model, ev.bus, ev.r, ev.x)
            load_y = np.array([ld.admittance for ld in model.network.loads])
            ev_ptr += 1

        try:
            new_state, out = step_plant(model, state, sec.v_n, sec.w_n,
                                        config.dt, t=t)
        except DivergenceError as exc:
            diverged = True
            diverged_time = exc.t
            break
        max_residual = max(max_residual, out.solution.balance_residual)

        clean = np.empty(n_ch)
        clean[v_idx] = out.v[ch_src[v_idx]]
        clean[w_idx] = out.w[ch_src[w_idx]]
        recv = clean.copy()
        for spec, targets in zip(config.attacks, attack_targets):
            g = spec.gain(t)
            if g != 1.0:
                recv[targets] *= g

        if k % stride == 0:
            rec_t[sample] = t
            rec_dg["v"][sample] = out.v
            rec_dg["w"][sample] = out.w
            rec_dg["P"][sample] = state.p
            rec_dg["Q"][sample] = state.q
            rec_dg["Vn"][sample] = sec.v_n
            rec_dg["wn"][sample] = sec.w_n
            rec_clean[sample] = clean
            rec_recv[sample] = recv
            rec_load[sample] = np.abs(out.solution.bus_v[load_bus] * load_y)
            rec_att[sample] = int(any(s.active(t) for s in config.attacks))
            sample += 1

        if k == n_steps:
            break

        # secondary layer consumes the received (possibly corrupted) values
        rv_self = recv[self_v]
        rw_self = recv[self_w]
        rv = np.zeros((n, n))
        rw = np.zeros((n, n))
        for d, s, c in mat_v:
            rv[d, s] = recv[c]
        for d, s, c in mat_w:
            rw[d, s] = recv[c]
        sec = secondary_update(config.gains, graph, rv_self, rv, rw_self, rw,
                               m_p * state.p, config.v_ref, config.w_ref,
                               sec, config.dt)
        for i, idx in ann_inputs.items():
            v_n = annmod.ann_controller(ann_params, recv[idx], config.v_ref)
            arr = sec.v_n.copy()
            arr[i] = v_n
            sec = SecondaryState(v_n=arr, w_n=sec.w_n)

        state = new_state

    trace = Trace(
        t=rec_t[:sample], dg={k: v[:sample] for k, v in rec_dg.items()},
        channels=channels, ch_clean=rec_clean[:sample], ch_recv=rec_recv[:sample],
        load_buses=list(load_bus), load_current=rec_load[:sample],
        attack_active=rec_att[:sample],
        v_ref=config.v_ref, w_ref=config.w_ref,
        diverged=diverged, diverged_time=diverged_time,
        max_power_residual=max_residual,
    )
    return trace
