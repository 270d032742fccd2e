"""Distributed cooperative secondary control layer.

Each DG integrates its neighborhood tracking error to steer voltage and
frequency to the global references.  The voltage law is

    dV_n,i/dt = -c_v * [ sum_j a_ij (vh_ii - vh_ij) + b_i (vh_ii - v*) ]

over *received* channel values vh (corrupted by the attack layer when one is
active); the frequency law adds the droop-weighted active power sharing term

    dw_n,i/dt = -c_w * [ e_w,i + sum_j a_ij (m_P,i P_i - m_P,j P_j) ].

This consensus-integral realization is the baseline named "pi" in scenario
files; the "ann" controller replaces only DG voltage set-points (frequency
always stays on the baseline).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attack import AttackSpec, inject
from .graph import CommGraph

CONTROLLER_NAMES = ("pi", "ann")


class ControllerConfigError(ValueError):
    """Unknown controller name or missing channel."""


@dataclass(frozen=True)
class SecondaryGains:
    c_v: float = 5.0   # voltage consensus integral gain, 1/s
    c_w: float = 5.0   # frequency consensus integral gain, 1/s

    def __post_init__(self):
        if self.c_v <= 0 or self.c_w <= 0:
            raise ValueError("secondary gains must be positive")


@dataclass(frozen=True)
class SecondaryState:
    v_n: np.ndarray   # voltage set-points handed to droop, pu
    w_n: np.ndarray   # frequency set-points, rad/s


def received_values(graph: CommGraph, channels: dict[tuple[int, int, str], float],
                    attacks: list[AttackSpec], t: float) -> dict[int, dict[str, dict[int, float]]]:
    """Per-DG view of the channel values as delivered by the attack layer.

    ``channels`` maps (src, dst, signal) to the clean value.  The result maps
    dst -> signal -> src -> received value, where received equals clean for
    every channel no active attack targets.
    """
    out: dict[int, dict[str, dict[int, float]]] = {
        i: {"voltage": {}, "frequency": {}} for i in range(graph.n)}
    for (src, dst) in graph.channels():
        for sig in ("voltage", "frequency"):
            key = (src, dst, sig)
            if key not in channels:
                raise ControllerConfigError(f"missing channel value for {key}")
            u = channels[key]
            for spec in attacks:
                if spec.matches(src, dst, sig):
                    u = inject(spec, t, u)
            out[dst][sig][src] = u
    return out


def _consensus_error(graph: CommGraph, recv_self: np.ndarray,
                     recv: np.ndarray, reference: float) -> np.ndarray:
    """Tracking error from received values.

    recv_self[i] is DG i's received copy of its own signal; recv[i, j] its
    received copy of DG j's signal (only entries with a_ij > 0 are used).
    """
    diff = graph.adjacency * (recv_self[:, None] - recv)
    return diff.sum(axis=1) + graph.pinning * (recv_self - reference)


def secondary_update(gains: SecondaryGains, graph: CommGraph,
                     recv_v_self: np.ndarray, recv_v: np.ndarray,
                     recv_w_self: np.ndarray, recv_w: np.ndarray,
                     weighted_p: np.ndarray,
                     v_ref: float, w_ref: float,
                     state: SecondaryState, dt: float) -> SecondaryState:
    """One forward-Euler step of both set-point integrators.

    weighted_p[i] is m_P,i * P_i.  Pure function of its inputs.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    e_v = _consensus_error(graph, recv_v_self, recv_v, v_ref)
    e_w = _consensus_error(graph, recv_w_self, recv_w, w_ref)
    p_share = (graph.adjacency * (weighted_p[:, None] - weighted_p[None, :])).sum(axis=1)
    return SecondaryState(
        v_n=state.v_n - gains.c_v * e_v * dt,
        w_n=state.w_n - gains.c_w * (e_w + p_share) * dt,
    )


def check_controller_name(name: str) -> str:
    if name not in CONTROLLER_NAMES:
        raise ControllerConfigError(
            f"unknown controller {name!r}; expected one of {CONTROLLER_NAMES}")
    return name
