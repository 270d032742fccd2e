"""Sparse communication digraph between DGs and neighborhood tracking errors.

DG i receives information from DG j iff adjacency[i, j] > 0.  A pinned DG
(pinning[i] > 0) additionally receives the global reference.  Every DG also
feeds its own measurement back to its local controller, so the channel set
contains a self loop per DG on top of the digraph edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    """Raised when a communication graph violates a structural invariant."""


@dataclass(frozen=True)
class CommGraph:
    adjacency: np.ndarray  # (n, n), a_ij > 0 iff DG i receives from DG j
    pinning: np.ndarray    # (n,),   b_i > 0 iff DG i receives the reference

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=float)
        pin = np.asarray(self.pinning, dtype=float)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "pinning", pin)
        validate(self)
        adj.setflags(write=False)
        pin.setflags(write=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def in_neighbors(self, i: int) -> list[int]:
        """DGs whose values DG i receives (support of row i)."""
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def channels(self) -> list[tuple[int, int]]:
        """All (src, dst) value channels: one self loop per DG plus the edges."""
        chans = [(i, i) for i in range(self.n)]
        for i in range(self.n):
            for j in self.in_neighbors(i):
                chans.append((j, i))
        return chans


def validate(graph: CommGraph) -> None:
    """Check all structural invariants, raising GraphError on the first violation.

    Reachability is checked by traversal from a virtual reference node that
    has an edge to every pinned DG.
    """
    adj = np.asarray(graph.adjacency, dtype=float)
    pin = np.asarray(graph.pinning, dtype=float)

    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise GraphError(f"adjacency must be square, got shape {adj.shape}")
    n = adj.shape[0]
    if pin.shape != (n,):
        raise GraphError(f"pinning must have length {n}, got shape {pin.shape}")
    if n < 1:
        raise GraphError("graph needs at least one DG")
    if not (np.isfinite(adj).all() and np.isfinite(pin).all()):
        raise GraphError("graph weights must be finite")

    neg = np.argwhere(adj < 0)
    if neg.size:
        i, j = neg[0]
        raise GraphError(f"negative weight a[{i},{j}] = {adj[i, j]}")
    diag = np.flatnonzero(np.diag(adj))
    if diag.size:
        i = diag[0]
        raise GraphError(f"nonzero diagonal a[{i},{i}] = {adj[i, i]}")
    if (pin < 0).any():
        i = int(np.flatnonzero(pin < 0)[0])
        raise GraphError(f"negative pinning gain b[{i}] = {pin[i]}")
    if not (pin > 0).any():
        raise GraphError("no pinned DG (all b_i are zero)")

    # BFS from the virtual reference node: info flows j -> i when a[i, j] > 0.
    reached = pin > 0
    frontier = list(np.flatnonzero(reached))
    while frontier:
        j = frontier.pop()
        for i in np.flatnonzero(adj[:, j] > 0):
            if not reached[i]:
                reached[i] = True
                frontier.append(int(i))
    if not reached.all():
        i = int(np.flatnonzero(~reached)[0])
        raise GraphError(f"DG {i} is unreachable from the reference")


def neighborhood_tracking_error(graph: CommGraph, i: int,
                                values: np.ndarray, reference: float) -> float:
    """Local cooperative error e_i = sum_j a_ij (x_i - x_j) + b_i (x_i - x*)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (graph.n,):
        raise IndexError(f"values must have length {graph.n}, got {values.shape}")
    if not 0 <= i < graph.n:
        raise IndexError(f"DG index {i} out of range for n={graph.n}")
    e = float(graph.adjacency[i] @ (values[i] - values))
    e += float(graph.pinning[i]) * (values[i] - reference)
    return e


def tracking_errors(graph: CommGraph, values: np.ndarray, reference: float) -> np.ndarray:
    """Vectorized tracking error for all DGs at once."""
    values = np.asarray(values, dtype=float)
    e = (graph.adjacency * (values[:, None] - values[None, :])).sum(axis=1)
    return e + graph.pinning * (values - reference)


def ring_graph(n: int = 4, weight: float = 1.0, pinned: int = 0) -> CommGraph:
    """Undirected ring 1-2-...-n-1 with unit weights and a single pinned DG.

    The default 4-DG topology: DG1's in-neighbors are DG2 and DG4 and only
    DG1 sees the global reference.
    """
    adj = np.zeros((n, n))
    for i in range(n):
        adj[i, (i + 1) % n] = weight
        adj[i, (i - 1) % n] = weight
    if n == 1:
        adj[:] = 0.0
    if n == 2:
        adj = np.array([[0.0, weight], [weight, 0.0]])
    pin = np.zeros(n)
    pin[pinned] = 1.0
    return CommGraph(adj, pin)
