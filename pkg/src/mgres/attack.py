"""False-data-injection layer: h(u) = u + phi on named communication channels.

Two attack shapes are supported.  The non-periodic attack adds a constant
multiple of the clean signal after the start time tau; the periodic attack
modulates it with a sinusoid:

    non-periodic: h(u) = u               (t < tau)
                  h(u) = u + alpha * u   (t >= tau)
    periodic:     h(u) = u + beta * sin(omega * t) * u   (t >= tau)

Both are multiplicative in u and stateless.  The sinusoid phase is referenced
to simulation time zero, not to tau.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

BROADCAST = "broadcast"
SIGNALS = ("voltage", "frequency")


class AttackConfigError(ValueError):
    """Raised when an attack spec does not match the scenario's channel set."""


@dataclass(frozen=True)
class NonPeriodic:
    alpha: float


@dataclass(frozen=True)
class Periodic:
    beta: float
    omega: float  # rad/s


@dataclass(frozen=True)
class AttackSpec:
    src: int | str      # source DG index, or "broadcast" (= every inbound copy of dst)
    dst: int | str      # destination DG index, or "broadcast" (= every outgoing copy of src)
    signal: str         # "voltage" | "frequency"
    kind: NonPeriodic | Periodic
    tau: float          # start time, s
    end: float | None = None

    def __post_init__(self):
        if self.signal not in SIGNALS:
            raise AttackConfigError(f"unknown signal kind {self.signal!r}")
        if self.tau < 0:
            raise AttackConfigError(f"attack start tau must be >= 0, got {self.tau}")
        if self.end is not None and self.end <= self.tau:
            raise AttackConfigError(f"attack end {self.end} must exceed tau {self.tau}")
        if self.src == BROADCAST and self.dst == BROADCAST:
            raise AttackConfigError("src and dst cannot both be broadcast")

    def active(self, t: float) -> bool:
        if t < self.tau:
            return False
        return self.end is None or t < self.end

    def gain(self, t: float) -> float:
        """Multiplier on the clean value at time t: h(u) = gain(t) * u."""
        if not self.active(t):
            return 1.0
        if isinstance(self.kind, NonPeriodic):
            return 1.0 + self.kind.alpha
        return 1.0 + self.kind.beta * math.sin(self.kind.omega * t)

    def matches(self, src: int, dst: int, signal: str) -> bool:
        if signal != self.signal:
            return False
        if self.src != BROADCAST and self.src != src:
            return False
        if self.dst != BROADCAST and self.dst != dst:
            return False
        return True


def inject(spec: AttackSpec, t: float, u: float) -> float:
    """Corrupted channel value h(u) at time t; identity before tau."""
    return u * spec.gain(t)


def apply_attacks(specs: list[AttackSpec], t: float,
                  channels: dict[tuple[int, int, str], float]) -> dict[tuple[int, int, str], float]:
    """Pass every channel through each spec that targets it, in declaration order."""
    out = dict(channels)
    for spec in specs:
        for key in out:
            if spec.matches(*key):
                out[key] = inject(spec, t, out[key])
    return out


_TARGET_RE = re.compile(r"^\s*(dg(\d+)\.(\w+)|broadcast)\s*->\s*(dg(\d+)(\.(\w+))?|broadcast)\s*$")


def parse_target(target: str) -> tuple[int | str, int | str, str]:
    """Parse a channel target string into (src, dst, signal).

    Forms (DG numbering is 1-based in the string, 0-based in the result):
      "dg1.voltage -> dg2"        one directed channel
      "dg1.voltage -> broadcast"  every outgoing copy of DG1's voltage
                                  (its self loop and each out-edge)
      "broadcast -> dg1.voltage"  every voltage channel feeding DG1's
                                  controller (self loop and each in-edge)
    """
    m = _TARGET_RE.match(target)
    if not m:
        raise AttackConfigError(f"cannot parse attack target {target!r}")
    left_dg, left_sig = m.group(2), m.group(3)
    right_dg, right_sig = m.group(5), m.group(7)
    if left_dg is None and right_dg is None:
        raise AttackConfigError(f"target {target!r} has no DG endpoint")
    if left_dg is None:
        if right_sig is None:
            raise AttackConfigError(f"target {target!r} is missing the signal kind")
        src, dst, sig = BROADCAST, int(right_dg) - 1, right_sig
    else:
        src, sig = int(left_dg) - 1, left_sig
        if right_dg is None:
            dst = BROADCAST
        else:
            dst = int(right_dg) - 1
            if right_sig is not None and right_sig != sig:
                raise AttackConfigError(f"target {target!r} names two different signals")
    if sig not in SIGNALS:
        raise AttackConfigError(f"unknown signal kind {sig!r} in target {target!r}")
    return src, dst, sig


def resolve_channels(spec: AttackSpec, channels: list[tuple[int, int, str]]) -> list[int]:
    """Indices of the channels a spec targets; error if it targets none."""
    idx = [k for k, ch in enumerate(channels) if spec.matches(*ch)]
    if not idx:
        raise AttackConfigError(
            f"attack on {spec.src}->{spec.dst} ({spec.signal}) matches no channel "
            "declared by the communication graph")
    return idx
