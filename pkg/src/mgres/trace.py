"""Time-indexed simulation records and their normative CSV form.

CSV schema (bit-exact, one column per recorded quantity):

    t, dg{i}.v, dg{i}.w, dg{i}.P, dg{i}.Q, dg{i}.Vn, dg{i}.wn,
    ch.dg{s}->dg{d}.{sig}.clean, ch.dg{s}->dg{d}.{sig}.recv,
    load{k}.I, attack_active

Values are decimal with 17 significant digits, rows ordered by time, so
export -> parse -> export is byte-identical.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass

import numpy as np

DG_SIGNALS = ("v", "w", "P", "Q", "Vn", "wn")


class TraceFormatError(ValueError):
    pass


@dataclass
class Trace:
    t: np.ndarray                                # (N,)
    dg: dict[str, np.ndarray]                    # signal -> (N, n_dg)
    channels: list[tuple[int, int, str]]         # (src, dst, signal)
    ch_clean: np.ndarray                         # (N, C)
    ch_recv: np.ndarray                          # (N, C)
    load_buses: list[int]
    load_current: np.ndarray                     # (N, K)
    attack_active: np.ndarray                    # (N,) 0/1
    # run metadata; not part of the CSV schema
    v_ref: float | None = None
    w_ref: float | None = None
    diverged: bool = False
    diverged_time: float | None = None
    max_power_residual: float = 0.0

    @property
    def n_dg(self) -> int:
        return self.dg["v"].shape[1]

    def inbound_voltage_channels(self, dg: int) -> list[int]:
        """Voltage channel indices feeding DG ``dg``: self loop first, then
        in-neighbors by ascending source index."""
        own = [k for k, (s, d, sig) in enumerate(self.channels)
               if sig == "voltage" and d == dg and s == dg]
        nbr = sorted((s, k) for k, (s, d, sig) in enumerate(self.channels)
                     if sig == "voltage" and d == dg and s != dg)
        return own + [k for _, k in nbr]


def dg1_voltage_triple(trace: Trace, dg: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Clean and received [v_ii, v_ij, v_ik] series for the attacked DG."""
    idx = trace.inbound_voltage_channels(dg)
    if len(idx) != 3:
        raise TraceFormatError(
            f"DG {dg + 1} has {len(idx)} inbound voltage channels, the "
            "7-input controller needs exactly 3 (self + two neighbors)")
    return trace.ch_clean[:, idx], trace.ch_recv[:, idx]


def _fmt(x: float) -> str:
    return format(x, ".17g")


def column_names(trace: Trace) -> list[str]:
    cols = ["t"]
    for i in range(trace.n_dg):
        cols += [f"dg{i + 1}.{sig}" for sig in DG_SIGNALS]
    for (s, d, sig) in trace.channels:
        cols.append(f"ch.dg{s + 1}->dg{d + 1}.{sig}.clean")
        cols.append(f"ch.dg{s + 1}->dg{d + 1}.{sig}.recv")
    for k in range(len(trace.load_buses)):
        cols.append(f"load{k + 1}.I")
    cols.append("attack_active")
    return cols


def export_csv(trace: Trace, path=None) -> str | None:
    """Write the trace in the normative CSV schema; returns the text when no
    path is given."""
    buf = io.StringIO()
    buf.write(",".join(column_names(trace)) + "\n")
    n = len(trace.t)
    for r in range(n):
        parts = [_fmt(trace.t[r])]
        for i in range(trace.n_dg):
            parts += [_fmt(trace.dg[sig][r, i]) for sig in DG_SIGNALS]
        for c in range(len(trace.channels)):
            parts.append(_fmt(trace.ch_clean[r, c]))
            parts.append(_fmt(trace.ch_recv[r, c]))
        for k in range(len(trace.load_buses)):
            parts.append(_fmt(trace.load_current[r, k]))
        parts.append(str(int(trace.attack_active[r])))
        buf.write(",".join(parts) + "\n")
    text = buf.getvalue()
    if path is None:
        return text
    import os
    tmp = str(path) + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return None


_CH_RE = re.compile(r"^ch\.dg(\d+)->dg(\d+)\.(\w+)\.(clean|recv)$")


def parse_csv(source) -> Trace:
    """Rebuild a Trace from its CSV form (file path or CSV text)."""
    if isinstance(source, str) and "\n" in source:
        lines = source.splitlines()
    else:
        with open(source) as fh:
            lines = fh.read().splitlines()
    if not lines:
        raise TraceFormatError("empty CSV")
    header = lines[0].split(",")
    if header[0] != "t" or header[-1] != "attack_active":
        raise TraceFormatError("CSV header must start with t and end with attack_active")

    dg_cols, ch_cols, load_cols = [], [], []
    for pos, name in enumerate(header[1:-1], start=1):
        if name.startswith("dg"):
            dg_cols.append((pos, name))
        elif name.startswith("ch."):
            m = _CH_RE.match(name)
            if not m:
                raise TraceFormatError(f"bad channel column {name!r}")
            ch_cols.append((pos, int(m.group(1)) - 1, int(m.group(2)) - 1,
                            m.group(3), m.group(4)))
        elif name.startswith("load"):
            load_cols.append(pos)
        else:
            raise TraceFormatError(f"unrecognized column {name!r}")

    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:] if ln])
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise TraceFormatError("row width does not match the header")

    n_dg = len(dg_cols) // len(DG_SIGNALS)
    dg = {sig: np.empty((data.shape[0], n_dg)) for sig in DG_SIGNALS}
    for pos, name in dg_cols:
        num, sig = name[2:].split(".")
        dg[sig][:, int(num) - 1] = data[:, pos]

    channels: list[tuple[int, int, str]] = []
    clean_pos, recv_pos = {}, {}
    for pos, s, d, sig, which in ch_cols:
        key = (s, d, sig)
        if key not in channels:
            channels.append(key)
        (clean_pos if which == "clean" else recv_pos)[key] = pos
    if set(clean_pos) != set(recv_pos):
        raise TraceFormatError("every channel needs both a clean and a recv column")
    ch_clean = np.column_stack([data[:, clean_pos[k]] for k in channels]) \
        if channels else np.empty((data.shape[0], 0))
    ch_recv = np.column_stack([data[:, recv_pos[k]] for k in channels]) \
        if channels else np.empty((data.shape[0], 0))

    load_current = data[:, load_cols] if load_cols else np.empty((data.shape[0], 0))
    return Trace(
        t=data[:, 0], dg=dg, channels=channels,
        ch_clean=ch_clean, ch_recv=ch_recv,
        load_buses=list(range(len(load_cols))),
        load_current=load_current,
        attack_active=data[:, -1].astype(int),
    )


def traces_equal(a: Trace, b: Trace) -> bool:
    """Exact equality of the recorded columns (metadata excluded)."""
    if a.channels != b.channels or len(a.load_buses) != len(b.load_buses):
        return False
    if not np.array_equal(a.t, b.t):
        return False
    for sig in DG_SIGNALS:
        if not np.array_equal(a.dg[sig], b.dg[sig]):
            return False
    return (np.array_equal(a.ch_clean, b.ch_clean)
            and np.array_equal(a.ch_recv, b.ch_recv)
            and np.array_equal(a.load_current, b.load_current)
            and np.array_equal(a.attack_active, b.attack_active))
