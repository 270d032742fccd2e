"""Scenario configuration: YAML schema, validation, and built-in scenarios.

DG and bus numbering is 1-based in scenario files and 0-based internally.
The built-in names reproduce the headline experiments:

    default              4-DG system, baseline controller, no attack
    default-nonperiodic  constant-multiple FDI (alpha = 0.5) on DG1's
                         voltage feedback at t = 2 s
    default-periodic     sinusoidal FDI (beta = 0.5, 60 Hz) at t = 2 s
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .attack import AttackConfigError, AttackSpec, NonPeriodic, Periodic, \
    parse_target, resolve_channels
from .graph import CommGraph, GraphError, ring_graph
from .plant import DgParams, Line, Load, MicrogridModel, NetworkParams, default_model
from .secondary import SecondaryGains, check_controller_name

BUILTIN_SCENARIOS = ("default", "default-nonperiodic", "default-periodic")


class ScenarioError(ValueError):
    """Raised for any invalid or inconsistent scenario configuration."""


@dataclass(frozen=True)
class LoadEvent:
    t: float
    bus: int      # 0-based
    r: float
    x: float

    def __post_init__(self):
        if self.t < 0:
            raise ScenarioError(f"load event time must be >= 0, got {self.t}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    duration: float
    model: MicrogridModel
    graph: CommGraph
    gains: SecondaryGains = SecondaryGains()
    controllers: tuple[str, ...] = ()          # per DG, "pi" | "ann"
    ann_model_path: str | None = None
    v_ref: float = 1.0
    w_ref: float = 2.0 * math.pi * 60.0
    dt: float = 1e-4
    sample_period: float = 1e-3
    seed: int = 0
    load_events: tuple[LoadEvent, ...] = ()
    attacks: tuple[AttackSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "controllers",
                           tuple(self.controllers) or ("pi",) * self.graph.n)
        object.__setattr__(self, "load_events",
                           tuple(sorted(self.load_events, key=lambda e: e.t)))
        object.__setattr__(self, "attacks", tuple(self.attacks))
        self.validate()

    def validate(self) -> None:
        if self.duration <= 0:
            raise ScenarioError(f"duration must be positive, got {self.duration}")
        if self.dt <= 0:
            raise ScenarioError(f"dt must be positive, got {self.dt}")
        if self.sample_period < self.dt:
            raise ScenarioError(
                f"sample period {self.sample_period} is below the integrator step {self.dt}")
        ratio = self.sample_period / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ScenarioError(
                f"sample period {self.sample_period} must be an integer multiple of dt {self.dt}")
        if self.graph.n != self.model.n:
            raise ScenarioError(
                f"graph has {self.graph.n} DGs but the plant has {self.model.n}")
        if len(self.controllers) != self.graph.n:
            raise ScenarioError(
                f"need {self.graph.n} controller entries, got {len(self.controllers)}")
        for name in self.controllers:
            check_controller_name(name)
        if "ann" in self.controllers and self.ann_model_path is not None:
            if not os.path.exists(self.ann_model_path):
                raise ScenarioError(
                    f"ANN model file not found: {self.ann_model_path}")
        loads_by_bus = {ld.bus for ld in self.model.network.loads}
        for ev in self.load_events:
            if ev.bus not in loads_by_bus:
                raise ScenarioError(f"load event targets bus {ev.bus + 1} with no load")
        chans = [(s, d, sig) for (s, d) in self.graph.channels()
                 for sig in ("voltage", "frequency")]
        for spec in self.attacks:
            try:
                resolve_channels(spec, chans)
            except AttackConfigError as exc:
                raise ScenarioError(str(exc)) from exc

    @property
    def sample_stride(self) -> int:
        return int(round(self.sample_period / self.dt))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"missing required field {key!r} in {where}")
    return d[key]


def _parse_attack(d: dict) -> AttackSpec:
    target = _require(d, "target", "attack")
    src, dst, sig = parse_target(str(target))
    kind_name = str(_require(d, "kind", f"attack {target!r}"))
    if kind_name == "nonperiodic":
        kind = NonPeriodic(alpha=float(_require(d, "alpha", f"attack {target!r}")))
    elif kind_name == "periodic":
        if "freq_hz" in d:
            omega = 2.0 * math.pi * float(d["freq_hz"])
        elif "omega" in d:
            omega = float(d["omega"])
        else:
            raise ScenarioError(f"periodic attack {target!r} needs freq_hz or omega")
        kind = Periodic(beta=float(_require(d, "beta", f"attack {target!r}")), omega=omega)
    else:
        raise ScenarioError(f"unknown attack kind {kind_name!r} (nonperiodic|periodic)")
    try:
        return AttackSpec(src=src, dst=dst, signal=sig, kind=kind,
                          tau=float(_require(d, "tau", f"attack {target!r}")),
                          end=float(d["end"]) if "end" in d else None)
    except AttackConfigError as exc:
        raise ScenarioError(str(exc)) from exc


def _parse_plant(d: dict) -> MicrogridModel:
    dgs = tuple(DgParams(m_p=float(e.get("m_p", 3.77)),
                         n_q=float(e.get("n_q", 0.04)),
                         omega_c=float(e.get("omega_c", 31.4)))
                for e in _require(d, "dgs", "plant"))
    lines = tuple(Line(int(e["from"]) - 1, int(e["to"]) - 1,
                       float(e["r"]), float(e["x"]))
                  for e in _require(d, "lines", "plant"))
    loads = tuple(Load(int(e["bus"]) - 1, float(e["r"]), float(e["x"]))
                  for e in _require(d, "loads", "plant"))
    net = NetworkParams(n_bus=int(_require(d, "n_bus", "plant")),
                        lines=lines, loads=loads,
                        dg_bus=tuple(int(b) - 1 for b in _require(d, "dg_bus", "plant")))
    return MicrogridModel(dgs=dgs, network=net)


def _parse_graph(d: dict) -> CommGraph:
    edges = _require(d, "edges", "graph")
    pinning = np.array([float(v) for v in _require(d, "pinning", "graph")])
    n = len(pinning)
    adj = np.zeros((n, n))
    for e in edges:
        if len(e) == 2:
            frm, to, w = int(e[0]), int(e[1]), 1.0
        else:
            frm, to, w = int(e[0]), int(e[1]), float(e[2])
        if not (1 <= frm <= n and 1 <= to <= n):
            raise ScenarioError(f"graph edge ({frm}, {to}) references an unknown DG")
        adj[to - 1, frm - 1] = w  # information flows frm -> to
    try:
        return CommGraph(adj, pinning)
    except GraphError as exc:
        raise ScenarioError(f"invalid communication graph: {exc}") from exc


def from_dict(d: dict, scenario_id: str = "scenario",
              base_dir: str = ".") -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed YAML mapping."""
    if not isinstance(d, dict):
        raise ScenarioError("scenario file must contain a mapping at top level")
    unknown = set(d) - {"duration", "dt", "sample_period", "seed", "references",
                        "controller", "controllers", "ann_model", "gains",
                        "plant", "graph", "load_events", "attacks", "id"}
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")

    model = _parse_plant(d["plant"]) if "plant" in d else default_model()
    graph = _parse_graph(d["graph"]) if "graph" in d else ring_graph(model.n)

    refs = d.get("references", {})
    v_ref = float(refs.get("voltage", 1.0))
    if "frequency_hz" in refs:
        w_ref = 2.0 * math.pi * float(refs["frequency_hz"])
    else:
        w_ref = float(refs.get("frequency", 2.0 * math.pi * 60.0))

    if "controllers" in d:
        controllers = tuple(str(c) for c in d["controllers"])
    else:
        # shorthand: "ann" puts the ANN on DG1 only, everyone else on baseline
        name = str(d.get("controller", "pi"))
        check_controller_name(name)
        controllers = (name,) + ("pi",) * (graph.n - 1) if name == "ann" \
            else ("pi",) * graph.n

    ann_model = d.get("ann_model")
    if ann_model is not None and not os.path.isabs(ann_model):
        ann_model = os.path.join(base_dir, ann_model)
    if "ann" in controllers and ann_model is None:
        raise ScenarioError("controller 'ann' requires an ann_model file")

    gains_d = d.get("gains", {})
    gains = SecondaryGains(c_v=float(gains_d.get("c_v", 5.0)),
                           c_w=float(gains_d.get("c_w", 5.0)))

    events = tuple(LoadEvent(t=float(e["t"]), bus=int(e["bus"]) - 1,
                             r=float(e["r"]), x=float(e["x"]))
                   for e in d.get("load_events", []))
    attacks = tuple(_parse_attack(a) for a in d.get("attacks", []))

    return ScenarioConfig(
        scenario_id=str(d.get("id", scenario_id)),
        duration=float(_require(d, "duration", "scenario")),
        dt=float(d.get("dt", 1e-4)),
        sample_period=float(d.get("sample_period", 1e-3)),
        seed=int(d.get("seed", 0)),
        v_ref=v_ref, w_ref=w_ref,
        model=model, graph=graph, gains=gains,
        controllers=controllers, ann_model_path=ann_model,
        load_events=events, attacks=attacks,
    )


def builtin_scenario(name: str, ann_model: str | None = None,
                     duration: float = 4.0) -> ScenarioConfig:
    if name not in BUILTIN_SCENARIOS:
        raise ScenarioError(f"unknown built-in scenario {name!r}; "
                            f"available: {BUILTIN_SCENARIOS}")
    attacks: tuple[AttackSpec, ...] = ()
    if name == "default-nonperiodic":
        attacks = (AttackSpec(src="broadcast", dst=0, signal="voltage",
                              kind=NonPeriodic(alpha=0.5), tau=2.0),)
    elif name == "default-periodic":
        attacks = (AttackSpec(src="broadcast", dst=0, signal="voltage",
                              kind=Periodic(beta=0.5, omega=2.0 * math.pi * 60.0),
                              tau=2.0),)
    controllers = ("pi",) * 4
    if ann_model is not None:
        controllers = ("ann", "pi", "pi", "pi")
    return ScenarioConfig(scenario_id=name, duration=duration,
                          model=default_model(), graph=ring_graph(4),
                          controllers=controllers, ann_model_path=ann_model,
                          attacks=attacks)


def load_scenario(source: str, ann_model: str | None = None) -> ScenarioConfig:
    """Load a scenario by built-in name or YAML file path."""
    if source in BUILTIN_SCENARIOS:
        return builtin_scenario(source, ann_model=ann_model)
    if not os.path.exists(source):
        raise ScenarioError(f"scenario {source!r} is neither a built-in name "
                            f"({', '.join(BUILTIN_SCENARIOS)}) nor a file")
    with open(source) as fh:
        try:
            d = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"cannot parse {source}: {exc}") from exc
    cfg = from_dict(d, scenario_id=os.path.splitext(os.path.basename(source))[0],
                    base_dir=os.path.dirname(os.path.abspath(source)))
    if ann_model is not None:
        cfg = replace(cfg, controllers=("ann",) + ("pi",) * (cfg.graph.n - 1),
                      ann_model_path=ann_model)
    return cfg
