"""Training-data generation: the load-step x attack-case scenario matrix.

Each matrix cell is a 4 s baseline-controller run sampled at 1 ms.  Five
step load changes are crossed with {normal, non-periodic alpha in
{0.25, 0.5}, periodic beta in {0.25, 0.5} at 60 Hz} FDI cases on DG1's
voltage feedback, attack onset at t = 2 s.  Every attacked run is paired
with the normal run at the same load level, which supplies the clean
reference targets for training.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from .ann import Dataset, MlpParams, TrainConfig, TrainReport, build_dataset, train
from .attack import AttackSpec, NonPeriodic, Periodic
from .plant import default_model
from .scenario import LoadEvent, ScenarioConfig
from .simulate import run_scenario
from .trace import Trace, export_csv, parse_csv

DEFAULT_LOAD_FACTORS = (0.7, 0.85, 1.0, 1.15, 1.3)
DEFAULT_ALPHAS = (0.25, 0.5)
DEFAULT_BETAS = (0.25, 0.5)
BASE_LOAD = 0.8 + 0.3j


@dataclass(frozen=True)
class MatrixSpec:
    load_factors: tuple[float, ...] = DEFAULT_LOAD_FACTORS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    betas: tuple[float, ...] = DEFAULT_BETAS
    freq_hz: float = 60.0
    tau: float = 2.0
    step_time: float = 1.0
    duration: float = 4.0
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixSpec":
        return cls(
            load_factors=tuple(d.get("load_factors", DEFAULT_LOAD_FACTORS)),
            alphas=tuple(d.get("alphas", DEFAULT_ALPHAS)),
            betas=tuple(d.get("betas", DEFAULT_BETAS)),
            freq_hz=float(d.get("freq_hz", 60.0)),
            tau=float(d.get("tau", 2.0)),
            step_time=float(d.get("step_time", 1.0)),
            duration=float(d.get("duration", 4.0)),
            seed=int(d.get("seed", 0)),
        )


def _attack_cases(spec: MatrixSpec) -> list[tuple[str, AttackSpec | None]]:
    cases: list[tuple[str, AttackSpec | None]] = [("normal", None)]
    for a in spec.alphas:
        cases.append((f"nonperiodic-a{a:g}",
                      AttackSpec(src="broadcast", dst=0, signal="voltage",
                                 kind=NonPeriodic(alpha=a), tau=spec.tau)))
    for b in spec.betas:
        cases.append((f"periodic-b{b:g}",
                      AttackSpec(src="broadcast", dst=0, signal="voltage",
                                 kind=Periodic(beta=b,
                                               omega=2 * math.pi * spec.freq_hz),
                                 tau=spec.tau)))
    return cases


def training_matrix(spec: MatrixSpec = MatrixSpec()) -> list[tuple[ScenarioConfig, str | None]]:
    """Scenario list for gen-data: (config, id of the paired clean run)."""
    from .graph import ring_graph

    out = []
    for f in spec.load_factors:
        # step the load impedances so delivered power scales roughly by f
        events = (LoadEvent(t=spec.step_time, bus=0,
                            r=BASE_LOAD.real / f, x=BASE_LOAD.imag / f),
                  LoadEvent(t=spec.step_time, bus=2,
                            r=BASE_LOAD.real / f, x=BASE_LOAD.imag / f))
        clean_id = f"load{f:g}-normal"
        for case_name, atk in _attack_cases(spec):
            cfg = ScenarioConfig(
                scenario_id=f"load{f:g}-{case_name}",
                duration=spec.duration,
                model=default_model(),
                graph=ring_graph(4),
                load_events=events,
                attacks=(atk,) if atk is not None else (),
                seed=spec.seed,
            )
            out.append((cfg, None if atk is None else clean_id))
    return out


def gen_data(out_dir: str, matrix: MatrixSpec = MatrixSpec()) -> list[dict]:
    """Run the scenario matrix and write one CSV per run plus a manifest.

    Failures are recorded per run in the manifest; partial output is kept.
    Returns the manifest entries.
    """
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for cfg, clean_id in training_matrix(matrix):
        entry = {
            "id": cfg.scenario_id,
            "file": cfg.scenario_id + ".csv",
            "attacked": bool(cfg.attacks),
            "clean_ref": clean_id if clean_id is not None else cfg.scenario_id,
            "v_ref": cfg.v_ref,
            "w_ref": cfg.w_ref,
            "seed": cfg.seed,
        }
        try:
            trace = run_scenario(cfg)
            if trace.diverged:
                entry["status"] = f"diverged at t={trace.diverged_time:.6f}"
            else:
                entry["status"] = "ok"
            export_csv(trace, os.path.join(out_dir, entry["file"]))
        except Exception as exc:  # keep going; record the failure
            entry["status"] = f"error: {exc}"
        entries.append(entry)
    tmp = os.path.join(out_dir, "manifest.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(entries, fh, indent=2)
    os.replace(tmp, os.path.join(out_dir, "manifest.json"))
    return entries


def load_runs(data_dir: str) -> list[tuple[Trace, Trace, str]]:
    """Read a gen-data directory back into (trace, clean_trace, id) tuples."""
    with open(os.path.join(data_dir, "manifest.json")) as fh:
        entries = json.load(fh)
    ok = {e["id"]: e for e in entries if e["status"] == "ok"}
    traces: dict[str, Trace] = {}
    for e in ok.values():
        tr = parse_csv(os.path.join(data_dir, e["file"]))
        tr.v_ref = e["v_ref"]
        tr.w_ref = e["w_ref"]
        traces[e["id"]] = tr
    runs = []
    for e in ok.values():
        ref = e["clean_ref"]
        if ref not in traces:
            continue  # clean counterpart failed; skip the attacked run
        runs.append((traces[e["id"]], traces[ref], e["id"]))
    return runs


def dataset_from_dir(data_dir: str) -> Dataset:
    return build_dataset(load_runs(data_dir))


def train_pipeline(data_dir: str,
                   config: TrainConfig = TrainConfig()) -> tuple[MlpParams, TrainReport]:
    """Dataset assembly plus offline training, end to end."""
    return train(dataset_from_dir(data_dir), config)
