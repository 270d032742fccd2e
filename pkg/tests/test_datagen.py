import json
import os

import numpy as np
import pytest

from mgres.ann import TrainConfig
from mgres.datagen import (MatrixSpec, dataset_from_dir, gen_data, load_runs,
                           train_pipeline, training_matrix)

TINY = MatrixSpec(load_factors=(1.0,), alphas=(0.5,), betas=(0.5,),
                  tau=0.4, step_time=0.2, duration=0.8)


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    gen_data(str(out), TINY)
    return str(out)


def test_matrix_layout():
    cells = training_matrix(MatrixSpec())
    assert len(cells) == 5 * 5  # load factors x {normal, 2 alphas, 2 betas}
    ids = [cfg.scenario_id for cfg, _ in cells]
    assert "load1-normal" in ids and "load0.7-periodic-b0.5" in ids
    by_id = dict(zip(ids, cells))
    cfg, clean = by_id["load1.15-nonperiodic-a0.25"]
    assert clean == "load1.15-normal"
    assert cfg.attacks[0].kind.alpha == 0.25
    assert cfg.attacks[0].tau == 2.0
    cfg_n, clean_n = by_id["load1.3-normal"]
    assert clean_n is None and cfg_n.attacks == ()
    # the load step scales both load impedances by 1/f at the step time
    ev = cfg.load_events[0]
    assert ev.t == 1.0 and ev.r == pytest.approx(0.8 / 1.15)


def test_matrix_spec_from_dict():
    spec = MatrixSpec.from_dict({"load_factors": [1.0], "tau": 0.4,
                                 "duration": 0.8})
    assert spec.load_factors == (1.0,)
    assert spec.alphas == (0.25, 0.5)  # defaults survive partial overrides
    assert spec.tau == 0.4


def test_gen_data_outputs(data_dir):
    with open(os.path.join(data_dir, "manifest.json")) as fh:
        entries = json.load(fh)
    assert len(entries) == 3
    assert all(e["status"] == "ok" for e in entries)
    for e in entries:
        assert os.path.exists(os.path.join(data_dir, e["file"]))
        assert e["v_ref"] == 1.0
    normal = next(e for e in entries if not e["attacked"])
    assert normal["clean_ref"] == normal["id"]
    attacked = [e for e in entries if e["attacked"]]
    assert len(attacked) == 2
    assert all(e["clean_ref"] == normal["id"] for e in attacked)


def test_load_runs_pairs_attacked_with_clean(data_dir):
    runs = load_runs(data_dir)
    assert len(runs) == 3
    for trace, clean, run_id in runs:
        assert clean.v_ref == 1.0
        assert not clean.attack_active.any()
        if trace.attack_active.any():
            assert trace is not clean
        else:
            assert trace is clean


def test_dataset_row_count(data_dir):
    ds = dataset_from_dir(data_dir)
    # 0.8 s at 1 ms = 801 samples, 701 after the 0.1 s discard;
    # normal contributes 701 rows, each attacked run 2 * 701
    assert len(ds) == 701 + 2 * 2 * 701
    assert ds.attacked.sum() == 4 * 701
    assert ds.t.min() >= 0.1 - 1e-12
    # clean slots of normal rows equal the received slots
    normal_rows = ~ds.attacked
    np.testing.assert_array_equal(ds.x[normal_rows, :3], ds.x[normal_rows, 3:6])
    assert (ds.x[:, 6] == 1.0).all()


def test_train_pipeline_runs(data_dir, tmp_path):
    params, report = train_pipeline(data_dir, TrainConfig(max_epochs=40, seed=0))
    assert len(report.train_mse) <= 40
    assert report.best_val_mse < report.val_mse[0]
    assert np.isfinite(params.w1).all()


def test_gen_data_records_failures(tmp_path):
    # an unconditionally destabilizing matrix cell must not abort the batch
    bad = MatrixSpec(load_factors=(1.0,), alphas=(-0.999,), betas=(),
                     tau=0.1, step_time=0.05, duration=0.8)
    entries = gen_data(str(tmp_path / "bad"), bad)
    by_status = {e["id"]: e["status"] for e in entries}
    assert by_status["load1-normal"] == "ok"
    assert by_status["load1-nonperiodic-a-0.999"].startswith("diverged")
