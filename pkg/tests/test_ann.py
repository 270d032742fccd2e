import numpy as np
import pytest

from mgres import ann
from mgres.ann import (Dataset, DatasetError, MlpParams, NormalizationSpec,
                       TrainConfig, ann_controller, build_dataset, forward,
                       forward_batch, gradient, init_params, load_model, mse,
                       runtime_features, save_model, tansig, train)
from mgres.trace import Trace


def test_tansig_is_tanh():
    # 2/(1+exp(-2z)) - 1 evaluated independently
    z = 0.5
    assert tansig(z) == pytest.approx(2.0 / (1.0 + np.exp(-1.0)) - 1.0, abs=1e-15)
    assert tansig(0.5) == pytest.approx(0.46211715726000974, abs=1e-16)
    assert tansig(0.0) == 0.0
    np.testing.assert_allclose(tansig(np.array([-30.0, 30.0])), [-1.0, 1.0])


def test_forward_matches_hand_computation():
    rng = np.random.default_rng(1)
    params = init_params(rng)
    x = rng.uniform(-1, 1, 7)
    h = np.tanh(params.w1 @ x + params.b1)
    expect = float((params.w2 @ h + params.b2)[0])
    assert forward(params, x) == pytest.approx(expect, rel=1e-12)
    assert forward_batch(params, x[None, :])[0] == pytest.approx(expect, rel=1e-12)


def test_forward_respects_normalization():
    norm = NormalizationSpec(x_offset=np.full(7, 1.0), x_scale=np.full(7, 0.5),
                             y_offset=2.0, y_scale=3.0)
    raw = init_params(np.random.default_rng(2))
    params = MlpParams(raw.w1, raw.b1, raw.w2, raw.b2, norm)
    x = np.full(7, 1.25)
    xn = (x - 1.0) / 0.5
    inner = float((raw.w2 @ np.tanh(raw.w1 @ xn + raw.b1) + raw.b2)[0])
    assert forward(params, x) == pytest.approx(inner * 3.0 + 2.0, rel=1e-12)


def test_shape_validation():
    rng = np.random.default_rng(0)
    params = init_params(rng)
    with pytest.raises(ValueError):
        forward(params, np.zeros(6))
    with pytest.raises(ValueError):
        forward_batch(params, np.zeros((3, 8)))
    with pytest.raises(ValueError):
        MlpParams(np.zeros((9, 7)), np.zeros(10), np.zeros((1, 10)), np.zeros(1),
                  NormalizationSpec.identity())


def test_init_is_seeded_and_bounded():
    a = init_params(np.random.default_rng(5))
    b = init_params(np.random.default_rng(5))
    c = init_params(np.random.default_rng(6))
    np.testing.assert_array_equal(a.w1, b.w1)
    assert not np.array_equal(a.w1, c.w1)
    assert np.abs(a.w1).max() <= 1.0 / np.sqrt(7)
    assert np.abs(a.w2).max() <= 1.0 / np.sqrt(10)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    params = init_params(rng)
    x = rng.uniform(-1, 1, (16, 7))
    y = rng.uniform(-1, 1, 16)
    grads = gradient(params, x, y)
    eps = 1e-6
    for name, g in zip(("w1", "b1", "w2", "b2"), grads):
        arr = getattr(params, name)
        it = np.ndindex(arr.shape)
        for idx in list(it)[:5]:  # spot-check a few entries per tensor
            d = dict(w1=params.w1.copy(), b1=params.b1.copy(),
                     w2=params.w2.copy(), b2=params.b2.copy())
            d[name][idx] += eps
            hi = mse(MlpParams(d["w1"], d["b1"], d["w2"], d["b2"], params.norm), x, y)
            d[name][idx] -= 2 * eps
            lo = mse(MlpParams(d["w1"], d["b1"], d["w2"], d["b2"], params.norm), x, y)
            assert g[idx] == pytest.approx((hi - lo) / (2 * eps), abs=1e-6)


def test_normalization_from_data():
    x = np.zeros((4, 7))
    x[:, 0] = [0.0, 1.0, 2.0, 3.0]
    y = np.array([1.0, 3.0, 2.0, 1.0])
    norm = NormalizationSpec.from_data(x, y)
    assert norm.x_offset[0] == 1.5 and norm.x_scale[0] == 1.5
    assert norm.x_scale[1] == 1.0  # constant column falls back to unit scale
    xn = norm.normalize_x(x)
    assert xn[:, 0].min() == -1.0 and xn[:, 0].max() == 1.0
    assert norm.normalize_y(3.0) == 1.0 and norm.normalize_y(1.0) == -1.0
    assert norm.denormalize_y(norm.normalize_y(2.2)) == pytest.approx(2.2)


def synth_dataset(n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.9, 1.1, (n, 7))
    y = 0.5 * x[:, 0] + 0.3 * x[:, 3] + 0.2
    attacked = np.zeros(n, dtype=bool)
    attacked[n // 2:] = True
    return Dataset(x=x, y=y, scenario=["s"] * n, t=np.zeros(n), attacked=attacked)


def test_train_learns_and_is_reproducible():
    ds = synth_dataset()
    cfg = TrainConfig(max_epochs=300, seed=1)
    p1, r1 = train(ds, cfg)
    p2, r2 = train(ds, cfg)
    np.testing.assert_array_equal(p1.w1, p2.w1)
    assert r1.train_mse == r2.train_mse
    assert r1.best_val_mse < r1.val_mse[0]
    assert r1.best_val_mse < 1e-5
    # accepted-step train MSE never increases
    acc = [m for m, a in zip(r1.train_mse, r1.accepted) if a]
    assert all(b <= a + 1e-15 for a, b in zip(acc, acc[1:]))


def test_train_input_validation():
    with pytest.raises(DatasetError, match="too small"):
        train(synth_dataset(n=40), TrainConfig())
    ds = synth_dataset()
    ds.attacked[:] = False
    with pytest.raises(DatasetError, match="mix"):
        train(ds, TrainConfig())
    with pytest.raises(DatasetError, match="non-finite"):
        x = np.ones((60, 7))
        x[0, 0] = np.nan
        Dataset(x=x, y=np.ones(60), scenario=["s"] * 60,
                t=np.zeros(60), attacked=np.ones(60, dtype=bool))


def test_runtime_features_and_clamp():
    f = runtime_features(np.array([1.0, 1.1, 1.2]), 1.0)
    np.testing.assert_array_equal(f, [1.0, 1.1, 1.2, 1.0, 1.1, 1.2, 1.0])
    # force huge outputs through the denormalization to hit both clamps
    raw = init_params(np.random.default_rng(0))
    hi = MlpParams(raw.w1, raw.b1, raw.w2, raw.b2,
                   NormalizationSpec(np.zeros(7), np.ones(7), 100.0, 1.0))
    lo = MlpParams(raw.w1, raw.b1, raw.w2, raw.b2,
                   NormalizationSpec(np.zeros(7), np.ones(7), -100.0, 1.0))
    assert ann_controller(hi, np.ones(3), 1.0) == 1.5
    assert ann_controller(lo, np.ones(3), 1.0) == 0.5


def test_model_round_trip_is_exact(tmp_path):
    params = init_params(np.random.default_rng(11))
    path = tmp_path / "model.txt"
    save_model(params, path)
    back = load_model(path)
    np.testing.assert_array_equal(params.w1, back.w1)
    np.testing.assert_array_equal(params.b1, back.b1)
    np.testing.assert_array_equal(params.w2, back.w2)
    np.testing.assert_array_equal(params.b2, back.b2)
    np.testing.assert_array_equal(params.norm.x_offset, back.norm.x_offset)
    assert params.norm.y_scale == back.norm.y_scale
    assert path.read_text().splitlines()[0] == "mgres-mlp 1 7 10 1"


def test_model_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not-a-model 1 7 10 1\n")
    with pytest.raises(ValueError, match="header"):
        load_model(path)
    path.write_text("mgres-mlp 1 7 10 1\n1 2 3\n")
    with pytest.raises(ValueError, match="value rows"):
        load_model(path)


def make_trace(n_samples, attacked, vn1, clean=None, recv=None, v_ref=1.0):
    """Minimal 4-DG trace with the three voltage channels feeding DG1."""
    t = np.arange(n_samples) * 1e-3
    channels = [(0, 0, "voltage"), (1, 0, "voltage"), (3, 0, "voltage")]
    if clean is None:
        clean = np.tile([1.0, 1.01, 1.02], (n_samples, 1))
    if recv is None:
        recv = clean * (1.5 if attacked else 1.0)
    dg = {sig: np.zeros((n_samples, 4)) for sig in ("v", "w", "P", "Q", "Vn", "wn")}
    dg["Vn"][:, 0] = vn1
    return Trace(t=t, dg=dg, channels=channels, ch_clean=clean, ch_recv=recv,
                 load_buses=[0, 2], load_current=np.zeros((n_samples, 2)),
                 attack_active=np.full(n_samples, int(attacked)),
                 v_ref=v_ref, w_ref=2 * np.pi * 60)


def test_build_dataset_rows_and_pairing():
    n = 201  # 0 .. 0.2 s at 1 ms; the first 0.1 s is discarded -> 101 kept
    clean_run = make_trace(n, attacked=False, vn1=1.05)
    attacked_run = make_trace(n, attacked=True, vn1=1.30)
    ds = build_dataset([(clean_run, clean_run, "normal"),
                        (attacked_run, clean_run, "attacked")])
    assert len(ds) == 101 + 2 * 101
    # normal rows: clean triple duplicated (recv == clean), target = own Vn1
    assert not ds.attacked[:101].any()
    np.testing.assert_array_equal(ds.x[0], [1.0, 1.01, 1.02, 1.0, 1.01, 1.02, 1.0])
    assert (ds.y[:101] == 1.05).all()
    # attacked paired rows: clean then corrupted triple, clean run's target
    row = ds.x[101]
    np.testing.assert_allclose(row[:3], [1.0, 1.01, 1.02])
    np.testing.assert_allclose(row[3:6], [1.5, 1.515, 1.53])
    assert (ds.y[101:] == 1.05).all()
    assert ds.attacked[101:].all()
    # duplicated-triple rows mirror the runtime feature layout
    dup = ds.x[202]
    np.testing.assert_allclose(dup[:3], dup[3:6])
    assert ds.t.min() >= 0.1 - 1e-12


def test_build_dataset_errors():
    with pytest.raises(DatasetError, match="no runs"):
        build_dataset([])
    short = make_trace(150, attacked=False, vn1=1.0)
    long = make_trace(201, attacked=True, vn1=1.0)
    with pytest.raises(DatasetError, match="different length"):
        build_dataset([(long, short, "mismatch")])
