import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deidbench.errors import MissingColumn, NumericalError, ShapeMismatch, TooSmall, ZeroInterOcular
from deidbench.metrics import (
    PairSet,
    PredictionTable,
    calibrate_threshold,
    deid_pairs,
    fid,
    frechet_distance,
    identity_pairs,
    load_predictions,
    load_vectors,
    privacy_report,
    psnr,
    save_predictions,
    save_vectors,
    ssim,
    ssim_and_grad,
    utility_report,
)
from deidbench.metrics.utility import accuracy, mae, nme
from oracles import (
    accuracy_at,
    acc_oracle,
    best_accuracy,
    far_at,
    fid_oracle,
    mae_oracle,
    nme_oracle,
    privacy_oracle,
    psnr_oracle,
    ssim_oracle,
)


def test_psnr_matches_oracle(rng):
    for _ in range(30):
        a = rng.random((9, 7, 3))
        b = np.clip(a + rng.normal(0, rng.uniform(0.001, 0.3), a.shape), 0, 1)
        assert abs(psnr(a, b) - psnr_oracle(a, b)) < 1e-6


def test_psnr_cap_and_shapes(rng):
    a = rng.random((4, 4, 3))
    assert psnr(a, a) == 99.0
    assert psnr(a, a, cap=60.0) == 60.0
    assert psnr(np.zeros((2, 2, 1)), np.ones((2, 2, 1))) == 0.0
    with pytest.raises(ShapeMismatch):
        psnr(a, a[:3])


def test_ssim_matches_oracle(rng):
    for _ in range(10):
        c = int(rng.choice([1, 3]))
        a = rng.random((14, 15, c))
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
        assert abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-6


def test_ssim_trivia(rng):
    a = rng.random((16, 16, 3))
    assert ssim(a, a) == pytest.approx(1.0)
    b = rng.random((16, 16, 3))
    assert ssim(a, b) == pytest.approx(ssim(b, a))
    with pytest.raises(TooSmall):
        ssim(a[:10], a[:10])


def test_ssim_gradient_finite_differences(rng):
    x = rng.random((16, 16, 3))
    ref = np.clip(x + rng.normal(0, 0.1, x.shape), 0, 1)
    _, g = ssim_and_grad(x, ref)
    h = 1e-5
    for _ in range(20):
        idx = tuple(int(rng.integers(s)) for s in x.shape)
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        fd = (ssim(xp, ref) - ssim(xm, ref)) / (2 * h)
        assert abs(fd - g[idx]) <= 1e-4 * max(abs(fd), 1e-6)


def test_fid_matches_sqrtm_oracle(rng):
    for _ in range(20):
        d = int(rng.integers(1, 6))
        real = rng.normal(size=(40, d))
        gen = rng.normal(rng.normal(size=d), rng.uniform(0.5, 2), size=(50, d)) @ rng.normal(size=(d, d))
        assert abs(fid(real, gen) - fid_oracle(real, gen)) < 1e-6 * max(1.0, fid_oracle(real, gen))


def test_fid_closed_forms(rng):
    a = rng.normal(size=(60, 4))
    assert abs(fid(a, a)) < 1e-6
    shift = np.array([1.0, -2.0, 0.5, 3.0])
    assert abs(fid(a, a + shift) - shift @ shift) < 1e-6
    b = rng.normal(size=(70, 4)) * 2
    assert abs(fid(a, b) - fid(b, a)) < 1e-6


def test_frechet_rejects_indefinite():
    with pytest.raises(NumericalError):
        frechet_distance(np.zeros(2), np.diag([1.0, -1.0]), np.zeros(2), np.eye(2))


def test_fid_small_sample_shrinkage(rng):
    a = rng.normal(size=(3, 10))
    assert math.isfinite(fid(a, a + 1)) and fid(a, a) < 1e-6


def random_pairs(rng, n_gen, n_imp, d=8):
    return PairSet(rng.normal(size=(n_gen, 2, d)), rng.normal(size=(n_imp, 2, d)))


def test_privacy_matches_counting_oracle(rng):
    for _ in range(30):
        pairs = random_pairs(rng, int(rng.integers(1, 30)), int(rng.integers(1, 60)))
        t = float(rng.uniform(-0.5, 0.5))
        rep = privacy_report(pairs, t, far_threshold=float(rng.uniform(-0.5, 0.5)))
        ref = privacy_oracle(pairs.genuine, pairs.impostor, t, rep["far_threshold"])
        for k in ("VA", "PSR", "TAR_at_FAR"):
            assert abs(rep[k] - ref[k]) < 1e-9


def test_accuracy_threshold_is_optimal(rng):
    for _ in range(30):
        g = list(np.round(rng.normal(0.5, 0.3, int(rng.integers(1, 25))), 2))
        im = list(np.round(rng.normal(0.0, 0.3, int(rng.integers(1, 25))), 2))
        t = calibrate_threshold(g, im, "accuracy")
        assert abs(accuracy_at(g, im, t.value) - best_accuracy(g, im)) < 1e-12
        assert abs(t.detail["accuracy"] - best_accuracy(g, im)) < 1e-12


def test_far_threshold_is_lowest_passing(rng):
    for _ in range(30):
        g = list(rng.normal(0.5, 0.3, 20))
        im = list(np.round(rng.normal(0.0, 0.3, int(rng.integers(5, 200))), 2))
        level = float(rng.choice([0.001, 0.01, 0.1]))
        t = calibrate_threshold(g, im, "far", level).value
        assert far_at(im, t) < level
        lower = [s for s in set(g) | set(im) if s < t]
        if lower:
            assert far_at(im, max(lower)) >= level


def test_threshold_examples():
    t = calibrate_threshold([0.9, 0.8], [0.1, 0.2], "accuracy")
    assert t.value == pytest.approx(0.5)
    assert privacy_report(PairSet(np.array([[[1, 0], [1, 0]]]), np.array([[[1, 0], [0, 1]]])), 0.5)["VA"] == 100.0


def test_deid_pairs_structure(rng):
    orig, deid = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
    pairs = deid_pairs(orig, deid, seed=1, impostor_factor=3)
    assert np.array_equal(pairs.genuine[:, 0], orig) and np.array_equal(pairs.genuine[:, 1], deid)
    assert len(pairs.impostor) == 18
    rows = {(tuple(a), tuple(b)) for a, b in pairs.impostor}
    assert len(rows) == 18
    for a, b in pairs.impostor:
        i = int(np.nonzero((orig == a).all(axis=1))[0][0])
        j = int(np.nonzero((deid == b).all(axis=1))[0][0])
        assert i != j
    assert np.array_equal(deid_pairs(orig, deid, seed=1).impostor, deid_pairs(orig, deid, seed=1).impostor)


def test_identity_pairs(rng):
    vec = rng.normal(size=(6, 3))
    labels = ["a", "a", "b", "b", "b", "c"]
    pairs = identity_pairs(vec, labels)
    assert len(pairs.genuine) == 1 + 3
    assert len(pairs.impostor) == 15 - 4


def test_utility_matches_oracles(rng):
    for _ in range(30):
        n = int(rng.integers(1, 20))
        age_p, age_g = rng.uniform(0, 80, n), rng.uniform(0, 80, n)
        assert abs(mae(age_p, age_g) - mae_oracle(age_p, age_g)) < 1e-9
        lab = ["a", "b", "c"]
        p = [lab[i] for i in rng.integers(0, 3, n)]
        g = [lab[i] for i in rng.integers(0, 3, n)]
        assert abs(accuracy(p, g) - acc_oracle(p, g)) < 1e-9
        lg = [rng.uniform(0, 100, (5, 2)) for _ in range(n)]
        lp = [x + rng.normal(0, 2, x.shape) for x in lg]
        assert abs(nme(lp, lg) - nme_oracle(lp, lg, (0, 1))) < 1e-9


def test_utility_errors():
    with pytest.raises(ZeroInterOcular):
        nme([np.zeros((5, 2))], [np.zeros((5, 2))])
    table = PredictionTable(["x"], {"age_pred": [1.0]})
    with pytest.raises(MissingColumn):
        utility_report(table, ["age_MAE"])


def test_prediction_round_trip(tmp_path, rng):
    lm = [rng.uniform(0, 100, (5, 2)) for _ in range(3)]
    table = PredictionTable(["a", "b", "c"], {
        "age_pred": [20.0, 30.5, 41.0], "age_gt": [22.0, 30.0, 40.0],
        "gender_pred": ["m", "f", "f"], "gender_gt": ["m", "m", "f"],
        "landmarks_pred": lm, "landmarks_gt": [x + 1 for x in lm],
    })
    save_predictions(table, tmp_path / "p.csv")
    back = load_predictions(tmp_path / "p.csv")
    assert utility_report(back) == utility_report(table)
    assert utility_report(table)["gender_Acc"] == pytest.approx(200 / 3)


@pytest.mark.parametrize("ext", [".bin", ".csv"])
def test_vector_round_trip(tmp_path, rng, ext):
    vec = rng.normal(size=(5, 7))
    save_vectors(tmp_path / f"v{ext}", list("abcde"), vec)
    ids, back = load_vectors(tmp_path / f"v{ext}")
    assert ids == list("abcde")
    tol = 1e-6 if ext == ".bin" else 0.0
    assert np.abs(back - vec).max() <= tol


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30), st.lists(st.floats(-1, 1), min_size=1, max_size=30))
def test_accuracy_threshold_property(g, im):
    t = calibrate_threshold(g, im, "accuracy")
    assert abs(accuracy_at(g, im, t.value) - best_accuracy(g, im)) < 1e-12
