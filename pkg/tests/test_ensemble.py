import json

import numpy as np
import pytest

from deidbench.ensemble import (
    EnsembleSpec,
    check_weights,
    configure_attribute_guided,
    rank_methods,
    run_parallel,
    run_sequential,
    spec_from_dict,
)
from deidbench.errors import ConfigError, InvalidKernel, NoViableMethod, StageError, UnknownAttribute, UnknownKey, WeightError
from deidbench.methods import get_deidentifier
from deidbench.profiles import default_profiles, load_profiles, save_profiles


def method(name, **params):
    return get_deidentifier({"name": name, "params": params})


def random_member(rng):
    kind = rng.integers(4)
    if kind == 0:
        return method("blur", kernel_size=int(rng.choice([3, 5, 7])))
    if kind == 1:
        return method("pixelate", block_size=int(rng.integers(2, 9)))
    if kind == 2:
        return method("mask", mask_type="solid", mask_color=[float(v) for v in rng.random(3)])
    return method("identity")


def simplex(rng, n):
    w = rng.random(n)
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return [float(x) for x in w]


def test_sequential_examples(rng):
    x = rng.random((32, 32, 3))
    blur = method("blur", kernel_size=5)
    assert np.array_equal(run_sequential(x, [blur]), blur(x))
    assert np.array_equal(run_sequential(x, [method("mask", mask_type="black"), blur]), np.zeros_like(x))
    pix = method("pixelate", block_size=16)
    assert np.array_equal(run_sequential(x, [pix, pix]), pix(x))


def test_sequential_identity_is_neutral(rng):
    for _ in range(20):
        x = rng.random((24, 24, 3))
        members = [random_member(rng) for _ in range(3)]
        members = [m for m in members if m.name != "identity"] or [method("blur")]
        pos = int(rng.integers(len(members) + 1))
        with_id = members[:pos] + [method("identity")] + members[pos:]
        assert run_sequential(x, with_id).tobytes() == run_sequential(x, members).tobytes()


def test_sequential_stage_error(rng):
    class Bad:
        def __call__(self, face):
            raise InvalidKernel("boom")

    with pytest.raises(StageError) as info:
        run_sequential(rng.random((8, 8, 3)), [method("identity"), Bad()])
    assert info.value.stage == 1


def test_parallel_examples(rng):
    x = rng.random((16, 16, 3))
    black, white = method("mask", mask_type="black"), method("mask", mask_type="white")
    assert np.array_equal(run_parallel(x, [black, white], [0.5, 0.5]), np.full_like(x, 0.5))
    blur = method("blur", kernel_size=5)
    assert np.array_equal(run_parallel(x, [blur, white], [1.0, 0.0]), blur(x))


def test_single_member_reductions(rng):
    for _ in range(20):
        x = rng.random((20, 20, 3))
        m = random_member(rng)
        assert run_sequential(x, [m]).tobytes() == m(x).tobytes()
        assert run_parallel(x, [m], [1.0]).tobytes() == m(x).tobytes()
        other = random_member(rng)
        assert run_parallel(x, [m, other], [1.0, 0.0]).tobytes() == m(x).tobytes()


def test_parallel_matches_scalar_oracle(rng):
    for _ in range(5):
        x = rng.random((6, 6, 3))
        members = [random_member(rng) for _ in range(3)]
        w = simplex(rng, 3)
        outs = [m(x) for m in members]
        got = run_parallel(x, members, w)
        for idx in np.ndindex(x.shape):
            ref = min(max(sum(wi * o[idx] for wi, o in zip(w, outs)), 0.0), 1.0)
            assert abs(got[idx] - ref) < 1e-9


def test_parallel_permutation_invariant(rng):
    for _ in range(20):
        x = rng.random((16, 16, 3))
        n = int(rng.integers(2, 5))
        members = [random_member(rng) for _ in range(n)]
        w = simplex(rng, n)
        perm = rng.permutation(n)
        a = run_parallel(x, members, w)
        b = run_parallel(x, [members[i] for i in perm], [w[i] for i in perm])
        assert a.tobytes() == b.tobytes()


def test_weight_validation():
    assert check_weights([0.25, 0.75], 2) == [0.25, 0.75]
    for bad in ([0.5], [0.6, 0.6], [-0.5, 1.5], [float("nan"), 1.0]):
        with pytest.raises(WeightError):
            check_weights(bad, 2)


def test_spec_validation():
    with pytest.raises(ConfigError):
        EnsembleSpec("sequential", [{"name": "blur"}]).validate()
    with pytest.raises(ConfigError):
        EnsembleSpec("attribute_guided", preserve=["age"], suppress=["age", "identity"]).validate()
    with pytest.raises(ConfigError):
        EnsembleSpec("attribute_guided", preserve=["age"], suppress=["gender"]).validate()
    with pytest.raises(UnknownKey):
        spec_from_dict({"kind": "parallel", "wieghts": [1.0]})


def test_single_profile_gets_full_weight():
    store = {"only": {"config": {"name": "blur", "params": {}}, "scores": {"age": 0.5, "privacy": 0.5}}}
    spec = configure_attribute_guided(["age"], ["identity"], store)
    assert spec.kind == "parallel" and spec.weights == [1.0]
    assert spec.members == [{"name": "blur", "params": {}}]


def test_proportional_weights():
    store = {
        "a": {"scores": {"age": 0.8, "privacy": 1.0}},
        "b": {"scores": {"age": 0.2, "privacy": 1.0}},
        "c": {"scores": {"age": 0.9, "privacy": 0.0}},
    }
    spec = configure_attribute_guided(["age"], ["identity"], store)
    assert spec.weights == pytest.approx([0.8, 0.2])
    assert [m["name"] for m in spec.members] == ["a", "b"]


def test_ties_broken_by_name():
    store = {n: {"scores": {"age": 0.5, "privacy": 0.5}} for n in ("zeta", "alpha", "mid")}
    assert [n for n, _ in rank_methods(["age"], ["identity"], store)] == ["alpha", "mid", "zeta"]


def test_no_viable_method():
    store = {"a": {"scores": {"age": 0.0, "privacy": 1.0}}}
    with pytest.raises(NoViableMethod):
        configure_attribute_guided(["age"], ["identity"], store)
    with pytest.raises(UnknownAttribute):
        configure_attribute_guided(["height"], ["identity"])


def test_default_store_scoring_by_hand():
    spec = configure_attribute_guided(["gender", "expr"], ["identity"])
    # gender Acc / original, expression Acc / original, mean LFW PSR / 100
    k5 = (60.22 / 94.39) * (15.87 / 70.54) * ((94.73 + 93.73 + 92.8) / 300)
    k10 = (59.16 / 94.39) * (15.55 / 70.54) * ((95.57 + 94.63 + 93.3) / 300)
    assert spec.members == [{"name": "ksame", "params": {"k": 5, "variant": "select"}},
                            {"name": "ksame", "params": {"k": 10, "variant": "select"}}]
    assert spec.weights == pytest.approx([k5 / (k5 + k10), k10 / (k5 + k10)], abs=1e-12)
    assert spec.preserve == ["expression", "gender"] and spec.suppress == ["identity"]
    store = default_profiles()
    for m in ("ksame_select_k5", "ksame_select_k10"):
        assert store[m]["scores"]["gender"] > 0 and store[m]["scores"]["expression"] > 0


def test_configure_deterministic_and_store_round_trip(tmp_path):
    store = default_profiles()
    save_profiles(tmp_path / "p.json", store)
    back = load_profiles(tmp_path / "p.json")
    assert json.dumps(back, sort_keys=True) == json.dumps(store, sort_keys=True)
    a = configure_attribute_guided(["age", "rppg"], ["identity"], back).to_dict()
    b = configure_attribute_guided(["age", "rppg"], ["identity"]).to_dict()
    assert a == b


def test_profile_scores_in_unit_interval():
    for entry in default_profiles().values():
        assert all(0.0 <= v <= 1.0 for v in entry["scores"].values())
