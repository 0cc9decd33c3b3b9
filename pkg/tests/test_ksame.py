import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deidbench.errors import DimensionMismatch, KTooLarge
from deidbench.imgcore import save_image
from deidbench.ksame import (
    Gallery,
    KSameParams,
    k_same,
    k_same_average,
    k_same_furthest,
    k_same_select,
    knn_pixel,
    load_gallery,
)


def sort_oracle(face, faces, k):
    dists = [float(np.sqrt(((face - f) ** 2).sum())) for f in faces]
    order = sorted(range(len(faces)), key=lambda i: (dists[i], i))
    return order[:k], dists


def test_knn_matches_sort_oracle(rng):
    for n in (1, 50, 300, 1000):
        faces = rng.random((n, 8, 8, 1))
        g = Gallery(faces)
        for _ in range(3):
            probe = rng.random((8, 8, 1))
            k = int(rng.integers(1, n + 1))
            assert list(knn_pixel(probe, g, k)) == sort_oracle(probe, faces, k)[0]


def test_ties_go_to_lower_index():
    faces = np.stack([np.full((4, 4, 1), v) for v in (0.5, 0.25, 0.75, 0.25, 0.5)])
    assert list(knn_pixel(np.full((4, 4, 1), 0.5), Gallery(faces), 5)) == [0, 4, 1, 2, 3]


def test_verbatim_probe(rng):
    faces = rng.random((10, 6, 6, 3))
    g = Gallery(faces)
    assert list(knn_pixel(faces[4], g, 1)) == [4]
    assert np.array_equal(k_same_average(faces[4], g, KSameParams(k=1)), faces[4])
    # exclude_self skips the zero-distance copy
    assert knn_pixel(faces[4], g, 1, exclude_self=True)[0] != 4


def test_distance_ladder_furthest():
    probe = np.zeros((1, 1, 1))
    faces = np.array([0.3, 0.0, 0.2, 0.1]).reshape(4, 1, 1, 1)  # distances 3,0,2,1 in tenths
    g = Gallery(faces)
    out = k_same_furthest(probe, g, KSameParams(k=3, variant="furthest"))
    assert out[0, 0, 0] == 0.2
    sel = k_same_select(probe, g, KSameParams(k=3, variant="select", selection_mode="furthest"))
    assert np.array_equal(out, sel)


def test_average_cases():
    a = np.full((5, 5, 3), 0.2)
    b = np.full((5, 5, 3), 0.6)
    g = Gallery(np.stack([a, b]))
    out = k_same_average(a, g, KSameParams(k=2))
    assert np.allclose(out, 0.4, atol=1e-15)
    same = Gallery(np.stack([b] * 4))
    assert np.array_equal(k_same_average(a, same, KSameParams(k=4)), b)


def test_select_modes(rng):
    faces = rng.random((20, 6, 6, 1))
    g = Gallery(faces)
    probe = rng.random((6, 6, 1))
    order, _ = sort_oracle(probe, faces, 5)
    close = k_same_select(probe, g, KSameParams(k=5, variant="select", selection_mode="closest"))
    assert np.array_equal(close, faces[order[0]])
    p = KSameParams(k=5, variant="select", selection_mode="random", rng_seed=3)
    r1, r2 = k_same_select(probe, g, p), k_same_select(probe, g, p)
    assert np.array_equal(r1, r2)
    assert any(np.array_equal(r1, faces[i]) for i in order)


def test_errors(rng):
    g = Gallery(rng.random((3, 4, 4, 1)))
    with pytest.raises(KTooLarge):
        knn_pixel(rng.random((4, 4, 1)), g, 4)
    with pytest.raises(KTooLarge):
        knn_pixel(rng.random((4, 4, 1)), g, 0)
    with pytest.raises(DimensionMismatch):
        knn_pixel(rng.random((5, 4, 1)), g, 1)
    with pytest.raises(DimensionMismatch):
        Gallery(np.zeros((0, 4, 4, 1)))


def test_furthest_equivalence_many_probes(rng):
    faces = rng.random((60, 8, 8, 3))
    g = Gallery(faces)
    for _ in range(100):
        probe = rng.random((8, 8, 3))
        k = int(rng.integers(1, 61))
        a = k_same(probe, g, KSameParams(k=k, variant="furthest"))
        b = k_same(probe, g, KSameParams(k=k, variant="select", selection_mode="furthest"))
        assert a.tobytes() == b.tobytes()


def test_identical_neighbour_sets_give_identical_outputs(rng):
    # 4 identities, 6 copies each; k = 6 always maps a probe onto one identity
    ids = rng.random((4, 6, 6, 3))
    faces = np.repeat(ids, 6, axis=0)
    g = Gallery(faces)
    p = KSameParams(k=6)
    outs = {k_same_average(ids[i] + rng.normal(0, 1e-3, ids[i].shape), g, p).tobytes() for i in range(4) for _ in range(5)}
    assert len(outs) <= int(np.ceil(len(faces) / 6))
    perm = Gallery(faces[rng.permutation(len(faces))])
    for i in range(4):
        assert np.array_equal(k_same_average(ids[i], g, p), k_same_average(ids[i], perm, p))


def test_load_gallery(tmp_path, rng):
    lines = []
    for i in range(3):
        save_image(rng.random((8, 8, 3)), tmp_path / f"g{i}.png")
        lines.append(f"g{i}.png\tperson{i}")
    (tmp_path / "gallery.txt").write_text("# faces\n" + "\n".join(lines) + "\n")
    g = load_gallery(tmp_path / "gallery.txt")
    assert len(g) == 3 and g.labels == ("person0", "person1", "person2") and g.shape == (8, 8, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_average_within_neighbour_range(seed, k):
    rng = np.random.default_rng(seed)
    faces = rng.random((12, 5, 5, 1))
    g = Gallery(faces)
    probe = rng.random((5, 5, 1))
    out = k_same_average(probe, g, KSameParams(k=k))
    chosen = faces[knn_pixel(probe, g, k)]
    assert np.all(out >= chosen.min(axis=0)) and np.all(out <= chosen.max(axis=0))
    assert np.array_equal(out, k_same_average(probe, g, KSameParams(k=k)))
