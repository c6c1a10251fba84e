import numpy as np
import pytest

from dcot.errors import InvalidBatchSize, InvalidSpec
from dcot.numerics import make_rng
from dcot.synthdata import (SyntheticDatasetSpec, batches, generate_dataset, load_dataset,
                            random_derangement, save_dataset, split_indices)


def small(**kw):
    base = dict(n_items=200, latent_dim=4, view_dims=(6, 5, 5), seed=3)
    base.update(kw)
    return SyntheticDatasetSpec(**base)


def test_no_noise_is_identity():
    ds = generate_dataset(small())
    assert not ds.noisy_mask.any()
    np.testing.assert_array_equal(ds.permutation, np.arange(200))
    np.testing.assert_array_equal(ds.clean_target(), ds.t_feat)


def test_two_items_fully_switched():
    clean = generate_dataset(small(n_items=2))
    ds = generate_dataset(small(n_items=2, noise_ratio=1.0))
    assert ds.noisy_mask.all()
    np.testing.assert_array_equal(ds.permutation, [1, 0])
    np.testing.assert_array_equal(ds.clean_target(), ds.t_feat[[1, 0]])


def test_default_scale_bit_identical():
    spec = SyntheticDatasetSpec(noise_ratio=0.4)
    a, b = generate_dataset(spec), generate_dataset(spec)
    assert a.equals(b)
    assert a.t_feat.tobytes() == b.t_feat.tobytes()


@pytest.mark.parametrize("ratio", [0.1, 0.4, 0.75, 1.0])
def test_mask_count_and_derangement(ratio):
    ds = generate_dataset(small(noise_ratio=ratio))
    k = int(round(ratio * 200))
    assert ds.noisy_mask.sum() == k
    moved = ds.permutation != np.arange(200)
    np.testing.assert_array_equal(moved, ds.noisy_mask)
    assert sorted(ds.permutation[ds.noisy_mask]) == sorted(np.flatnonzero(ds.noisy_mask))


def test_only_target_rows_change():
    clean = generate_dataset(small())
    noisy = generate_dataset(small(noise_ratio=0.5))
    np.testing.assert_array_equal(clean.v_feat, noisy.v_feat)
    np.testing.assert_array_equal(clean.s_feat, noisy.s_feat)
    np.testing.assert_array_equal(noisy.clean_target(), clean.t_feat)


def test_clean_pairs_closer_in_latent_space():
    ds = generate_dataset(SyntheticDatasetSpec(noise_ratio=0.4))
    Z = ds.latent / np.linalg.norm(ds.latent, axis=1, keepdims=True)
    diag = np.einsum("ij,ij->i", Z, Z[ds.permutation])
    assert diag[~ds.noisy_mask].mean() > diag[ds.noisy_mask].mean()


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        SyntheticDatasetSpec(n_items=1)
    with pytest.raises(InvalidSpec):
        SyntheticDatasetSpec(noise_ratio=1.5)
    with pytest.raises(InvalidSpec):
        SyntheticDatasetSpec(n_items=10, noise_ratio=0.1)  # one switched item
    assert SyntheticDatasetSpec(view_noise_std=0.3).view_noise_std == (0.3, 0.3, 0.3)


def test_random_derangement():
    rng = make_rng(0)
    for n in (2, 3, 10, 50):
        p = random_derangement(n, rng)
        assert sorted(p) == list(range(n))
        assert not np.any(p == np.arange(n))
    with pytest.raises(InvalidSpec):
        random_derangement(1, rng)


def test_batches_examples():
    out = batches(4, 2, shuffle_seed=0, epoch=0)
    assert len(out) == 2 and sorted(np.concatenate(out)) == [0, 1, 2, 3]
    a = batches(100, 16, 5, 3)
    b = batches(100, 16, 5, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    e0, e1 = np.concatenate(batches(100, 10, 5, 0)), np.concatenate(batches(100, 10, 5, 1))
    assert sorted(e0) == sorted(e1) == list(range(100))
    assert not np.array_equal(e0, e1)


def test_batches_drop_singleton_and_validate():
    out = batches(9, 4, 0, 0)
    assert [len(b) for b in out] == [4, 4]
    assert [len(b) for b in batches(10, 4, 0, 0)] == [4, 4, 2]
    with pytest.raises(InvalidBatchSize):
        batches(5, 1, 0, 0)
    with pytest.raises(InvalidBatchSize):
        batches(5, 6, 0, 0)


def test_split_disjoint_and_seeded():
    tr, te = split_indices(100, 0.2, seed=4)
    assert len(te) == 20 and len(tr) == 80
    assert not set(tr) & set(te)
    tr2, te2 = split_indices(100, 0.2, seed=4)
    np.testing.assert_array_equal(te, te2)


def test_serialization_roundtrip(tmp_path):
    ds = generate_dataset(small(noise_ratio=0.3))
    path = tmp_path / "d.bin"
    save_dataset(ds, path)
    assert path.read_bytes()[:8] == b"DCOTSYN\0"
    back = load_dataset(path)
    assert back.equals(ds)
    path.write_bytes(b"garbage!" + path.read_bytes()[8:])
    with pytest.raises(InvalidSpec):
        load_dataset(path)
