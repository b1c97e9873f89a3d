import numpy as np
import pytest

from conftest import smooth_plane
from dataset.patches import (PatchDataset, build_dataset, extract_patches, load_dataset, load_planes, read_manifest,
                             save_dataset)
from sensing.matrix import generate_matrix
from utils.errors import ConfigurationError, FormatError


def test_patch_grid_with_stride_14():
    planes = [smooth_plane(61, 61), smooth_plane(33, 47, seed=1)]
    patches = extract_patches(planes)
    # 3 x 3 positions in the first plane, 1 x 2 in the second
    assert patches.shape == (11, 1089)
    np.testing.assert_array_equal(patches[1], planes[0][0:33, 14:47].reshape(-1))


def test_small_planes_are_skipped():
    patches = extract_patches([np.zeros((20, 50)), smooth_plane(33, 33)])
    assert len(patches) == 1
    assert len(extract_patches([np.zeros((10, 10))])) == 0
    with pytest.raises(ValueError):
        extract_patches([])


def test_build_dataset_split_and_labels(phi_25):
    patches = extract_patches([smooth_plane(33 + 14 * 9, 33 + 14 * 9)])
    train, val = build_dataset(patches, phi_25, validation_fraction=0.1, seed=3)
    assert len(train) + len(val) == 100
    assert len(val) == 10
    assert (train.split_tag, val.split_tag) == ("train", "validation")
    np.testing.assert_allclose(train.inputs, train.labels @ phi_25.entries.T, rtol=1e-12)
    assert train.matrix_seed == phi_25.seed and train.m == 272

    again, _ = build_dataset(patches, phi_25, validation_fraction=0.1, seed=3)
    np.testing.assert_array_equal(again.labels, train.labels)
    other, _ = build_dataset(patches, phi_25, validation_fraction=0.1, seed=4)
    assert not np.array_equal(other.labels, train.labels)


def test_build_dataset_rejects_bad_inputs(phi_25):
    patches = extract_patches([smooth_plane(40, 40)])
    with pytest.raises(ValueError):
        build_dataset(patches, phi_25, validation_fraction=0.9)
    with pytest.raises(ConfigurationError):
        build_dataset(patches, generate_matrix(10, 100))


def test_dataset_cache_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    dataset = PatchDataset(rng.standard_normal((7, 10)), rng.uniform(size=(7, 1089)), matrix_seed=12, m=10)
    first, second = tmp_path / "a.dset", tmp_path / "b.dset"
    save_dataset(dataset, str(first))
    loaded = load_dataset(str(first))
    save_dataset(loaded, str(second))
    assert first.read_bytes() == second.read_bytes()
    assert (len(loaded), loaded.m, loaded.matrix_seed) == (7, 10, 12)
    np.testing.assert_allclose(loaded.labels, dataset.labels, rtol=1e-6)

    first.write_bytes(first.read_bytes()[:-4])
    with pytest.raises(FormatError):
        load_dataset(str(first))


def test_manifest_skips_comments_and_resolves_relative_paths(tmp_path, write_image):
    write_image("a.pgm", smooth_plane(40, 40))
    (tmp_path / "sub").mkdir()
    write_image("sub/b.pgm", smooth_plane(35, 50))
    manifest = tmp_path / "train.txt"
    manifest.write_text("# training images\na.pgm\n\n  sub/b.pgm  \n")
    paths = read_manifest(str(manifest))
    assert [p.replace("\\", "/").split("/")[-1] for p in paths] == ["a.pgm", "b.pgm"]
    planes = load_planes(paths)
    assert planes[1].shape == (35, 50)


def test_dataset_cache_round_trips_over_random_sets(tmp_path):
    rng = np.random.default_rng(5)
    first, second = tmp_path / "a.dset", tmp_path / "b.dset"
    for trial in range(50):
        count, m = int(rng.integers(1, 6)), int(rng.integers(1, 30))
        dataset = PatchDataset(rng.standard_normal((count, m)), rng.uniform(size=(count, 1089)),
                               matrix_seed=int(rng.integers(0, 2 ** 63)), m=m)
        save_dataset(dataset, str(first))
        save_dataset(load_dataset(str(first)), str(second))
        assert first.read_bytes() == second.read_bytes()
