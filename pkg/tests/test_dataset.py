"""Tests for the synthetic generator, directory loading, balancing and splits."""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError
from sklearn.linear_model import LogisticRegression
from sklearn.preprocessing import StandardScaler

from dataset import (
    balanced_split,
    class_counts,
    fingerprint,
    load_image_dir,
    read_image,
    split,
    undersample_balance,
    write_graymap,
)
from generators import SynthConfig, SyntheticGenerator, generate_synthetic
from surrogates import labeled
from utils.errors import DataError, DimensionError


def _images(counts):
    return [
        labeled(np.full((4, 4), 0.5), label=label, image_id=f"c{label}_{i}")
        for label, n in counts.items()
        for i in range(n)
    ]


# Synthetic generator

def test_generation_is_deterministic():
    config = SynthConfig(image_size=16, samples_per_class=10, seed=4)
    first, second = generate_synthetic(config), generate_synthetic(config)
    assert [item.id for item in first] == [item.id for item in second]
    for a, b in zip(first, second):
        assert a.image.tobytes() == b.image.tobytes()
        assert a.mask.tobytes() == b.mask.tobytes()
    assert fingerprint(first) == fingerprint(second)
    other = generate_synthetic(config.model_copy(update={"seed": 5}))
    assert any(not np.array_equal(a.image, b.image) for a, b in zip(first, other))


def test_generated_images_are_valid():
    images = generate_synthetic(SynthConfig(image_size=20, samples_per_class=15, num_classes=3, seed=1))
    assert class_counts(images) == {0: 15, 1: 15, 2: 15}
    for item in images:
        assert item.image.shape == (20, 20)
        assert item.image.dtype == np.float32
        assert 0 <= item.image.min() and item.image.max() <= 1
        assert item.mask.any() and not item.mask.all()
    assert {item.meta["class_name"] for item in images} == {"diffuse", "punctate", "ring"}


def test_dot_centers_lie_inside_the_mask():
    images = generate_synthetic(SynthConfig(image_size=16, samples_per_class=100, seed=2))
    centers = 0
    for item in images:
        for row, col in item.meta.get("dot_centers", []):
            assert item.mask[int(round(row)), int(round(col))], item.id
            centers += 1
    assert centers >= 300


def test_classes_are_linearly_separable_by_pixel_statistics():
    images = generate_synthetic(SynthConfig(samples_per_class=200, seed=0))
    features = np.array([[item.image.mean(), item.image.max()] for item in images])
    labels = np.array([item.label for item in images])
    order = np.random.default_rng(0).permutation(len(images))
    train, test = order[:200], order[200:]
    scaler = StandardScaler().fit(features[train])
    probe = LogisticRegression().fit(scaler.transform(features[train]), labels[train])
    assert probe.score(scaler.transform(features[test]), labels[test]) >= 0.9


def test_synth_config_validation():
    with pytest.raises(ValidationError):
        SynthConfig(num_classes=4)
    with pytest.raises(ValidationError):
        SynthConfig(image_size=8)
    with pytest.raises(ValidationError):
        SynthConfig(dot_count=(5, 2))


def test_saved_dataset_loads_back(tmp_path):
    generator = SyntheticGenerator(SynthConfig(image_size=16, samples_per_class=3, seed=8))
    images = generator.generate()
    generator.save_to_dir(images, tmp_path)

    loaded = load_image_dir(tmp_path)
    assert [item.id for item in loaded] == [item.id for item in images]
    assert fingerprint(loaded) == fingerprint(images)
    for original, restored in zip(images, loaded):
        assert restored.label == original.label
        np.testing.assert_allclose(restored.image, original.image, atol=1 / 65535)
        np.testing.assert_array_equal(restored.mask, original.mask)


# Directory loading

def _write_dir(tmp_path, masks=True):
    rows = []
    rng = np.random.default_rng(0)
    for i in range(4):
        write_graymap(rng.random((8, 8)), tmp_path / "images" / f"cell{i}.pgm", bits=16)
        mask_rel = ""
        if masks:
            mask_rel = f"masks/cell{i}.pgm"
            write_graymap((rng.random((8, 8)) < 0.5).astype(float), tmp_path / mask_rel, bits=8)
        rows.append({"file": f"images/cell{i}.pgm", "label": i % 2, "mask": mask_rel})
    pd.DataFrame(rows).to_csv(tmp_path / "manifest.csv", index=False)
    return rows


def test_load_image_dir(tmp_path):
    _write_dir(tmp_path)
    images = load_image_dir(tmp_path)
    assert [item.id for item in images] == ["cell0", "cell1", "cell2", "cell3"]
    assert [item.label for item in images] == [0, 1, 0, 1]
    assert all(item.mask is not None and item.mask.shape == (8, 8) for item in images)


def test_masks_are_optional(tmp_path):
    _write_dir(tmp_path, masks=False)
    assert all(item.mask is None for item in load_image_dir(tmp_path))


def test_missing_mask_names_the_entry(tmp_path):
    _write_dir(tmp_path)
    (tmp_path / "masks" / "cell2.pgm").unlink()
    with pytest.raises(DataError, match="cell2"):
        load_image_dir(tmp_path)


def test_labels_outside_declared_classes(tmp_path):
    _write_dir(tmp_path)
    with pytest.raises(DataError, match="label 1"):
        load_image_dir(tmp_path, num_classes=1)


def test_mixed_image_shapes_rejected(tmp_path):
    _write_dir(tmp_path)
    write_graymap(np.zeros((6, 8)), tmp_path / "images" / "cell3.pgm")
    with pytest.raises(DimensionError):
        load_image_dir(tmp_path)


def test_sixteen_bit_maximum_reads_as_one(tmp_path):
    values = np.zeros((4, 4))
    values[1, 2] = 1.0
    values[0, 0] = 0.5
    write_graymap(values, tmp_path / "probe.pgm", bits=16)
    image = read_image(tmp_path / "probe.pgm")
    assert image[1, 2] == 1.0
    assert image[0, 0] == pytest.approx(32768 / 65535)


def test_missing_manifest(tmp_path):
    with pytest.raises(DataError):
        load_image_dir(tmp_path)


# Balancing and splitting

def test_undersampling_to_the_minority_class():
    balanced = undersample_balance(_images({0: 10, 1: 7}), seed=0)
    assert class_counts(balanced) == {0: 7, 1: 7}
    first = [item.id for item in undersample_balance(_images({0: 10, 1: 7}), seed=3)]
    assert first == [item.id for item in undersample_balance(_images({0: 10, 1: 7}), seed=3)]


def test_balanced_input_keeps_every_image():
    images = _images({0: 6, 1: 6})
    assert sorted(item.id for item in undersample_balance(images, seed=1)) == sorted(item.id for item in images)


def test_balance_needs_declared_classes():
    with pytest.raises(DataError):
        undersample_balance(_images({0: 4}), seed=0, num_classes=2)
    with pytest.raises(DataError):
        undersample_balance([], seed=0)


def test_split_sizes_and_stratification():
    splits = split(_images({0: 50, 1: 50}), seed=0)
    assert (len(splits.holdout), len(splits.validation), len(splits.train)) == (20, 16, 64)
    assert class_counts(splits.holdout) == {0: 10, 1: 10}
    assert class_counts(splits.validation) == {0: 8, 1: 8}
    ids = [{item.id for item in part} for part in (splits.train, splits.validation, splits.holdout)]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert splits.manifest.counts["train"] == {0: 32, 1: 32}


def test_split_is_seeded():
    images = _images({0: 20, 1: 20})
    assert [i.id for i in split(images, 5).holdout] == [i.id for i in split(images, 5).holdout]
    assert [i.id for i in balanced_split(images, 5).train] == [i.id for i in balanced_split(images, 5).train]


def test_split_rejects_tiny_classes():
    with pytest.raises(DataError):
        split(_images({0: 20, 1: 3}), seed=0)


def test_fingerprint_ignores_order_but_not_labels():
    images = _images({0: 3, 1: 3})
    assert fingerprint(images) == fingerprint(list(reversed(images)))
    relabeled = [labeled(item.image, label=1 - item.label, image_id=item.id) for item in images]
    assert fingerprint(images) != fingerprint(relabeled)
