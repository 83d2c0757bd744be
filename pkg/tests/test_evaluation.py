"""Tests for fidelity curves, localization, SSIM, clustering and the report."""

import itertools
import json
import math

import numpy as np
import pandas as pd
import pytest

from attribution import AttributionMap
from evaluation import (
    SimilarityMatrix,
    auc,
    build_report,
    cluster_methods,
    deletion_curve,
    insertion_curve,
    mass_accuracy,
    median_auc,
    rank_accuracy,
    similarity_matrix,
    ssim,
    table_rows,
    write_report,
)
from evaluation.fidelity import FidelityCurve, step_counts
from evaluation.similarity import C1, nearest_neighbors
from surrogates import constant_model, dense_model, labeled, mean_pixel_model
from utils.errors import ConfigError, DataError, DimensionError, UndefinedMetricError


def _curve(fractions, probabilities):
    return FidelityCurve(np.asarray(fractions, dtype=float), np.asarray(probabilities, dtype=float), "deletion")


# Fidelity curves

def test_step_counts():
    np.testing.assert_array_equal(step_counts(9, 0.1), np.arange(10))
    np.testing.assert_array_equal(step_counts(10, 0.25), [0, 3, 6, 9, 10])
    for bad in (0.0, 0.6):
        with pytest.raises(ConfigError):
            step_counts(10, bad)


def test_constant_model_gives_flat_curves(rng):
    item = labeled(rng.random((8, 8)))
    attribution = AttributionMap(rng.random((8, 8)), "saliency")
    network = constant_model(0.7, (8, 8))
    for curve in (deletion_curve(network, item, attribution), insertion_curve(network, item, attribution)):
        np.testing.assert_allclose(curve.probabilities, 0.7, rtol=1e-6)
        assert auc(curve) == pytest.approx(0.7, rel=1e-6)


def test_true_values_give_extremal_curves_over_all_orders():
    image = np.array([[0.15, 0.9, 0.4], [0.7, 0.05, 0.55], [0.3, 1.0, 0.8]], dtype=np.float32)
    item = labeled(image)
    attribution = AttributionMap(image, "saliency")
    network = mean_pixel_model((3, 3))
    deletion = deletion_curve(network, item, attribution, step_fraction=0.1)
    insertion = insertion_curve(network, item, attribution, step_fraction=0.1)
    np.testing.assert_array_equal(deletion.fractions, np.arange(10) / 9)

    orders = np.array(list(itertools.permutations(range(9))))
    assert orders.shape[0] == 362880
    values = image.astype(np.float64).reshape(-1)
    moved = np.concatenate([np.zeros((orders.shape[0], 1)), np.cumsum(values[orders], axis=1)], axis=1)
    lowest_deletion = (values.sum() - moved.max(axis=0)) / 9
    highest_insertion = moved.max(axis=0) / 9

    np.testing.assert_allclose(deletion.probabilities, lowest_deletion, atol=1e-6)
    np.testing.assert_allclose(insertion.probabilities, highest_insertion, atol=1e-6)
    assert np.all(deletion.probabilities[None, :] <= (values.sum() - moved) / 9 + 1e-6)
    assert np.all(insertion.probabilities[None, :] >= moved / 9 - 1e-6)


def test_endpoints_coincide(trained_small):
    checkpoint, splits = trained_small
    item = splits.holdout[0]
    attribution = AttributionMap(np.random.default_rng(0).random((16, 16)), "random")
    deletion = deletion_curve(checkpoint.network, item, attribution)
    insertion = insertion_curve(checkpoint.network, item, attribution)
    assert len(deletion) == len(insertion) == 44
    assert deletion.fractions[0] == 0 and deletion.fractions[-1] == 1
    assert deletion.probabilities[0] == insertion.probabilities[-1]
    assert deletion.probabilities[-1] == insertion.probabilities[0]


def test_curves_depend_only_on_the_ranking(trained_small):
    checkpoint, splits = trained_small
    item = splits.holdout[1]
    values = np.random.default_rng(2).random((16, 16))
    base = deletion_curve(checkpoint.network, item, AttributionMap(values, "rise"))
    rescaled = deletion_curve(checkpoint.network, item, AttributionMap(4 * values, "rise"))
    np.testing.assert_array_equal(base.probabilities, rescaled.probabilities)


def test_curve_rejects_mismatched_map():
    with pytest.raises(DimensionError):
        deletion_curve(constant_model(0.5, (4, 4)), labeled(np.ones((4, 4))), AttributionMap(np.ones((3, 3)), "rise"))


def test_auc_examples():
    fractions = np.linspace(0, 1, 11)
    assert auc(_curve(fractions, np.full(11, 0.7))) == pytest.approx(0.7)
    assert auc(_curve(fractions, 1 - fractions)) == pytest.approx(0.5)
    assert auc(_curve([0, 0.5, 1], [1, 1, 0])) == pytest.approx(0.875)
    with pytest.raises(DataError):
        auc(_curve([0], [1]))


def test_median_auc():
    # Probability 2 * mean(x): a uniform image of value v deletes linearly from 2v to 0, AUC v.
    network = dense_model(np.full((16, 1), 2 / 16), [0.0], (4, 4))
    items = [labeled(np.full((4, 4), v), image_id=f"v{i}") for i, v in enumerate([0.9, 0.2, 0.4])]
    maps = [AttributionMap(np.arange(16.0).reshape(4, 4), "saliency", item.id) for item in items]
    assert median_auc(network, items, maps, "deletion", step_fraction=0.25) == pytest.approx(0.4, rel=1e-5)
    assert median_auc(network, items[:1], maps[:1], "deletion", 0.25) == pytest.approx(0.9, rel=1e-5)
    with pytest.raises(DataError):
        median_auc(network, items, maps[:2], "deletion")


# Localization

def test_mass_accuracy_examples():
    mask = np.array([[1, 0], [0, 1]], dtype=bool)
    assert mass_accuracy(np.array([[1.0, 0.0], [-2.0, 3.0]]), mask) == 1.0
    assert mass_accuracy(np.ones((4, 4)), np.arange(16).reshape(4, 4) < 8) == 0.5
    assert mass_accuracy(np.array([[1.0, 2.0], [-3.0, 4.0]]), mask) == pytest.approx(5 / 7)
    with pytest.raises(UndefinedMetricError):
        mass_accuracy(-np.ones((2, 2)), mask)
    with pytest.raises(DimensionError):
        mass_accuracy(np.ones((3, 3)), mask)


def test_rank_accuracy_examples(rng):
    mask = rng.random((5, 5)) < 0.4
    assert rank_accuracy(mask.astype(float), mask) == 1.0
    assert rank_accuracy(np.array([[0.9, 0.8], [0.1, 0.2]]), np.array([[1, 0], [1, 0]], dtype=bool)) == 0.5
    assert rank_accuracy(rng.random((4, 4)), np.ones((4, 4), dtype=bool)) == 1.0
    with pytest.raises(DataError):
        rank_accuracy(np.ones((2, 2)), np.zeros((2, 2), dtype=bool))


def test_localization_matches_brute_force():
    rng = np.random.default_rng(500)
    checked = 0
    for _ in range(500):
        values = rng.standard_normal((4, 4))
        mask = rng.random((4, 4)) < rng.uniform(0.1, 0.9)
        if not mask.any():
            mask[rng.integers(4), rng.integers(4)] = True
        flat_values, flat_mask = values.reshape(-1).tolist(), mask.reshape(-1).tolist()

        positive = [max(v, 0.0) for v in flat_values]
        if sum(positive) > 0:
            inside = math.fsum(v for v, m in zip(positive, flat_mask) if m)
            assert mass_accuracy(values, mask) == pytest.approx(inside / math.fsum(positive), rel=1e-12)
            checked += 1

        k = sum(flat_mask)
        top = sorted(range(16), key=lambda i: -flat_values[i])[:k]
        assert rank_accuracy(values, mask) == sum(flat_mask[i] for i in top) / k
    assert checked > 400


def test_random_maps_rank_at_mask_fraction():
    mask = np.zeros((32, 32), dtype=bool)
    mask[:, :16] = True
    scores = [rank_accuracy(np.random.default_rng(seed).random((32, 32)), mask) for seed in range(200)]
    assert abs(np.mean(scores) - 0.5) < 0.01


# SSIM

def test_ssim_of_identical_maps(rng):
    a = rng.random((16, 16))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("a, b", [(1.0, 0.0), (0.3, 0.7), (0.5, 0.5)])
def test_ssim_of_constant_maps(a, b):
    expected = (2 * a * b + C1) / (a * a + b * b + C1)
    assert ssim(np.full((12, 12), a), np.full((12, 12), b)) == pytest.approx(expected, abs=1e-6)
    if a == 1.0:
        assert expected == pytest.approx(1e-4, rel=1e-3)


def test_ssim_is_symmetric(rng):
    for _ in range(10):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-6


def test_ssim_of_complementary_checkerboard():
    board = ((np.indices((16, 16)) // 2).sum(axis=0) % 2).astype(float)
    assert ssim(board, 1 - board) < 0.2


def test_ssim_rejects_small_or_mismatched_maps():
    with pytest.raises(DataError):
        ssim(np.ones((6, 6)), np.ones((6, 6)))
    with pytest.raises(DimensionError):
        ssim(np.ones((8, 8)), np.ones((8, 9)))


# Similarity matrix and clustering

def _maps(method, arrays):
    return {f"img{i}": AttributionMap(values, method, f"img{i}") for i, values in enumerate(arrays)}


def test_similarity_matrix_diagonal_and_identical_methods(rng):
    arrays = [rng.random((10, 10)) for _ in range(3)]
    single = similarity_matrix({"saliency": _maps("saliency", arrays)})
    np.testing.assert_array_equal(single.values, [[1.0]])

    other = [rng.random((10, 10)) for _ in range(3)]
    matrix = similarity_matrix(
        {"saliency": _maps("saliency", arrays), "rise": _maps("rise", arrays), "random": _maps("random", other)},
        threads=2,
    )
    assert matrix.methods == ["random", "rise", "saliency"]
    np.testing.assert_array_equal(np.diag(matrix.values), 1.0)
    np.testing.assert_array_equal(matrix.values, matrix.values.T)
    assert matrix.values[1, 2] == pytest.approx(1.0)
    assert nearest_neighbors(matrix)["rise"][0] == "saliency"
    assert list(matrix.to_frame().columns) == matrix.methods


def test_similarity_matrix_names_missing_maps(rng):
    arrays = [rng.random((8, 8)) for _ in range(2)]
    incomplete = _maps("rise", arrays[:1])
    with pytest.raises(DataError, match="rise"):
        similarity_matrix({"saliency": _maps("saliency", arrays), "rise": incomplete})


def test_two_methods_merge_once():
    matrix = SimilarityMatrix(["a", "b"], np.array([[1.0, 0.4], [0.4, 1.0]]))
    trace = cluster_methods(matrix)
    assert len(trace.merges) == 1
    assert trace.merges[0].left == ("a",) and trace.merges[0].right == ("b",)
    assert trace.merges[0].height == pytest.approx(math.sqrt(2) * 0.6)


def test_identical_rows_merge_first():
    values = np.array([[1.0, 1.0, 0.2], [1.0, 1.0, 0.2], [0.2, 0.2, 1.0]])
    trace = cluster_methods(SimilarityMatrix(["c", "a", "b"], values))
    assert trace.methods == ["a", "b", "c"]
    assert trace.merges[0].members == ("a", "c")
    assert trace.merges[0].height == 0.0
    assert trace.merges[1].members == ("a", "b", "c")


def test_clustering_rejects_degenerate_input():
    with pytest.raises(DataError):
        cluster_methods(SimilarityMatrix(["a"], np.ones((1, 1))))
    with pytest.raises(DataError):
        cluster_methods(SimilarityMatrix(["a", "b"], np.array([[1.0, 0.1], [0.9, 1.0]])))


def _brute_force_average_linkage(names, rows):
    distance = np.sqrt(((rows[:, None, :] - rows[None, :, :]) ** 2).sum(axis=-1))
    clusters = [[i] for i in range(len(names))]
    merges = []
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            d = np.mean([distance[i, j] for i in clusters[a] for j in clusters[b]])
            if best is None or d < best[0]:
                best = (d, a, b)
        d, a, b = best
        merged = clusters[a] + clusters[b]
        merges.append((tuple(sorted(names[i] for i in merged)), d))
        clusters = [c for idx, c in enumerate(clusters) if idx not in (a, b)] + [merged]
    return merges


def test_linkage_matches_brute_force():
    rng = np.random.default_rng(6)
    names = [f"m{i}" for i in range(6)]
    for _ in range(100):
        upper = rng.uniform(-1, 1, (6, 6))
        values = np.triu(upper, 1) + np.triu(upper, 1).T + np.eye(6)
        trace = cluster_methods(SimilarityMatrix(names, values))
        expected = _brute_force_average_linkage(names, values)
        assert [m.members for m in trace.merges] == [members for members, _ in expected]
        np.testing.assert_allclose([m.height for m in trace.merges], [h for _, h in expected], rtol=1e-10)


def test_linkage_is_deterministic(rng):
    upper = rng.random((7, 7))
    values = np.triu(upper, 1) + np.triu(upper, 1).T + np.eye(7)
    names = ["pcim", "saliency", "rise", "gradcam", "gradcampp", "intgrads", "random"]
    first = cluster_methods(SimilarityMatrix(names, values)).to_frame()
    second = cluster_methods(SimilarityMatrix(names, values)).to_frame()
    pd.testing.assert_frame_equal(first, second)


# Report

def _masked_items(rng, count=4):
    items = []
    for i in range(count):
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:6, 2:6] = True
        items.append(labeled(rng.random((8, 8)), label=i % 2, mask=mask, image_id=f"im{i}"))
    return items


def test_report_with_localization_and_similarity(rng, tmp_path):
    items = _masked_items(rng)
    maps = {
        "saliency": {item.id: AttributionMap(item.mask.astype(float) + 0.1, "saliency", item.id) for item in items},
        "random": {item.id: AttributionMap(rng.random((8, 8)), "random", item.id) for item in items},
    }
    maps["saliency"]["im0"] = AttributionMap(np.zeros((8, 8)), "saliency", "im0")
    two_class = dense_model(np.full((64, 2), 1 / 64), [0.0, 0.0], (8, 8))
    report, curves = build_report(two_class, items, maps, step_fraction=0.1, localization=True)

    assert report.methods == ["random", "saliency"]
    assert report.summary["saliency"].count == 4
    assert report.summary["saliency"].undefined_mass == 1
    assert report.summary["saliency"].rank_accuracy == 1.0
    assert set(report.per_class["random"]) == {"0", "1"}
    assert report.similarity is not None and len(report.linkage) == 1
    assert len(curves) == 16

    columns, rows = table_rows(report)
    assert columns == ["Method", "Deletion ↓", "Insertion ↑", "Mass acc. ↑", "Rank acc. ↑"]
    assert [row[0] for row in rows] == ["random", "saliency"]

    report_path, curves_path = write_report(report, curves, tmp_path)
    assert json.loads(report_path.read_text())["summary"]["saliency"]["count"] == 4
    assert set(pd.read_csv(curves_path)["direction"]) == {"deletion", "insertion"}


def test_localization_requires_masks(rng):
    items = [labeled(rng.random((8, 8)), image_id="bare")]
    maps = {"random": {"bare": AttributionMap(rng.random((8, 8)), "random", "bare")}}
    with pytest.raises(DataError, match="masks required"):
        build_report(mean_pixel_model((8, 8)), items, maps, localization=True)
    report, _ = build_report(mean_pixel_model((8, 8)), items, maps)
    assert report.similarity is None
    assert table_rows(report)[0] == ["Method", "Deletion ↓", "Insertion ↑"]


def test_report_rejects_unknown_images(rng):
    maps = {"random": {"ghost": AttributionMap(rng.random((8, 8)), "random", "ghost")}}
    with pytest.raises(DataError, match="ghost"):
        build_report(mean_pixel_model((8, 8)), _masked_items(rng, 1), maps)
