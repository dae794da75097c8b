import gzip
import struct

import numpy as np
import pytest

from ticopd.objectives import (
    IDX_IMAGE_MAGIC,
    IDX_LABEL_MAGIC,
    _parse_image_header,
    _parse_label_header,
    gradient_check,
    gradient_dispersion,
    least_squares,
    load_idx,
    logistic_regression,
    partition_by_label,
    quadratic_consensus,
    smoothness_check,
    synthetic_blobs,
    two_layer_mlp,
)

# ---------------------------------------------------------------------------
# quadratic and least squares


def test_quadratic_closed_form():
    obj = quadratic_consensus(np.array([[0.0], [2.0]]))
    assert obj.n == 2 and obj.d == 1 and obj.L == 1.0
    np.testing.assert_array_equal(obj.x_star, np.array([1.0]))
    # f(1) = (0.5 * 1 + 0.5 * 1) / 2
    assert obj.f_star == pytest.approx(0.5)
    np.testing.assert_array_equal(obj.grad(1, np.array([0.0])), np.array([-2.0]))
    assert obj.loss(0, np.array([3.0])) == pytest.approx(4.5)


def test_quadratic_global_grad_is_mean():
    obj = quadratic_consensus(np.array([[0.0, 0.0], [2.0, 4.0]]))
    np.testing.assert_allclose(obj.global_grad(np.zeros(2)), np.array([-1.0, -2.0]))
    assert obj.global_loss(obj.x_star) == pytest.approx(obj.f_star)


def test_least_squares_single_agent():
    obj = least_squares([np.array([[2.0]])], [np.array([4.0])])
    assert obj.L == pytest.approx(4.0)
    np.testing.assert_allclose(obj.x_star, np.array([2.0]))
    assert obj.f_star == pytest.approx(0.0)
    assert not obj.non_unique


def test_least_squares_flags_rank_deficiency():
    A = [np.array([[1.0, 0.0]]), np.array([[2.0, 0.0]])]
    b = [np.array([1.0]), np.array([2.0])]
    obj = least_squares(A, b)
    assert obj.non_unique


def test_least_squares_grad_matches_residual_form():
    gen = np.random.default_rng(0)
    A = [gen.standard_normal((5, 3)) for _ in range(2)]
    b = [gen.standard_normal(5) for _ in range(2)]
    obj = least_squares(A, b)
    x = gen.standard_normal(3)
    np.testing.assert_allclose(obj.grad(0, x), A[0].T @ (A[0] @ x - b[0]), atol=1e-12)


# ---------------------------------------------------------------------------
# partitioning


def test_label_sorted_one_class_per_agent():
    labels = np.repeat(np.arange(10), 7)
    part = partition_by_label(labels, 10, mode="label_sorted")
    for i in range(10):
        assert set(labels[part.indices[i]]) == {i}
        assert part.indices[i].shape[0] == 7


def test_label_sorted_small_example():
    part = partition_by_label(np.array([0, 0, 1, 1]), 2, mode="label_sorted")
    assert part.indices[0].tolist() == [0, 1]
    assert part.indices[1].tolist() == [2, 3]


def test_label_sorted_needs_enough_classes():
    with pytest.raises(ValueError):
        partition_by_label(np.array([0, 1, 0, 1]), 3, mode="label_sorted")


def test_shuffled_partition_is_seeded_and_disjoint():
    labels = np.arange(20) % 4
    a = partition_by_label(labels, 3, mode="shuffled", seed=9)
    b = partition_by_label(labels, 3, mode="shuffled", seed=9)
    for pa, pb in zip(a.indices, b.indices):
        np.testing.assert_array_equal(pa, pb)
    all_idx = np.concatenate(a.indices)
    assert sorted(all_idx.tolist()) == list(range(20))


def test_unknown_partition_mode():
    with pytest.raises(ValueError):
        partition_by_label(np.zeros(4, dtype=int), 2, mode="striped")


# ---------------------------------------------------------------------------
# logistic regression


def _binary_problem():
    gen = np.random.default_rng(3)
    F = gen.standard_normal((12, 4))
    y = (gen.random(12) > 0.5).astype(np.int64)
    y[:2] = [0, 1]  # both classes present
    part = partition_by_label(y, 2, mode="label_sorted")
    return F, y, part


def test_binary_logistic_gradient_at_zero():
    F, y, part = _binary_problem()
    obj = logistic_regression(F, y, part)
    assert obj.d == 4
    for i in range(2):
        Fi, yi = obj.shards[i]
        expected = Fi.T @ (0.5 - yi) / Fi.shape[0]
        np.testing.assert_allclose(obj.grad(i, np.zeros(4)), expected, atol=1e-12)
        assert obj.loss(i, np.zeros(4)) == pytest.approx(np.log(2.0))


def test_multiclass_logistic_loss_at_zero_is_log_c():
    feats, labels, _, _ = synthetic_blobs(5, 8, 50, 0, seed=1)
    part = partition_by_label(labels, 5, mode="label_sorted")
    obj = logistic_regression(feats, labels, part)
    assert obj.d == 8 * 5
    for i in range(5):
        assert obj.loss(i, np.zeros(obj.d)) == pytest.approx(np.log(5.0))


def test_logistic_gradient_check():
    feats, labels, _, _ = synthetic_blobs(4, 6, 60, 0, seed=2)
    part = partition_by_label(labels, 4, mode="label_sorted")
    obj = logistic_regression(feats, labels, part, l2=0.05)
    assert gradient_check(obj) <= 1e-6


def test_logistic_smoothness_bound_holds():
    feats, labels, _, _ = synthetic_blobs(3, 5, 45, 0, seed=4)
    part = partition_by_label(labels, 3, mode="label_sorted")
    obj = logistic_regression(feats, labels, part, l2=0.01)
    assert smoothness_check(obj) <= 1.0 + 1e-9


def test_logistic_accuracy():
    feats, labels, te_f, te_y = synthetic_blobs(3, 6, 90, 30, seed=5, separation=6.0)
    part = partition_by_label(labels, 3, mode="label_sorted")
    obj = logistic_regression(feats, labels, part)
    assert obj.accuracy(np.zeros(obj.d), te_f, te_y) <= 0.67
    # one gradient step from zero already beats chance on separated blobs
    x = -2.0 * obj.global_grad(np.zeros(obj.d))
    assert obj.accuracy(x, te_f, te_y) > 1.0 / 3.0


def test_l2_term_included():
    F, y, part = _binary_problem()
    plain = logistic_regression(F, y, part, l2=0.0)
    reg = logistic_regression(F, y, part, l2=0.5)
    x = np.ones(4)
    assert reg.loss(0, x) == pytest.approx(plain.loss(0, x) + 0.25 * 4)
    np.testing.assert_allclose(reg.grad(0, x) - plain.grad(0, x), 0.5 * x, atol=1e-12)
    assert reg.L == pytest.approx(plain.L + 0.5)


# ---------------------------------------------------------------------------
# two-layer network


def _mlp_problem(hidden=3):
    feats, labels, _, _ = synthetic_blobs(4, 5, 40, 0, seed=6)
    part = partition_by_label(labels, 4, mode="label_sorted")
    return two_layer_mlp(feats, labels, part, hidden, L=10.0)


def test_mlp_parameter_count():
    obj = _mlp_problem(hidden=3)
    assert obj.d == 5 * 3 + 3 + 3 * 4 + 4


def test_mlp_zero_weights_gives_uniform_predictions():
    obj = _mlp_problem()
    x = np.zeros(obj.d)
    hidden, probs = obj.forward(x, obj.shards[0][0])
    np.testing.assert_allclose(hidden, 0.5, atol=1e-15)
    np.testing.assert_allclose(probs, 0.25, atol=1e-15)
    for i in range(obj.n):
        assert obj.loss(i, x) == pytest.approx(np.log(4.0))


def test_mlp_gradient_check():
    obj = _mlp_problem()
    assert gradient_check(obj, trials=10, step=1e-6) <= 1e-4


def test_mlp_default_smoothness_warns():
    feats, labels, _, _ = synthetic_blobs(2, 3, 10, 0, seed=7)
    part = partition_by_label(labels, 2, mode="label_sorted")
    with pytest.warns(RuntimeWarning):
        obj = two_layer_mlp(feats, labels, part, 2)
    assert obj.L == 10.0


def test_quadratic_has_no_accuracy():
    obj = quadratic_consensus(np.zeros((2, 2)))
    with pytest.raises(TypeError):
        obj.accuracy(np.zeros(2), np.zeros((1, 2)), np.zeros(1))


# ---------------------------------------------------------------------------
# IDX files


def _write_idx_pair(tmp_path, count=2, rows=2, cols=3, gz=False):
    pixels = bytes(range(count * rows * cols))
    img = struct.pack(">IIII", IDX_IMAGE_MAGIC, count, rows, cols) + pixels
    lab = struct.pack(">II", IDX_LABEL_MAGIC, count) + bytes(range(count))
    suffix = ".gz" if gz else ""
    ip = tmp_path / f"images.idx{suffix}"
    lp = tmp_path / f"labels.idx{suffix}"
    write = gzip.compress if gz else bytes
    ip.write_bytes(write(img))
    lp.write_bytes(write(lab))
    return ip, lp


def test_load_idx_roundtrip(tmp_path):
    ip, lp = _write_idx_pair(tmp_path)
    feats, labels = load_idx(ip, lp)
    assert feats.shape == (2, 6)
    assert labels.tolist() == [0, 1]
    np.testing.assert_allclose(feats[0], np.arange(6) / 255.0)
    np.testing.assert_allclose(feats[1], np.arange(6, 12) / 255.0)


def test_load_idx_gzip(tmp_path):
    ip, lp = _write_idx_pair(tmp_path, gz=True)
    feats, labels = load_idx(ip, lp)
    assert feats.shape == (2, 6) and labels.tolist() == [0, 1]


def test_image_header_parse_full_scale():
    header = struct.pack(">IIII", IDX_IMAGE_MAGIC, 60000, 28, 28)
    assert _parse_image_header(header) == (60000, 28, 28)
    assert _parse_label_header(struct.pack(">II", IDX_LABEL_MAGIC, 60000)) == 60000


def test_load_idx_bad_magic(tmp_path):
    ip, lp = _write_idx_pair(tmp_path)
    data = ip.read_bytes()
    ip.write_bytes(struct.pack(">I", 0x00000801) + data[4:])
    with pytest.raises(ValueError, match="magic"):
        load_idx(ip, lp)


def test_load_idx_count_mismatch(tmp_path):
    ip, lp = _write_idx_pair(tmp_path)
    lab = struct.pack(">II", IDX_LABEL_MAGIC, 3) + bytes([0, 1, 2])
    lp.write_bytes(lab)
    with pytest.raises(ValueError, match="mismatch"):
        load_idx(ip, lp)


def test_load_idx_truncated_payload(tmp_path):
    ip, lp = _write_idx_pair(tmp_path)
    ip.write_bytes(ip.read_bytes()[:-1])
    with pytest.raises(ValueError, match="bytes"):
        load_idx(ip, lp)


# ---------------------------------------------------------------------------
# synthetic data and heterogeneity


def test_synthetic_blobs_shapes_and_labels():
    Xtr, ytr, Xte, yte = synthetic_blobs(3, 4, 10, 5, seed=0)
    assert Xtr.shape == (10, 4) and Xte.shape == (5, 4)
    assert ytr.tolist() == [0, 1, 2, 0, 1, 2, 0, 1, 2, 0]
    assert yte.tolist() == [0, 1, 2, 0, 1]


def test_synthetic_blobs_seeded():
    a = synthetic_blobs(3, 4, 10, 0, seed=1)[0]
    b = synthetic_blobs(3, 4, 10, 0, seed=1)[0]
    np.testing.assert_array_equal(a, b)
    c = synthetic_blobs(3, 4, 10, 0, seed=2)[0]
    assert not np.array_equal(a, c)


def test_label_sorted_shards_are_more_heterogeneous():
    feats, labels, _, _ = synthetic_blobs(4, 8, 200, 0, seed=8)
    het = logistic_regression(feats, labels, partition_by_label(labels, 4, "label_sorted"))
    hom = logistic_regression(feats, labels, partition_by_label(labels, 4, "shuffled", seed=0))
    x = np.zeros(het.d)
    assert gradient_dispersion(het, x) > 5.0 * gradient_dispersion(hom, x)
