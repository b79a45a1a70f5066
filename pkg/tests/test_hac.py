import numpy as np
import pytest

from ccl.hac import ward_hac
from ccl.labeling import relabel_contiguous

from oracles import canonical, naive_ward


def test_identity_at_c_equals_n():
    points = np.random.default_rng(0).normal(size=(9, 3))
    result = ward_hac(points, 9)
    np.testing.assert_array_equal(result.labels, np.arange(9))
    assert result.merge_log == []


def test_two_far_pairs():
    points = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
    result = ward_hac(points, 2)
    np.testing.assert_array_equal(result.labels, [0, 0, 1, 1])
    # close pairs merge first at cost ||a-b||^2 / 2
    assert result.merge_log[0][2] == pytest.approx(0.005)
    assert result.merge_log[1][2] == pytest.approx(0.005)


def test_matches_naive_oracle():
    rng = np.random.default_rng(42)
    for _ in range(40):
        n = int(rng.integers(3, 64))
        d = int(rng.integers(2, 8))
        c = int(rng.integers(1, n + 1))
        points = rng.normal(size=(n, d))
        result = ward_hac(points, c)
        np.testing.assert_array_equal(result.labels, naive_ward(points, c))
        assert len(result.merge_log) == n - c


def test_merge_costs_non_decreasing():
    rng = np.random.default_rng(1)
    points = rng.normal(size=(50, 4))
    result = ward_hac(points, 1)
    costs = [m[2] for m in result.merge_log]
    assert all(a <= b + 1e-12 for a, b in zip(costs, costs[1:]))
    assert len(costs) == 49


def test_merge_log_dendrogram_ids():
    points = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
    result = ward_hac(points, 1)
    a, b, _ = result.merge_log[2]
    # the last merge joins the two pair-clusters created by merges 0 and 1
    assert {a, b} == {4, 5}


def test_permutation_invariance_up_to_relabel():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(30, 5))
    base = ward_hac(points, 4).labels
    perm = rng.permutation(30)
    permuted = ward_hac(points[perm], 4).labels
    # map permuted labels back to original row order and canonicalize
    back = np.empty(30, dtype=np.int64)
    back[perm] = permuted
    np.testing.assert_array_equal(canonical(back), relabel_contiguous(base))


def test_bounds_checked():
    points = np.zeros((3, 2)) + np.arange(3)[:, None]
    with pytest.raises(ValueError):
        ward_hac(points, 4)
    with pytest.raises(ValueError):
        ward_hac(points, 0)
