import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernrank import (
    DimensionError,
    DistributionError,
    GeometryError,
    HyperCube,
    InteractionKind,
    ProductMarginals,
    count_in,
    grid_perturbation_stats,
    make_domain_pair,
    mix64,
    realized_counts,
    sample,
    sample_grid,
    subdivide,
)

UNIT = HyperCube((0.0,), (1.0,))


def test_mix64_vectors():
    # frozen test vectors pin the stream-derivation function forever
    assert mix64(0) == 15590649930234121703
    assert mix64(1, 2, 3) == 12174095428247697372
    assert mix64(2 ** 64 - 1) == 8658983634636877031
    assert mix64(1, 2) != mix64(2, 1)


def test_sample_vectors():
    pts = sample(UNIT, 3, 12345).points.ravel()
    assert pts.tolist() == [0.22733602246716972, 0.3167583397097529,
                            0.7973654573327342]
    pts2 = sample(HyperCube((0.0, 0.0), (1.0, 1.0)), 2, 999).points.ravel()
    assert pts2.tolist() == [0.7788250175802724, 0.17224863082501168,
                             0.7135727934494851, 0.7503350777790294]


def test_sample_reproducible_and_immutable():
    a = sample(UNIT, 100, 7)
    b = sample(UNIT, 100, 7)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, sample(UNIT, 100, 8).points)
    with pytest.raises(ValueError):
        a.points[0, 0] = 0.5


def test_sample_strict_interior():
    ps = sample(HyperCube((2.0, 2.0), (3.0, 3.0)), 500, 1)
    assert np.all(ps.points > 2.0) and np.all(ps.points < 3.0)


def test_uniform_sample_mean():
    ps = sample(HyperCube((0.0, 0.0), (1.0, 1.0)), 10 ** 4, 123)
    means = ps.points.mean(axis=0)
    assert np.all((0.47 <= means) & (means <= 0.53))


def test_product_marginals():
    # CDF t^2 on [0,1] has inverse sqrt(u) and mean 2/3
    dist = ProductMarginals((np.sqrt,))
    ps = sample(UNIT, 10 ** 4, 3, dist)
    assert abs(ps.points.mean() - 2.0 / 3.0) < 0.02
    with pytest.raises(DistributionError):
        ProductMarginals(())
    bad = ProductMarginals((lambda u: 2.0 * u,))
    with pytest.raises(DistributionError):
        sample(UNIT, 10, 3, bad)


def test_sample_grid_structure():
    box = HyperCube((0.0, 0.0), (1.0, 1.0))
    ps = sample_grid(box, 5, 17)
    assert ps.points.shape == (25, 2)
    # tensor structure: exactly 5 distinct values per coordinate
    assert len(set(ps.points[:, 0])) == 5
    assert len(set(ps.points[:, 1])) == 5
    assert np.all((ps.points > 0.0) & (ps.points < 1.0))
    assert np.array_equal(ps.points, sample_grid(box, 5, 17).points)


def test_sample_grid_1d_matches_iid_law():
    # in 1-D a random grid is just an i.i.d. sample
    ps = sample_grid(UNIT, 100, 3)
    assert ps.points.shape == (100, 1)


def test_count_in():
    ps = sample(UNIT, 1000, 11)
    left = count_in(ps, HyperCube((0.0,), (0.5,)))
    right = count_in(ps, HyperCube((0.5,), (1.0,)))
    assert left + right == 1000
    with pytest.raises(GeometryError):
        count_in(ps, HyperCube((0.5,), (1.5,)))


def test_realized_counts_partition():
    for d, dp, n in [(1, 0, 256), (2, 1, 256), (3, 0, 512)]:
        target, source = make_domain_pair(d, InteractionKind.shared_surface(dp))
        tree = subdivide(source, target, n)
        ps = sample(source, n, mix64(5, d, dp))
        counts, m_kappa = realized_counts(ps, tree)
        assert sum(map(sum, counts)) + m_kappa == n
        assert all(len(row) == len(tree.levels[k]) for k, row in enumerate(counts))


def test_realized_counts_domain_check():
    target, source = make_domain_pair(1, InteractionKind.shared_surface(0))
    tree = subdivide(source, target, 16)
    ps = sample(target, 16, 1)
    with pytest.raises(GeometryError):
        realized_counts(ps, tree)


def test_grid_perturbation_stats():
    ps = sample(UNIT, 8, 77)
    rep = grid_perturbation_stats(ps, draws=2000)
    assert np.allclose(rep["order_stat_mean"], rep["order_stat_mean_theory"],
                       atol=0.01)
    assert np.allclose(rep["order_stat_var"], rep["order_stat_var_theory"],
                       atol=0.005)
    assert abs(rep["mean_gap"] - rep["mean_gap_theory"]) < 0.01


def test_grid_perturbation_single_point():
    ps = sample(UNIT, 1, 4)
    rep = grid_perturbation_stats(ps, draws=500)
    assert abs(rep["order_stat_mean"][0] - 0.5) < 0.05
    assert abs(rep["order_stat_var"][0] - 1.0 / 12.0) < 0.02
    assert rep["mean_gap"] is None


def test_grid_perturbation_needs_1d():
    ps = sample(HyperCube((0.0, 0.0), (1.0, 1.0)), 4, 4)
    with pytest.raises(DimensionError):
        grid_perturbation_stats(ps)


@given(st.integers(min_value=1, max_value=200),
       st.integers(min_value=0, max_value=2 ** 63 - 1))
@settings(max_examples=30, deadline=None)
def test_sample_always_interior(n, seed):
    ps = sample(UNIT, n, seed)
    assert np.all((ps.points > 0.0) & (ps.points < 1.0))
