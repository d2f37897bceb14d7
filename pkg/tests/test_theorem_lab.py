import numpy as np
import pytest

from holonomylab import catalog
from holonomylab.errors import InputError, MatchingTieError, PartitionError
from holonomylab.manifold import RiemannianSpec
from holonomylab.theorem_lab import (
    de_rham_report,
    match_projectors,
    off_block_magnitude,
    product_holonomy_check,
    verify_isomorphism,
)


def test_heisenberg_diagram_is_exact():
    report = verify_isomorphism(catalog.get("heisenberg"), 10, seed=1)
    assert report.max_residual < 1e-10
    assert report.passed
    for m in report.adapted_matrices:
        assert np.max(np.abs(m - np.eye(2))) < 1e-10


@pytest.mark.parametrize("name", ["sasakian_sphere", "product_contactization", "torus_contactization"])
def test_diagram_commutes(name):
    report = verify_isomorphism(catalog.get(name), 20, 512, seed=0)
    assert report.max_residual < 1e-6
    assert all(report.richardson_bounded)
    assert len(report.residuals) == 20
    d = report.as_dict()
    assert d["verdict"] == "PASS" and d["settings"]["seed"] == 0


def test_vertical_value_does_not_change_adapted_matrices():
    entry = catalog.get("sasakian_sphere")
    a = verify_isomorphism(entry, 8, seed=4, vertical_value=0.0)
    b = verify_isomorphism(entry, 8, seed=4, vertical_value=3.0)
    for x, y in zip(a.adapted_matrices, b.adapted_matrices):
        assert np.max(np.abs(x - y)) < 1e-8


def test_riemannian_entry_rejected():
    with pytest.raises(InputError):
        verify_isomorphism(catalog.get("round_sphere"))


def test_product_contactization_splits_on_both_sides():
    report = de_rham_report(catalog.get("product_contactization"), 20, seed=0)
    assert report.upstairs.r == report.downstairs.r == 2
    assert report.upstairs.dims == [2, 2] and report.downstairs.dims == [2, 2]
    assert report.max_match_residual < 1e-5
    assert report.passed and report.notes == []


@pytest.mark.parametrize("seed", range(5))
def test_de_rham_verdict_is_seed_stable(seed):
    report = de_rham_report(catalog.get("product_contactization"), 20, seed=seed)
    assert (report.upstairs.r, sorted(report.upstairs.dims)) == (2, [2, 2])
    assert report.passed


def test_sasakian_sphere_does_not_split():
    report = de_rham_report(catalog.get("sasakian_sphere"), 20, seed=0)
    assert report.upstairs.r == report.downstairs.r == 1
    assert "no splitting found at these samples" in report.notes
    assert report.passed


def test_heisenberg_flags_trivial_group():
    report = de_rham_report(catalog.get("heisenberg"), 10, seed=0)
    assert "trivial group: decomposition non-unique" in report.notes
    assert sum(report.upstairs.dims) == 2 and sum(report.downstairs.dims) == 2


def test_matching_pairs_by_distance():
    p = np.diag([1.0, 0.0])
    q = np.diag([0.0, 1.0])
    pairs = match_projectors([p, q], [q + 1e-9, p])
    assert sorted((i, j) for i, j, _ in pairs) == [(0, 1), (1, 0)]
    assert max(d for _, _, d in pairs) < 1e-8


def test_matching_ties_raise():
    p = np.diag([1.0, 0.0])
    with pytest.raises(MatchingTieError):
        match_projectors([p, p], [p, p])


def test_sphere_product_is_block_diagonal():
    report = product_holonomy_check(catalog.get("sphere_product").spec, 40, seed=0,
                                    base=catalog.get("sphere_product").base_point)
    assert len(report.off_block) == 40
    assert report.max_off_block < 1e-6 and report.passed


def test_single_factor_is_vacuous():
    report = product_holonomy_check(catalog.get("round_sphere").spec, 5, seed=0, base=(1.5, 0.0))
    assert report.blocks == ((1, 2),)
    assert report.max_off_block == 0.0 and report.passed


def test_euclidean_four_space():
    report = product_holonomy_check(catalog.get("euclidean_4").spec, 12, seed=0)
    assert report.max_off_block == 0.0


def test_bad_partition_raises():
    metric = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1 + x1^2"]]
    spec = RiemannianSpec.from_strings(metric, [(-1, 1)] * 3, blocks=[[1, 2], [3]])
    with pytest.raises(PartitionError):
        product_holonomy_check(spec, 2)


def test_off_block_magnitude():
    m = np.arange(16.0).reshape(4, 4)
    assert off_block_magnitude(m, [[1, 2], [3, 4]]) == 13.0
    assert off_block_magnitude(m, [[1, 2, 3, 4]]) == 0.0
    assert off_block_magnitude(m, [[1, 3], [2, 4]]) == 14.0
