import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomylab import catalog
from holonomylab import expr as ex
from holonomylab.errors import ConfigError, NotKContactError, NotPositiveDefiniteError, PartitionError
from holonomylab.manifold import (
    KContactSpec,
    RiemannianSpec,
    eval_horizontal_metric,
    eval_riemannian_metric,
    metric_batch,
    quotient_metric,
    sample_points,
    validate,
    validate_partition,
)

SPHERE = catalog.get("round_sphere").spec
HEIS = catalog.get("heisenberg").spec
SASAKI = catalog.get("sasakian_sphere").spec
PRODUCT_K = catalog.get("product_contactization").spec
FLAT3 = [(-2.0, 2.0)] * 3


def kspec(metric, coeffs, box=FLAT3, name="test"):
    return KContactSpec.from_strings(1, metric, coeffs, box, name)


@pytest.mark.parametrize("p", [(0.0, 0.0), (1.5, -3.0), (4.9, 4.9)])
def test_euclidean_metric_is_identity(p):
    spec = catalog.get("euclidean_plane").spec
    assert np.array_equal(eval_riemannian_metric(spec, p), np.eye(2))


def test_sphere_metric_values():
    assert np.allclose(eval_riemannian_metric(SPHERE, (math.pi / 2, 0.0)), np.eye(2), atol=1e-15)
    assert np.allclose(eval_riemannian_metric(SPHERE, (math.pi / 6, 0.0)), np.diag([1.0, 0.25]), atol=1e-15)


def test_horizontal_metric_values():
    assert np.array_equal(eval_horizontal_metric(HEIS, (0.3, -1.0, 2.0)), np.eye(2))
    assert np.allclose(eval_horizontal_metric(SASAKI, (math.pi / 3, 0.0, 0.0)), np.diag([1.0, 0.75]), atol=1e-15)
    half = math.pi / 2
    assert np.allclose(eval_horizontal_metric(PRODUCT_K, (half, 0.0, half, 0.0, 0.0)), np.eye(4), atol=1e-15)


def test_non_positive_definite_metric_raises():
    spec = RiemannianSpec.from_strings([["1", "0"], ["0", "x1"]], [(-1.0, 1.0)] * 2)
    with pytest.raises(NotPositiveDefiniteError):
        eval_riemannian_metric(spec, (-0.5, 0.0))
    with pytest.raises(NotPositiveDefiniteError):
        eval_riemannian_metric(spec, (1e-11, 0.0))


def test_bad_shapes_are_config_errors():
    with pytest.raises(ConfigError):
        RiemannianSpec.from_strings([["1", "0"]], [(-1, 1), (-1, 1)])
    with pytest.raises(ConfigError):
        kspec([["1", "0"], ["0", "1"]], ["-x2", "0"], [(-1, 1)] * 2)
    with pytest.raises(ConfigError):
        RiemannianSpec.from_strings([["1"]], [(1.0, 1.0)])


def test_heisenberg_validates():
    report = validate(HEIS, 100)
    assert report.passed
    assert report["k_contact"].residual == 0.0
    assert {c.name for c in report.conditions} == {"symmetry", "positive_definite", "contact", "reeb", "k_contact"}


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_catalog_entries_validate(name):
    assert validate(catalog.get(name).spec).passed


def test_k_contact_failure_reports_witness():
    spec = kspec([["1 + x3^2", "0"], ["0", "1"]], ["-x2", "0"])
    report = validate(spec, 200)
    cond = report["k_contact"]
    assert not cond.passed
    assert report.failed() == ["k_contact"]
    assert cond.residual == pytest.approx(abs(2 * cond.witness[2]), rel=1e-15)
    # witness is the worst sample, so the residual is 2*max|x3|
    pts = sample_points(spec.domain_box, 200, 0)
    assert cond.residual == pytest.approx(2 * np.max(np.abs(pts[:, 2])), rel=1e-15)


def test_reeb_failure():
    report = validate(kspec([["1", "0"], ["0", "1"]], ["x3", "x1"]), 50)
    assert not report["reeb"].passed
    assert report["reeb"].residual == 1.0


def test_degenerate_contact_form_fails():
    report = validate(kspec([["1", "0"], ["0", "1"]], ["x2", "x1"]), 50)
    assert not report["contact"].passed
    assert report["contact"].residual == 0.0


def test_asymmetric_and_indefinite_metrics_fail():
    bad = RiemannianSpec.from_strings([["1", "0.5"], ["0", "1"]], [(-1, 1)] * 2)
    assert not validate(bad, 10)["symmetry"].passed
    indefinite = RiemannianSpec.from_strings([["1", "0"], ["0", "x1"]], [(-1, 1)] * 2)
    report = validate(indefinite, 50)
    assert not report["positive_definite"].passed
    assert report["positive_definite"].witness[0] < 0


def test_unevaluable_metric_is_reported_not_raised():
    spec = RiemannianSpec.from_strings([["1", "0"], ["0", "log(x1)"]], [(-1, 1)] * 2)
    report = validate(spec, 20)
    assert report.failed() == ["evaluable"]


def test_validate_is_deterministic():
    a = validate(SASAKI, 50, seed=3)
    b = validate(SASAKI, 50, seed=3)
    assert [c.as_dict() for c in a.conditions] == [c.as_dict() for c in b.conditions]


def test_validate_rejects_zero_samples():
    with pytest.raises(ValueError):
        validate(HEIS, 0)


def test_quotient_of_sasakian_sphere_is_round_sphere():
    q = quotient_metric(SASAKI)
    assert q.dim == 2
    assert q.metric == SPHERE.metric
    assert q.domain_box == SASAKI.domain_box[:2]


def test_quotient_of_heisenberg_is_flat():
    q = quotient_metric(HEIS)
    assert all(np.array_equal(eval_riemannian_metric(q, p), np.eye(2)) for p in [(0, 0), (1, 2)])


def test_quotient_of_product_contactization():
    q = quotient_metric(PRODUCT_K)
    sp = catalog.get("sphere_product").spec
    pts = sample_points(q.domain_box, 20, 5)
    assert np.allclose(metric_batch(q, pts), metric_batch(sp, pts), atol=1e-15, rtol=0)


def test_quotient_eliminates_vertical_coordinate():
    spec = kspec([["2 + sin(x1)", "0"], ["0", "exp(x2)"]], ["-x2", "0"])
    q = quotient_metric(spec)
    assert all(3 not in ex.variables(e) for row in q.metric for e in row)


def test_quotient_rejects_non_k_contact():
    with pytest.raises(NotKContactError):
        quotient_metric(kspec([["1 + x3^2", "0"], ["0", "1"]], ["-x2", "0"]))


def test_partition_checks():
    assert validate_partition(catalog.get("sphere_product").spec) == ((1, 2), (3, 4))
    metric = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1 + x1^2"]]
    with pytest.raises(PartitionError):
        validate_partition(RiemannianSpec.from_strings(metric, [(-1, 1)] * 3, blocks=[[1, 2], [3]]))
    with pytest.raises(PartitionError):
        validate_partition(RiemannianSpec.from_strings(metric, [(-1, 1)] * 3, blocks=[[1], [2]]))
    coupled = [["1", "0.1", "0"], ["0.1", "1", "0"], ["0", "0", "1"]]
    with pytest.raises(PartitionError):
        validate_partition(RiemannianSpec.from_strings(coupled, [(-1, 1)] * 3, blocks=[[1], [2, 3]]))


points_in_box = st.lists(st.floats(0.0, 1.0), min_size=5, max_size=5)


def _point(spec, unit):
    return np.array([lo + u * (hi - lo) for (lo, hi), u in zip(spec.domain_box, unit)])


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([e.name for e in catalog.kcontact_entries()]), points_in_box)
def test_horizontal_metric_ignores_vertical_coordinate(name, unit):
    spec = catalog.get(name).spec
    p = _point(spec, unit[: spec.dim])
    lo, hi = spec.domain_box[-1]
    pts = np.repeat(p[None, :], 10, axis=0)
    pts[:, -1] = np.linspace(lo, hi, 12)[1:-1]
    g = metric_batch(spec, pts)
    assert np.max(np.abs(g - g[0])) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([e.name for e in catalog.kcontact_entries()]), points_in_box)
def test_quotient_agrees_with_horizontal_metric(name, unit):
    spec = catalog.get(name).spec
    p = _point(spec, unit[: spec.dim])
    q = quotient_metric(spec)
    diff = eval_riemannian_metric(q, p[:-1]) - eval_horizontal_metric(spec, p)
    assert np.max(np.abs(diff)) < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([e.name for e in catalog.kcontact_entries()]), points_in_box)
def test_contact_form_annihilates_frame(name, unit):
    spec = catalog.get(name).spec
    p = _point(spec, unit[: spec.dim])
    frame = spec.frame.components(p)
    theta = spec.frame.contact_form(p)
    assert np.max(np.abs(frame @ theta)) < 1e-15
    assert np.array_equal(frame[:, -1], -theta[:-1])
