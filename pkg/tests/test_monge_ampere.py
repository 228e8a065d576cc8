import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakcurv.degree import DomainU, PreconditionError, measure_of
from weakcurv.fields import ScalarField2D, sample
from weakcurv.generators import quadratic, ridge, saddle, smoothed_cone, sphere_cap
from weakcurv.monge_ampere import (alexandrov_verify, check_disjoint, convexity_check, gauss_map,
                                   gradient_image_area, injectivity_check, lambert_lower,
                                   normal_from_gradient, partition_rect, spherical_image_area,
                                   spherical_image_tv)

from conftest import sampled, square

CONE_IMAGE_AREA = math.pi / 1.04
# int over B_0.5 of (1 + 1.2 x^2)(1 + 1.2 y^2), exact polar integration (sympy)
QUARTIC_MU = 923 * math.pi / 3200
# area of the unit-sphere cap cut by the R = 2 sphere's normals over |x| <= 0.5
CAP_AREA = 2 * math.pi * (1 - math.sqrt(1 - 0.25 ** 2))

disk = DomainU.disk((0.0, 0.0), 1.0)


@pytest.fixture(scope="module")
def g2():
    return square(257, 2.0)


def test_image_area_examples(g2):
    v, grad = sampled(quadratic(), g2)
    r = gradient_image_area(v, disk, grad=grad)
    assert abs(r.area - math.pi) / math.pi < 0.02
    assert r.boundary_image_area > 0 and r.raster_resolution > 0
    a = sample(lambda x, y: 2 * x - y, g2)
    assert gradient_image_area(a, disk).area == 0.0
    v, grad = sampled(smoothed_cone(0.2), g2)
    assert abs(gradient_image_area(v, disk, grad=grad).area - CONE_IMAGE_AREA) / CONE_IMAGE_AREA < 0.02


def test_image_area_monotone_in_domain(g2):
    v, grad = sampled(quadratic(1.0, quartic=0.1), g2)
    areas = [gradient_image_area(v, DomainU.disk((0.1, 0.0), r), raster=0.005, grad=grad).area
             for r in (0.25, 0.5, 1.0)]
    assert areas[0] <= areas[1] + 0.005 ** 2 * 64 and areas[1] <= areas[2] + 0.005 ** 2 * 64


def test_image_area_raster_refinement_is_cauchy(g2):
    v, grad = sampled(smoothed_cone(0.2), g2)
    a = [gradient_image_area(v, disk, raster=r, grad=grad).area for r in (0.02, 0.01, 0.005)]
    assert abs(a[2] - a[1]) <= 2 * abs(a[1] - a[0]) + 1e-12


def test_gauss_map_examples():
    assert normal_from_gradient(0.0, 0.0) == (0.0, 0.0, -1.0)
    n = normal_from_gradient(1.0, 0.0)
    assert np.allclose(n, (1 / math.sqrt(2), 0.0, -1 / math.sqrt(2)), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 100.0))
def test_gauss_map_is_unit_and_lower(seed, scale):
    g = square(9, 1.0)
    rng = np.random.default_rng(seed)
    p, q = scale * rng.standard_normal(g.shape), scale * rng.standard_normal(g.shape)
    N = gauss_map(ScalarField2D(g, p), grad=(p, q))
    n1, n2, n3 = N.components()
    assert np.abs(n1 * n1 + n2 * n2 + n3 * n3 - 1).max() <= 1e-12
    assert (n3 < 0).all()
    a, b = lambert_lower(n1, n2, n3)
    assert (np.hypot(a, b) < math.sqrt(2)).all()


def test_spherical_image_examples():
    g = square(257, 1.0)
    v, grad = sampled(sphere_cap(2.0), g)
    area = spherical_image_area(v, DomainU.disk((0.0, 0.0), 0.5), grad=grad)
    assert abs(area - CAP_AREA) / CAP_AREA < 0.02
    a = sample(lambda x, y: x + 3 * y, g)
    tv = spherical_image_tv(a, partition_rect((-0.5, 0.5, -0.5, 0.5), 2, 2))
    assert tv.areas == [0.0] * 4 and tv.total == 0.0


@pytest.mark.parametrize("f", [quadratic(), smoothed_cone(0.2), sphere_cap(2.0)])
def test_spherical_contraction_and_partition_bound(f):
    g = square(257, 1.0)
    v, grad = sampled(f, g)
    parts = partition_rect((-0.6, 0.6, -0.6, 0.6), 2, 2)
    tv = spherical_image_tv(v, parts, grad=grad)
    assert math.isclose(tv.total, sum(tv.areas))
    planar = [gradient_image_area(v, E, grad=grad).area for E in parts]
    for s, p in zip(tv.areas, planar):
        assert s <= p * 1.02
    mu, _ = measure_of(v, DomainU.rect(-0.6, 0.6, -0.6, 0.6), grad=grad)
    assert sum(planar) <= mu * 1.03


def test_overlapping_parts_rejected():
    with pytest.raises(ValueError, match="overlap"):
        check_disjoint([DomainU.rect(0, 1, 0, 1), DomainU.rect(0.5, 1.5, 0, 1)])
    with pytest.raises(ValueError, match="overlap"):
        check_disjoint([DomainU.disk((0, 0), 1.0), DomainU.rect(0.5, 1.5, 0, 1)])
    check_disjoint(partition_rect((0, 1, 0, 1), 3, 2))


def test_convexity_examples(g2):
    assert convexity_check(sampled(quadratic(), g2)[0])["convex"]
    assert convexity_check(sampled(smoothed_cone(0.2), g2)[0])["convex"]
    r = convexity_check(sample(lambda x, y: x * y, g2))
    assert not r["convex"]
    i, j = r["witness"]["direction"]
    assert i * j < 0 and abs(i) == abs(j)


def test_alexandrov_examples(g2):
    v, grad = sampled(quadratic(), g2)
    r = alexandrov_verify(v, [disk], grad=grad)
    row = r["domains"][0]
    assert r["verdict"] and not r["sign_flipped"]
    for k in ("image_area", "deg_integral", "mu_f"):
        assert abs(row[k] - math.pi) / math.pi < 0.03
    v, grad = sampled(quadratic(1.0, quartic=0.1), g2)
    r = alexandrov_verify(v, [DomainU.disk((0.0, 0.0), 0.5)], grad=grad)
    assert r["verdict"]
    assert abs(r["domains"][0]["mu_f"] - QUARTIC_MU) / QUARTIC_MU < 0.03
    v, grad = sampled(quadratic().scaled(-1.0), g2)
    r = alexandrov_verify(v, [disk], grad=grad)
    assert r["verdict"] and r["sign_flipped"]


def test_alexandrov_rejects_saddles(g2):
    for f in (saddle(), saddle(0.3)):
        v, grad = sampled(f, g2)
        with pytest.raises(PreconditionError):
            alexandrov_verify(v, [disk], grad=grad)


def test_injectivity_examples(g2):
    v, grad = sampled(quadratic(), g2)
    r = injectivity_check(v, disk, grad=grad)
    assert r["max_collision_distance"] == 0.0 and r["n_collisions"] == 0
    v, grad = sampled(ridge(0.1), g2)
    r = injectivity_check(v, disk, grad=grad)
    assert r["n_collisions"] > 0 and r["n_degenerate"] == r["n_collisions"]
    assert r["max_collision_distance"] == 0.0
    with pytest.raises(PreconditionError):
        injectivity_check(sample(lambda x, y: x * y, g2), disk)
