import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakcurv.degree import (DegreeUndefined, DomainU, PreconditionError, classify_point,
                             degree_formula_residual, degree_map, degree_mass_identity, measure_of,
                             perturbed_map, positive_degree_check, winding_degree)
from weakcurv.fields import Grid2D, ScalarField2D, VectorField2D, bump, sample
from weakcurv.generators import monkey_saddle, quadratic, smoothed_cone

from conftest import BUMP_MASS, sampled, square

# |grad v(B_1)| for v = sqrt(|x|^2 + a^2), a = 0.2: radial profile rho / sqrt(rho^2 + a^2)
CONE_IMAGE_AREA = math.pi / 1.04

ident = lambda x, y: (x, y)
disk = DomainU.disk((0.0, 0.0), 1.0)


def test_winding_examples():
    assert winding_degree(ident, disk, (0.0, 0.0)) == 1
    assert winding_degree(lambda x, y: (x * x - y * y, 2 * x * y), disk, (0.2, 0.0)) == 2
    assert winding_degree(ident, disk, (5.0, 5.0)) == 0
    with pytest.raises(DegreeUndefined, match="near boundary"):
        winding_degree(ident, disk, (1.0, 0.0))


def test_rectangle_and_parse():
    U = DomainU.parse("rect:-0.5,0.5,-0.25,0.75")
    assert U.shape == "rect" and math.isclose(U.area, 1.0)
    assert winding_degree(lambda x, y: (-x, y), U, (0.1, 0.2)) == -1
    assert DomainU.parse("disk:0.1,0.2,0.3").params == (0.1, 0.2, 0.3)
    with pytest.raises(ValueError):
        DomainU.disk((0, 0), 1.0, boundary_samples=32)


def test_degree_map_of_identity():
    g = square(129, 1.5)
    dm = degree_map(VectorField2D.from_arrays(g, *g.mesh()), disk, square(61, 1.5))
    Y1, Y2 = dm.y_grid.mesh()
    rho = np.hypot(Y1, Y2)
    ok = ~dm.excluded
    assert (dm.deg[ok & (rho < 1)] == 1).all()
    assert (dm.deg[ok & (rho > 1)] == 0).all()
    assert dm.excluded.any()


def test_degree_map_of_saddle_gradient_is_minus_one():
    g = square(129, 1.5)
    X, Y = g.mesh()
    dm = degree_map(VectorField2D.from_arrays(g, Y, X), disk, square(61, 1.5))
    Y1, Y2 = dm.y_grid.mesh()
    inner = ~dm.excluded & (np.hypot(Y1, Y2) < 1)
    assert inner.any() and (dm.deg[inner] == -1).all()


def test_perturbed_map_examples():
    g = square(9, 2.0)
    z = sample(lambda x, y: 0 * x, g)
    u = perturbed_map(z, 1.0)
    X, Y = g.mesh()
    assert np.array_equal(u.u1.values, -Y) and np.array_equal(u.u2.values, X)
    assert winding_degree(u, DomainU.disk((0, 0), 1.0), (0.0, 0.0)) == 1
    q = sample(lambda x, y: 0.5 * (x * x + y * y), g)
    u = perturbed_map(q, 0.5, grad=(X, Y))
    j, i = 6, 6  # node (1, 1)
    assert (u.u1.values[j, i], u.u2.values[j, i]) == (0.5, 1.5)
    p = perturbed_map(q, 0.0, grad=(X, Y))
    assert np.array_equal(p.u1.values, X)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(0.05, 0.3))
def test_degree_stable_under_boundary_doubling(y1, y2, a):
    u = lambda x, y: (x * x - y * y + a * x, 2 * x * y - a * y)
    coarse = DomainU.disk((0.0, 0.0), 1.0, 256)
    fine = DomainU.disk((0.0, 0.0), 1.0, 512)
    try:
        d = winding_degree(u, coarse, (y1, y2))
    except DegreeUndefined:
        return
    assert d == winding_degree(u, fine, (y1, y2))


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_additivity_over_disjoint_domains(y1, y2):
    u = lambda x, y: (x * x - y * y, 2 * x * y)
    A = DomainU.rect(-1.0, 0.0, -0.5, 0.5)
    B = DomainU.rect(0.0, 1.0, -0.5, 0.5)
    AB = DomainU.rect(-1.0, 1.0, -0.5, 0.5)
    try:
        parts = [winding_degree(u, D, (y1, y2)) for D in (A, B, AB)]
    except DegreeUndefined:
        return
    assert parts[2] == parts[0] + parts[1]


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-1, 1), st.floats(-1, 1))
def test_homotopy_stability(y1, y2, c1, c2):
    u = lambda x, y: (x * x - y * y, 2 * x * y)
    d = math.hypot(y1, y2)
    if d < 0.05 or d > 0.95:
        return
    dist = min(d, 1 - d)
    s = 0.4 * dist
    w = lambda x, y: (x * x - y * y + s * c1 * np.cos(3 * y) / math.sqrt(2),
                      2 * x * y + s * c2 * np.sin(2 * x) / math.sqrt(2))
    assert winding_degree(u, disk, (y1, y2)) == winding_degree(w, disk, (y1, y2)) == 2


def test_degree_formula_quadratic_and_zero():
    g = square(257, 2.0)
    X, Y = g.mesh()
    gfun = bump((0.05, 0.02), 0.3)
    q = sample(lambda x, y: 0.5 * (x * x + y * y), g)
    r = degree_formula_residual(q, 0.0, disk, gfun, grad=(X, Y))
    assert abs(r["lhs"] - BUMP_MASS * 0.09) < 1e-4
    assert r["residual"] < 1e-4
    z = sample(lambda x, y: 0 * x, g)
    r = degree_formula_residual(z, 0.5, disk, gfun, grad=(0 * X, 0 * Y))
    assert r["degree_values"] == [1]
    assert r["residual"] < 1e-4


def test_degree_formula_rejects_band():
    g = square(129, 2.0)
    X, Y = g.mesh()
    q = sample(lambda x, y: 0.5 * (x * x + y * y), g)
    with pytest.raises(ValueError, match="band"):
        degree_formula_residual(q, 0.0, disk, bump((1.0, 0.0), 0.2), grad=(X, Y))


def test_mass_identity_examples():
    g = square(257, 2.0)
    v, grad = sampled(quadratic(), g)
    r = degree_mass_identity(v, disk, grad=grad)
    assert abs(r["deg_integral"] - math.pi) / math.pi < 0.02
    assert r["rel_gap"] < 0.02
    v, grad = sampled(smoothed_cone(0.2), g)
    r = degree_mass_identity(v, disk, grad=grad)
    assert abs(r["mu_f_U"] - CONE_IMAGE_AREA) / CONE_IMAGE_AREA < 0.02
    assert r["rel_gap"] < 0.02
    a = sample(lambda x, y: 2 * x - y, g)
    r = degree_mass_identity(a, disk)
    assert r["deg_integral"] == 0.0 and abs(r["mu_f_U"]) < 1e-10


def test_mass_identity_perturbed_quadratic():
    g = square(257, 2.0)
    v = sample(lambda x, y: 0.5 * (x * x + y * y) + 0.05 * np.sin(3 * x) * np.sin(3 * y), g)
    r = degree_mass_identity(v, disk)
    assert r["rel_gap"] < 0.02


def test_mass_identity_requires_nonnegativity():
    g = square(257, 2.0)
    with pytest.raises(PreconditionError):
        degree_mass_identity(sample(lambda x, y: x * y, g), disk)


def test_rect_measure_of_quadratic():
    U = DomainU.rect(-0.5, 0.5, -0.75, 0.5)
    g = square(257, 2.0)
    v, grad = sampled(quadratic(), g)
    val, pairs = measure_of(v, U, grad=grad)
    assert abs(val - 1.25) / 1.25 < 0.01
    assert [w for w, _ in pairs] == [8 * g.h, 16 * g.h]
    # the default 8-cell layer is under-resolved; fixed physical widths converge
    errs = []
    for n in (513, 1025):
        g = square(n, 2.0)
        v, grad = sampled(quadratic(), g)
        errs.append(abs(measure_of(v, U, grad=grad, widths=(0.125, 0.25))[0] - 1.25))
    assert errs[1] < 1e-6 < errs[0] < 1e-4


def test_positive_degree_and_l1_bound():
    g = square(257, 2.0)
    for f in (quadratic(), quadratic(1.0, quartic=0.1), smoothed_cone(0.2)):
        v, grad = sampled(f, g)
        chk = positive_degree_check(v, disk, n_points=400, grad=grad)
        assert chk["violations"] == 0 and chk["n_checked"] >= 200
        r = degree_mass_identity(v, disk, grad=grad)
        assert r["deg_integral"] <= r["mu_f_U"] * 1.02


def test_classification():
    g = square(257, 1.0)
    cases = [(quadratic(), "elliptic", 1), (None, "hyperbolic", -1), (monkey_saddle(), "flat", -2)]
    for f, cls, idx in cases:
        if f is None:
            v = sample(lambda x, y: x * y, g)
            res = classify_point(v, (0.0, 0.0))
        else:
            v, grad = sampled(f, g)
            res = classify_point(v, (0.0, 0.0), grad=grad)
        assert (res["class"], res["index"]) == (cls, idx)


def test_classification_unresolved_near_edge():
    g = Grid2D(16, 16, 0.0, 0.0, 0.1)
    v = sample(lambda x, y: x * x + y * y, g)
    assert classify_point(v, (0.05, 0.05))["class"] == "unresolved"


def test_alpha_ranges():
    from weakcurv.degree import asserted_identities
    assert asserted_identities(0.6) == ["degree_formula", "mass_identity"]
    assert asserted_identities(0.8) == ["degree_formula", "degree_l1_bound", "mass_identity",
                                        "positive_degree"]
    assert asserted_identities(2 / 3) == ["degree_formula", "mass_identity"]
    assert asserted_identities(1.0) == asserted_identities(0.9)
    assert asserted_identities(0.5) == []
