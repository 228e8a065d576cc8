import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakcurv.curvature import Diffeo2D
from weakcurv.fields import Grid2D, gradient
from weakcurv.generators import (GOLDEN_ANGLE, KINDS, GeneratorSpec, analytic_field, default_levels,
                                 generate, lacunary_directions, lacunary_sum, weierstrass)

from conftest import order_of, square

SCALAR_KINDS = [("quadratic", {"quartic": 0.1}), ("sphere_cap", {"R": 2.0}), ("smoothed_cone", {"a": 0.2}),
                ("saddle", {}), ("monkey_saddle", {}), ("ridge", {"a": 0.1}),
                ("weierstrass", {"alpha": 0.8, "K": 2, "q": 1.0})]


def test_quadratic_metadata():
    out = generate(GeneratorSpec("quadratic", {}, square(17, 1.0)))
    X, Y = out.field.grid.mesh()
    assert np.array_equal(out.analytic.det_hessian(X, Y), np.ones_like(X))
    assert out.meta["exact_det_hessian"] and out.meta["holder"] == 1.0


def test_sphere_cap_at_origin():
    f = analytic_field("sphere_cap", {"R": 2.0})
    assert f.value(0.0, 0.0) == 2.0
    assert f.grad(0.0, 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("kind,params", SCALAR_KINDS)
def test_generation_is_bit_identical(kind, params):
    spec = GeneratorSpec(kind, params, square(33, 1.0))
    a = generate(spec).field.values
    b = generate(GeneratorSpec.from_dict(spec.to_dict())).field.values
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("kind,params", SCALAR_KINDS)
def test_declared_gradient_matches_differences(kind, params):
    hs, errs = [], []
    for n in (65, 129, 257):
        g = square(n, 0.5)
        out = generate(GeneratorSpec(kind, params, g))
        X, Y = g.mesh()
        ex, ey = out.analytic.grad(X, Y)
        fd = gradient(out.field)
        inner = (slice(2, -2), slice(2, -2))
        errs.append(max(np.abs(fd.u1.values - ex)[inner].max(), np.abs(fd.u2.values - ey)[inner].max()))
        hs.append(g.h)
    if max(errs) < 1e-12:
        return
    assert order_of(hs, errs) >= 1.9


def test_lacunary_directions_rotate_by_golden_angle():
    bx, by = lacunary_directions(5)
    ang = np.unwrap(np.arctan2(by, bx))
    assert np.allclose(np.diff(ang), GOLDEN_ANGLE)
    assert np.allclose(np.hypot(bx, by), 1.0)


def test_level_count_follows_grid():
    assert default_levels(1 / 256) == 4
    assert default_levels(1 / 1024) == 5
    g = square(129, 1.0)
    with pytest.raises(ValueError, match="under-resolved"):
        weierstrass(0.8, g, K=6)
    with pytest.raises(ValueError):
        weierstrass(0.8)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-8, -1), st.floats(0, 2 * math.pi),
       st.sampled_from([0.7, 0.8]))
def test_gradient_increments_scale_like_alpha(x, y, logr, theta, alpha):
    f = lacunary_sum(alpha, 8)
    r = 2.0 ** logr
    p = np.array(f.grad(x, y))
    q = np.array(f.grad(x + r * math.cos(theta), y + r * math.sin(theta)))
    # the gradient seminorm is at most sum_k 4^{-k alpha} (2 lambda_k)^alpha
    bound = sum(4.0 ** (-alpha * k) * 2 ** alpha * 4.0 ** (k * alpha) for k in range(1, 9))
    assert np.hypot(*(p - q)) <= 4 * bound * r ** alpha


def test_spec_validation_and_diffeos():
    with pytest.raises(ValueError, match="unknown generator"):
        GeneratorSpec("banana")
    with pytest.raises(ValueError):
        generate(GeneratorSpec("quadratic"))
    assert set(KINDS) >= {"diffeo_shear", "diffeo_rough"}
    sh = generate(GeneratorSpec("diffeo_shear", {"s": 0.3}))
    assert sh.field.forward(1.0, 2.0) == (1.6, 2.0)
    rough = generate(GeneratorSpec("diffeo_rough", {"alpha": 0.8, "eta": 0.2, "K": 4}))
    xi = rough.field
    X, Y = square(33, 1.0).mesh()
    bx, by = xi.inverse(*xi.forward(X, Y))
    assert max(np.abs(bx - X).max(), np.abs(by - Y).max()) < 1e-6
    assert xi.det(X, Y).min() >= rough.meta["min_det"] > 0
    with pytest.raises(ValueError, match="eta too large"):
        Diffeo2D.rough(0.8, 2.0, 4)


def test_spec_json_grid_forms(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{"kind": "saddle", "grid": [5, 5, 0.0, 0.0, 0.25]}')
    s = GeneratorSpec.from_json(p)
    assert s.grid == Grid2D(5, 5, 0.0, 0.0, 0.25) and s.params == {}
