import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakcurv.fields import Grid2D, ScalarField2D, bump, sample
from weakcurv.generators import quadratic, saddle
from weakcurv.mollifier import eps_ladder
from weakcurv.weak_hessian import besov_decay_probe, det_hessian_pairing, nonnegativity_check

from conftest import order_of, sampled, square

# x^2 averaged against the normalized bump of radius 0.4 at the origin
# (polar quadrature at 30 digits); Det D^2 (x^4/12 + y^2/2) = x^2
QUARTIC_PAIRING = 0.020904896273644692


def test_quadratic_pairs_to_one(grid257):
    v = sample(lambda x, y: 0.5 * (x * x + y * y), grid257)
    p = det_hessian_pairing(v, bump((0.1, -0.2), 0.5, normalize=True))
    assert abs(p.value - 1.0) <= 1e-6
    assert abs(p.value - 1.0) <= p.error_estimate


def test_saddle_converges_at_second_order():
    phi = bump((0.0, 0.0), 0.5, normalize=True)
    hs, errs = [], []
    for n in (129, 257, 513):
        g = square(n)
        p = det_hessian_pairing(sample(lambda x, y: x * y, g), phi)
        hs.append(g.h)
        errs.append(abs(p.value + 1.0))
        assert errs[-1] <= p.error_estimate
    assert errs[-1] < 1e-4
    assert order_of(hs, errs) >= 1.8


def test_affine_pairs_to_zero(grid257):
    phi = bump((0.0, 0.0), 0.5, normalize=True)
    assert abs(det_hessian_pairing(sample(lambda x, y: 3 * x - 2 * y + 1, grid257), phi).value) <= 1e-12


def test_nonconstant_determinant_converges_at_second_order():
    phi = bump((0.0, 0.0), 0.4, normalize=True)
    hs, errs = [], []
    # coarser levels sit near a sign change of the error
    for n in (257, 513, 1025):
        g = square(n, 1.0)
        p = det_hessian_pairing(sample(lambda x, y: x ** 4 / 12 + y * y / 2, g), phi)
        hs.append(g.h)
        errs.append(abs(p.value - QUARTIC_PAIRING))
    assert order_of(hs, errs) >= 1.8


def test_analytic_gradient_matches(grid257):
    f = quadratic(1.0, quartic=0.1)
    v, grad = sampled(f, grid257)
    phi = bump((0.2, 0.1), 0.6, normalize=True)
    a = det_hessian_pairing(v, phi, grad=grad).value
    b = det_hessian_pairing(v, phi).value
    X, Y = grid257.mesh()
    exact = (f.det_hessian(X, Y) * phi.evaluate(X, Y, 0)[0]).sum() * grid257.h ** 2
    assert abs(a - exact) < 1e-5 and abs(b - exact) < 1e-3


def test_support_must_fit():
    g = square(65, 1.0)
    with pytest.raises(ValueError, match="boundary"):
        det_hessian_pairing(sample(lambda x, y: x * x, g), bump((0.8, 0.0), 0.3))


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 3.0))
def test_affine_invariance_and_quadratic_scaling(a, b, c, lam):
    g = square(129, 1.0)
    base = lambda x, y: np.sin(x + 0.3) * np.cos(0.7 * y) + 0.5 * x * x
    phi = bump((0.05, -0.1), 0.5, normalize=True)
    p0 = det_hessian_pairing(sample(base, g), phi, estimate_error=False).value
    p1 = det_hessian_pairing(sample(lambda x, y: base(x, y) + a + b * x + c * y, g), phi,
                             estimate_error=False).value
    p2 = det_hessian_pairing(sample(lambda x, y: lam * base(x, y), g), phi, estimate_error=False).value
    assert abs(p1 - p0) <= 1e-10 * max(1.0, b * b + c * c)
    assert abs(p2 - lam * lam * p0) <= 1e-12 * lam * lam * abs(p0)


def test_besov_probe_on_smooth_quadratic():
    g = square(257, 1.0)
    v = sample(lambda x, y: 0.5 * (x * x + y * y), g)
    fit = besov_decay_probe(v, eps_ladder(0.25, 4))
    for _, n in fit.pairs:
        assert abs(n - 1.0) < 1e-9
    assert abs(fit.slope) < 1e-6


def test_nonnegativity_examples():
    g = square(257, 1.0)
    region = g.eroded(16)
    X, Y = g.mesh()
    for f, want in ((quadratic(), True), (quadratic(1.0, quartic=0.1), True), (saddle(), False)):
        rep = nonnegativity_check(ScalarField2D(g, f.value(X, Y)), region)
        assert rep.verdict is want
        assert rep.n_evaluated > 0
    rep = nonnegativity_check(sample(lambda x, y: x * y, g), region)
    assert not rep.verdict and -1.5 < rep.min_pairing < -0.5


def test_smoothed_cone_is_nonnegative():
    g = square(257, 1.0)
    X, Y = g.mesh()
    v = ScalarField2D(g, np.sqrt(X * X + Y * Y + 0.01))
    assert nonnegativity_check(v, g.eroded(16)).verdict


def test_nonnegativity_rejects_tiny_region():
    g = Grid2D(40, 40, 0.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        nonnegativity_check(sample(lambda x, y: x * x, g), g.window(0, 3, 0, 3))


def test_mollified_pairings_form_cauchy_sequence():
    from weakcurv.generators import weierstrass
    from weakcurv.mollifier import mollify
    g = square(513, 1.0)
    X, Y = g.mesh()
    v = ScalarField2D(g, weierstrass(0.8, K=4, eta=0.2, q=1.0).value(X, Y))
    phi = bump((0.0, 0.0), 0.4, normalize=True)
    base = det_hessian_pairing(v, phi, estimate_error=False).value
    gaps = [abs(det_hessian_pairing(mollify(v, e), phi, estimate_error=False).value - base)
            for e in eps_ladder(0.125, 4)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
