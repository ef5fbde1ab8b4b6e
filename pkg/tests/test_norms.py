import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltadisp.config import Field3D, RadialFunction, RadialGrid, WeightSpec
from deltadisp.errors import DomainError, SingularPointError
from deltadisp.norms import NormRequest, compute_norm, lp_norm, profile_norm, weak_lorentz_norm

GAUSS = lambda r: np.exp(-r**2)
YUKAWA = lambda r: np.exp(-r) / (4 * np.pi * r)       # G_z at z = i
BALL_GRID = RadialGrid(np.array([0.0, 0.5, 1.0, 2.0, 3.0]), 8)
BALL = RadialFunction.from_callable(lambda r: (r <= 1) * 1.0, BALL_GRID)


def test_gaussian_l1():
    assert lp_norm(GAUSS, 1) == pytest.approx(np.pi**1.5, rel=1e-12)


def test_weighted_gaussian_l1():
    w = WeightSpec("SINGULAR-SUM")
    assert lp_norm(GAUSS, 1, w, 1.0) == pytest.approx(np.pi**1.5 + 2 * np.pi, rel=1e-12)


def test_weighted_sup():
    w = WeightSpec("SINGULAR-SUM")
    assert lp_norm(GAUSS, math.inf, w, -1.0) == pytest.approx(0.2623593160387586, rel=1e-5)


def test_green_kernel_l2():
    assert lp_norm(YUKAWA, 2, r_max=40) == pytest.approx(0.19947114020071635, rel=1e-12)


def test_green_kernel_l3_divergent():
    with pytest.raises(SingularPointError) as e:
        lp_norm(YUKAWA, 3, r_max=40)
    assert e.value.code == "SINGULAR-POINT"
    assert not profile_norm(YUKAWA, 2.9, r_max=40).divergent


def test_weak_coulomb():
    exact = (4 * np.pi / 3) ** (1 / 3) / (4 * np.pi)
    assert exact == pytest.approx(0.12827824385304218)
    assert weak_lorentz_norm(lambda r: 1 / (4 * np.pi * r), 3) == pytest.approx(exact, rel=1e-3)


@pytest.mark.parametrize("q", [1.0, 2.0, 3.5])
def test_ball_indicator(q):
    exact = (4 * np.pi / 3) ** (1 / q)
    assert weak_lorentz_norm(BALL, q) == pytest.approx(exact, rel=1e-12)
    assert lp_norm(BALL, q) == pytest.approx(exact, rel=1e-12)


def test_field_matches_radial():
    fld = Field3D.from_callable(lambda P: np.exp(-np.sum(P**2, -1)), 48, 5.0)
    assert lp_norm(fld, 2) == pytest.approx((np.pi / 2) ** 0.75, rel=1e-8)


def test_request_validation():
    with pytest.raises(DomainError):
        NormRequest(GAUSS, 0.5)
    with pytest.raises(DomainError):
        NormRequest(GAUSS, math.inf, flavor="WEAK-LORENTZ")
    assert compute_norm(NormRequest(BALL, 2.0, flavor="WEAK-LORENTZ")) == pytest.approx(weak_lorentz_norm(BALL, 2.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(1.0, 6.0), st.booleans())
def test_homogeneity(c, p, weak):
    f = RadialFunction.from_callable(GAUSS, RadialGrid.geometric(6.0))
    norm = (lambda g: weak_lorentz_norm(g, p)) if weak else (lambda g: lp_norm(g, p))
    scaled = RadialFunction(f.grid, c * f.values)
    assert norm(scaled) == pytest.approx(c * norm(f), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 6.0))
def test_weak_below_strong(q):
    f = RadialFunction.from_callable(GAUSS, RadialGrid.geometric(6.0))
    assert weak_lorentz_norm(f, q) <= lp_norm(f, q) * (1 + 1e-12)
