import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from deltadisp.config import INERT, InteractionConfig
from deltadisp.errors import DomainError
from deltadisp.spectral import (FOUR_PI, _gamma_imag_axis, assumption1_scan, bound_state_n1, build_gamma,
                                find_poles, spectral_report)


def test_single_center_eigenvalue():
    poles = find_poles(InteractionConfig.single(-1.0))
    assert len(poles) == 1 and poles[0].multiplicity == 1
    assert poles[0].eigenvalue == pytest.approx(-157.91367041742973, abs=1e-8)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 3.0, INERT])
def test_no_poles_without_negative_strength(alpha):
    assert find_poles(InteractionConfig.single(alpha)) == []


def test_two_centers_match_brentq():
    cfg = InteractionConfig(np.array([[0, 0, 0], [1.0, 0, 0]]), (-0.2, -0.2))
    d = 1.0

    def even(lam):
        return -0.2 + lam / FOUR_PI - math.exp(-lam * d) / (FOUR_PI * d)

    def odd(lam):
        return -0.2 + lam / FOUR_PI + math.exp(-lam * d) / (FOUR_PI * d)

    expect = sorted(r for r in (brentq(even, 1e-9, 50), brentq(odd, 1e-9, 50)))
    got = [p.lam for p in find_poles(cfg)]
    assert got == pytest.approx(expect, abs=1e-11)


def test_symmetric_triangle_multiplicity():
    s = 1.0
    pts = np.array([[0, 0, 0], [s, 0, 0], [s / 2, s * math.sqrt(3) / 2, 0]])
    cfg = InteractionConfig(pts, (-0.3,) * 3)
    mult = sorted(p.multiplicity for p in find_poles(cfg))
    assert mult == [1, 2]


def test_gamma_entries():
    cfg = InteractionConfig(np.array([[0, 0, 0], [2.0, 0, 0]]), (1.0, INERT))
    g = build_gamma(cfg, 1j)
    assert g.size == 1 and g.entries[0, 0] == pytest.approx(1.0 + 1 / FOUR_PI)


def test_bound_state_positive_alpha():
    with pytest.raises(DomainError) as e:
        bound_state_n1(0.5)
    assert e.value.code == "POSITIVE-ALPHA"


@pytest.mark.parametrize("alpha", [-0.1, -1.0, -5.0])
def test_bound_state_normalized(alpha):
    assert bound_state_n1(alpha).norm() == pytest.approx(1.0, abs=1e-8)


def test_assumption_scan_resonance():
    assert not assumption1_scan(InteractionConfig.single(0.0), 5.0).assumption1_ok
    assert assumption1_scan(InteractionConfig.single(1.0), 5.0).assumption1_ok


def test_report_dict():
    d = spectral_report(InteractionConfig.single(-1.0)).to_dict()
    assert set(d) == {"poles", "eigenvalues", "multiplicities", "lambda_max", "assumption1_ok", "threshold"}


configs = st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.floats(-3, 3), min_size=3, max_size=3), min_size=n, max_size=n),
    st.lists(st.floats(-1, 1), min_size=n, max_size=n)))


def _cfg(data):
    pts, alphas = data
    pts = np.array(pts)
    if len(pts) > 1:
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)[np.triu_indices(len(pts), 1)]
        if d.min() < 0.05:
            return None
    return InteractionConfig(pts, tuple(alphas))


@settings(max_examples=200, deadline=None)
@given(configs)
def test_pole_count_at_most_n(data):
    cfg = _cfg(data)
    if cfg is None:
        return
    poles = find_poles(cfg)
    assert sum(p.multiplicity for p in poles) <= cfg.n


@settings(max_examples=50, deadline=None)
@given(configs, st.floats(0.01, 20))
def test_gamma_symmetric_on_imaginary_axis(data, lam):
    cfg = _cfg(data)
    if cfg is None:
        return
    g = build_gamma(cfg, 1j * lam).entries
    assert np.allclose(g, g.T, atol=1e-14)
    assert np.max(np.abs(g.imag)) < 1e-14
    _, alpha = cfg.centers, np.array(cfg.strengths)
    dist = np.linalg.norm(cfg.centers[:, None] - cfg.centers[None], axis=-1)
    assert np.allclose(_gamma_imag_axis(alpha, dist, lam), g.real, atol=1e-14)
