import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import deltadisp.propagator as prop
from deltadisp.config import InteractionConfig, RadialFunction, RadialGrid
from deltadisp.errors import ConvergenceError, DomainError, ResolutionError
from deltadisp.propagator import (EvolutionRequest, bound_overlap, evolve, free_propagator_radial,
                                  m_alpha_neg_correction, m_alpha_pos_correction, mr_correction, mr_integrand,
                                  output_grid, project_ac, radial_projection_norms, s_tail_bound)
from deltadisp.resolvent import random_blobs
from deltadisp.spectral import FOUR_PI, bound_state_n1

GRID = RadialGrid.geometric(8.0)
GAUSS = RadialFunction.from_callable(lambda r: np.exp(-r**2), GRID)


def _l2(grid, v):
    return math.sqrt(float(np.sum(grid.weights * np.abs(v) ** 2)))


@pytest.mark.parametrize("t", [0.3, 1.0, 5.0])
def test_free_flow_closed_form(t):
    out = output_grid(t)
    u = free_propagator_radial(GAUSS, t, out=out)
    exact = (1 + 4j * t) ** -1.5 * np.exp(-out.nodes**2 / (1 + 4j * t))
    assert _l2(out, u.values - exact) / _l2(out, exact) < 1e-12


def test_free_flow_composition():
    t1, t2 = 0.5, 0.7
    og = output_grid(t1, r_max=40.0)
    mid = free_propagator_radial(GAUSS, t1, out=RadialGrid(np.linspace(0, 60, 1201), 12))
    two = free_propagator_radial(mid, t2, out=og)
    one = free_propagator_radial(GAUSS, t1 + t2, out=og)
    assert _l2(og, two.values - one.values) / one.norm() < 1e-10


@pytest.mark.parametrize("alpha", [1.0, 0.0, -1.0])
def test_unitarity(alpha):
    u = evolve(EvolutionRequest(InteractionConfig.single(alpha), GAUSS, 1.0)).output
    assert u.norm() == pytest.approx(GAUSS.norm(), rel=1e-5)


def test_bound_state_phase():
    alpha = -1.0
    psi = bound_state_n1(alpha)
    t = 0.01
    out = RadialGrid.geometric(1.5)
    u = evolve(EvolutionRequest(InteractionConfig.single(alpha), psi, t, out_grid=out)).output
    expect = np.exp(1j * t * (FOUR_PI * alpha) ** 2) * psi(out.nodes)
    keep = out.nodes > 1e-3
    assert np.max(np.abs(u.values[keep] - expect[keep])) < 1e-10 * np.max(np.abs(expect[keep]))


def test_ac_projection():
    alpha = -1.0
    psi = bound_state_n1(alpha)
    assert bound_overlap(alpha, psi) == pytest.approx(1.0, abs=1e-12)
    assert abs(bound_overlap(alpha, project_ac(alpha, psi))) < 1e-12
    assert project_ac(1.0, GAUSS) is GAUSS


def test_ac_evolution_of_bound_state_vanishes():
    psi = bound_state_n1(-1.0)
    res = evolve(EvolutionRequest(InteractionConfig.single(-1.0), psi, 0.5, projection="AC"))
    assert res.output.norm() < 1e-8


def test_large_alpha_tends_to_free():
    out = RadialGrid.geometric(12.0)
    free = free_propagator_radial(GAUSS, 1.0, R=6.0, out=out)
    c = [(evolve(EvolutionRequest(InteractionConfig.single(a), GAUSS, 1.0, R=6.0, out_grid=out)).output - free).norm()
         for a in (10.0, 100.0)]
    assert c[1] < c[0]
    assert c[0] / c[1] == pytest.approx(10.0, rel=0.05)


@pytest.mark.parametrize("alpha,projection", [(0.0, "FULL"), (1.5, "FULL"), (-0.7, "FULL"), (-0.7, "AC")])
def test_merged_evolution_matches_separate_terms(alpha, projection):
    t, R = 2.0, 6.0
    r = output_grid(t).nodes
    got = evolve(EvolutionRequest(InteractionConfig.single(alpha), GAUSS, t, R=R, projection=projection)).output.values
    f = project_ac(alpha, GAUSS) if projection == "AC" else GAUSS
    ref = free_propagator_radial(f, t, R=R, out=r) + mr_correction(f, t, R, out=r)
    if alpha > 0:
        ref = ref + m_alpha_pos_correction(f, t, R, alpha, out=r)[0]
    elif alpha < 0:
        ref = ref + m_alpha_neg_correction(f, t, R, alpha, projection=projection, out=r)[0]
    assert np.max(np.abs(got - ref)) < 1e-12 * np.max(np.abs(ref))


def test_mr_integrand():
    assert mr_integrand(1.0, 0.5, 2.0, 1.0) == pytest.approx(2.0 * np.exp(1j * 2.25 / 4.0))


def test_tail_bound_reported():
    _, tail = m_alpha_pos_correction(GAUSS, 1.0, 5.0, 1.0, out=np.array([1.0]))
    assert tail == pytest.approx(s_tail_bound(1.0, prop.s_cut_default(1.0)))
    assert tail < 1e-12


def test_short_s_cut_rejected():
    with pytest.raises(ResolutionError) as e:
        m_alpha_pos_correction(GAUSS, 1.0, 5.0, 1.0, s_cut=0.1, out=np.array([1.0]))
    assert e.value.code == "TAIL-TOO-LARGE"


def test_budget(monkeypatch):
    monkeypatch.setattr(prop, "NODE_BUDGET", 10.0)
    with pytest.raises(ResolutionError) as e:
        free_propagator_radial(GAUSS, 1.0)
    assert e.value.code == "OSCILLATION-UNRESOLVED"


def test_escalation_limit():
    wide = RadialFunction.from_callable(lambda r: np.exp(-r**2 / 400), RadialGrid.geometric(200.0, max_width=1.0))
    with pytest.raises(ConvergenceError):
        evolve(EvolutionRequest(InteractionConfig.single(1.0), wide, 1.0, out_grid=RadialGrid.geometric(5.0)),
               max_doublings=0, rel_tol=1e-30)


def test_nonpositive_time():
    with pytest.raises(DomainError):
        EvolutionRequest(InteractionConfig.single(1.0), GAUSS, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**20), st.floats(1.0, 4.0))
def test_radial_projection_contracts(seed, p):
    f = random_blobs(np.random.default_rng(seed), 2)
    n1, n = radial_projection_norms(f, p, RadialGrid.geometric(6.0), n_theta=8, n_phi=16)
    assert n1 <= n * (1 + 1e-12)
