from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import dawsn

from deltadisp.errors import DomainError
from deltadisp.pitt import (LineSamples, PittInstance, fourier_transform_line, make_corpus, pitt_blowup_demo,
                            pitt_ratio, pitt_scan)

BOUNDED = PittInstance.from_pq(Fraction(5, 3), Fraction(5, 2))


def test_instance_is_exact():
    assert BOUNDED.b == Fraction(1, 5)
    assert BOUNDED.beta == Fraction(-1, 5)
    assert BOUNDED.describe() == {"gamma": "5/3", "eta": "5/2", "b": "1/5", "beta": "-1/5"}


@given(st.fractions(Fraction(201, 100), Fraction(299, 100)))
def test_dual_beta(q):
    inst = PittInstance.from_pq(q / (q - 1), q)
    assert inst.beta == (2 - q) / q


def test_hypotheses():
    with pytest.raises(DomainError):
        PittInstance.from_pq(Fraction(7, 5), Fraction(7, 2))
    inst = PittInstance.from_pq(Fraction(7, 5), Fraction(7, 2), checked=False)
    assert inst.b == Fraction(3, 7)
    with pytest.raises(DomainError):
        PittInstance(2, 1.5, 0.1)


def test_half_line_gaussian_transform():
    h = LineSamples.from_callable(lambda x: np.exp(-x**2), 8.0)
    xi = np.array([0.0, 1.0, 3.0, 10.0])
    exact = np.sqrt(np.pi) / 2 * np.exp(-xi**2 / 4) - 1j * dawsn(xi / 2)
    assert np.max(np.abs(fourier_transform_line(h, xi) - exact)) < 1e-12


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.5, 2.0))
def test_ratio_invariances(c, lam):
    h = LineSamples.from_callable(lambda x: np.exp(-(x - 4) ** 2), 10.0)
    base = pitt_ratio(BOUNDED, h)
    assert pitt_ratio(BOUNDED, h.scaled(c)) == pytest.approx(base, rel=1e-10)
    dil = LineSamples.from_callable(lambda x: np.exp(-(lam * x - 4) ** 2), 10.0 / lam)
    assert pitt_ratio(BOUNDED, dil) == pytest.approx(base, rel=1e-6)


def test_zero_denominator():
    with pytest.raises(DomainError) as e:
        pitt_ratio(BOUNDED, LineSamples.from_callable(lambda x: 0 * x, 1.0))
    assert e.value.code == "ZERO-DENOMINATOR"


def test_corpus_seeded():
    a, b = make_corpus(7, 6), make_corpus(7, 6)
    assert [e.params for e in a] == [e.params for e in b]
    assert [e.kind for e in a] == ["gauss", "chirp", "bump"] * 2


def test_small_scan():
    s = pitt_scan(7, 6, Fraction(5, 3), Fraction(5, 2), refinements=1)
    assert s.max_ratio == pytest.approx(2.4626030348617696, rel=1e-9)
    assert s.refinement_delta < 1e-10


def test_scan_rejects_unbounded_regime():
    inst = PittInstance.from_pq(Fraction(7, 5), Fraction(7, 2), checked=False)
    with pytest.raises(DomainError) as e:
        pitt_scan(1, 3, Fraction(7, 5), Fraction(7, 2), instance=inst)
    assert e.value.code == "REGIME"


def test_concentration_bounded_below_three():
    r = pitt_blowup_demo(Fraction(5, 2))
    assert max(r) / min(r) < 1.001
    assert r[0] == pytest.approx(2.3722824396599784, rel=1e-9)
