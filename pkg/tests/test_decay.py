import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deltadisp.config import INERT
from deltadisp.decay import (DecayRow, DecayTable, NormSide, conjecture_family, dual_exponent, eval_formula,
                             fit_decay, load_presets, predicted_exponent, resolve_preset, shifted_windows)
from deltadisp.errors import ConfigError, DomainError

from tests.tables import table


def _synthetic(slope, ts=tuple(2.0**k for k in range(7)), amp=3.0, tail=0.0):
    rows = tuple(DecayRow(t, amp * t**slope * (1 + tail / t), 1.0) for t in ts)
    return DecayTable(rows, 1.0, math.inf, NormSide(), NormSide(), "FULL", "GENERIC", 1.0)


def test_predicted_exponents():
    assert predicted_exponent(1.0, math.inf, "GENERIC") == -1.5
    assert predicted_exponent(2.0, 2.0, "GENERIC") == 0.0
    assert predicted_exponent(1.0, math.inf, "RESONANT") == -0.5
    assert predicted_exponent(4 / 3, 4.0, "RESONANT-WEIGHTED-EPS", eps=0.1) == pytest.approx(-0.475)
    assert predicted_exponent(5 / 3, 2.5, "GENERIC") == pytest.approx(-0.3)
    with pytest.raises(DomainError) as e:
        predicted_exponent(1.5, 2.5, "GENERIC")
    assert e.value.code == "NON-DUAL"
    with pytest.raises(ValueError):
        predicted_exponent(1.0, math.inf, "OTHER")


def test_dual_exponent():
    assert dual_exponent(math.inf) == 1.0
    assert dual_exponent(4.0) == pytest.approx(4 / 3)


@pytest.mark.parametrize("case", ["GENERIC", "RESONANT"])
def test_exponents_monotone_in_q(case):
    qs = [2.0, 2.25, 2.5, 3.0, 4.0, math.inf]
    ex = [predicted_exponent(dual_exponent(q), q, case) for q in qs]
    assert all(b < a for a, b in zip(ex[:-1], ex[1:]))


def test_exact_power_law_fit():
    fit = fit_decay(_synthetic(-0.75), predicted=-0.75)
    assert fit.slope == pytest.approx(-0.75, abs=1e-12)
    assert fit.stderr < 1e-12
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.verdict == "PASS" and fit.bound_ok


def test_window_selects_asymptotics():
    tab = _synthetic(-1.0, tail=2.0)
    full = fit_decay(tab).slope
    late = fit_decay(tab, (4.0, 64.0)).slope
    assert abs(late + 1.0) < abs(full + 1.0)


def test_faster_decay_is_within_bound():
    fit = fit_decay(_synthetic(-1.0), predicted=-0.5)
    assert fit.verdict == "FAIL" and fit.bound_ok


def test_too_few_points():
    with pytest.raises(DomainError) as e:
        fit_decay(_synthetic(-1.0), (1.0, 4.0))
    assert e.value.code == "TOO-FEW-POINTS"
    with pytest.raises(DomainError):
        fit_decay(_synthetic(-1.0), (0.5, 4.0))


def test_divergent_rows_excluded():
    tab = _synthetic(-1.0)
    rows = tab.rows[:2] + (DecayRow(4.0, math.inf, 1.0, "DIVERGENT", "SINGULAR-POINT"),) + tab.rows[3:]
    tab = DecayTable(rows, 1.0, math.inf, NormSide(), NormSide(), "FULL", "GENERIC", 1.0)
    fit = fit_decay(tab)
    assert fit.n_points == 6 and fit.slope == pytest.approx(-1.0)
    assert tab.describe()["excluded"] == [{"t": 4.0, "reason": "SINGULAR-POINT"}]


def test_csv_round_trip():
    lines = _synthetic(-1.0).to_csv().splitlines()
    assert lines[0] == "t,norm_left,norm_right,ratio,status"
    assert float(lines[2].split(",")[1]) == 1.5


def test_eval_formula():
    assert eval_formula("1 - (3 - eps)/q", q=4.0, eps=0.1) == pytest.approx(0.275)
    assert eval_formula("-(1 - 2/q)", q=math.inf) == -1.0
    for bad in ("__import__('os')", "abs(q)", "q.real", "[q]"):
        with pytest.raises(ConfigError):
            eval_formula(bad, q=2.0)


@settings(max_examples=60)
@given(st.floats(3.0, 1e6), st.floats(0.0, 0.5))
def test_pform_equals_printed_power_for_dual_pairs(q, eps):
    d = load_presets()["PRESET-25"]
    p = dual_exponent(q)
    printed = eval_formula(d["right"]["power"], p=p, q=q, eps=eps)
    pform = eval_formula(d["variants"]["PFORM"]["right"]["power"], p=p, q=q, eps=eps)
    assert pform == pytest.approx(printed, abs=1e-12)


def test_preset_resolution():
    rp = resolve_preset("PRESET-17", 0.0)
    assert rp.case == "RESONANT" and rp.q == 4.0 and rp.p == pytest.approx(4 / 3)
    assert rp.left.power == pytest.approx(-0.5) and rp.right.power == pytest.approx(0.5)
    assert resolve_preset("PRESET-17", 1.0).case == "GENERIC"
    assert resolve_preset("PRESET-42", 0.0, eps=0.3).eps == 0.0
    assert "CONSTANT-WEIGHT: w_3 = 2" in resolve_preset("PRESET-41", 1.0, 3.0).flags
    assert resolve_preset("PRESET-41", 1.0).exploratory


@pytest.mark.parametrize("args,code", [
    (("PRESET-99", 1.0), "UNKNOWN-PRESET"),
    (("PRESET-18", 1.0), "PRESET-ALPHA"),
    (("PRESET-16", 0.0), "PRESET-ALPHA"),
    (("PRESET-16", INERT), "PRESET-ALPHA"),
    (("PRESET-23", 1.0, 3.0), "Q-RANGE"),
    (("PRESET-25", 1.0, 2.5), "Q-RANGE"),
])
def test_preset_errors(args, code):
    with pytest.raises((ConfigError, DomainError)) as e:
        resolve_preset(*args)
    assert e.value.code == code


def test_unknown_variant():
    with pytest.raises(ConfigError):
        resolve_preset("PRESET-16", 1.0, variant="PFORM")


@pytest.mark.parametrize("q", [3.0, 4.0, math.inf])
def test_conjecture_family(q):
    labels = [f[0] for f in conjecture_family(1.0, q)]
    assert labels[0] == "CONJ-Q/STRONG" and labels[-1] == "LOCAL-CUTOFF"
    assert ("CONJ-Q/WEAK-LORENTZ" in labels) == (not math.isinf(q))
    assert sum(l.startswith("ALMOST-OPTIMAL") for l in labels) == 3


@pytest.mark.parametrize("key", [(1.0, 5 / 3, 2.5, False, "AC"), (0.0, 1.0, math.inf, True, "FULL", "RESONANT")])
def test_fit_stable_under_window_shift(key):
    tab = table(*key)
    slopes = [fit_decay(tab, w).slope for w in shifted_windows(tab)]
    assert len(slopes) >= 2
    assert max(slopes) - min(slopes) < 0.03
