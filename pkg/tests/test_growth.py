import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscine.growth import (
    BOUNDED,
    EXPONENTIAL,
    INCONCLUSIVE,
    POLYNOMIAL,
    Envelope,
    NormSeries,
    fit_growth,
    sandwich_check,
)

T = np.linspace(1, 100, 400)


@given(st.floats(0.5, 4.0), st.floats(0.1, 10.0))
def test_power_law_recovered(p, c):
    rep = fit_growth(NormSeries(T, c * T**p))
    assert rep.kind == POLYNOMIAL
    assert rep.exponent == pytest.approx(p, abs=1e-10)
    assert rep.prefactor == pytest.approx(c, rel=1e-8)


@given(st.floats(0.05, 0.5))
def test_exponential_recovered(lam):
    t = np.linspace(0, 30, 300)
    rep = fit_growth(NormSeries(t, 2.0 * np.exp(lam * t)))
    assert rep.kind == EXPONENTIAL and rep.exponent == pytest.approx(lam, abs=1e-10)


def test_bounded_oscillation():
    rep = fit_growth(NormSeries(T, 2.0 + 0.01 * np.sin(T)))
    assert rep.kind == BOUNDED


def test_inconclusive_for_wild_series():
    rng = np.random.default_rng(0)
    rep = fit_growth(NormSeries(T, T * np.exp(rng.normal(0, 1, T.size))))
    assert rep.kind == INCONCLUSIVE


def test_mixed_polynomial_has_exponent_between():
    t = np.linspace(50, 200, 400)
    rep = fit_growth(NormSeries(t, t**2 + 10 * t), window=(50, 200))
    assert 1.85 < rep.exponent < 2.0


def test_default_window_drops_transient():
    rep = fit_growth(NormSeries(T, T**2))
    assert rep.window[0] == pytest.approx(1 + 0.2 * 99)


def test_series_validation(tmp_path):
    with pytest.raises(ValueError):
        NormSeries([1, 1], [1, 2])
    with pytest.raises(ValueError):
        NormSeries([1, 2], [1, -2])
    s = NormSeries(T, T**2)
    s.write_csv(tmp_path / "s.csv")
    s2 = NormSeries.read_csv(tmp_path / "s.csv")
    assert np.array_equal(s.values, s2.values)
    with pytest.raises(ValueError):
        fit_growth(s, window=(1.0, 1.1))


def test_report_json():
    d = json.loads(fit_growth(NormSeries(T, T**2)).to_json())
    assert set(d) == {"class", "exponent", "prefactor", "window", "residual"}


def test_sandwich():
    s = NormSeries(T, T**2 * (1.5 + 0.4 * np.sin(T)))
    env = Envelope.power(2.0, constant=0.0)
    res = sandwich_check(s, env, env)
    assert res.passed and res.c == pytest.approx(1.1, abs=0.01) and res.C == pytest.approx(1.9, abs=0.01)
    assert res.margin > 1
    cubic = Envelope.power(3.0, constant=0.0)
    bad = sandwich_check(s, cubic, cubic, slack=10)
    assert not bad.passed


def test_envelope_exponential_and_positivity():
    e = Envelope(constant=1.0, rate=0.3)
    assert e(10.0) == pytest.approx(np.exp(3.0))
    with pytest.raises(ValueError):
        sandwich_check(NormSeries(T, T), Envelope(constant=-1.0), e)
