import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscine import example
from oscine.quantum.gaussian import GaussianPacket, TailOverflow, affine_solution_map, coherent_oracle
from oscine.quantum.hermite import SymbolPath, hermite_functions, propagate


def quadrature_coefficients(packet, N, L=25.0, M=20001):
    x = np.linspace(packet.q - L, packet.q + L, M)
    return (hermite_functions(N, x) * packet(x)).sum(1) * (x[1] - x[0])


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-1, 1), st.floats(0.3, 2))
def test_hermite_coefficients_match_quadrature(q, p, re, im):
    g = GaussianPacket(q, p, complex(re, im))
    c = g.hermite_coefficients(400).coeffs[:50]
    assert np.abs(c - quadrature_coefficients(g, 50)).max() < 1e-10


def test_coherent_state_is_poisson():
    g = GaussianPacket(1.0, 0.5)
    alpha = (1.0 + 0.5j) / np.sqrt(2)
    c = g.hermite_coefficients(40).coeffs
    n = np.arange(40)
    from scipy.special import gammaln

    expect = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1))
    assert np.allclose(np.abs(c), expect, atol=1e-14)


def test_far_packet_no_underflow():
    g = GaussianPacket(30.0, -20.0, 0.05 + 0.3j)
    st_ = g.hermite_coefficients(16384)
    assert st_.norm() == pytest.approx(1.0, abs=1e-12)
    assert st_.sobolev_norm(1) ** 2 == pytest.approx(g.h1_norm_sq(), rel=1e-12)


def test_tail_overflow():
    with pytest.raises(TailOverflow):
        GaussianPacket(10.0, 0.0).hermite_coefficients(32)


def test_invalid_width():
    with pytest.raises(ValueError):
        GaussianPacket(0, 0, 1.0 + 0j)


def test_h1_norm_matches_grid():
    g = GaussianPacket(0.7, -1.1, 0.3 + 0.6j)
    x = -30 + 60 / 8000 * np.arange(8000)
    dx = x[1] - x[0]
    u = g(x)
    k = 2 * np.pi * np.fft.fftfreq(x.size, dx)
    du = np.fft.ifft(1j * k * np.fft.fft(u))
    assert np.sum(np.abs(du) ** 2 + x**2 * np.abs(u) ** 2) * dx == pytest.approx(g.h1_norm_sq(), rel=1e-10)
    assert np.sum(x**2 * np.abs(u) ** 2) * dx == pytest.approx(g.position_moment2(), rel=1e-10)


def test_numeric_solution_map_matches_exact():
    k, i = 0.5, 1.0
    num = affine_solution_map(example.system(k, i), 10.0, 0.5)
    ex = example.exact_solution_map(k, i)
    t = np.array([0.0, 2.5, 10.0])
    for a, b in zip(num(t), ex(t)):
        assert np.allclose(a, b, atol=1e-8)
    with pytest.raises(ValueError):
        num([0.3])


def test_oracle_against_propagator_short_time():
    k, i = 0.5, 1.0
    g = GaussianPacket(0.5, -0.3, 0.8 + 1.1j)
    path = SymbolPath(*example.symbol_coefficients(k, i))
    res = propagate(path, g.hermite_coefficients(128), 3.0, 0.01, keep_states=True, sample_every=1.0)
    exact = coherent_oracle(example.exact_solution_map(k, i), g, res.times)
    for st_, e in zip(res.states, exact):
        ref = e.hermite_coefficients(st_.N).coeffs
        assert abs(st_.sobolev_norm(1) - e.h1_norm()) / e.h1_norm() < 1e-5
        assert abs(np.vdot(ref, st_.coeffs)) > 1 - 1e-8
