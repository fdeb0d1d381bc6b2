import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscine.quantum.grid import GridState, WindowOverflow, derivative_norm, grid_sobolev_norm, l2_norm, weighted_norm
from oscine.quantum.normal_forms import (
    dilation_evolve,
    fourier_transform,
    stark_derivative_norm,
    stark_evolve_closed_form,
    stark_fourier_parameters,
    stark_weighted_moment,
    transport_evolve,
)


def packet(q=0.3, p=0.4, M=4096, window=(-60.0, 60.0)):
    return GridState.from_function(lambda x: np.pi**-0.25 * np.exp(-0.5 * (x - q) ** 2 + 1j * p * x), M, window)


def test_stark_closed_form_solves_equation():
    """Check i v_t = -(kappa/2) x^2 v - i iota v_x by differencing in time on a common grid."""
    k, i, t, h = 0.4, 0.7, 1.3, 1e-4
    u0 = packet()
    vp, vm, v = (stark_evolve_closed_form(u0, k, i, s) for s in (t + h, t - h, t))
    # Bring the neighbours onto v's grid by exact spectral translation.
    def onto(w):
        shift = w.x_min - v.x_min
        kk = w.wavenumbers()
        return np.fft.ifft(np.exp(-1j * kk * shift) * np.fft.fft(w.samples))
    vt = (onto(vp) - onto(vm)) / (2 * h)
    rhs = -0.5 * k * v.x**2 * v.samples - 1j * i * v.derivative(1)
    assert np.abs(1j * vt - rhs).max() < 1e-6 * np.abs(rhs).max()


def test_stark_unitary_and_window_check():
    u0 = packet()
    v = stark_evolve_closed_form(u0, 0.5, 1.0, 3.0)
    assert abs(l2_norm(v) - l2_norm(u0)) < 1e-14
    with pytest.raises(WindowOverflow):
        stark_evolve_closed_form(u0, 0.5, 1.0, 40.0)


def test_stark_derivative_norm_matches_spectral():
    u0 = packet(M=8192, window=(-80, 80))
    for t in (0.5, 2.0):
        v = stark_evolve_closed_form(u0, 0.5, -1.0, t)
        for s in (1, 2, 3):
            assert stark_derivative_norm(u0, 0.5, -1.0, s, t) == pytest.approx(derivative_norm(v, s), rel=1e-9)


def test_weighted_moment_two_representations():
    u0 = packet(M=8192, window=(-80, 80))
    for s in (0, 1, 2, 3):
        for t in (0.5, 2.0):
            a = stark_weighted_moment(u0, 2.0, s, t)
            b = stark_weighted_moment(u0, 2.0, s, t, method="direct")
            assert a == pytest.approx(b, rel=1e-6)


def test_weighted_moment_heisenberg():
    """For the ground state <x^2>(t) = a^2 t^4 + 2 t^2 + 1/2 under -d^2 + a x."""
    u0 = GridState.hermite(0)
    for t in (1.0, 5.0, 20.0):
        m = stark_weighted_moment(u0, 2.0, 1, t)
        assert m**2 == pytest.approx(4 * t**4 + 2 * t**2 + 0.5, rel=1e-10)


def test_weighted_moment_independent_evolution():
    """Short-time split-step solution of i u_t = -u_xx + a x u as an independent check."""
    a, T, n = 1.0, 1.0, 4000
    u = packet(q=0.0, p=0.0, M=4096, window=(-40, 40))
    k = u.wavenumbers()
    x = u.x
    dt = T / n
    w = u.samples.copy()
    half = np.exp(-0.5j * dt * a * x)
    kin = np.exp(-1j * dt * k**2)
    for _ in range(n):
        w = half * np.fft.ifft(kin * np.fft.fft(half * w))
    ref = np.sqrt(u.dx * np.sum(x**2 * np.abs(w) ** 2))
    assert stark_weighted_moment(u, a, 1, T) == pytest.approx(ref, rel=1e-5)


def test_fourier_transform_gaussian():
    u = GridState.hermite(0, 2048, (-30, 30))
    uh = fourier_transform(u)
    expect = np.pi**-0.25 * np.sqrt(2 * np.pi) * np.exp(-2 * np.pi**2 * uh.x**2)
    assert np.abs(uh.samples - expect).max() < 1e-12
    assert l2_norm(uh) == pytest.approx(1.0, abs=1e-12)


def test_fourier_parameters():
    kappa, iota = stark_fourier_parameters(2.0)
    assert kappa == pytest.approx(-8 * np.pi**2) and iota == pytest.approx(-1 / np.pi)


@given(st.floats(0.05, 1.0), st.floats(-5, 5))
def test_dilation_group_and_unitarity(lam, t):
    u0 = packet(M=512, window=(-20, 20))
    v = dilation_evolve(u0, lam, t)
    assert abs(l2_norm(v) - 1.0) < 1e-12
    back = dilation_evolve(v, lam, -t)
    assert np.allclose(back.samples, u0.samples, atol=1e-13)
    assert back.dx == pytest.approx(u0.dx, rel=1e-13)


def test_dilation_norm_growth():
    u0 = packet(q=0.0, p=0.0)
    v = dilation_evolve(u0, 0.3, 10.0)
    assert weighted_norm(v, 1) == pytest.approx(np.exp(3.0) * weighted_norm(u0, 1), rel=1e-12)
    assert derivative_norm(v, 1) == pytest.approx(np.exp(-3.0) * derivative_norm(u0, 1), rel=1e-10)
    with pytest.raises(ValueError):
        dilation_evolve(u0, -0.1, 1.0)


def test_transport():
    u0 = packet()
    v = transport_evolve(u0, 1.5, 2.0)
    assert v.x_min == pytest.approx(u0.x_min + 3.0)
    assert grid_sobolev_norm(v, 0) == pytest.approx(1.0)
