"""
Exact propagators of the reduced (constant-coefficient) equations on a grid.

    Stark:      i v_t = -(kappa/2) x^2 v - i iota v_x
    dilation:   v(t, x) = exp(-lambda t / 2) v0(exp(-lambda t) x)
    transport:  v(t, x) = v0(x - iota t)

Each returns a new ``GridState`` whose grid is moved (shifted or scaled)
with the solution, so samples never need interpolation.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .grid import GridState, WindowOverflow
from .polynomials import derivative_polynomials


def stark_phase(kappa, iota, t, y):
    """``Phi = kappa (t y^2/2 + iota t^2 y/2 + iota^2 t^3/6)``, y = x - iota t."""
    return kappa * (0.5 * t * y * y + 0.5 * iota * t * t * y + iota * iota * t**3 / 6.0)


def stark_evolve_closed_form(u0: GridState, kappa, iota, t, check=True):
    """``v(t, x) = exp(i Phi(t, x - iota t)) u0(x - iota t)`` on the grid shifted by iota t.

    With ``check`` the phase must stay resolved: the largest local
    wavenumber on the support of u0 plus the bandwidth of u0 must remain
    below the Nyquist limit, otherwise ``WindowOverflow`` is raised.
    """
    y = u0.x
    if check:
        mag = np.abs(u0.samples)
        supp = mag > 1e-12 * mag.max()
        k_phase = np.abs(kappa * (t * y[supp] + 0.5 * iota * t * t)).max(initial=0.0)
        if k_phase + u0.bandwidth() >= np.pi / u0.dx:
            raise WindowOverflow(
                f"Stark phase at t={t} needs wavenumber {k_phase:.3g}; grid resolves {np.pi / u0.dx:.3g}"
            )
    v = np.exp(1j * stark_phase(kappa, iota, t, y)) * u0.samples
    return GridState(v, u0.x_min + iota * t, u0.dx)


def dilation_evolve(u0: GridState, lam, t):
    if lam <= 0:
        raise ValueError("lambda must be positive")
    g = np.exp(lam * t)
    return GridState(u0.samples / np.sqrt(g), u0.x_min * g, u0.dx * g)


def transport_evolve(u0: GridState, iota, t):
    return GridState(u0.samples, u0.x_min + iota * t, u0.dx)


def fourier_transform(u: GridState):
    """``u^(xi) = int exp(-2 pi i x xi) u(x) dx`` on the dual grid (centred, ascending)."""
    M = u.M
    dxi = 1.0 / (M * u.dx)
    xi = np.fft.fftshift(np.fft.fftfreq(M, u.dx))
    uh = u.dx * np.exp(-2j * np.pi * xi * u.x_min) * np.fft.fftshift(np.fft.fft(u.samples))
    return GridState(uh, float(xi[0]), dxi)


def stark_fourier_parameters(a):
    """``(kappa, iota)`` of the Fourier-side equation for ``-d^2/dx^2 + a x``.

    ``i v_t = 4 pi^2 xi^2 v + i (a / 2 pi) v_xi`` is the Stark equation with
    ``kappa = -8 pi^2`` and ``iota = -a / (2 pi)``.
    """
    return -8.0 * np.pi**2, -a / (2.0 * np.pi)


def stark_weighted_moment(u0: GridState, a, s, t, method="polynomial"):
    """``|| x^s exp(-i t (-d^2/dx^2 + a x)) u0 ||`` for integer ``s >= 0``.

    On the Fourier side ``x^s`` becomes ``(i / 2 pi)^s d^s/dxi^s`` and the
    evolution is the closed-form Stark flow, so

        d^s v = exp(i Phi) sum_a C(s, a) P_{2a}(t, y) v0^{(s - a)}(y).

    ``method='polynomial'`` evaluates this on the unshifted y-grid (the
    oscillating phase is never sampled); ``method='direct'`` builds the
    evolved transform and differentiates it spectrally, which needs the
    phase to be resolved and serves as a cross-check.
    """
    s = int(s)
    if s < 0:
        raise ValueError("s must be a non-negative integer")
    kappa, iota = stark_fourier_parameters(a)
    v0 = fourier_transform(u0)
    if method == "direct":
        v = stark_evolve_closed_form(v0, kappa, iota, t)
        dv = v.derivative(s) if s else v.samples
        return float(np.sqrt(v.dx * np.sum(np.abs(dv) ** 2)) / (2.0 * np.pi) ** s)
    if method != "polynomial":
        raise ValueError(f"unknown method {method!r}")
    return stark_derivative_norm(v0, kappa, iota, s, t) / (2.0 * np.pi) ** s


def stark_derivative_norm(u0: GridState, kappa, iota, s, t):
    """``|| d^s/dx^s v(t) ||`` for the closed-form Stark evolution of ``u0``.

    Uses ``d^s v = exp(i Phi) sum_a C(s, a) P_{2a}(t, y) u0^{(s - a)}(y)``
    on the grid of u0, so the result does not depend on resolving the
    phase.  Integer ``s >= 0``.
    """
    s = int(s)
    P = derivative_polynomials(s, kappa, iota)
    y = u0.x
    total = np.zeros(u0.M, dtype=complex)
    for al in range(s + 1):
        deriv = u0.derivative(s - al) if s - al else u0.samples
        total += comb(s, al) * P[al](t, y) * deriv
    return float(np.sqrt(u0.dx * np.sum(np.abs(total) ** 2)))
