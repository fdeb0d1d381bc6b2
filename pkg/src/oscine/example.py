"""
Worked periodic example: the oscillator perturbed by

    W(t, x, xi) = -kappa/2 (cos t x - sin t xi)^2 - 2 iota cos t xi

with frequency omega = 1.  Everything here is closed form: the symbol
path, the classical system, its reduction to a parabolic normal form and
the exact flow.
"""

from __future__ import annotations

import numpy as np

from .classical import AffineSystem, build_symbol_system, solve_parabolic
from .qpfourier import FrequencyVector, QpFourierSeries

FREQ = FrequencyVector(np.array([1.0]))


def symbol_coefficients(kappa, iota):
    """Series ``(a20, a11, a02, b1, b2)`` of the perturbation.

    ``W = 1/2 (a20 x^2 + 2 a11 x xi + a02 xi^2) + b1 x + b2 xi`` with
    ``a20 = -kappa cos^2 t``, ``a11 = kappa cos t sin t``, ``a02 = -kappa sin^2 t``,
    ``b1 = 0`` and ``b2 = -2 iota cos t``.  Integer harmonics m are stored
    as k = 2m.
    """
    f = FREQ
    half = QpFourierSeries.constant(f, 0.5)
    cos2 = half + QpFourierSeries.cosine(f, 4, 0.5)  # cos^2 t
    sin2 = half - QpFourierSeries.cosine(f, 4, 0.5)  # sin^2 t
    sc = QpFourierSeries.sine(f, 4, 0.5)  # sin t cos t
    return (
        -kappa * cos2,
        kappa * sc,
        -kappa * sin2,
        QpFourierSeries.zero(f),
        QpFourierSeries.cosine(f, 2, -2.0 * iota),
    )


def system(kappa, iota) -> AffineSystem:
    """Classical equations of motion of ``(x^2 + xi^2)/2 + W``."""
    return build_symbol_system(1.0, *symbol_coefficients(kappa, iota))


def rotating_frame_drift(iota):
    """Drift after ``X = exp(-tJ) Xt``: ``-2 iota cos t (cos t, sin t)``."""
    f = FREQ
    p1 = QpFourierSeries.constant(f, -iota) + QpFourierSeries.cosine(f, 4, -iota)
    p2 = QpFourierSeries.sine(f, 4, -iota)
    return p1, p2


def reduction(kappa, iota):
    """Parabolic reduction of the rotating-frame system ``Xt' = [[0,0],[kappa,0]] Xt + p``."""
    return solve_parabolic(*rotating_frame_drift(iota), kappa)


def _rot(t):
    """``exp(-tJ)`` for an array of times, shape (n, 2, 2)."""
    c, s = np.cos(t), np.sin(t)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def exact_flow(kappa, iota, X0, t):
    """Closed-form solution ``X(t)`` with ``X(0) = X0``; shape (n, 2)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x0, xi0 = np.asarray(X0, dtype=float)
    c, s = np.cos(t), np.sin(t)
    xs = x0 - iota * t
    xis = xi0 + kappa * x0 * t - 0.5 * kappa * iota * t**2
    inner = np.stack([xs - iota * s * c, xis - (0.5 * kappa * iota + iota) * s**2], -1)
    return np.einsum("nij,nj->ni", _rot(t), inner)


def exact_fundamental_matrix(kappa, t):
    """``Phi(t) = exp(-tJ) [[1, 0], [kappa t, 1]]``; shape (n, 2, 2)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    shear = np.zeros((t.size, 2, 2))
    shear[:, 0, 0] = shear[:, 1, 1] = 1.0
    shear[:, 1, 0] = kappa * t
    return _rot(t) @ shear


def exact_solution_map(kappa, iota):
    """Callable ``t -> (Phi(t), d(t))`` with ``X(t) = Phi(t) X(0) + d(t)``."""

    def solution(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return exact_fundamental_matrix(kappa, t), exact_flow(kappa, iota, (0.0, 0.0), t)

    return solution


def reduced_parameters(kappa, iota):
    """``(kappa, iota_eff)`` of the reduced Stark system; ``iota_eff = -iota``."""
    return kappa, reduction(kappa, iota).iota
