"""
Gaussian wave packets.  Quadratic Hamiltonians map Gaussians to Gaussians,
so the classical solution map gives the exact quantum evolution up to a
global phase.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite import TAIL_BUDGET, HermiteState


class TailOverflow(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianPacket:
    """``psi = (Im G / pi)^(1/4) exp(i G/2 (x - q)^2 + i p (x - q))``, ``Im G > 0``."""

    q: float
    p: float
    Gamma: complex = 1j

    def __post_init__(self):
        if not np.imag(self.Gamma) > 0:
            raise ValueError("Im Gamma must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = x - self.q
        norm = (np.imag(self.Gamma) / np.pi) ** 0.25
        return norm * np.exp(0.5j * self.Gamma * y**2 + 1j * self.p * y)

    def evolve(self, Phi, X):
        """Packet after a linear canonical map ``Phi`` with new centre ``X``."""
        (A, B), (C, D) = np.asarray(Phi)
        G = self.Gamma
        return GaussianPacket(float(X[0]), float(X[1]), complex((C + D * G) / (A + B * G)))

    def h1_norm_sq(self):
        """``||u||_1^2 = <u, H0 u> = <x^2> + <xi^2>``."""
        G = self.Gamma
        return self.q**2 + self.p**2 + (1.0 + abs(G) ** 2) / (2.0 * G.imag)

    def h1_norm(self):
        return float(np.sqrt(self.h1_norm_sq()))

    def position_moment2(self):
        """``<x^2>``."""
        return self.q**2 + 1.0 / (2.0 * np.imag(self.Gamma))

    def hermite_coefficients(self, N, budget=TAIL_BUDGET):
        """``<phi_n, psi>`` for n < N via a three-term recursion.

        From ``(xi - G x) psi = (p - G q) psi`` with the ladder operators:
        ``(i + G) sqrt(n+1) c_{n+1} = (i - G) sqrt(n) c_{n-1} - sqrt 2 (p - G q) c_n``.
        The running values carry a separate log scale so that packets far
        from the origin (tiny c_0) are represented without underflow.
        Raises ``TailOverflow`` if the last N/8 coefficients carry more than
        ``budget`` of the norm or the captured mass differs from 1.
        """
        G, q, p = complex(self.Gamma), self.q, self.p
        a = 0.5 * (1.0 - 1j * G)
        b = 1j * p - 1j * G * q
        c = 0.5j * G * q * q - 1j * p * q
        log_c0 = 0.25 * np.log(G.imag / np.pi) - 0.25 * np.log(np.pi) + 0.5 * np.log(np.pi / a) + b * b / (4 * a) + c
        scale = log_c0.real
        out = np.zeros(N, dtype=complex)
        logs = np.zeros(N)
        prev, cur = 0j, np.exp(1j * log_c0.imag)
        out[0], logs[0] = cur, scale
        up, down, lin = 1j - G, 1j + G, np.sqrt(2.0) * (p - G * q)
        for n in range(N - 1):
            nxt = (up * np.sqrt(n) * prev - lin * cur) / (down * np.sqrt(n + 1.0))
            prev, cur = cur, nxt
            m = max(abs(prev), abs(cur))
            # Below 1e-200 of the reference the values are negligible; let them underflow.
            if m > 1e100 or (1e-200 < m < 1e-100):
                prev, cur = prev / m, cur / m
                scale += np.log(m)
            out[n + 1], logs[n + 1] = cur, scale
        with np.errstate(under="ignore"):
            coeffs = out * np.exp(logs)
        st = HermiteState(coeffs)
        total = float(np.sum(np.abs(coeffs) ** 2))
        if st.tail_mass() > budget or abs(1.0 - total) > 1e-9:
            raise TailOverflow(
                f"Gaussian needs more than N={N} Hermite functions "
                f"(tail {st.tail_mass():.3e}, captured mass {total:.12f})"
            )
        return st


def coherent_oracle(solution_map, packet: GaussianPacket, t):
    """Exact evolved packets at times ``t``.

    ``solution_map(t)`` returns ``(Phi, d)`` with ``X(t) = Phi(t) X(0) + d(t)``,
    shapes (n, 2, 2) and (n, 2).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    Phi, d = solution_map(t)
    X0 = np.array([packet.q, packet.p])
    return [packet.evolve(P, P @ X0 + dd) for P, dd in zip(Phi, d)]


def affine_solution_map(system, T, dt):
    """Numerical solution map of an ``AffineSystem`` sampled at multiples of ``dt``."""
    from ..classical import flow

    lin = flow(system, (0.0, 0.0), T, dt, with_matrix=True)

    def solution(t):
        idx = np.rint(np.atleast_1d(t) / dt).astype(int)
        if np.any(np.abs(idx * dt - np.atleast_1d(t)) > 1e-9):
            raise ValueError("times must be multiples of dt")
        return lin.Phi[idx], lin.X[idx]

    return solution
