"""
Uniform-grid wavefunctions and their norms.  Derivatives are spectral
(FFT); integrals are plain Riemann sums, which are spectrally accurate for
functions that are negligible at the window edges.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .hermite import hermite_functions

GRID_POINTS = 8192
WINDOW = (-80.0, 80.0)
BOUNDARY_TOL = 1e-10

_HEADER = struct.Struct("<4s4xQdd")
_MAGIC = b"OSC1"


class BoundaryMassError(ValueError):
    pass


class WindowOverflow(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridState:
    """Samples ``u(x_min + j dx)``, j = 0..M-1."""

    samples: np.ndarray
    x_min: float
    dx: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        if self.dx <= 0:
            raise ValueError("dx must be positive")

    @property
    def M(self):
        return self.samples.size

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.M)

    @property
    def x_max(self):
        return self.x_min + self.dx * (self.M - 1)

    @classmethod
    def from_function(cls, f, M=GRID_POINTS, window=WINDOW):
        x_min, x_max = window
        dx = (x_max - x_min) / M
        x = x_min + dx * np.arange(M)
        return cls(f(x), x_min, dx)

    @classmethod
    def hermite(cls, n, M=GRID_POINTS, window=WINDOW):
        return cls.from_function(lambda x: hermite_functions(n + 1, x)[n], M, window)

    def with_samples(self, samples):
        return GridState(samples, self.x_min, self.dx)

    def check_support(self, tol=BOUNDARY_TOL):
        """Raise ``BoundaryMassError`` if the edge samples are not negligible."""
        u = np.abs(self.samples)
        edge = max(u[0], u[-1])
        if edge > tol * u.max():
            raise BoundaryMassError(f"boundary samples reach {edge / u.max():.3e} of the maximum")

    def wavenumbers(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.M, self.dx)

    def bandwidth(self, mass=1.0 - 1e-12):
        """Smallest |k| holding the given fraction of the spectral mass."""
        k = np.abs(self.wavenumbers())
        p = np.abs(np.fft.fft(self.samples)) ** 2
        order = np.argsort(k)
        cum = np.cumsum(p[order])
        return float(k[order][np.searchsorted(cum, mass * cum[-1])])

    def derivative(self, j=1):
        k = self.wavenumbers()
        return np.fft.ifft((1j * k) ** j * np.fft.fft(self.samples))

    def to_bytes(self):
        head = _HEADER.pack(_MAGIC, self.M, self.x_min, self.dx)
        body = np.empty(2 * self.M, dtype="<f8")
        body[0::2] = self.samples.real
        body[1::2] = self.samples.imag
        return head + body.tobytes()

    @classmethod
    def from_bytes(cls, data):
        magic, M, x_min, dx = _HEADER.unpack_from(data)
        if magic != _MAGIC:
            raise ValueError("not an OSC1 grid file")
        body = np.frombuffer(data, dtype="<f8", count=2 * M, offset=_HEADER.size)
        return cls(body[0::2] + 1j * body[1::2], x_min, dx)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def l2_norm(u: GridState):
    return float(np.sqrt(u.dx * np.sum(np.abs(u.samples) ** 2)))


def derivative_norm(u: GridState, j):
    """``||d^j u / dx^j||``."""
    return float(np.sqrt(u.dx * np.sum(np.abs(u.derivative(j)) ** 2)))


def weighted_norm(u: GridState, s):
    """``|| |x|^s u ||``."""
    return float(np.sqrt(u.dx * np.sum(np.abs(u.x) ** (2 * s) * np.abs(u.samples) ** 2)))


def standard_sobolev_norm(u: GridState, s):
    """Usual ``H^s`` norm with Fourier weight ``(1 + k^2)^s``."""
    k = u.wavenumbers()
    uh = np.fft.fft(u.samples)
    return float(np.sqrt(u.dx / u.M * np.sum((1.0 + k**2) ** s * np.abs(uh) ** 2)))


def grid_sobolev_norm(u: GridState, s, check=True):
    """Harmonic-oscillator Sobolev norm on the grid.

    ``s = 0`` gives the L2 norm; for s >= 1 the computable equivalent
    ``(||d^s u||^2 + ||x^s u||^2)^(1/2)`` is used, which coincides with
    ``<u, H0 u>^(1/2)`` at s = 1.  Equivalence constants for other s are
    reported by ``calibrate_equivalence``.
    """
    if check:
        u.check_support()
    if s == 0:
        return l2_norm(u)
    if s < 1:
        raise ValueError("grid Sobolev norm is defined for s = 0 and s >= 1")
    return float(np.hypot(derivative_norm(u, s), weighted_norm(u, s)))


def calibrate_equivalence(s, n_max=16, M=GRID_POINTS, window=WINDOW):
    """Constants ``(c, C)`` with ``c <= grid_sobolev_norm / ||.||_s <= C`` on phi_0..phi_n_max."""
    ratios = []
    for n in range(n_max + 1):
        u = GridState.hermite(n, M, window)
        ratios.append(grid_sobolev_norm(u, s) / (2 * n + 1) ** (s / 2))
    return float(min(ratios)), float(max(ratios))


def resample_to_hermite(u: GridState, N):
    """Hermite coefficients ``<phi_n, u>`` for n < N by quadrature on the grid."""
    return u.dx * (hermite_functions(N, u.x) @ u.samples)
