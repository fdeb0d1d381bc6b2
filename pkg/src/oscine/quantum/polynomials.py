"""
Derivative polynomials of the Stark phase.

For ``Phi(t, y) = kappa (t y^2 / 2 + iota t^2 y / 2 + iota^2 t^3 / 6)`` one has
``d^a/dy^a exp(i Phi) = P_{2a}(t, y) exp(i Phi)`` with

    P_{2a} = ((i/2) iota kappa)^a t^{2a} + sum_{1 <= j <= 2a-1} Q_{a,j}(y) t^j.

Coefficients are kept as exact Gaussian rationals (floats are exact
binary fractions), so identities between them hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

ALPHA_MAX = 12


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, z):
        z = complex(z)
        return cls(Fraction(z.real), Fraction(z.imag))

    def __add__(self, o):
        return GaussianRational(self.re + o.re, self.im + o.im)

    def __mul__(self, o):
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __bool__(self):
        return bool(self.re or self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __pow__(self, n):
        out = GaussianRational(Fraction(1))
        for _ in range(n):
            out = out * self
        return out


_ZERO = GaussianRational(Fraction(0))
_I = GaussianRational(Fraction(0), Fraction(1))


def _poly_add(*polys):
    n = max(len(p) for p in polys)
    out = [_ZERO] * n
    for p in polys:
        for j, c in enumerate(p):
            out[j] = out[j] + c
    return out


def _poly_scale(p, c):
    return [c * v for v in p]


def _poly_shift(p):
    """Multiply by y."""
    return [_ZERO] + list(p)


def _poly_diff(p):
    return [v * GaussianRational(Fraction(j)) for j, v in enumerate(p)][1:] or [_ZERO]


@dataclass(frozen=True)
class DerivativePolynomial:
    """``P_{2 alpha}(t, y)``; ``Q[j]`` lists the y-coefficients of ``t^j``."""

    alpha: int
    kappa: float
    iota: float
    leading: GaussianRational
    Q: dict

    def coefficient_table(self):
        """Complex array ``T[j, m]`` = coefficient of ``t^j y^m``."""
        deg_y = max((len(p) for p in self.Q.values()), default=1)
        T = np.zeros((2 * self.alpha + 1, deg_y), dtype=complex)
        T[2 * self.alpha, 0] = complex(self.leading)
        for j, p in self.Q.items():
            T[j, : len(p)] += [complex(c) for c in p]
        return T

    def __call__(self, t, y):
        T = self.coefficient_table()
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(t, y).shape, dtype=complex)
        for j in range(T.shape[0] - 1, -1, -1):
            out = out * t + np.polynomial.polynomial.polyval(y, T[j])
        return out


def derivative_polynomials(alpha, kappa, iota):
    """``[P_0, P_2, ..., P_{2 alpha}]`` built from the recursion in (alpha, j).

    ``P_{2(a+1)} = ((i/2) iota kappa t^2 + i kappa y t) P_{2a} + d/dy P_{2a}``,
    written coefficient-wise in the Q's.
    """
    if not 0 <= alpha <= ALPHA_MAX:
        raise ValueError(f"alpha must lie in [0, {ALPHA_MAX}]")
    k = GaussianRational.of(kappa)
    i_k = _I * k  # i kappa
    half_ik = GaussianRational(Fraction(1, 2)) * _I * GaussianRational.of(iota) * k  # (i/2) iota kappa
    out = [DerivativePolynomial(0, kappa, iota, GaussianRational(Fraction(1)), {})]
    if alpha == 0:
        return out
    lead = half_ik
    Q = {1: [_ZERO, i_k]}
    out.append(DerivativePolynomial(1, kappa, iota, lead, Q))
    for a in range(1, alpha):
        get = lambda j: Q.get(j, [_ZERO])  # noqa: E731
        new = {}
        # t^{2a+1}: i kappa L y + (i/2) iota kappa Q_{2a-1}
        new[2 * a + 1] = _poly_add(_poly_scale([_ZERO, i_k], lead), _poly_scale(get(2 * a - 1), half_ik))
        # t^{2a}: (i/2) iota kappa Q_{2a-2} + i kappa y Q_{2a-1}
        new[2 * a] = _poly_add(_poly_scale(get(2 * a - 2), half_ik), _poly_scale(_poly_shift(get(2 * a - 1)), i_k))
        for j in range(3, 2 * a):
            new[j] = _poly_add(
                _poly_scale(get(j - 2), half_ik), _poly_scale(_poly_shift(get(j - 1)), i_k), _poly_diff(get(j))
            )
        if 2 * a > 2:
            new[2] = _poly_add(_poly_scale(_poly_shift(get(1)), i_k), _poly_diff(get(2)))
        else:
            new[2] = _poly_add(new[2], _poly_diff(get(2)))
        new[1] = _poly_diff(get(1))
        Q = {j: _trim(p) for j, p in new.items()}
        Q = {j: p for j, p in Q.items() if any(p)}
        lead = lead * half_ik
        out.append(DerivativePolynomial(a + 1, kappa, iota, lead, Q))
    return out


def _trim(p):
    p = list(p)
    while len(p) > 1 and not p[-1]:
        p.pop()
    return p
