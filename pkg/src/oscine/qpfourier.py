"""
Quasi-periodic Fourier series on the doubled torus.

Every series is stored as a sparse map k -> c_k over the half-integer
harmonics exp((i/2)<k, theta>), theta in (R / 4 pi Z)^d.  A function of time
is obtained by evaluating along the linear flow theta = omega t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

K_MAX_DEFAULT = 64
GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

# Divisors below this are rejected unless the coefficient they divide is
# itself negligible (see DIVISOR_COEFF_FLOOR).
DIVISOR_FLOOR = 1e-8
DIVISOR_COEFF_FLOOR = 1e-13


class FrequencyMismatch(ValueError):
    pass


class SmallDivisorError(ValueError):
    """A harmonic whose divisor falls below the floor carries non-negligible mass."""

    def __init__(self, k, divisor, coeff):
        self.k = tuple(int(v) for v in np.atleast_1d(k))
        self.divisor = float(divisor)
        self.coeff = complex(coeff)
        super().__init__(
            f"small divisor {self.divisor:.3e} at k={self.k} "
            f"(coefficient magnitude {abs(self.coeff):.3e})"
        )


def _default_n_check(d):
    return {1: 10_000, 2: 10_000, 3: 60, 4: 20}[d]


def diophantine_margin(omega, tau, n_check):
    """Return ``min |<n, omega>| |n|^tau`` over ``0 < |n|_1 <= n_check``.

    Only the lattice points closest to the resonant hyperplane are
    visited: for every choice of the trailing components the leading one
    is taken as ``round(-<n', omega'> / omega_1) + {-1, 0, 1}``; all other
    leading components have ``|<n, omega>| >= |omega_1|`` and are bounded by
    the same quantity at ``n = e_1``.
    """
    omega = np.asarray(omega, dtype=float)
    d = omega.size
    if d == 1:
        n = np.arange(1, n_check + 1, dtype=float)
        return float(np.min(np.abs(n * omega[0]) * n**tau))
    ranges = [np.arange(-n_check, n_check + 1)] * (d - 1)
    tail = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d - 1)
    tail = tail[np.abs(tail).sum(axis=1) <= n_check]
    partial = tail @ omega[1:]
    best = abs(omega[0])  # n = e_1
    centre = np.round(-partial / omega[0])
    for off in (-1.0, 0.0, 1.0):
        n1 = centre + off
        norm = np.abs(n1) + np.abs(tail).sum(axis=1)
        ok = (norm > 0) & (norm <= n_check)
        val = np.abs(n1 * omega[0] + partial)[ok] * norm[ok] ** tau
        if val.size:
            best = min(best, float(val.min()))
    return best


@dataclass(frozen=True, eq=False)
class FrequencyVector:
    """Frequency vector with an optional numerical Diophantine certificate.

    With ``gamma`` set, the constructor verifies
    ``|<n, omega>| > gamma / |n|^tau`` for every ``0 < |n|_1 <= n_check``
    and raises ``ValueError`` otherwise.  ``gamma=None`` skips the check
    (periodic forcing, d = 1).
    """

    omega: np.ndarray
    gamma: float | None = None
    tau: float | None = None
    n_check: int | None = None

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float)).copy()
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        if not 1 <= omega.size <= 4:
            raise ValueError("frequency dimension must be between 1 and 4")
        if not np.all(np.isfinite(omega)) or omega[0] == 0.0:
            raise ValueError("omega must be finite with a nonzero first component")
        if self.gamma is None:
            return
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        tau = self.tau if self.tau is not None else float(self.d)
        if tau <= self.d - 1:
            raise ValueError("tau must exceed d - 1")
        object.__setattr__(self, "tau", float(tau))
        n_check = self.n_check or _default_n_check(self.d)
        object.__setattr__(self, "n_check", int(n_check))
        margin = diophantine_margin(omega, tau, n_check)
        if margin <= self.gamma:
            raise ValueError(
                f"omega={omega.tolist()} fails the Diophantine bound: "
                f"min |<n,w>| |n|^tau = {margin:.3e} <= gamma = {self.gamma}"
            )

    @property
    def d(self):
        return self.omega.size

    def dot(self, ks):
        """<k, omega> for an integer array of shape (n, d)."""
        return np.asarray(ks, dtype=float) @ self.omega

    def __eq__(self, other):
        return isinstance(other, FrequencyVector) and np.array_equal(self.omega, other.omega)

    def __hash__(self):
        return hash(self.omega.tobytes())

    @classmethod
    def golden(cls, gamma=0.3, tau=1.5, n_check=10_000):
        """(1, golden mean), certified up to ``n_check``."""
        return cls(np.array([1.0, GOLDEN]), gamma=gamma, tau=tau, n_check=n_check)


def _as_ks(ks, d):
    ks = np.asarray(ks, dtype=np.int64)
    if ks.ndim == 1 and d == 1:
        ks = ks.reshape(-1, 1)
    return ks.reshape(-1, d)


class QpFourierSeries:
    """Finite sum ``sum_k c_k exp((i/2)<k, theta>)`` with frequency ``freq``.

    ``kind='real'`` asserts ``c_{-k} = conj(c_k)``; the coefficients are
    symmetrised exactly on construction and a violation above round-off
    raises ``ValueError``.  Instances are immutable.
    """

    __slots__ = ("freq", "ks", "coeffs", "kind", "k_max", "discarded")

    def __init__(self, freq, ks, coeffs, kind="real", k_max=K_MAX_DEFAULT, discarded=0.0):
        if kind not in ("real", "complex"):
            raise ValueError("kind must be 'real' or 'complex'")
        d = freq.d
        ks = _as_ks(ks, d)
        coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if ks.shape[0] != coeffs.size:
            raise ValueError("ks and coeffs differ in length")
        if ks.size and np.abs(ks).max() > k_max:
            raise ValueError(f"harmonic beyond k_max={k_max}")
        ks, coeffs = _merge(ks, coeffs)
        if kind == "real":
            ks, coeffs = _symmetrize(ks, coeffs)
        for name, val in (("ks", ks), ("coeffs", coeffs)):
            val.setflags(write=False)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "k_max", int(k_max))
        object.__setattr__(self, "discarded", float(discarded))

    def __setattr__(self, name, value):
        raise AttributeError("QpFourierSeries is immutable")

    # -- construction helpers -------------------------------------------
    @classmethod
    def zero(cls, freq, kind="real"):
        return cls(freq, np.zeros((0, freq.d), dtype=np.int64), [], kind)

    @classmethod
    def constant(cls, freq, value, kind=None):
        if kind is None:
            kind = "real" if np.isreal(value) else "complex"
        return cls(freq, np.zeros((1, freq.d), dtype=np.int64), [value], kind)

    @classmethod
    def from_dict(cls, freq, mapping: Mapping, kind="real", k_max=K_MAX_DEFAULT):
        ks = [np.atleast_1d(k) for k in mapping]
        return cls(freq, np.array(ks).reshape(-1, freq.d), list(mapping.values()), kind, k_max)

    @classmethod
    def cosine(cls, freq, k, amplitude=1.0):
        """``amplitude * cos((1/2)<k, theta>)``; use ``k = 2m`` for integer harmonics."""
        k = np.atleast_1d(k)
        return cls(freq, np.array([k, -k]), [amplitude / 2, amplitude / 2], "real")

    @classmethod
    def sine(cls, freq, k, amplitude=1.0):
        """``amplitude * sin((1/2)<k, theta>)``."""
        k = np.atleast_1d(k)
        return cls(freq, np.array([k, -k]), [-0.5j * amplitude, 0.5j * amplitude], "real")

    @classmethod
    def random(cls, freq, rng, n_harmonics=5, k_bound=4, decay=0.5, kind="real", mean=True):
        """Random truncated analytic series with ``|c_k| <= exp(-decay |k|)``."""
        d = freq.d
        ks = rng.integers(-k_bound, k_bound + 1, size=(n_harmonics, d))
        if not mean:
            ks[np.all(ks == 0, axis=1), 0] = 1
        amp = np.exp(-decay * np.abs(ks).sum(axis=1))
        vals = amp * (rng.uniform(-1, 1, n_harmonics) + 1j * rng.uniform(-1, 1, n_harmonics))
        if kind == "real":
            # Symmetric extension; the zero mode must be real.
            zero = np.all(ks == 0, axis=1)
            vals[zero] = vals[zero].real
            ks = np.concatenate([ks, -ks[~zero]])
            vals = np.concatenate([vals, np.conj(vals[~zero])])
        return cls(freq, ks, vals, kind)

    # -- basic access ---------------------------------------------------
    @property
    def d(self):
        return self.freq.d

    def __len__(self):
        return self.coeffs.size

    def coefficient(self, k):
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        hit = np.all(self.ks == k, axis=1)
        return complex(self.coeffs[hit][0]) if hit.any() else 0j

    def items(self):
        for k, c in zip(self.ks, self.coeffs):
            yield tuple(int(v) for v in k), complex(c)

    def divisors(self):
        """<k, omega> on the support."""
        return self.freq.dot(self.ks)

    def is_zero(self, tol=0.0):
        return not np.any(np.abs(self.coeffs) > tol)

    # -- evaluation -----------------------------------------------------
    def evaluate(self, theta):
        """Value at a point (shape (d,)) or a batch of points (shape (..., d))."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1:] != (self.d,):
            if self.d == 1 and theta.ndim <= 1:
                theta = theta[..., None]
            else:
                raise ValueError(f"theta must have {self.d} components")
        phase = 0.5 * (theta @ self.ks.T.astype(float))
        vals = np.exp(1j * phase) @ self.coeffs
        if self.kind == "real":
            scale = max(1.0, float(np.abs(self.coeffs).sum()))
            assert np.all(np.abs(vals.imag) < 1e-12 * scale), "real series evaluated to complex value"
            vals = vals.real
        return vals[()] if np.ndim(vals) == 0 else vals

    def along(self, t):
        """Value of ``f(omega t)`` for scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        return self.evaluate(t[..., None] * self.freq.omega)

    # -- calculus -------------------------------------------------------
    def average(self):
        return self.coefficient(np.zeros(self.d, dtype=np.int64))

    def directional_derivative(self):
        """Series of ``d/dt f(omega t)``: ``c_k -> (i/2)<k, omega> c_k``."""
        return self._replace(0.5j * self.divisors() * self.coeffs)

    def antiderivative(self, floor=DIVISOR_FLOOR):
        """Zero-mean primitive of ``f - average(f)`` along the flow.

        Raises ``SmallDivisorError`` when a divisor ``|<k, omega>|`` falls
        below ``floor`` with a coefficient above ``DIVISOR_COEFF_FLOOR``.
        """
        div = self.divisors()
        check_divisors(self.ks, 0.5 * div, self.coeffs, floor, skip_zero_mode=True)
        out = np.zeros_like(self.coeffs)
        ok = np.abs(div) >= floor
        out[ok] = self.coeffs[ok] / (0.5j * div[ok])
        return self._replace(out)

    # -- arithmetic -----------------------------------------------------
    def _replace(self, coeffs, kind=None):
        return QpFourierSeries(self.freq, self.ks, coeffs, kind or self.kind, self.k_max)

    def _check_freq(self, other):
        if self.freq != other.freq:
            raise FrequencyMismatch("series have different frequency vectors")

    def __add__(self, other):
        if np.isscalar(other):
            other = QpFourierSeries.constant(self.freq, other)
        self._check_freq(other)
        kind = "real" if self.kind == other.kind == "real" else "complex"
        return QpFourierSeries(
            self.freq,
            np.concatenate([self.ks, other.ks]),
            np.concatenate([self.coeffs, other.coeffs]),
            kind,
            max(self.k_max, other.k_max),
        )

    __radd__ = __add__

    def __neg__(self):
        return self._replace(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, QpFourierSeries):
            return self.multiply(other)
        kind = self.kind if np.isreal(other) else "complex"
        return self._replace(self.coeffs * other, kind)

    __rmul__ = __mul__

    def multiply(self, other, k_max=None):
        """Coefficient convolution, truncated at ``k_max``.

        The l2 mass of dropped harmonics is kept in ``.discarded``.
        """
        self._check_freq(other)
        k_max = self.k_max if k_max is None else k_max
        ks = (self.ks[:, None, :] + other.ks[None, :, :]).reshape(-1, self.d)
        vals = (self.coeffs[:, None] * other.coeffs[None, :]).reshape(-1)
        ks, vals = _merge(ks, vals)
        keep = np.abs(ks).max(axis=1, initial=0) <= k_max
        lost = float(np.sqrt(np.sum(np.abs(vals[~keep]) ** 2)))
        kind = "real" if self.kind == other.kind == "real" else "complex"
        return QpFourierSeries(self.freq, ks[keep], vals[keep], kind, k_max, discarded=lost)

    def conj(self):
        if self.kind == "real":
            return self
        return QpFourierSeries(self.freq, -self.ks, np.conj(self.coeffs), "complex", self.k_max)

    # -- analyticity ----------------------------------------------------
    def decay_constant(self, r):
        """Smallest M with ``|c_k| <= M exp(-r |k|_1)`` on the stored support."""
        if not len(self):
            return 0.0
        return float(np.max(np.abs(self.coeffs) * np.exp(r * np.abs(self.ks).sum(axis=1))))

    def check_decay(self, r, M):
        return self.decay_constant(r) <= M

    def strip_bound(self, r):
        """``sum |c_k| exp(|k|_1 r / 2)``: an upper bound for the sup on ``|Im theta| < r``."""
        return float(np.sum(np.abs(self.coeffs) * np.exp(0.5 * r * np.abs(self.ks).sum(axis=1))))

    # -- serialisation --------------------------------------------------
    def to_dict(self):
        return {
            "freq": self.freq.omega.tolist(),
            "kind": self.kind,
            "coeffs": [
                {"k": [int(v) for v in k], "re": float(c.real), "im": float(c.imag)}
                for k, c in zip(self.ks, self.coeffs)
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json_dict(cls, data, freq=None):
        freq = freq or FrequencyVector(np.array(data["freq"], dtype=float))
        ks = np.array([c["k"] for c in data["coeffs"]], dtype=np.int64).reshape(-1, freq.d)
        vals = [complex(c["re"], c["im"]) for c in data["coeffs"]]
        return cls(freq, ks, vals, data.get("kind", "real"))

    @classmethod
    def from_json(cls, text, freq=None):
        return cls.from_json_dict(json.loads(text), freq)

    def __repr__(self):
        return f"QpFourierSeries(d={self.d}, terms={len(self)}, kind={self.kind!r})"


def _merge(ks, vals):
    """Sum duplicate harmonics and drop exact zeros; sorted output."""
    if ks.shape[0] == 0:
        return ks.copy(), vals.copy()
    uniq, inv = np.unique(ks, axis=0, return_inverse=True)
    summed = np.zeros(uniq.shape[0], dtype=complex)
    np.add.at(summed, inv.reshape(-1), vals)
    keep = summed != 0
    return uniq[keep], summed[keep]


def _symmetrize(ks, vals, rtol=1e-12):
    """Enforce ``c_{-k} = conj(c_k)``, adding missing partners."""
    if ks.shape[0] == 0:
        return ks, vals
    allk = np.concatenate([ks, -ks])
    allv = np.concatenate([vals, np.conj(vals)])
    uk, inv = np.unique(allk, axis=0, return_inverse=True)
    sym = np.zeros(uk.shape[0], dtype=complex)
    np.add.at(sym, inv.reshape(-1), allv)
    sym *= 0.5
    # Compare with the original on its support.
    lookup = {tuple(k): v for k, v in zip(uk.tolist(), sym)}
    scale = max(float(np.abs(vals).max()), 1e-300)
    dev = max(abs(lookup[tuple(k)] - v) for k, v in zip(ks.tolist(), vals))
    if dev > rtol * scale + 1e-14:
        raise ValueError(f"real series violates c_(-k) = conj(c_k) by {dev:.3e}")
    keep = sym != 0
    return uk[keep], sym[keep]


def check_divisors(ks, divisors, coeffs, floor=DIVISOR_FLOOR, skip_zero_mode=False):
    """Raise ``SmallDivisorError`` on the first harmonic with a sub-floor divisor.

    ``coeffs`` may be a single array or a tuple of arrays; the harmonic is
    tolerated when all of them are below ``DIVISOR_COEFF_FLOOR`` there.
    """
    if not isinstance(coeffs, tuple):
        coeffs = (coeffs,)
    mag = np.max(np.abs(np.vstack(coeffs)), axis=0) if len(ks) else np.zeros(0)
    bad = (np.abs(divisors) < floor) & (mag >= DIVISOR_COEFF_FLOOR)
    if skip_zero_mode:
        bad &= np.any(ks != 0, axis=1)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise SmallDivisorError(ks[j], divisors[j], mag[j])


def union_support(*series: QpFourierSeries):
    """Common support of several series with coefficient arrays aligned to it."""
    freq = series[0].freq
    for s in series[1:]:
        if s.freq != freq:
            raise FrequencyMismatch("series have different frequency vectors")
    allk = np.concatenate([s.ks for s in series]) if series else np.zeros((0, freq.d))
    if allk.shape[0] == 0:
        return np.zeros((0, freq.d), dtype=np.int64), [np.zeros(0, dtype=complex) for _ in series]
    uk = np.unique(allk, axis=0)
    out = []
    for s in series:
        arr = np.zeros(uk.shape[0], dtype=complex)
        if len(s):
            idx = _rows_index(uk, s.ks)
            arr[idx] = s.coeffs
        out.append(arr)
    return uk, out


def _rows_index(table, rows):
    lookup = {tuple(k): i for i, k in enumerate(table.tolist())}
    return np.array([lookup[tuple(k)] for k in rows.tolist()], dtype=np.int64)


@dataclass(frozen=True)
class MatrixSeries:
    """2x2 matrix of quasi-periodic series ``[[a, b], [c, e]]``."""

    a: QpFourierSeries
    b: QpFourierSeries
    c: QpFourierSeries
    e: QpFourierSeries
    trace_zero: bool = field(default=True)

    def __post_init__(self):
        freq = self.a.freq
        for s in (self.b, self.c, self.e):
            if s.freq != freq:
                raise FrequencyMismatch("matrix entries have different frequency vectors")
        if self.trace_zero:
            tr = self.a + self.e
            if not tr.is_zero(tol=1e-14):
                raise ValueError("trace_zero matrix series has nonzero trace")

    @property
    def freq(self):
        return self.a.freq

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.e)

    @classmethod
    def zero(cls, freq):
        z = QpFourierSeries.zero(freq)
        return cls(z, z, z, z)

    def evaluate(self, theta):
        vals = [s.evaluate(theta) for s in self.entries]
        out = np.stack([np.stack(vals[:2], -1), np.stack(vals[2:], -1)], -2)
        return out

    def along(self, t):
        t = np.asarray(t, dtype=float)
        return self.evaluate(t[..., None] * self.freq.omega)

    def to_dict(self):
        return {"entries": [s.to_dict() for s in self.entries], "trace_zero": self.trace_zero}

    @classmethod
    def from_json_dict(cls, data, freq=None):
        ents = [QpFourierSeries.from_json_dict(e, freq) for e in data["entries"]]
        return cls(*ents, trace_zero=data.get("trace_zero", True))


def theta_grid(d, n=200, rng=None):
    """Evaluation points on the doubled torus [0, 4 pi)^d.

    A tensor grid with ``n`` points per axis for d <= 2; for d > 2 the same
    number of points (n^2) drawn uniformly with ``rng``.
    """
    axis = np.arange(n) * (4.0 * np.pi / n)
    if d == 1:
        return axis[:, None]
    if d == 2:
        g = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1)
        return g.reshape(-1, 2)
    rng = rng or np.random.default_rng(0)
    return rng.uniform(0.0, 4.0 * np.pi, size=(n * n, d))


def as_series(freq, value: "QpFourierSeries | float") -> QpFourierSeries:
    if isinstance(value, QpFourierSeries):
        return value
    return QpFourierSeries.constant(freq, value)


def pair_from_json(data: Iterable, freq=None):
    return tuple(QpFourierSeries.from_json_dict(x, freq) for x in data)
