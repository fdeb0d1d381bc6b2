"""
Hermite-basis representation of the perturbed oscillator

    i d/dt u = (nu/2) H0 u + Op^w(W(omega t)) u,   H0 = -d^2/dx^2 + x^2,

with H0 phi_n = (2n + 1) phi_n.  Degree-two Weyl symbols are banded
(bandwidth 2) in this basis.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from ..qpfourier import FrequencyMismatch, QpFourierSeries

TAIL_FRACTION = 8  # tail = last N / TAIL_FRACTION coefficients
TAIL_BUDGET = 1e-14
N_MAX = 65536


class TailBudgetExceeded(RuntimeError):
    def __init__(self, t, N, tail):
        self.t, self.N, self.tail = float(t), int(N), float(tail)
        super().__init__(f"tail mass {tail:.3e} exceeds budget at t={t:.4f} with N={N} (N_max reached)")


@dataclass(frozen=True)
class Degree2Symbol:
    """``1/2 (a20 x^2 + 2 a11 x xi + a02 xi^2) + b1 x + b2 xi + c`` with real coefficients."""

    a20: float = 0.0
    a11: float = 0.0
    a02: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    c: float = 0.0

    def __call__(self, x, xi):
        return (
            0.5 * (self.a20 * x**2 + 2 * self.a11 * x * xi + self.a02 * xi**2)
            + self.b1 * x
            + self.b2 * xi
            + self.c
        )

    def __add__(self, other):
        return Degree2Symbol(*(a + b for a, b in zip(self.astuple(), other.astuple())))

    def scale(self, s):
        return Degree2Symbol(*(s * a for a in self.astuple()))

    def astuple(self):
        return (self.a20, self.a11, self.a02, self.b1, self.b2, self.c)

    @classmethod
    def oscillator(cls, nu=1.0):
        """``nu/2 (x^2 + xi^2)``."""
        return cls(a20=nu, a02=nu)


@dataclass(frozen=True, eq=False)
class SymbolPath:
    """Quasi-periodic path ``t -> W(omega t)`` of degree-two symbols.

    Entries may be ``QpFourierSeries`` or plain floats.
    """

    a20: object = 0.0
    a11: object = 0.0
    a02: object = 0.0
    b1: object = 0.0
    b2: object = 0.0
    c: object = 0.0

    def __post_init__(self):
        freqs = {s.freq for s in self.astuple() if isinstance(s, QpFourierSeries)}
        if len(freqs) > 1:
            raise FrequencyMismatch("symbol coefficients have different frequency vectors")

    def astuple(self):
        return (self.a20, self.a11, self.a02, self.b1, self.b2, self.c)

    def at(self, t) -> Degree2Symbol:
        vals = [float(s.along(t)) if isinstance(s, QpFourierSeries) else float(s) for s in self.astuple()]
        return Degree2Symbol(*vals)

    @classmethod
    def from_series(cls, a20, a11, a02, b1, b2, c=0.0):
        return cls(a20, a11, a02, b1, b2, c)


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """Hermitian pentadiagonal matrix stored by its upper diagonals.

    ``d0`` is real (length N), ``d1`` and ``d2`` hold the entries
    ``(n, n+1)`` and ``(n, n+2)``; the lower part is the conjugate.
    """

    d0: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    @property
    def N(self):
        return self.d0.size

    def matvec(self, v):
        out = self.d0 * v
        out[:-1] += self.d1 * v[1:]
        out[1:] += np.conj(self.d1) * v[:-1]
        out[:-2] += self.d2 * v[2:]
        out[2:] += np.conj(self.d2) * v[:-2]
        return out

    __matmul__ = matvec

    def to_dense(self):
        m = np.diag(self.d0.astype(complex))
        m += np.diag(self.d1, 1) + np.diag(np.conj(self.d1), -1)
        m += np.diag(self.d2, 2) + np.diag(np.conj(self.d2), -2)
        return m

    def spectral_bounds(self):
        """Gershgorin interval containing the spectrum."""
        r = np.zeros(self.N)
        a1, a2 = np.abs(self.d1), np.abs(self.d2)
        r[:-1] += a1
        r[1:] += a1
        r[:-2] += a2
        r[2:] += a2
        return float(np.min(self.d0 - r)), float(np.max(self.d0 + r))


def _ladder(N):
    n = np.arange(N, dtype=float)
    s1 = np.sqrt(n[1:] / 2.0)  # <n-1| x |n> for n >= 1
    s2 = np.sqrt(n[2:] * (n[2:] - 1.0))  # sqrt(n(n-1)) for n >= 2
    return n, s1, s2


def weyl_quantize(sym: Degree2Symbol, N) -> BandedOperator:
    """Matrix of ``Op^w(sym)`` on ``phi_0..phi_{N-1}``.

    Uses ``x = (a + a*)/sqrt 2`` and ``xi = i (a* - a)/sqrt 2``.  The Weyl
    quantisation of ``x xi`` is ``(x xi + xi x)/2 = (i/2)(a*^2 - a^2)``.
    """
    n, s1, s2 = _ladder(N)
    d0 = (sym.a20 + sym.a02) * (2 * n + 1) / 4.0 + sym.c
    d1 = (sym.b1 - 1j * sym.b2) * s1
    d2 = s2 * ((sym.a20 - sym.a02) / 4.0 - 0.5j * sym.a11)
    return BandedOperator(d0, d1.astype(complex), d2.astype(complex))


def hermite_functions(N, x):
    """Values ``phi_n(x)`` for n < N, shape (N, len(x)), via the normalised recursion.

    Underflows to zero far outside the classically allowed region of
    ``phi_{N-1}``; meant for moderate N.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((N,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if N > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, N - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


class HermiteState:
    """Coefficient vector ``u = sum_n c_n phi_n``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=complex).copy()

    @property
    def N(self):
        return self.coeffs.size

    @classmethod
    def basis(cls, n, N):
        c = np.zeros(N, dtype=complex)
        c[n] = 1.0
        return cls(c)

    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def sobolev_norm(self, s):
        return sobolev_norm(self, s)

    def tail_mass(self, fraction=TAIL_FRACTION):
        """Relative l2 mass in the last ``N / fraction`` coefficients."""
        tail = self.coeffs[self.N - self.N // fraction :]
        return float(np.linalg.norm(tail) / max(self.norm(), 1e-300))

    def padded(self, N):
        if N < self.N:
            raise ValueError("cannot pad to a smaller basis")
        c = np.zeros(N, dtype=complex)
        c[: self.N] = self.coeffs
        return HermiteState(c)

    def evaluate(self, x):
        return self.coeffs @ hermite_functions(self.N, x)

    def to_dict(self):
        return {"re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data["re"]) + 1j * np.array(data["im"]))

    def __repr__(self):
        return f"HermiteState(N={self.N}, norm={self.norm():.6g})"


def sobolev_norm(u: HermiteState, s):
    """``||u||_s = (sum (2n + 1)^s |c_n|^2)^(1/2)``."""
    w = (2.0 * np.arange(u.N) + 1.0) ** s
    return float(np.sqrt(np.sum(w * np.abs(u.coeffs) ** 2)))


def expm_action(op: BandedOperator, v, dt, tol=1e-15):
    """``exp(-i dt op) v`` by a Chebyshev expansion on the Gershgorin interval."""
    lo, hi = op.spectral_bounds()
    c, r = 0.5 * (hi + lo), max(0.5 * (hi - lo), 1e-300)
    z = dt * r
    kmax = int(z + 30 + 10 * np.log1p(z))
    J = jv(np.arange(kmax + 1), z)
    # Terms with k > z decay super-exponentially; cut at the first tiny pair.
    tiny = np.flatnonzero((np.abs(J[:-1]) < tol) & (np.abs(J[1:]) < tol) & (np.arange(kmax) > z))
    K = int(tiny[0]) if tiny.size else kmax
    scale = 1.0 / r

    def shifted(w):
        return (op.matvec(w) - c * w) * scale

    t_prev = v
    t_cur = shifted(v)
    out = J[0] * t_prev + 2 * (-1j) * J[1] * t_cur
    phase = -1j
    for k in range(2, K + 1):
        t_prev, t_cur = t_cur, 2 * shifted(t_cur) - t_prev
        phase *= -1j
        out += 2 * phase * J[k] * t_cur
    return np.exp(-1j * dt * c) * out


@dataclass
class PropagationResult:
    times: np.ndarray
    l2: np.ndarray
    hs: np.ndarray
    tail: np.ndarray
    sizes: np.ndarray
    states: list = field(default_factory=list)
    s: float = 1.0

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "l2", "hs", "tail_mass"])
            for row in zip(self.times, self.l2, self.hs, self.tail):
                w.writerow([repr(float(v)) for v in row])

    def to_dict(self):
        return {
            "s": self.s,
            "t": self.times.tolist(),
            "l2": self.l2.tolist(),
            "hs": self.hs.tolist(),
            "tail_mass": self.tail.tolist(),
            "N": self.sizes.tolist(),
        }


def propagate(
    path: SymbolPath,
    u0: HermiteState,
    T,
    dt=0.01,
    nu=1.0,
    s=1.0,
    sample_every=None,
    keep_states=False,
    N0=256,
    N_max=N_MAX,
    tail_budget=TAIL_BUDGET,
    on_sample=None,
):
    """Integrate the Schroedinger equation on ``[0, T]``.

    The free part ``(nu/2) H0`` is removed exactly by passing to the
    interaction picture, where the generator has entries
    ``exp(i nu t (m - n)) W_mn``.  Each step applies the exponential of the
    midpoint generator (second order in dt, unitary to round-off).  A step
    whose result carries more than ``tail_budget`` in the last N/8
    coefficients is repeated on a doubled basis; needing more than
    ``N_max`` raises ``TailBudgetExceeded``.

    Samples (t, l2 norm, H^s norm, tail mass) are recorded every
    ``sample_every`` (default: every step); ``on_sample(t, state)`` is
    called with each recorded state.
    """
    n_steps = int(round(T / dt))
    if n_steps <= 0 or abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a positive multiple of dt")
    stride = 1 if sample_every is None else int(round(sample_every / dt))
    if stride <= 0 or abs(stride * dt - (sample_every or dt)) > 1e-9:
        raise ValueError("sample_every must be a positive multiple of dt")

    N = max(N0, u0.N)
    v = u0.padded(N).coeffs
    times, l2, hs, tail, sizes, states = [], [], [], [], [], []

    def record(k, v):
        # Back to the Schroedinger picture: multiply by exp(-i nu t (2n+1)/2).
        t = k * dt
        st = HermiteState(v * np.exp(-0.5j * nu * t * (2.0 * np.arange(v.size) + 1.0)))
        times.append(t)
        l2.append(st.norm())
        hs.append(sobolev_norm(st, s))
        tail.append(st.tail_mass())
        sizes.append(v.size)
        if keep_states:
            states.append(st)
        if on_sample is not None:
            on_sample(t, st)

    def grow(v, t):
        nonlocal N
        if 2 * N > N_max:
            raise TailBudgetExceeded(t, N, HermiteState(v).tail_mass())
        N *= 2
        return np.concatenate([v, np.zeros(N - v.size, dtype=complex)])

    while HermiteState(v).tail_mass() > tail_budget:
        v = grow(v, 0.0)
    record(0, v)
    for k in range(n_steps):
        tm = (k + 0.5) * dt
        sym = path.at(tm)
        ph = np.exp(-1j * nu * tm)
        while True:
            op = weyl_quantize(sym, N)
            op = BandedOperator(op.d0, op.d1 * ph, op.d2 * ph * ph)
            w = expm_action(op, v, dt)
            if HermiteState(w).tail_mass() <= tail_budget:
                break
            # The step leaked mass into the tail: redo it on a larger basis.
            v = grow(v, k * dt)
        v = w
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            record(k + 1, v)
    return PropagationResult(
        np.array(times), np.array(l2), np.array(hs), np.array(tail), np.array(sizes), states, s
    )


def save_state(state: HermiteState, path):
    with open(path, "w") as fh:
        json.dump(state.to_dict(), fh)


def load_state(path):
    with open(path) as fh:
        return HermiteState.from_dict(json.load(fh))
