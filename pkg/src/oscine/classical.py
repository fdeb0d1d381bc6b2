"""
Classical side: quasi-periodic affine systems X' = (A + F(wt)) X + b(wt),
their flows and rotation numbers, and the reduction of the lower-order
part X' = B X + p(wt) to a constant normal form.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .qpfourier import (
    DIVISOR_FLOOR,
    FrequencyMismatch,
    FrequencyVector,
    MatrixSeries,
    QpFourierSeries,
    check_divisors,
    theta_grid,
    union_support,
)

J = np.array([[0.0, -1.0], [1.0, 0.0]])
CERTIFICATE_TOL = 1e-10

ELLIPTIC = "elliptic"
HYPERBOLIC = "hyperbolic"
PARABOLIC = "parabolic"
DEGENERATE = "degenerate"


class CertificateError(RuntimeError):
    pass


def as_sl2(m, tol=1e-14):
    m = np.asarray(m, dtype=float).reshape(2, 2)
    if abs(m[0, 0] + m[1, 1]) > tol * max(1.0, np.abs(m).max()):
        raise ValueError(f"matrix is not trace-free: trace = {m[0, 0] + m[1, 1]:.3e}")
    return m


def rotation(phi):
    """R_phi = exp(phi * J)."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def expm_sl2(m):
    """Closed-form exponential of a trace-free 2x2 matrix (batched on leading axes)."""
    m = np.asarray(m, dtype=float)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    # m^2 = -det(m) I, so exp(m) = c0 I + c1 m.
    mu = np.sqrt(np.abs(det))
    small = mu < 1e-8
    with np.errstate(invalid="ignore", divide="ignore"):
        c0 = np.where(det > 0, np.cos(mu), np.cosh(mu))
        c1 = np.where(det > 0, np.sin(mu), np.sinh(mu)) / np.where(small, 1.0, mu)
    # Series for tiny mu: c0 = 1 - det/2, c1 = 1 - det/6.
    c0 = np.where(small, 1.0 - det / 2.0, c0)
    c1 = np.where(small, 1.0 - det / 6.0, c1)
    eye = np.broadcast_to(np.eye(2), m.shape)
    return c0[..., None, None] * eye + c1[..., None, None] * m


@dataclass(frozen=True, eq=False)
class AffineSystem:
    """Quasi-periodic affine system ``X' = (A + F(wt)) X + b(wt)``."""

    freq: FrequencyVector
    A: np.ndarray
    F: MatrixSeries
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "A", as_sl2(self.A, tol=1e-12))
        if self.F.freq != self.freq or any(s.freq != self.freq for s in self.b):
            raise FrequencyMismatch("system components have different frequency vectors")
        if not self.F.trace_zero:
            raise ValueError("quadratic part must be trace-free")

    @classmethod
    def constant(cls, freq, A, p1=None, p2=None):
        """Constant linear part with quasi-periodic drift ``(p1, p2)``."""
        z = QpFourierSeries.zero(freq)
        return cls(freq, A, MatrixSeries.zero(freq), (p1 or z, p2 or z))

    def matrix(self, t):
        return self.A + self.F.along(t)

    def drift(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([self.b[0].along(t), self.b[1].along(t)], axis=-1)

    def rhs(self, t, X):
        return self.matrix(t) @ X + self.drift(t)

    @property
    def is_linear(self):
        return self.b[0].is_zero() and self.b[1].is_zero()

    def to_dict(self):
        return {
            "freq": self.freq.omega.tolist(),
            "A": self.A.tolist(),
            "F": self.F.to_dict(),
            "b": [s.to_dict() for s in self.b],
        }

    @classmethod
    def from_dict(cls, data):
        freq = FrequencyVector(np.array(data["freq"], dtype=float))
        F = MatrixSeries.from_json_dict(data["F"], freq)
        b = tuple(QpFourierSeries.from_json_dict(x, freq) for x in data["b"])
        return cls(freq, np.array(data["A"]), F, b)


def build_symbol_system(nu, a20, a11, a02, b1, b2):
    """Equations of motion of ``nu/2 (x^2 + xi^2) + W``.

    ``W = 1/2 (a20 x^2 + 2 a11 x xi + a02 xi^2) + b1 x + b2 xi`` with
    quasi-periodic real coefficients.  Hamilton's equations
    ``x' = dh/dxi, xi' = -dh/dx`` give ``A = [[0, nu], [-nu, 0]]``,
    ``F = [[a11, a02], [-a20, -a11]]`` and drift ``(b2, -b1)``.
    """
    series = (a20, a11, a02, b1, b2)
    freq = a20.freq
    for s in series:
        if s.freq != freq:
            raise FrequencyMismatch("coefficient series have different frequency vectors")
        if s.kind != "real":
            raise ValueError("coefficients must be real series")
    A = np.array([[0.0, nu], [-nu, 0.0]])
    F = MatrixSeries(a11, a02, -a20, -a11)
    return AffineSystem(freq, A, F, (b2, -b1))


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    Phi: np.ndarray | None = None

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "xi"])
            for t, (x, xi) in zip(self.t, self.X):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(xi))])


def flow(sys: AffineSystem, X0, T, dt, with_matrix=False, rtol=1e-12, atol=1e-13):
    """Integrate the affine system on ``[0, T]``, sampling at multiples of ``dt``.

    Uses an adaptive 8th-order Dormand-Prince scheme.  With
    ``with_matrix=True`` the fundamental matrix of the linear part is
    integrated alongside (``Phi(0) = Id``).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(np.floor(T / dt + 1e-9))
    t_eval = np.arange(n + 1) * dt
    X0 = np.asarray(X0, dtype=float)

    def rhs(t, y):
        M = sys.matrix(t)
        out = np.empty_like(y)
        out[:2] = M @ y[:2] + sys.drift(t)
        if with_matrix:
            out[2:] = (M @ y[2:].reshape(2, 2)).ravel()
        return out

    y0 = np.concatenate([X0, np.eye(2).ravel()]) if with_matrix else X0
    sol = solve_ivp(rhs, (0.0, t_eval[-1]), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise FloatingPointError(f"flow failed: {sol.message}")
    X = sol.y[:2].T
    Phi = sol.y[2:].T.reshape(-1, 2, 2) if with_matrix else None
    return Trajectory(sol.t, X, Phi)


def rotation_numbers(freq, As, F: MatrixSeries | None = None, T=1e4, h=None, n_vectors=8):
    """Rotation numbers of ``X' = (A_j + F(wt)) X`` for a batch of constant parts.

    Fourth-order two-point Gauss-Magnus steps with closed-form SL(2)
    exponentials.  Angles are measured clockwise (``A = [[0, nu], [-nu, 0]]``
    rotates at +nu) and unwrapped per step; a step that turns a vector by
    more than pi/2 is rejected as under-resolved.  Returns arrays
    ``(rho, err)`` where ``err`` is the half-spread over ``n_vectors``
    initial directions.
    """
    As = np.asarray(As, dtype=float).reshape(-1, 2, 2)
    if T < 1e3:
        raise ValueError("T must be at least 1e3")
    scale = np.abs(As).max() + (0.0 if F is None else sum(np.abs(s.coeffs).sum() for s in F.entries))
    if h is None:
        h = min(0.05, 0.2 / max(scale, 1e-12))
    n_steps = int(np.ceil(T / h))
    h = T / n_steps
    ang0 = np.pi * np.arange(n_vectors) / n_vectors
    V = np.broadcast_to(np.stack([np.cos(ang0), np.sin(ang0)]), (As.shape[0], 2, n_vectors)).copy()
    prev = np.arctan2(-V[:, 1], V[:, 0])
    total = np.zeros_like(prev)
    g = 0.5 - np.sqrt(3.0) / 6.0
    chunk = 4096
    for start in range(0, n_steps, chunk):
        k = np.arange(start, min(start + chunk, n_steps))
        t1 = (k + g) * h
        t2 = (k + 1 - g) * h
        shape = (k.size,) + As.shape
        M1 = np.broadcast_to(As, shape) + (0.0 if F is None else F.along(t1)[:, None])
        M2 = np.broadcast_to(As, shape) + (0.0 if F is None else F.along(t2)[:, None])
        comm = M1 @ M2 - M2 @ M1
        step = expm_sl2(0.5 * h * (M1 + M2) - (np.sqrt(3.0) / 12.0) * h * h * comm)
        for S in step:
            V = S @ V
            V /= np.linalg.norm(V, axis=1, keepdims=True)
            cur = np.arctan2(-V[:, 1], V[:, 0])
            d = (cur - prev + np.pi) % (2.0 * np.pi) - np.pi
            if np.any(np.abs(d) >= np.pi / 2):
                raise RuntimeError("rotation-number step turned a vector by more than pi/2; reduce h")
            total += d
            prev = cur
    rates = total / T
    return rates.mean(axis=1), 0.5 * (rates.max(axis=1) - rates.min(axis=1))


def rotation_number(sys_or_freq, A=None, F=None, T=1e4, h=None, n_vectors=8):
    """Rotation number of the linear part and its error bar.

    Accepts either an ``AffineSystem`` or ``(freq, A, F)``.
    """
    if isinstance(sys_or_freq, AffineSystem):
        freq, A, F = sys_or_freq.freq, sys_or_freq.A, sys_or_freq.F
    else:
        freq = sys_or_freq
    rho, err = rotation_numbers(freq, [A], F, T=T, h=h, n_vectors=n_vectors)
    return float(rho[0]), float(err[0])


def default_classify_tol(B):
    return 1e-9 * (1.0 + np.linalg.norm(B))


def classify(B, tol=None):
    B = as_sl2(B, tol=1e-12)
    tol = default_classify_tol(B) if tol is None else tol
    if np.linalg.norm(B) <= tol:
        return DEGENERATE
    det = np.linalg.det(B)
    if det > tol:
        return ELLIPTIC
    if det < -tol:
        return HYPERBOLIC
    return PARABOLIC


@dataclass(frozen=True, eq=False)
class NormalForm:
    """Constant reduced system ``Y' = B Y + w`` plus the energy shift ``C``.

    ``parameter`` holds rho, lambda or kappa for the elliptic, hyperbolic
    and parabolic classes (0 for the degenerate one).
    """

    B: np.ndarray
    w: np.ndarray
    C: float
    kind: str
    parameter: float
    iota: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "B", as_sl2(self.B))
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).reshape(2))
        if classify(self.B) != self.kind:
            raise ValueError(f"B is {classify(self.B)}, not {self.kind}")
        if self.kind in (PARABOLIC, DEGENERATE):
            if not np.allclose(self.w, [self.iota, 0.0], rtol=0, atol=1e-14):
                raise ValueError("w must equal (iota, 0) for parabolic/degenerate classes")
        elif np.any(self.w != 0):
            raise ValueError("w must vanish for elliptic/hyperbolic classes")

    def hamiltonian_coefficients(self):
        """Symbol coefficients ``(a20, a11, a02, b1, b2, c)`` of the reduced Hamiltonian.

        Inverse of the map used in ``build_symbol_system`` (with nu = 0):
        ``B = [[a11, a02], [-a20, -a11]]`` and ``w = (b2, -b1)``.
        """
        B, w = self.B, self.w
        return (-B[1, 0], B[0, 0], B[0, 1], -w[1], w[0], self.C)

    def to_dict(self):
        return {
            "B": self.B.tolist(),
            "w": self.w.tolist(),
            "C": float(self.C),
            "class": self.kind,
            "parameter": float(self.parameter),
            "iota": float(self.iota),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(np.array(data["B"]), np.array(data["w"]), data["C"], data["class"], data["parameter"], data["iota"])


@dataclass(frozen=True, eq=False)
class ReductionCertificate:
    alpha: QpFourierSeries
    beta: QpFourierSeries
    rotation: np.ndarray
    residual: float
    tolerance: float = CERTIFICATE_TOL

    @property
    def ok(self):
        return self.residual < self.tolerance


@dataclass(frozen=True, eq=False)
class Reduction:
    """Result of reducing ``X' = B X + p(wt)`` via ``X = R Y + (alpha, beta)(wt)``."""

    alpha: QpFourierSeries
    beta: QpFourierSeries
    rotation: np.ndarray
    normal_form: NormalForm
    certificate: ReductionCertificate

    @property
    def iota(self):
        return self.normal_form.iota

    def to_original(self, t, Y):
        """Map reduced coordinates ``Y(t)`` (shape (n, 2)) to ``X(t)``."""
        t = np.asarray(t, dtype=float)
        shift = np.stack([self.alpha.along(t), self.beta.along(t)], axis=-1)
        return np.asarray(Y) @ self.rotation.T + shift


def conjugacy_defect(B, R, w, alpha, beta, p1, p2, n_grid=200):
    """Sup-norm of ``d/dt a - B a - p + R w`` on a theta-grid, ``a = (alpha, beta)``.

    This vanishes exactly when ``X = R Y + a(wt)`` carries ``Y' = R^-1 B R Y + w``
    to ``X' = B X + p(wt)``.
    """
    theta = theta_grid(alpha.d, n_grid)
    a = np.stack([alpha.evaluate(theta), beta.evaluate(theta)], -1)
    da = np.stack(
        [alpha.directional_derivative().evaluate(theta), beta.directional_derivative().evaluate(theta)], -1
    )
    p = np.stack([p1.evaluate(theta), p2.evaluate(theta)], -1)
    defect = da - a @ np.asarray(B).T - p + np.asarray(R) @ np.asarray(w)
    return float(np.max(np.linalg.norm(np.atleast_2d(defect), axis=-1)))


def _certify(B, R, w, alpha, beta, p1, p2, tol):
    res = conjugacy_defect(B, R, w, alpha, beta, p1, p2)
    cert = ReductionCertificate(alpha, beta, np.asarray(R, dtype=float), res, tol)
    if not cert.ok:
        raise CertificateError(f"conjugacy residual {res:.3e} exceeds {tol:.1e}")
    return cert


def _inputs(p1, p2):
    if p1.freq != p2.freq:
        raise FrequencyMismatch("p1 and p2 have different frequency vectors")
    ks, (c1, c2) = union_support(p1, p2)
    return p1.freq, ks, c1, c2, p1.freq.dot(ks)


def _series(freq, ks, coeffs, like):
    kind = "real" if like[0].kind == like[1].kind == "real" else "complex"
    return QpFourierSeries(freq, ks, coeffs, kind, max(s.k_max for s in like))


def solve_hyperbolic(p1, p2, lam, tol=CERTIFICATE_TOL):
    """Case ``B = diag(lambda, -lambda)``: ``alpha' = p1 + lambda alpha``, ``beta' = p2 - lambda beta``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    freq, ks, c1, c2, kw = _inputs(p1, p2)
    alpha = _series(freq, ks, 2 * c1 / (-2 * lam + 1j * kw), (p1, p2))
    beta = _series(freq, ks, 2 * c2 / (2 * lam + 1j * kw), (p1, p2))
    B = np.array([[lam, 0.0], [0.0, -lam]])
    nf = NormalForm(B, np.zeros(2), 0.0, HYPERBOLIC, lam)
    cert = _certify(B, np.eye(2), nf.w, alpha, beta, p1, p2, tol)
    return Reduction(alpha, beta, np.eye(2), nf, cert)


def solve_parabolic(p1, p2, kappa, floor=DIVISOR_FLOOR, tol=CERTIFICATE_TOL):
    """Case ``B = [[0, 0], [kappa, 0]]``; reduced drift ``(iota, 0)``, iota the mean of p1.

    The mean of beta lies in the kernel of the homological operator and
    is set to zero.
    """
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    freq, ks, c1, c2, kw = _inputs(p1, p2)
    zero = np.all(ks == 0, axis=1)
    check_divisors(ks, kw, (c1, c2), floor, skip_zero_mode=True)
    live = ~zero & (np.abs(kw) >= floor)
    a = np.zeros_like(c1)
    b = np.zeros_like(c1)
    a[live] = 2 * c1[live] / (1j * kw[live])
    b[live] = -(2j * kw[live] * c2[live] + 4 * kappa * c1[live]) / kw[live] ** 2
    iota = 0.0
    if zero.any():
        a[zero] = -c2[zero] / kappa
        iota = float(c1[zero][0].real)
    alpha = _series(freq, ks, a, (p1, p2))
    beta = _series(freq, ks, b, (p1, p2))
    B = np.array([[0.0, 0.0], [kappa, 0.0]])
    nf = NormalForm(B, np.array([iota, 0.0]), 0.0, PARABOLIC, kappa, iota)
    cert = _certify(B, np.eye(2), nf.w, alpha, beta, p1, p2, tol)
    return Reduction(alpha, beta, np.eye(2), nf, cert)


def elliptic_dio_constant(rho, ks, kw, sigma):
    """Largest K with ``|rho - <k,w>/2| >= K / (1 + |k|^sigma)`` on the given harmonics."""
    norm = np.abs(ks).sum(axis=1).astype(float)
    if not len(kw):
        return np.inf
    return float(np.min(np.abs(rho - kw / 2.0) * (1.0 + norm**sigma)))


def elliptic_coefficient_bound(ks, K, sigma, r, p1, p2):
    """Right-hand side ``(1 + |k|^sigma) / (2K) exp(-|k| r / 2) (|p1|_r + |p2|_r)``.

    ``|p|_r`` is replaced by the computable majorant ``sum |c_k| exp(|k| r / 2)``.
    """
    norm = np.abs(ks).sum(axis=1).astype(float)
    strip = p1.strip_bound(r) + p2.strip_bound(r)
    return (1.0 + norm**sigma) / (2.0 * K) * np.exp(-0.5 * norm * r) * strip


def solve_elliptic(p1, p2, rho, dio=None, r=None, floor=DIVISOR_FLOOR, tol=CERTIFICATE_TOL):
    """Case ``B = [[0, rho], [-rho, 0]]``, ``rho != 0``.

    ``dio=(K, sigma)`` together with ``r`` switches on the coefficient
    bound check: ``rho`` must satisfy the configured Diophantine estimate
    on the support, and every coefficient of alpha and beta must lie below
    ``elliptic_coefficient_bound``.
    """
    if rho == 0:
        raise ValueError("rho must be nonzero; use solve_degenerate")
    freq, ks, c1, c2, kw = _inputs(p1, p2)
    check_divisors(ks, rho - kw / 2.0, (c1, c2), floor)
    check_divisors(ks, rho + kw / 2.0, (c1, c2), floor)
    den = 4 * rho**2 - kw**2
    live = np.abs(den) > 0
    a = np.zeros_like(c1)
    b = np.zeros_like(c1)
    a[live] = (2j * kw[live] * c1[live] + 4 * rho * c2[live]) / den[live]
    b[live] = (2j * kw[live] * c2[live] - 4 * rho * c1[live]) / den[live]
    alpha = _series(freq, ks, a, (p1, p2))
    beta = _series(freq, ks, b, (p1, p2))
    if dio is not None:
        K, sigma = dio
        if r is None:
            raise ValueError("the coefficient bound needs the analyticity radius r")
        allk = np.concatenate([ks, -ks])
        if elliptic_dio_constant(rho, allk, freq.dot(allk), sigma) < K:
            raise ValueError(f"rho={rho} violates the configured Diophantine bound K={K}, sigma={sigma}")
        bound = elliptic_coefficient_bound(ks, K, sigma, r, p1, p2)
        worst = max(np.max(np.abs(a) - bound, initial=-np.inf), np.max(np.abs(b) - bound, initial=-np.inf))
        assert worst <= 1e-15, f"elliptic coefficient exceeds its bound by {worst:.3e}"
    B = np.array([[0.0, rho], [-rho, 0.0]])
    nf = NormalForm(B, np.zeros(2), 0.0, ELLIPTIC, rho)
    cert = _certify(B, np.eye(2), nf.w, alpha, beta, p1, p2, tol)
    return Reduction(alpha, beta, np.eye(2), nf, cert)


def solve_degenerate(p1, p2, floor=DIVISOR_FLOOR, tol=CERTIFICATE_TOL):
    """Case ``B = 0``: remove the oscillating drift and rotate its mean onto the x-axis."""
    freq, ks, c1, c2, kw = _inputs(p1, p2)
    zero = np.all(ks == 0, axis=1)
    check_divisors(ks, kw, (c1, c2), floor, skip_zero_mode=True)
    live = ~zero & (np.abs(kw) >= floor)
    a = np.zeros_like(c1)
    b = np.zeros_like(c1)
    a[live] = -2j * c1[live] / kw[live]
    b[live] = -2j * c2[live] / kw[live]
    m1 = float(c1[zero][0].real) if zero.any() else 0.0
    m2 = float(c2[zero][0].real) if zero.any() else 0.0
    iota = float(np.hypot(m1, m2))
    R = np.array([[m1, -m2], [m2, m1]]) / iota if iota > 0 else np.eye(2)
    alpha = _series(freq, ks, a, (p1, p2))
    beta = _series(freq, ks, b, (p1, p2))
    nf = NormalForm(np.zeros((2, 2)), np.array([iota, 0.0]), 0.0, DEGENERATE, 0.0, iota)
    cert = _certify(np.zeros((2, 2)), R, nf.w, alpha, beta, p1, p2, tol)
    return Reduction(alpha, beta, R, nf, cert)


def reduce_affine(B, p1, p2, **kw):
    """Dispatch on the standard form of ``B``.

    ``B`` must already be one of ``diag(l, -l)``, ``[[0, 0], [k, 0]]``,
    ``[[0, r], [-r, 0]]`` or zero; a general ``B`` has to be conjugated
    into one of these first.
    """
    B = as_sl2(B)
    kind = classify(B)
    if kind == DEGENERATE:
        return solve_degenerate(p1, p2, **kw)
    if kind == HYPERBOLIC and B[0, 1] == B[1, 0] == 0 and B[0, 0] > 0:
        return solve_hyperbolic(p1, p2, B[0, 0], **kw)
    if kind == PARABOLIC and B[0, 0] == B[0, 1] == 0:
        return solve_parabolic(p1, p2, B[1, 0], **kw)
    if kind == ELLIPTIC and B[0, 0] == 0 and B[0, 1] == -B[1, 0]:
        return solve_elliptic(p1, p2, B[0, 1], **kw)
    raise ValueError(f"B={B.tolist()} is not in standard {kind} form")


@dataclass(frozen=True, eq=False)
class PhaseCorrection:
    C: float
    eps: QpFourierSeries
    F: QpFourierSeries
    residual: float


def phase_correction(l, b1, b2, floor=DIVISOR_FLOOR, tol=CERTIFICATE_TOL):
    """Energy shift and phase for a translation ``X -> X + l(wt)``.

    With ``F = 1/2 <l, J (b1 + b2)>`` the constant is the mean of F and
    ``eps`` the zero-mean solution of ``d/dt eps(wt) = F(wt) - C``.
    """
    s1 = b1[0] + b2[0]
    s2 = b1[1] + b2[1]
    # <l, J s> = -l1 s2 + l2 s1
    F = (l[1].multiply(s1) - l[0].multiply(s2)) * 0.5
    C = F.average()
    eps = F.antiderivative(floor)
    theta = theta_grid(F.d)
    resid = float(np.max(np.abs(eps.directional_derivative().evaluate(theta) - (F.evaluate(theta) - C))))
    if resid >= tol:
        raise CertificateError(f"phase-correction residual {resid:.3e} exceeds {tol:.1e}")
    C = float(C.real) if F.kind == "real" else C
    return PhaseCorrection(C, eps, F, resid)


def save_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj.to_dict(), fh, indent=2, sort_keys=True)
