"""
Classification of norm time series: bounded, polynomial or exponential
growth, and two-sided envelope checks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

BOUNDED = "bounded"
POLYNOMIAL = "polynomial"
EXPONENTIAL = "exponential"
INCONCLUSIVE = "inconclusive"

SLOPE_TOL = 0.05
RESIDUAL_TOL = 0.05
DEFAULT_DROP = 0.2


@dataclass
class NormSeries:
    t: np.ndarray
    values: np.ndarray
    s: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.shape != self.values.shape or self.t.ndim != 1:
            raise ValueError("t and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t must be strictly increasing")
        if np.any(~np.isfinite(self.values)) or np.any(self.values <= 0):
            raise ValueError("norm values must be finite and positive")

    def window(self, lo, hi):
        m = (self.t >= lo) & (self.t <= hi)
        return NormSeries(self.t[m], self.values[m], self.s, dict(self.meta))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            for t, v in zip(self.t, self.values):
                w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def read_csv(cls, path, s=1.0):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], s)


@dataclass
class GrowthReport:
    kind: str
    exponent: float
    prefactor: float
    window: tuple
    residual: float

    def to_dict(self):
        d = asdict(self)
        d["class"] = d.pop("kind")
        d["window"] = list(self.window)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _lsq(X, y):
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    return coef, float(np.sqrt(np.mean((X @ coef - y) ** 2)))


def fit_growth(series: NormSeries, window=None, slope_tol=SLOPE_TOL, residual_tol=RESIDUAL_TOL):
    """Fit ``log v`` against ``log t`` (power law) and against ``t`` (exponential).

    The better fit (smaller RMS residual in log v) decides the class.  A
    series whose log-log slope is below ``slope_tol`` in both fits is
    bounded; a best residual above ``residual_tol`` is inconclusive.  ``window``
    defaults to the series with its first 20% of samples dropped.
    """
    if window is None:
        t0 = series.t[0] + DEFAULT_DROP * (series.t[-1] - series.t[0])
        window = (float(t0), float(series.t[-1]))
    sub = series.window(*window)
    if sub.t.size < 3:
        raise ValueError("fit window holds fewer than 3 samples")
    if sub.t[0] <= 0:
        raise ValueError("power-law fit needs t > 0")
    y = np.log(sub.values)
    one = np.ones_like(sub.t)
    (cp, res_p) = _lsq(np.stack([one, np.log(sub.t)], 1), y)
    (ce, res_e) = _lsq(np.stack([one, sub.t], 1), y)
    # The exponential rate is compared as a log-log slope, rate * t, at mid-window.
    t_mid = 0.5 * (sub.t[0] + sub.t[-1])
    if abs(cp[1]) < slope_tol and abs(ce[1]) * t_mid < slope_tol:
        return GrowthReport(BOUNDED, 0.0, float(np.exp(np.mean(y))), tuple(window), float(np.std(y)))
    if res_p <= res_e:
        kind, coef, res = POLYNOMIAL, cp, res_p
    else:
        kind, coef, res = EXPONENTIAL, ce, res_e
    if res > residual_tol:
        kind = INCONCLUSIVE
    return GrowthReport(kind, float(coef[1]), float(np.exp(coef[0])), tuple(window), res)


@dataclass(frozen=True)
class Envelope:
    """``constant + sum coef t^power`` times ``exp(rate t)``."""

    terms: tuple = ()
    constant: float = 0.0
    rate: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.constant + sum(c * t**p for c, p in self.terms)
        return val * np.exp(self.rate * t)

    @classmethod
    def power(cls, p, coef=1.0, constant=1.0):
        return cls(((coef, p),), constant)


@dataclass
class SandwichResult:
    passed: bool
    c: float
    C: float
    ratio: float
    slack: float

    @property
    def margin(self):
        return self.slack / self.ratio


def sandwich_check(series: NormSeries, lower: Envelope, upper: Envelope, window=None, slack=100.0):
    """Best constants with ``c g(t) <= v(t) <= C h(t)`` on the window; pass iff ``C/c < slack``."""
    sub = series if window is None else series.window(*window)
    lo, hi = lower(sub.t), upper(sub.t)
    if np.any(lo <= 0) or np.any(hi <= 0):
        raise ValueError("envelopes must be positive on the window")
    c = float(np.min(sub.values / lo))
    C = float(np.max(sub.values / hi))
    ratio = C / c
    return SandwichResult(bool(ratio < slack), c, C, ratio, slack)
