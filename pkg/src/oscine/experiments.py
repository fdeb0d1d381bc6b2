"""
Reproducible experiments.  Each takes a config dict (``system`` and
``numerics`` sections plus ``seed``) and returns an ``Outcome`` holding
pass/fail, a JSON-able report and CSV tables.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import example
from .classical import (
    MatrixSeries,
    elliptic_dio_constant,
    phase_correction,
    rotation_numbers,
    solve_degenerate,
    solve_elliptic,
    solve_hyperbolic,
    solve_parabolic,
)
from .growth import Envelope, NormSeries, fit_growth, sandwich_check
from .qpfourier import FrequencyVector, QpFourierSeries, SmallDivisorError
from .quantum.gaussian import GaussianPacket, coherent_oracle
from .quantum.grid import GridState, grid_sobolev_norm, l2_norm, standard_sobolev_norm, weighted_norm
from .quantum.hermite import SymbolPath, propagate
from .quantum.normal_forms import (
    dilation_evolve,
    stark_derivative_norm,
    stark_weighted_moment,
    transport_evolve,
)


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class Outcome:
    passed: bool
    report: dict
    tables: dict = field(default_factory=dict)


DEFAULTS = {
    "free": {
        "system": {"nu": 1.0, "q0": 1.0, "p0": 0.5},
        "numerics": {"T": 20.0, "dt": 0.01, "sample_every": 0.5, "s": 1.0},
    },
    "dilation": {
        "system": {"lam": 0.3, "s": 1},
        "numerics": {"T": 15.0, "dt": 0.25, "fit_window": [5.0, 15.0], "M": 8192, "window": [-80.0, 80.0]},
    },
    "stark-normform": {
        "system": {"kappa": 0.5, "iota": 1.0},
        "numerics": {"T": 50.0, "dt": 0.5, "fit_window": [10.0, 50.0], "t_ratio": 40.0, "M": 8192},
    },
    "stark-limit": {
        "system": {"a": 2.0, "s": 1},
        "numerics": {"T": 20.0, "dt": 1.0, "M": 8192, "window": [-80.0, 80.0]},
    },
    "transport": {
        "system": {"iota": 1.0},
        "numerics": {"T": 40.0, "dt": 1.0, "M": 8192, "window": [-80.0, 80.0]},
    },
    "example5": {
        "system": {"kappa": 0.5, "iota": 1.0, "q0": 0.0, "p0": 0.0},
        "numerics": {
            "T": 20.0,
            "dt": 0.01,
            "sample_every": 0.5,
            "T_fit": 50.0,
            "fit_dt": 0.1,
            "fit_window": [10.0, 50.0],
            "t_ratio": 40.0,
            "oracle_tol": 1e-4,
            "slack": 100.0,
        },
    },
    "homological-suite": {
        "system": {"n_inputs": 50, "d": 2},
        "numerics": {"tol": 1e-10, "sigma": 1.5, "r": 0.5},
    },
    "rotation-sweep": {
        "system": {"nu_min": 0.2, "nu_max": 1.2, "n_nu": 50, "eps": 0.05},
        "numerics": {"T": 1e4, "n_vectors": 8},
    },
}


def _gaussian_grid(M, window, q=0.0, p=0.0):
    return GridState.from_function(lambda x: np.pi**-0.25 * np.exp(-0.5 * (x - q) ** 2 + 1j * p * x), M, tuple(window))


def _times(T, dt):
    return np.arange(int(round(T / dt)) + 1) * dt


def run_free(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    packet = GaussianPacket(sy["q0"], sy["p0"])
    res = propagate(SymbolPath(), packet.hermite_coefficients(64), nu_["T"], nu_["dt"], nu=sy["nu"],
                    s=nu_["s"], sample_every=nu_["sample_every"])
    series = NormSeries(res.times[1:], res.hs[1:], nu_["s"])
    rep = fit_growth(series)
    drift = float(np.abs(res.l2 - res.l2[0]).max() / nu_["T"])
    report = {"growth": rep.to_dict(), "l2_drift_per_time": drift, "hs_spread": float(np.ptp(res.hs))}
    ok = rep.kind == "bounded" and drift < 1e-9
    table = Table(["t", "l2", "hs", "tail_mass"], list(zip(res.times, res.l2, res.hs, res.tail)))
    return Outcome(ok, report, {"free": table})


def run_dilation(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    u0 = _gaussian_grid(nu_["M"], nu_["window"])
    ts = _times(nu_["T"], nu_["dt"])
    rows = []
    for t in ts:
        v = dilation_evolve(u0, sy["lam"], t)
        rows.append((t, l2_norm(v), grid_sobolev_norm(v, sy["s"])))
    t, l2, hs = map(np.array, zip(*rows))
    m = (t >= nu_["fit_window"][0]) & (t <= nu_["fit_window"][1])
    slope = float(np.polyfit(t[m], np.log(hs[m]), 1)[0])
    rep = fit_growth(NormSeries(t[1:], hs[1:], sy["s"]), window=tuple(nu_["fit_window"]))
    target = sy["lam"] * sy["s"]
    drift = float(np.abs(l2 - l2[0]).max() / nu_["T"])
    report = {"slope": slope, "target": target, "growth": rep.to_dict(), "l2_drift_per_time": drift}
    ok = abs(slope - target) < 0.01 and drift < 1e-9
    return Outcome(ok, report, {"dilation": Table(["t", "l2", "hs"], rows)})


def run_stark_normform(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    kappa, iota = sy["kappa"], sy["iota"]
    u0 = _gaussian_grid(nu_["M"], (-80.0, 80.0))
    ts = _times(nu_["T"], nu_["dt"])
    rows = []
    for t in ts:
        dx = stark_derivative_norm(u0, kappa, iota, 1, t)
        # x = y + iota t on the shifted grid; |v| is |u0| moved along.
        xn = float(np.sqrt(u0.dx * np.sum(np.abs(u0.x + iota * t) ** 2 * np.abs(u0.samples) ** 2)))
        rows.append((t, l2_norm(u0), dx, xn, float(np.hypot(dx, xn))))
    t, _, dxs, _, hs = map(np.array, zip(*rows))
    rep = fit_growth(NormSeries(t[1:], hs[1:]), window=tuple(nu_["fit_window"]))
    tr = nu_["t_ratio"]
    ratio = stark_derivative_norm(u0, kappa, iota, 1, tr) / (0.5 * abs(iota * kappa) * tr**2 * l2_norm(u0))
    report = {"growth": rep.to_dict(), "ratio_at_t": ratio, "t_ratio": tr}
    ok = abs(rep.exponent - 2.0) < 0.05 and 0.95 <= ratio <= 1.05
    return Outcome(ok, report, {"stark": Table(["t", "l2", "dx_norm", "x_norm", "hs"], rows)})


def run_stark_limit(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    a, s = sy["a"], int(sy["s"])
    u0 = _gaussian_grid(nu_["M"], nu_["window"])
    start = time.perf_counter()
    rows = []
    for t in _times(nu_["T"], nu_["dt"])[1:]:
        m = stark_weighted_moment(u0, a, s, t)
        rows.append((t, m, m / (t ** (2 * s) * abs(a) ** s * l2_norm(u0))))
    elapsed = time.perf_counter() - start
    ratio = rows[-1][2]
    report = {"ratio_at_T": ratio, "T": nu_["T"], "elapsed_s": elapsed}
    return Outcome(abs(ratio - 1.0) < 0.02, report, {"stark_limit": Table(["t", "moment", "ratio"], rows)})


def run_transport(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    u0 = _gaussian_grid(nu_["M"], nu_["window"])
    h0 = standard_sobolev_norm(u0, 1)
    rows = []
    for t in _times(nu_["T"], nu_["dt"])[1:]:
        v = transport_evolve(u0, sy["iota"], t)
        rows.append((t, weighted_norm(v, 1), weighted_norm(v, 1) / (t * l2_norm(u0)), standard_sobolev_norm(v, 1)))
    ratio = rows[-1][2]
    h1_dev = max(abs(r[3] - h0) / h0 for r in rows)
    report = {"ratio_at_T": ratio, "h1_relative_deviation": h1_dev}
    ok = abs(ratio - abs(sy["iota"])) < 0.05 * abs(sy["iota"]) and h1_dev < 1e-8
    return Outcome(ok, report, {"transport": Table(["t", "x_norm", "ratio", "h1"], rows)})


def run_example5(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    kappa, iota = sy["kappa"], sy["iota"]
    packet = GaussianPacket(sy["q0"], sy["p0"])
    sol = example.exact_solution_map(kappa, iota)
    path = SymbolPath(*example.symbol_coefficients(kappa, iota))

    # Full quantum run against the exact Gaussian evolution.
    errors = []

    def compare(t, st):
        exact = coherent_oracle(sol, packet, [t])[0]
        errors.append(abs(st.sobolev_norm(1) - exact.h1_norm()) / exact.h1_norm())

    start = time.perf_counter()
    res = propagate(path, packet.hermite_coefficients(64), nu_["T"], nu_["dt"], nu=1.0,
                    sample_every=nu_["sample_every"], on_sample=compare)
    elapsed = time.perf_counter() - start

    # Long-time series from the exact solution, fitted on the window.
    tf = _times(nu_["T_fit"], nu_["fit_dt"])[1:]
    h1 = np.array([g.h1_norm() for g in coherent_oracle(sol, packet, tf)])
    series = NormSeries(tf, h1)
    rep = fit_growth(series, window=tuple(nu_["fit_window"]))
    env = Envelope.power(2.0)
    sand = sandwich_check(series, env, env, window=tuple(nu_["fit_window"]), slack=nu_["slack"])

    # Reduced (Stark) propagator: ||d_x v|| against (|iota kappa|/2) t^2.
    k_red, i_red = example.reduced_parameters(kappa, iota)
    u0 = _gaussian_grid(8192, (-80.0, 80.0), packet.q, packet.p)
    tr = nu_["t_ratio"]
    ratio = stark_derivative_norm(u0, k_red, i_red, 1, tr) / (0.5 * abs(iota * kappa) * tr**2 * l2_norm(u0))

    drift = float(np.abs(res.l2 - res.l2[0]).max() / nu_["T"])
    report = {
        "oracle_max_rel_h1_error": float(max(errors)),
        "l2_drift_per_time": drift,
        "growth": rep.to_dict(),
        "sandwich": {"c": sand.c, "C": sand.C, "ratio": sand.ratio, "passed": sand.passed},
        "reduced": {"kappa": k_red, "iota": i_red},
        "ratio_at_t": ratio,
        "max_N": int(res.sizes.max()),
        "quantum_elapsed_s": elapsed,
    }
    ok = (
        max(errors) < nu_["oracle_tol"]
        and abs(rep.exponent - 2.0) < 0.05
        and rep.kind == "polynomial"
        and 0.95 <= ratio <= 1.05
        and sand.passed
        and drift < 1e-9
    )
    tables = {
        "example5": Table(["t", "l2", "hs", "tail_mass"], list(zip(res.times, res.l2, res.hs, res.tail))),
        "example5_oracle": Table(["t", "hs_exact"], list(zip(tf, h1))),
    }
    return Outcome(ok, report, tables)


def random_drift(freq, rng, mean=True):
    p1 = QpFourierSeries.random(freq, rng, n_harmonics=6, k_bound=4, decay=0.4, mean=mean)
    p2 = QpFourierSeries.random(freq, rng, n_harmonics=6, k_bound=4, decay=0.4, mean=mean)
    return p1, p2


def run_homological_suite(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    freq = FrequencyVector.golden() if sy["d"] == 2 else FrequencyVector(np.array([1.0]))
    tol, sigma, r = nu_["tol"], nu_["sigma"], nu_["r"]
    rows, worst = [], {}
    n = int(sy["n_inputs"])
    for case in ("hyperbolic", "parabolic", "elliptic", "degenerate"):
        done = 0
        while done < n:
            p1, p2 = random_drift(freq, rng)
            if case == "hyperbolic":
                par = rng.uniform(0.1, 2.0)
                red = solve_hyperbolic(p1, p2, par, tol=tol)
            elif case == "parabolic":
                par = rng.uniform(0.1, 2.0)
                red = solve_parabolic(p1, p2, par, tol=tol)
            elif case == "elliptic":
                par = rng.uniform(0.1, 1.0)
                ks = np.concatenate([p1.ks, p2.ks, -p1.ks, -p2.ks])
                K = elliptic_dio_constant(par, ks, freq.dot(ks), sigma)
                if K < 1e-3:
                    continue  # near-resonant draw; only off-resonant rho are sampled
                try:
                    red = solve_elliptic(p1, p2, par, dio=(0.5 * K, sigma), r=r, tol=tol)
                except SmallDivisorError:
                    continue
            else:
                par = 0.0
                red = solve_degenerate(p1, p2, tol=tol)
            res = red.certificate.residual
            rows.append((case, done, par, res))
            worst[case] = max(worst.get(case, 0.0), res)
            done += 1
    ok = all(v < tol for v in worst.values())
    return Outcome(ok, {"max_residual": worst, "tol": tol}, {"homological": Table(["case", "index", "param", "residual"], rows)})


def run_rotation_sweep(cfg, rng):
    sy, nu_ = cfg["system"], cfg["numerics"]
    freq = FrequencyVector(np.array([1.0]))
    eps = sy["eps"]
    F = MatrixSeries(
        QpFourierSeries.cosine(freq, 2, eps),
        QpFourierSeries.cosine(freq, 2, 0.5 * eps),
        QpFourierSeries.sine(freq, 2, 0.3 * eps),
        QpFourierSeries.cosine(freq, 2, -eps),
    )
    nus = np.linspace(sy["nu_min"], sy["nu_max"], int(sy["n_nu"]))
    As = [np.array([[0.0, v], [-v, 0.0]]) for v in nus]
    rho, err = rotation_numbers(freq, As, F, T=nu_["T"], n_vectors=nu_["n_vectors"])
    rho0, _ = rotation_numbers(freq, As[:1], None, T=nu_["T"], n_vectors=nu_["n_vectors"])
    drops = np.diff(rho)
    allowed = np.maximum(err[1:], err[:-1])
    worst = float(np.max(-drops - allowed, initial=-np.inf))
    unpert = float(abs(rho0[0] - nus[0]))
    report = {"unperturbed_error": unpert, "worst_decrease_beyond_error": worst}
    ok = unpert < 1e-6 and worst <= 0
    return Outcome(ok, report, {"rotation": Table(["nu", "rho", "err"], list(zip(nus, rho, err)))})


REGISTRY = {
    "free": run_free,
    "dilation": run_dilation,
    "stark-normform": run_stark_normform,
    "stark-limit": run_stark_limit,
    "transport": run_transport,
    "example5": run_example5,
    "homological-suite": run_homological_suite,
    "rotation-sweep": run_rotation_sweep,
}


def phase_correction_residuals(rng, n=50, d=2):
    """Residuals of the phase-correction certificate on random inputs."""
    freq = FrequencyVector.golden() if d == 2 else FrequencyVector(np.array([1.0]))
    out = []
    for _ in range(n):
        l = random_drift(freq, rng)
        b1 = random_drift(freq, rng)
        b2 = random_drift(freq, rng)
        out.append(phase_correction(l, b1, b2).residual)
    return np.array(out)
