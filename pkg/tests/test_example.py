import numpy as np
import pytest

from oscine import example
from oscine.quantum.hermite import SymbolPath


def test_symbol_matches_closed_form():
    k, i = 0.5, 1.3
    path = SymbolPath(*example.symbol_coefficients(k, i))
    rng = np.random.default_rng(0)
    for t, x, xi in rng.uniform(-3, 3, size=(10, 3)):
        W = path.at(t)(x, xi)
        ref = -0.5 * k * (np.cos(t) * x - np.sin(t) * xi) ** 2 - 2 * i * np.cos(t) * xi
        assert W == pytest.approx(ref, abs=1e-13)


def test_exact_flow_solves_system():
    k, i = 0.5, 1.0
    sy = example.system(k, i)
    t = np.linspace(0.5, 30, 40)
    h = 1e-5
    X = example.exact_flow(k, i, (0.4, -0.7), t)
    dX = (example.exact_flow(k, i, (0.4, -0.7), t + h) - example.exact_flow(k, i, (0.4, -0.7), t - h)) / (2 * h)
    rhs = np.einsum("nij,nj->ni", sy.matrix(t), X) + sy.drift(t)
    assert np.abs(dX - rhs).max() < 1e-6 * np.abs(rhs).max()


def test_fundamental_matrix():
    Phi = example.exact_fundamental_matrix(0.5, np.linspace(0, 20, 11))
    assert np.allclose(np.linalg.det(Phi), 1.0)
    assert np.allclose(Phi[0], np.eye(2))


def test_reduced_parameters():
    assert example.reduced_parameters(0.5, 1.0) == (0.5, -1.0)
    assert example.reduction(0.5, 1.0).normal_form.kind == "parabolic"
