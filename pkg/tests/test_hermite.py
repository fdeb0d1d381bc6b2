import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from oracles import MONOMIALS, quadrature_elements

from oscine import example
from oscine.qpfourier import FrequencyVector, QpFourierSeries
from oscine.quantum.hermite import (
    BandedOperator,
    Degree2Symbol,
    HermiteState,
    SymbolPath,
    TailBudgetExceeded,
    expm_action,
    hermite_functions,
    load_state,
    propagate,
    save_state,
    sobolev_norm,
    weyl_quantize,
)

NQ = 65  # n, m <= 64
SYMBOLS = MONOMIALS


@pytest.mark.parametrize("name", list(SYMBOLS))
def test_weyl_quantization_matches_quadrature(name):
    ref = quadrature_elements()[name]
    mat = weyl_quantize(SYMBOLS[name], NQ).to_dense()
    assert np.abs(mat - ref).max() < 1e-10


def test_harmonic_oscillator_is_diagonal():
    op = weyl_quantize(Degree2Symbol(a20=2.0, a02=2.0), 10)
    assert np.allclose(op.to_dense(), np.diag(2 * np.arange(10) + 1.0))


@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_quantization_is_hermitian_and_linear(c):
    s1 = Degree2Symbol(*c)
    s2 = Degree2Symbol(*c[::-1])
    m = weyl_quantize(s1 + s2.scale(0.5), 20).to_dense()
    assert np.allclose(m, m.conj().T, atol=1e-13)
    assert np.allclose(m, weyl_quantize(s1, 20).to_dense() + 0.5 * weyl_quantize(s2, 20).to_dense())


def test_banded_matvec_and_gershgorin():
    rng = np.random.default_rng(0)
    op = weyl_quantize(Degree2Symbol(*rng.normal(size=6)), 30)
    v = rng.normal(size=30) + 1j * rng.normal(size=30)
    assert np.allclose(op.matvec(v.copy()), op.to_dense() @ v)
    lo, hi = op.spectral_bounds()
    ev = np.linalg.eigvalsh(op.to_dense())
    assert lo <= ev.min() and ev.max() <= hi


@given(st.floats(0.001, 0.5), st.integers(0, 2**31 - 1))
def test_expm_action_matches_dense(dt, seed):
    rng = np.random.default_rng(seed)
    op = weyl_quantize(Degree2Symbol(*rng.normal(size=6)), 40)
    v = rng.normal(size=40) + 1j * rng.normal(size=40)
    assert np.allclose(expm_action(op, v, dt), expm(-1j * dt * op.to_dense()) @ v, atol=1e-12)


def test_hermite_functions_orthonormal():
    x = np.linspace(-20, 20, 4001)
    H = hermite_functions(30, x)
    G = (H * (x[1] - x[0])) @ H.T
    assert np.allclose(G, np.eye(30), atol=1e-12)


def test_state_norms_and_io(tmp_path):
    u = HermiteState.basis(3, 16)
    assert u.norm() == 1.0 and sobolev_norm(u, 2) == pytest.approx(7.0)
    assert u.tail_mass() == 0.0
    v = HermiteState(np.arange(8) + 1j)
    save_state(v, tmp_path / "s.json")
    assert np.array_equal(load_state(tmp_path / "s.json").coeffs, v.coeffs)
    with pytest.raises(ValueError):
        v.padded(4)


def test_free_evolution_is_exact_phase():
    c = np.exp(-np.arange(32) / 3.0)
    u0 = HermiteState(c / np.linalg.norm(c))
    res = propagate(SymbolPath(), u0, 2.0, 0.1, nu=0.7, keep_states=True, N0=32)
    n = np.arange(32)
    expect = u0.coeffs * np.exp(-0.5j * 0.7 * 2.0 * (2 * n + 1))
    assert np.allclose(res.states[-1].coeffs[:32], expect, atol=1e-13)
    assert np.allclose(res.hs, res.hs[0], rtol=1e-13)


def test_propagate_unitary_and_converges_in_dt():
    f = FrequencyVector.golden()
    path = SymbolPath(QpFourierSeries.cosine(f, [2, 0], 0.3), QpFourierSeries.cosine(f, [0, 2], 0.2),
                      0.1, QpFourierSeries.sine(f, [2, 2], 0.4), 0.0)
    u0 = HermiteState.basis(0, 64)
    T = 3.0
    finals = []
    for dt in (0.02, 0.01, 0.005):
        res = propagate(path, u0, T, dt, nu=1.0, keep_states=True, N0=64, sample_every=1.0)
        assert np.abs(res.l2 - 1).max() / T < 1e-9
        finals.append(res.states[-1].coeffs)
    e1 = np.linalg.norm(finals[0] - finals[2])
    e2 = np.linalg.norm(finals[1] - finals[2])
    assert e1 / e2 == pytest.approx(5.0, rel=0.3)  # second order: (4 - 1)/(1 - 1/4) ... ratio 5 for 2:1:0.5


def test_propagate_doubles_basis():
    path = SymbolPath(*example.symbol_coefficients(0.5, 1.0))
    res = propagate(path, HermiteState.basis(0, 16), 2.0, 0.01, N0=16, sample_every=0.5)
    assert res.sizes[-1] > 16 and np.all(res.tail <= 1e-14)


def test_propagate_tail_budget_exceeded():
    path = SymbolPath(*example.symbol_coefficients(0.5, 1.0))
    with pytest.raises(TailBudgetExceeded) as exc:
        propagate(path, HermiteState.basis(0, 16), 5.0, 0.01, N0=16, N_max=64)
    assert 0 < exc.value.t < 5.0


def test_propagate_argument_checks():
    with pytest.raises(ValueError):
        propagate(SymbolPath(), HermiteState.basis(0, 8), 1.05, 0.1)
    with pytest.raises(ValueError):
        propagate(SymbolPath(), HermiteState.basis(0, 8), 1.0, 0.1, sample_every=0.25)


def test_propagation_csv(tmp_path):
    res = propagate(SymbolPath(), HermiteState.basis(1, 8), 0.2, 0.1, N0=8)
    res.write_csv(tmp_path / "n.csv")
    rows = (tmp_path / "n.csv").read_text().splitlines()
    assert rows[0] == "t,l2,hs,tail_mass" and len(rows) == 4
