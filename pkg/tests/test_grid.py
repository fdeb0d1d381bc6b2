import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscine.quantum.grid import (
    BoundaryMassError,
    GridState,
    calibrate_equivalence,
    derivative_norm,
    grid_sobolev_norm,
    l2_norm,
    resample_to_hermite,
    standard_sobolev_norm,
    weighted_norm,
)


def gaussian(q=0.0, p=0.0, M=2048, window=(-30.0, 30.0)):
    return GridState.from_function(lambda x: np.pi**-0.25 * np.exp(-0.5 * (x - q) ** 2 + 1j * p * x), M, window)


def test_hermite_functions_on_grid_have_exact_norms():
    for n in range(6):
        u = GridState.hermite(n, 2048, (-30, 30))
        assert l2_norm(u) == pytest.approx(1.0, abs=1e-12)
        assert grid_sobolev_norm(u, 1) == pytest.approx(np.sqrt(2 * n + 1), rel=1e-12)


def test_gaussian_moments():
    u = gaussian(p=1.5)
    assert derivative_norm(u, 1) ** 2 == pytest.approx(0.5 + 1.5**2, rel=1e-12)
    assert weighted_norm(u, 1) ** 2 == pytest.approx(0.5, rel=1e-12)
    # (1 + k^2) weight: 1 + <k^2>
    assert standard_sobolev_norm(u, 1) ** 2 == pytest.approx(1 + 0.5 + 1.5**2, rel=1e-12)


def test_equivalence_constants():
    c, C = calibrate_equivalence(1, 8, 2048, (-30, 30))
    assert c == pytest.approx(1.0) and C == pytest.approx(1.0)
    c2, C2 = calibrate_equivalence(2, 8, 2048, (-30, 30))
    assert 0.5 < c2 <= C2 < 2.0


def test_boundary_mass_detected():
    u = gaussian(q=28.0)
    with pytest.raises(BoundaryMassError):
        grid_sobolev_norm(u, 1)
    with pytest.raises(ValueError):
        grid_sobolev_norm(gaussian(), 0.5)


@given(st.floats(-5, 5), st.floats(-3, 3))
def test_binary_round_trip(q, p):
    u = gaussian(q, p, M=256)
    v = GridState.from_bytes(u.to_bytes())
    assert np.array_equal(u.samples, v.samples) and (u.x_min, u.dx) == (v.x_min, v.dx)
    assert len(u.to_bytes()) == 32 + 16 * 256


def test_binary_file(tmp_path):
    u = gaussian(M=64)
    u.save(tmp_path / "u.osc")
    assert np.array_equal(GridState.load(tmp_path / "u.osc").samples, u.samples)
    with pytest.raises(ValueError):
        GridState.from_bytes(b"XXXX" + u.to_bytes()[4:])


def test_resample_to_hermite():
    u = GridState.hermite(3, 2048, (-30, 30))
    c = resample_to_hermite(u, 8)
    assert np.allclose(c, np.eye(8)[3], atol=1e-12)
