import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar
from scipy.special import mathieu_a, mathieu_b

from rydcluster.errors import DomainError, ParameterError
from rydcluster.lattice import (
    LatticeParams,
    bloch_function,
    central_matrix,
    double_well_minima,
    harmonic_width,
    lowest_two_splitting,
    quasi_momenta,
    solve_bands,
    vector_shift,
    wannier,
    wannier_width,
)

DOUBLE_WELL = LatticeParams(100.0, 100.0)
SIMPLE = LatticeParams(100.0, 0.0)


@pytest.fixture(scope="module")
def double_well_set():
    return wannier(solve_bands(DOUBLE_WELL, n_bands=2))


def test_params_validation():
    with pytest.raises(ParameterError):
        LatticeParams(-1.0, 1.0)
    with pytest.raises(ParameterError):
        LatticeParams(1.0, 1.0, E_R_kHz=0.0)
    with pytest.raises(ParameterError):
        LatticeParams(1.0, 1.0, k=0.0)


def test_free_particle_q0():
    bs = solve_bands(LatticeParams(0.0, 0.0), n_bands=3, q_points=1)
    assert np.allclose(bs.energies[:, 0], [0.0, 4.0, 4.0], atol=1e-12)


def test_simple_lattice_near_harmonic():
    ground = solve_bands(SIMPLE, n_bands=1, q_points=1).energies[0, 0]
    assert ground < 10.0
    assert abs(ground - 10.0) / 10.0 < 0.15


@pytest.mark.parametrize("depth", [5.0, 40.0, 100.0])
def test_simple_lattice_matches_mathieu(depth):
    # V cos^2(x) = V/2 + (V/2) cos 2x  ->  Mathieu parameter q = V/4
    bs = solve_bands(LatticeParams(depth, 0.0), n_bands=3, q_points=2)
    q = depth / 4
    centre = [mathieu_a(0, q), mathieu_b(2, q), mathieu_a(2, q)]
    edge = sorted([mathieu_a(1, q), mathieu_b(1, q), mathieu_b(3, q)])
    i0 = int(np.argmin(np.abs(bs.q_grid)))
    iedge = int(np.argmin(bs.q_grid))
    assert np.allclose(bs.energies[:, i0], np.sort(centre) + depth / 2, atol=1e-8)
    assert np.allclose(bs.energies[:, iedge], np.array(edge) + depth / 2, atol=1e-8)


def test_printed_coupling_convention_differs():
    # Frozen: direct diagonalization with V/2 off-diagonal entries.
    assert lowest_two_splitting(DOUBLE_WELL, coupling="printed") == pytest.approx(0.034275, abs=5e-6)
    assert lowest_two_splitting(DOUBLE_WELL) == pytest.approx(0.273743, abs=5e-6)
    with pytest.raises(ParameterError):
        central_matrix(DOUBLE_WELL, coupling="other")


def test_band_count_limits():
    with pytest.raises(ParameterError):
        solve_bands(DOUBLE_WELL, n_bands=21, N_max=10)
    with pytest.raises(ParameterError):
        solve_bands(DOUBLE_WELL, q_points=0)


def test_quasi_momenta_contain_zero():
    for n in (1, 2, 7, 32):
        qs = quasi_momenta(DOUBLE_WELL, n)
        assert np.any(qs == 0.0)
        assert np.all((qs >= -1.0) & (qs < 1.0))


lattices = st.builds(
    LatticeParams,
    V0=st.floats(0.0, 150.0),
    V1=st.floats(0.0, 150.0),
    phi=st.floats(-math.pi, math.pi),
    k=st.floats(0.5, 2.0),
)


@given(lattices)
def test_band_invariants(p):
    bs = solve_bands(p, n_bands=4, q_points=6)
    assert np.all(np.diff(bs.energies, axis=0) >= -1e-12)
    assert np.allclose(np.linalg.norm(bs.coefficients, axis=2), 1.0)


@given(lattices)
def test_gauge_shift_keeps_energies(p):
    shifted = LatticeParams(p.V0, p.V1, p.phi + math.pi / 2, p.k)
    a = solve_bands(p, 4, 8).energies
    b = solve_bands(shifted, 4, 8).energies
    assert np.max(np.abs(a - b)) < 1e-10


@given(st.floats(0.0, 150.0), st.floats(0.0, 150.0))
def test_energies_even_in_q(V0, V1):
    p = LatticeParams(V0, V1)
    qs = np.linspace(0.05, 0.95, 5)
    for q in qs:
        plus = np.linalg.eigvalsh(central_matrix(p, q))
        minus = np.linalg.eigvalsh(central_matrix(p, -q))
        assert np.max(np.abs(plus - minus)) < 1e-10


@given(lattices)
def test_completeness(p):
    H = central_matrix(p, 0.3)
    vecs = np.linalg.eigh(H)[1]
    assert np.allclose(np.sum(np.abs(vecs) ** 2, axis=1), 1.0)


def test_convergence_in_cutoff_at_default_depth():
    # Stated invariant at the default N_max; at depth 100 the fourth band moves by ~4e-6.
    a = solve_bands(DOUBLE_WELL, 4, 8, N_max=10).energies
    b = solve_bands(DOUBLE_WELL, 4, 8, N_max=12).energies
    assert np.max(np.abs(a - b)) < 1e-8


def test_convergence_in_cutoff_shallow_lattice():
    p = LatticeParams(20.0, 20.0)
    a = solve_bands(p, 4, 8, N_max=10).energies
    b = solve_bands(p, 4, 8, N_max=12).energies
    assert np.max(np.abs(a - b)) < 1e-8


def test_convergence_in_cutoff_larger_basis():
    a = solve_bands(DOUBLE_WELL, 4, 8, N_max=14).energies
    b = solve_bands(DOUBLE_WELL, 4, 8, N_max=16).energies
    assert np.max(np.abs(a - b)) < 1e-8


def test_wannier_needs_two_bands():
    with pytest.raises(ParameterError):
        wannier(solve_bands(DOUBLE_WELL, n_bands=1))


def test_wannier_set_invariants(double_well_set):
    ws = double_well_set
    x = ws.x_grid
    for f in (ws.w1, ws.w2, ws.psiL, ws.psiR):
        assert np.trapezoid(np.abs(f) ** 2, x) == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(ws.psiL, (ws.w1 - ws.w2) / math.sqrt(2))
    assert np.allclose(ws.psiR, (ws.w1 + ws.w2) / math.sqrt(2))
    assert abs(np.trapezoid(np.conj(ws.psiL) * ws.psiR, x)) < 1e-8
    assert ws.weight_left(ws.psiL) >= 0.95
    assert ws.weight_right(ws.psiR) >= 0.95


def test_wannier_deterministic():
    bs = solve_bands(DOUBLE_WELL, n_bands=2, q_points=8)
    a, b = wannier(bs), wannier(bs)
    assert np.array_equal(a.psiL, b.psiL)


def test_wannier_width_close_to_harmonic():
    ws = wannier(solve_bands(SIMPLE, n_bands=2))
    assert abs(wannier_width(ws.x_grid, ws.w1) - 0.316) / 0.316 < 0.10


def test_single_q_wannier_is_bloch_function():
    bs = solve_bands(SIMPLE, n_bands=2, q_points=1)
    ws = wannier(bs)
    bloch = bloch_function(bs, 0, 0, ws.x_grid)
    bloch /= math.sqrt(np.trapezoid(np.abs(bloch) ** 2, ws.x_grid))
    overlap = abs(np.trapezoid(np.conj(bloch) * ws.w1, ws.x_grid))
    assert overlap == pytest.approx(1.0, abs=1e-10)
    assert ws.x_grid[-1] - ws.x_grid[0] == pytest.approx(SIMPLE.period)


def test_width_of_gaussian():
    a = 0.3
    x = np.linspace(-5, 5, 20001)
    assert wannier_width(x, np.exp(-x**2 / (2 * a**2))) == pytest.approx(a, rel=1e-6)


def test_double_well_minima_match_numerical_minimum():
    lo, hi = double_well_minima(DOUBLE_WELL)
    assert (lo, hi) == pytest.approx((0.9118, 2.2298), abs=1e-4)
    for guess, bracket in ((lo, (0.5, 1.5)), (hi, (1.7, 2.7))):
        res = minimize_scalar(lambda x: float(DOUBLE_WELL.potential(x)), bounds=bracket, method="bounded",
                              options={"xatol": 1e-10})
        assert res.x == pytest.approx(guess, abs=1e-6)


def test_double_well_limits():
    lo, hi = double_well_minima(LatticeParams(1e-12, 1.0))
    assert (lo, hi) == pytest.approx((math.pi / 4, 3 * math.pi / 4), abs=1e-9)
    assert double_well_minima(LatticeParams(4.0, 1.0)) == pytest.approx((math.pi / 2, math.pi / 2))
    with pytest.raises(DomainError):
        double_well_minima(LatticeParams(4.1, 1.0))


def test_vector_shift_examples():
    value = vector_shift(DOUBLE_WELL, 0.1, 1.0)
    assert value == pytest.approx(3.06, abs=0.005)
    assert value * DOUBLE_WELL.E_R_kHz == pytest.approx(10.7, abs=0.05)
    assert vector_shift(DOUBLE_WELL, 0.1, 0.0) == 0.0
    with pytest.raises(DomainError):
        vector_shift(LatticeParams(500.0, 100.0), 0.1, 1.0)
    with pytest.raises(ParameterError):
        vector_shift(DOUBLE_WELL, 0.0, 1.0)


def test_harmonic_width_examples():
    assert harmonic_width(LatticeParams(100.0, 0.0)) == pytest.approx(0.316, abs=5e-4)
    assert harmonic_width(LatticeParams(200.0, 0.0)) == pytest.approx(0.266, abs=5e-4)
    assert harmonic_width(LatticeParams(1.0, 0.0)) == 1.0
    with pytest.raises(ParameterError):
        harmonic_width(LatticeParams(0.0, 1.0))
