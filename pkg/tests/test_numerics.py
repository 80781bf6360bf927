import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from rydcluster.errors import ContractError, DomainError
from rydcluster.gate_noblockade import hamiltonian_11, series_eigenvalues
from rydcluster.numerics import AffineGenerator, constant_generator, eigh, evolve, fix_phases


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def test_eigh_diagonal():
    spec = eigh(np.diag([0.0, 1.0]))
    assert np.allclose(spec.eigenvalues, [0, 1])
    assert np.allclose(spec.eigenvectors, np.eye(2))


def test_eigh_pauli_x():
    spec = eigh(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(spec.eigenvalues, [-1, 1])
    s = 1 / math.sqrt(2)
    # largest-magnitude entry (first on ties) is real positive
    assert np.allclose(spec.eigenvectors[:, 0], [s, -s])
    assert np.allclose(spec.eigenvectors[:, 1], [s, s])


def test_eigh_matches_pair_series():
    H = np.real(hamiltonian_11(1.0, 1.0, 1.0, 0.1, 0.0)) / (2 * math.pi)
    w = eigh(H).eigenvalues
    assert np.max(np.abs(np.sort(series_eigenvalues(0.1)) - w)) < 0.1**3


def test_eigh_rejects_bad_input():
    with pytest.raises(ContractError):
        eigh(np.zeros((2, 3)))
    with pytest.raises(ContractError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DomainError):
        eigh(np.array([[np.nan, 0.0], [0.0, 1.0]]))


@given(st.integers(min_value=1, max_value=64), st.integers(min_value=0, max_value=2**31))
def test_eigh_reconstruction_and_invariants(d, seed):
    H = random_hermitian(np.random.default_rng(seed), d)
    spec = eigh(H)
    V, w = spec.eigenvectors, spec.eigenvalues
    norm = np.linalg.norm(H)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(H - V @ np.diag(w) @ V.conj().T) <= 1e-9 * norm
    assert np.max(np.linalg.norm(H @ V - V * w, axis=0)) <= 1e-10 * max(norm, 1.0)
    assert np.allclose(np.linalg.norm(V, axis=0), 1.0)
    for j in range(d):
        top = V[np.argmax(np.abs(V[:, j])), j]
        assert abs(top.imag) < 1e-12 and top.real > 0


def test_fix_phases_idempotent():
    rng = np.random.default_rng(1)
    V = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))[0]
    once = fix_phases(V)
    assert np.allclose(fix_phases(once), once)


def test_constant_diagonal_phase():
    omega = np.array([0.3, -1.7, 2.2])
    res = evolve(constant_generator(np.diag(omega)), [0, 1, 0], (0.0, 5.0), dt=1e-3)
    assert abs(res.final_state[1] - np.exp(-1j * omega[1] * 5.0)) < 1e-10


def test_rabi_pi_pulse_transfer():
    g = 2.0
    H = np.array([[0, g], [g, 0]], dtype=complex)
    res = evolve(constant_generator(H), [1, 0], (0.0, math.pi / (2 * g)))
    assert abs(abs(res.final_state[1]) ** 2 - 1) < 1e-8


def test_pair_system_reaches_rr():
    # Omega_eff T = 1/4 with V = 0 transfers |11> to |rr>
    H = hamiltonian_11(1.0, 1.0, 1.0, 0.0, 0.0)
    res = evolve(constant_generator(H), [1, 0, 0], (0.0, 0.25), dt=1e-4)
    assert abs(abs(res.final_state[2]) - 1) < 1e-8


def test_matches_matrix_exponential():
    H = random_hermitian(np.random.default_rng(7), 6)
    psi0 = np.eye(6)[0]
    res = evolve(constant_generator(H), psi0, (0.0, 3.0), dt=1e-3)
    assert np.max(np.abs(res.final_state - expm(-3.0j * H) @ psi0)) < 1e-9


def test_time_dependent_matches_fine_expm():
    A = random_hermitian(np.random.default_rng(3), 4)
    B = random_hermitian(np.random.default_rng(4), 4)
    gen = AffineGenerator(np.stack([A, B]), lambda t: np.column_stack([np.ones_like(t), np.sin(t)]))
    res = evolve(gen, np.eye(4)[0], (0.0, 2.0))
    n = 4000
    psi = np.eye(4)[0].astype(complex)
    dt = 2.0 / n
    for j in range(n):
        t = (j + 0.5) * dt
        psi = expm(-1j * dt * (A + math.sin(t) * B)) @ psi
    assert np.max(np.abs(res.final_state - psi)) < 1e-6


def test_compiled_and_python_paths_agree():
    A = random_hermitian(np.random.default_rng(5), 3)
    B = random_hermitian(np.random.default_rng(6), 3)
    coef = lambda t: np.column_stack([np.cos(t), t])  # noqa: E731
    gen = AffineGenerator(np.stack([A, B]), coef)
    fast = evolve(gen, [1, 0, 0], (0.0, 1.5), dt=1e-3, n_samples=5)
    slow = evolve(lambda t: math.cos(t) * A + t * B, [1, 0, 0], (0.0, 1.5), dt=1e-3, n_samples=5)
    assert np.max(np.abs(fast.final_state - slow.final_state)) < 1e-12
    assert np.allclose(fast.sample_times, slow.sample_times)
    assert np.max(np.abs(fast.samples - slow.samples)) < 1e-12


def test_norm_preserved_over_many_steps():
    H = random_hermitian(np.random.default_rng(11), 8)
    res = evolve(constant_generator(H), np.eye(8)[0], (0.0, 1e5 * 1e-3), dt=1e-3, n_samples=50)
    assert res.step_count == 100000
    assert np.max(np.abs(res.norm_history - 1)) < 1e-8


def test_decay_never_grows_norm():
    H = np.array([[0, 1], [1, -0.5j]], dtype=complex)
    res = evolve(constant_generator(H), [1, 0], (0.0, 10.0), n_samples=20)
    assert np.all(res.norm_history <= 1 + 1e-8)
    assert res.norm_history[-1] < 1


def test_convergence_order():
    g = 1.0
    H = np.array([[0.3, g], [g, -0.3]], dtype=complex)
    T = 3.0
    exact = expm(-1j * T * H) @ np.array([1, 0])
    errs = [np.linalg.norm(evolve(constant_generator(H), [1, 0], (0, T), dt=dt).final_state - exact)
            for dt in (0.2, 0.1, 0.05)]
    order = math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])
    assert min(order) >= 3.8


def test_dt_halving_at_default_step():
    # the no-blockade pair system at its acceptance parameters, in rad/us
    H = hamiltonian_11(math.sqrt(30 * 4e4), math.sqrt(30 * 4e4), 4e4, 3.0, 0.0)
    gen = constant_generator(H)
    from rydcluster.numerics import default_step

    span = (0.0, 0.25 / 30)
    dt = default_step(gen, span)
    a = evolve(gen, [1, 0, 0], span, dt=dt).final_state
    b = evolve(gen, [1, 0, 0], span, dt=dt / 2).final_state
    assert np.max(np.abs(a - b)) < 1e-8


def test_end_time_hit_exactly():
    res = evolve(constant_generator(np.eye(2)), [1, 0], (0.0, 1.0), dt=0.3)
    assert res.step_count == 4
    assert res.sample_times[-1] == pytest.approx(1.0, abs=1e-15)


def test_nonfinite_generator_rejected():
    gen = AffineGenerator(np.eye(2)[None], lambda t: np.full((len(t), 1), np.nan))
    with pytest.raises(DomainError):
        evolve(gen, [1, 0], (0.0, 1.0), dt=0.1)
    with pytest.raises(DomainError):
        evolve(lambda t: np.full((2, 2), np.inf), [1, 0], (0.0, 1.0), dt=0.1)


def test_bad_spans_rejected():
    with pytest.raises(ContractError):
        evolve(constant_generator(np.eye(2)), [1, 0], (1.0, 0.0))
    with pytest.raises(ContractError):
        evolve(constant_generator(np.eye(2)), [1, 0], (0.0, 1.0), dt=-1.0)
