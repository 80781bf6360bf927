"""Dense Hermitian eigensolver wrapper and a fixed-step RK4 propagator.

All dynamics in the package reduce to ``i dpsi/dt = H(t) psi`` with small
(at most a few tens of states) complex generators.  Two code paths exist:

* a plain Python loop for arbitrary callables ``H(t)``;
* a compiled loop for :class:`AffineGenerator`, where
  ``H(t) = sum_j f_j(t) M_j`` with fixed matrices ``M_j``.  Ramps and gate
  pulses all have this form, and the compiled path is what keeps the
  ramp simulations at a few seconds.

Both paths take identical steps, so they agree to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numba
import numpy as np

from .errors import ContractError, DomainError

# Steps per fastest period when the caller does not pick a step.
DEFAULT_POINTS_PER_PERIOD = 300
# Compiled RK4 works on blocks of this many steps so coefficient tables stay small.
_BLOCK_STEPS = 1 << 15


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigenpairs of a Hermitian matrix.

    Attributes
    ----------
    eigenvalues : ndarray
        Ascending real eigenvalues.
    eigenvectors : ndarray
        Column ``j`` is the unit eigenvector for ``eigenvalues[j]``; its
        largest-magnitude entry is real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class EvolutionResult:
    """Outcome of :func:`evolve`.

    Attributes
    ----------
    final_state : ndarray
        State at the end of the interval.
    norm_history : ndarray
        State norm at each sample time.
    step_count : int
        Number of RK4 steps taken.
    sample_times : ndarray
        Times at which ``samples`` were recorded (first and last included).
    samples : ndarray
        States at ``sample_times``, shape ``(n_samples, dim)``.
    """

    final_state: np.ndarray
    norm_history: np.ndarray
    step_count: int
    sample_times: np.ndarray
    samples: np.ndarray


def fix_phases(vectors: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Rotate each column so its largest entry is real positive.

    Entries within ``rel_tol`` of the maximum magnitude count as ties and the
    first of them wins, so near-degenerate magnitudes do not flip the choice
    between runs.
    """
    v = np.array(vectors, dtype=complex, copy=True)
    mags = np.abs(v)
    peak = mags.max(axis=0)
    for j in range(v.shape[1]):
        if peak[j] == 0.0:
            continue
        i = int(np.argmax(mags[:, j] >= peak[j] * (1.0 - rel_tol)))
        v[:, j] *= np.conj(v[i, j]) / abs(v[i, j])
    return v


def eigh(H, hermitian_tol: float = 1e-12) -> HermitianSpectrum:
    """Diagonalize a Hermitian matrix with a deterministic phase convention."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractError(f"eigh needs a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise DomainError("matrix has non-finite entries")
    scale = float(np.max(np.abs(H))) if H.size else 0.0
    if scale > 0.0:
        asym = float(np.max(np.abs(H - H.conj().T))) / scale
        if asym > hermitian_tol:
            raise ContractError(f"matrix is not Hermitian (relative asymmetry {asym:.2e})")
    w, v = np.linalg.eigh(0.5 * (H + H.conj().T))
    return HermitianSpectrum(eigenvalues=w, eigenvectors=fix_phases(v))


class AffineGenerator:
    """Generator of the form ``H(t) = sum_j f_j(t) M_j``.

    Parameters
    ----------
    matrices : array_like, shape (m, d, d)
        Fixed matrices ``M_j``.
    coefficients : callable
        Maps a 1-D array of times to an ``(len(t), m)`` complex array of
        ``f_j(t)``.  Must accept arrays, since the compiled integrator
        evaluates it on whole blocks of RK4 nodes at once.
    """

    def __init__(self, matrices, coefficients: Callable[[np.ndarray], np.ndarray]):
        mats = np.ascontiguousarray(np.asarray(matrices, dtype=np.complex128))
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ContractError(f"matrices must have shape (m, d, d), got {mats.shape}")
        self.matrices = mats
        self.coefficients = coefficients

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def coefficient_table(self, times: np.ndarray) -> np.ndarray:
        c = np.asarray(self.coefficients(np.asarray(times, dtype=float)), dtype=np.complex128)
        c = c.reshape(len(times), self.matrices.shape[0])
        return np.ascontiguousarray(c)

    def __call__(self, t: float) -> np.ndarray:
        c = self.coefficient_table(np.array([t], dtype=float))[0]
        return np.tensordot(c, self.matrices, axes=1)


def constant_generator(H) -> AffineGenerator:
    """Wrap a time-independent matrix so it takes the compiled path."""
    H = np.asarray(H, dtype=np.complex128)
    return AffineGenerator(H[None, :, :], lambda t: np.ones((len(t), 1), dtype=np.complex128))


Generator = Union[AffineGenerator, Callable[[float], np.ndarray]]


def default_step(generator: Generator, t_span, points_per_period: int = DEFAULT_POINTS_PER_PERIOD) -> float:
    """Step equal to 1/points_per_period of the fastest period in the generator.

    The fastest angular frequency is the spectral radius of the generator,
    maximised over a few probe times across the interval.  It can exceed
    the largest matrix element by the matrix dimension.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    probes = np.linspace(t0, t1, 9)
    wmax = 0.0
    for t in probes:
        H = np.asarray(generator(t), dtype=complex)
        if not np.all(np.isfinite(H)):
            raise DomainError("generator has non-finite entries")
        wmax = max(wmax, float(np.max(np.abs(np.linalg.eigvals(H)))))
    if wmax == 0.0:
        return max(t1 - t0, 1.0)
    return 2.0 * math.pi / (points_per_period * wmax)


@numba.njit(cache=True)
def _build(mats, coef, out):
    m, d, _ = mats.shape
    for a in range(d):
        for b in range(d):
            out[a, b] = 0.0
    for j in range(m):
        c = coef[j]
        if c == 0.0:
            continue
        for a in range(d):
            for b in range(d):
                out[a, b] += c * mats[j, a, b]


@numba.njit(cache=True)
def _apply(H, v, out):
    # out = -i H v
    d = v.shape[0]
    for a in range(d):
        acc = 0.0j
        for b in range(d):
            acc += H[a, b] * v[b]
        out[a] = -1j * acc


@numba.njit(cache=True)
def _rk4_affine_block(mats, coef, psi, dt, record_at, records):
    """Advance ``psi`` through ``(len(coef) - 1) // 2`` steps.

    ``coef`` holds the coefficients at the RK4 nodes ``t0 + j*dt/2``.
    ``records[r]`` receives the state after step ``record_at[r]`` (0 means
    the initial state); ``record_at`` is sorted.
    """
    d = psi.shape[0]
    n = (coef.shape[0] - 1) // 2
    h0 = np.empty((d, d), dtype=np.complex128)
    hm = np.empty((d, d), dtype=np.complex128)
    h1 = np.empty((d, d), dtype=np.complex128)
    k1 = np.empty(d, dtype=np.complex128)
    k2 = np.empty(d, dtype=np.complex128)
    k3 = np.empty(d, dtype=np.complex128)
    k4 = np.empty(d, dtype=np.complex128)
    tmp = np.empty(d, dtype=np.complex128)
    r = 0
    nrec = record_at.shape[0]
    while r < nrec and record_at[r] == 0:
        records[r, :] = psi
        r += 1
    _build(mats, coef[0], h0)
    for s in range(n):
        _build(mats, coef[2 * s + 1], hm)
        _build(mats, coef[2 * s + 2], h1)
        _apply(h0, psi, k1)
        for a in range(d):
            tmp[a] = psi[a] + 0.5 * dt * k1[a]
        _apply(hm, tmp, k2)
        for a in range(d):
            tmp[a] = psi[a] + 0.5 * dt * k2[a]
        _apply(hm, tmp, k3)
        for a in range(d):
            tmp[a] = psi[a] + dt * k3[a]
        _apply(h1, tmp, k4)
        for a in range(d):
            psi[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a])
        h0, h1 = h1, h0
        while r < nrec and record_at[r] == s + 1:
            records[r, :] = psi
            r += 1
    return psi


def _record_steps(n_steps: int, n_samples: int) -> np.ndarray:
    n_samples = max(int(n_samples), 2)
    return np.unique(np.round(np.linspace(0, n_steps, n_samples)).astype(np.int64))


def _rk4_python(generator, psi, t0, dt, n_steps, record_at):
    records = np.empty((len(record_at), psi.shape[0]), dtype=complex)
    r = 0
    while r < len(record_at) and record_at[r] == 0:
        records[r] = psi
        r += 1
    h0 = np.asarray(generator(t0), dtype=complex)
    for s in range(n_steps):
        t = t0 + s * dt
        hm = np.asarray(generator(t + 0.5 * dt), dtype=complex)
        h1 = np.asarray(generator(t + dt), dtype=complex)
        if not (np.all(np.isfinite(hm)) and np.all(np.isfinite(h1))):
            raise DomainError(f"generator has non-finite entries near t={t}")
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + 0.5 * dt * k1))
        k3 = -1j * (hm @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi = psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        h0 = h1
        while r < len(record_at) and record_at[r] == s + 1:
            records[r] = psi
            r += 1
    return psi, records


def _rk4_compiled(gen: AffineGenerator, psi, t0, dt, n_steps, record_at):
    records = np.empty((len(record_at), psi.shape[0]), dtype=np.complex128)
    done = 0
    while True:
        block = min(_BLOCK_STEPS, n_steps - done)
        nodes = t0 + dt * (done + 0.5 * np.arange(2 * block + 1))
        coef = gen.coefficient_table(nodes)
        if not np.all(np.isfinite(coef)):
            raise DomainError(f"generator coefficients are non-finite near t={nodes[0]}")
        sel = (record_at >= done) & (record_at <= done + block)
        # steps already recorded at the previous block's end are skipped
        if done > 0:
            sel &= record_at > done
        local = np.ascontiguousarray(record_at[sel] - done)
        buf = np.empty((len(local), psi.shape[0]), dtype=np.complex128)
        psi = _rk4_affine_block(gen.matrices, coef, psi, dt, local, buf)
        records[np.flatnonzero(sel)] = buf
        done += block
        if done >= n_steps:
            break
    return psi, records


def evolve(generator: Generator, psi0, t_span, dt: float | None = None, n_samples: int = 2) -> EvolutionResult:
    """Integrate ``i dpsi/dt = H(t) psi`` with classical fixed-step RK4.

    Parameters
    ----------
    generator : AffineGenerator or callable
        ``H(t)``; may be non-Hermitian (decay).
    psi0 : array_like
        Initial state (not renormalized).
    t_span : pair of float
        Start and end time; the end is hit exactly by shrinking ``dt``
        to ``(t1 - t0) / ceil((t1 - t0) / dt)``.
    dt : float, optional
        Requested step.  Defaults to :func:`default_step`.
    n_samples : int
        Number of evenly spaced recorded states, endpoints included.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ContractError("t_span must be increasing")
    psi = np.array(psi0, dtype=np.complex128, copy=True).ravel()
    if dt is None:
        dt = default_step(generator, (t0, t1))
    if not dt > 0.0:
        raise ContractError("dt must be positive")
    length = t1 - t0
    n_steps = int(math.ceil(length / dt - 1e-12)) if length > 0 else 0
    step = length / n_steps if n_steps else 0.0
    record_at = _record_steps(n_steps, n_samples)
    if n_steps == 0:
        records = np.repeat(psi[None, :], len(record_at), axis=0)
    elif isinstance(generator, AffineGenerator):
        psi, records = _rk4_compiled(generator, psi, t0, step, n_steps, record_at)
    else:
        psi, records = _rk4_python(generator, psi, t0, step, n_steps, record_at)
    if not np.all(np.isfinite(psi)):
        raise DomainError("state became non-finite during integration")
    times = t0 + step * record_at.astype(float)
    return EvolutionResult(
        final_state=psi,
        norm_history=np.linalg.norm(records, axis=1),
        step_count=n_steps,
        sample_times=times,
        samples=records,
    )


def propagate_sequence(stages, psi0, dt: float | None = None) -> np.ndarray:
    """Apply a list of ``(H, duration)`` constant stages in order.

    Each stage gets its own default step unless ``dt`` is given.
    Zero-duration stages are skipped.
    """
    psi = np.asarray(psi0, dtype=np.complex128)
    for H, duration in stages:
        if duration <= 0.0:
            continue
        psi = evolve(constant_generator(H), psi, (0.0, duration), dt=dt).final_state
    return psi
