"""Double-well superlattice: bands, Wannier functions and single-site estimates.

Units: energies in recoil energies E_R, lengths in 1/k_ref, with the kinetic
term written as (q + 2 n k)^2.  The potential is

    V(x) = V0 cos^2(k x + phi) + V1 cos^2(2 k x)

whose period is d = pi/k; each period holds two wells when V0 < 4 V1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError
from .numerics import eigh

DEFAULT_N_MAX = 10
DEFAULT_Q_POINTS = 32
POINTS_PER_PERIOD = 512

# "physical" is the Fourier coefficient of cos^2 (amplitude/4 per harmonic);
# "printed" doubles it, matching the coefficient as written in the source text.
COUPLING_DIVISORS = {"physical": 4.0, "printed": 2.0}


@dataclass(frozen=True)
class LatticeParams:
    """Superlattice amplitudes (E_R), phase (rad), wavevector and recoil energy (kHz)."""

    V0: float
    V1: float
    phi: float = 0.0
    k: float = 1.0
    E_R_kHz: float = 3.5

    def __post_init__(self):
        for name in ("V0", "V1", "phi", "k", "E_R_kHz"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.V0 < 0 or self.V1 < 0:
            raise ParameterError("lattice depths must be non-negative")
        if self.k <= 0:
            raise ParameterError("wavevector k must be positive")
        if self.E_R_kHz <= 0:
            raise ParameterError("recoil energy must be positive")

    @property
    def period(self) -> float:
        return math.pi / self.k

    @property
    def cell_center(self) -> float:
        """Position of the intra-cell barrier, midway between the two wells."""
        return (math.pi / 2 - self.phi) / self.k

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return self.V0 * np.cos(self.k * x + self.phi) ** 2 + self.V1 * np.cos(2 * self.k * x) ** 2


def _divisor(coupling: str) -> float:
    try:
        return COUPLING_DIVISORS[coupling]
    except KeyError:
        raise ParameterError(f"unknown coupling convention {coupling!r}") from None


def central_matrix(p: LatticeParams, q: float = 0.0, N_max: int = DEFAULT_N_MAX,
                   coupling: str = "physical") -> np.ndarray:
    """Plane-wave Hamiltonian at quasi-momentum q in the basis exp(i (q + 2 n k) x)."""
    c = _divisor(coupling)
    n = np.arange(-N_max, N_max + 1)
    H = np.diag((q + 2 * n * p.k) ** 2 + 0.5 * (p.V0 + p.V1)).astype(complex)
    first = p.V0 * np.exp(-2j * p.phi) / c
    H += np.diag(np.full(2 * N_max, first), 1) + np.diag(np.full(2 * N_max, np.conj(first)), -1)
    second = np.full(2 * N_max - 1, p.V1 / c)
    H += np.diag(second, 2) + np.diag(second, -2)
    return H


def quasi_momenta(p: LatticeParams, q_points: int) -> np.ndarray:
    """Uniform grid over the first zone [-k, k), always containing q = 0."""
    j = np.arange(q_points)
    return 2 * p.k * (j - q_points // 2) / q_points


@dataclass(frozen=True)
class BandStructure:
    params: LatticeParams
    q_grid: np.ndarray
    energies: np.ndarray  # [band, q]
    coefficients: np.ndarray  # [band, q, n]
    N_max: int
    coupling: str = "physical"

    @property
    def n_bands(self) -> int:
        return self.energies.shape[0]


def solve_bands(p: LatticeParams, n_bands: int = 4, q_points: int = DEFAULT_Q_POINTS,
                N_max: int = DEFAULT_N_MAX, coupling: str = "physical") -> BandStructure:
    if N_max < 1:
        raise ParameterError("N_max must be at least 1")
    if not 1 <= n_bands <= 2 * N_max:
        raise ParameterError(f"n_bands must lie in [1, {2 * N_max}] for N_max={N_max}")
    if q_points < 1:
        raise ParameterError("q_points must be at least 1")
    qs = quasi_momenta(p, q_points)
    dim = 2 * N_max + 1
    energies = np.empty((n_bands, q_points))
    coeffs = np.empty((n_bands, q_points, dim), dtype=complex)
    for iq, q in enumerate(qs):
        spec = eigh(central_matrix(p, q, N_max, coupling))
        energies[:, iq] = spec.eigenvalues[:n_bands]
        coeffs[:, iq, :] = spec.eigenvectors[:, :n_bands].T
    return BandStructure(p, qs, energies, coeffs, N_max, coupling)


def lowest_two_splitting(p: LatticeParams, q_points: int = DEFAULT_Q_POINTS,
                         N_max: int = DEFAULT_N_MAX, coupling: str = "physical") -> float:
    """Largest gap between the two lowest bands over the quasi-momentum grid."""
    bs = solve_bands(p, 2, q_points, N_max, coupling)
    return float(np.max(bs.energies[1] - bs.energies[0]))


_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _trapz(y, x):
    value = _trapezoid(y, x)
    return complex(value) if np.iscomplexobj(value) else float(value)


@dataclass(frozen=True)
class WannierSet:
    x_grid: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    psiL: np.ndarray
    psiR: np.ndarray
    cell_center: float = field(default=0.0)
    period: float = field(default=math.pi)

    def weight_left(self, f: np.ndarray) -> float:
        """Probability of ``f`` in the left half of the home cell."""
        lo, hi = self.cell_center - self.period / 2, self.cell_center
        mask = (self.x_grid >= lo) & (self.x_grid <= hi)
        return _trapz(np.abs(f[mask]) ** 2, self.x_grid[mask])

    def weight_right(self, f: np.ndarray) -> float:
        lo, hi = self.cell_center, self.cell_center + self.period / 2
        mask = (self.x_grid >= lo) & (self.x_grid <= hi)
        return _trapz(np.abs(f[mask]) ** 2, self.x_grid[mask])


def bloch_function(bs: BandStructure, band: int, iq: int, x: np.ndarray) -> np.ndarray:
    n = np.arange(-bs.N_max, bs.N_max + 1)
    q = bs.q_grid[iq]
    phases = np.exp(1j * np.outer(x, q + 2 * n * bs.params.k))
    return phases @ bs.coefficients[band, iq]


def _fix_sign(w: np.ndarray, x: np.ndarray, p: LatticeParams, center: float) -> np.ndarray:
    right = (x >= center) & (x <= center + p.period / 2)
    xr = x[right]
    i_min = int(np.argmin(p.potential(xr)))
    ref = w[right][i_min]
    if abs(ref) < 1e-8 * np.max(np.abs(w)):
        ref = _trapz(w[right], xr)
    if abs(ref) == 0.0:
        return w
    return w * (np.conj(ref) / abs(ref))


def wannier(bs: BandStructure, cell_index: int = 0) -> WannierSet:
    """Wannier functions of the two lowest bands and their left/right combinations.

    The x-grid spans one period per quasi-momentum point, centred on the home
    cell, so the discrete Bloch sum is exactly periodic on it.
    """
    if bs.n_bands < 2:
        raise ParameterError("Wannier construction needs at least two bands")
    p = bs.params
    d = p.period
    n_cells = len(bs.q_grid)
    center = p.cell_center + cell_index * d
    lo = center - 0.5 * n_cells * d
    x = lo + d * np.arange(n_cells * POINTS_PER_PERIOD + 1) / POINTS_PER_PERIOD
    home = (x >= center - d / 2) & (x <= center + d / 2)
    iq0 = int(np.argmin(np.abs(bs.q_grid)))
    shift = cell_index * d

    def band_wannier(band: int) -> np.ndarray:
        ref = bloch_function(bs, band, iq0, x)
        total = np.zeros_like(x, dtype=complex)
        for iq, q in enumerate(bs.q_grid):
            psi = bloch_function(bs, band, iq, x)
            psi /= math.sqrt(_trapz(np.abs(psi) ** 2, x))
            overlap = _trapz(np.conj(ref[home]) * psi[home], x[home])
            if abs(overlap) > 0:
                psi *= np.conj(overlap) / abs(overlap)
            total += np.exp(-1j * q * shift) * psi
        total /= math.sqrt(n_cells)
        total /= math.sqrt(_trapz(np.abs(total) ** 2, x))
        return _fix_sign(total, x, p, center)

    w1, w2 = band_wannier(0), band_wannier(1)
    psiL = (w1 - w2) / math.sqrt(2)
    psiR = (w1 + w2) / math.sqrt(2)
    return WannierSet(x, w1, w2, psiL, psiR, center, d)


def wannier_width(x: np.ndarray, w: np.ndarray) -> float:
    """Oscillator-length equivalent sqrt(2 Var x) of the density |w|^2."""
    rho = np.abs(w) ** 2
    norm = _trapz(rho, x)
    mean = _trapz(x * rho, x) / norm
    var = _trapz((x - mean) ** 2 * rho, x) / norm
    return math.sqrt(2 * var)


def double_well_minima(p: LatticeParams) -> tuple[float, float]:
    """k x of the two wells in the n = 0 cell (phi = 0 geometry)."""
    if p.V1 <= 0 or p.V0 <= 0:
        raise DomainError("double-well minima need V0 > 0 and V1 > 0")
    ratio = p.V0 / (4 * p.V1)
    if ratio > 1:
        raise DomainError("V0 > 4 V1: the cell holds a single well")
    half = 0.5 * math.asin(ratio)
    return half + math.pi / 4, -half + 3 * math.pi / 4


def vector_shift(p: LatticeParams, alpha_ratio: float, m_F: float) -> float:
    """Vector light shift (E_R) at the well minima of a polarization-gradient lattice.

    The left-right relative shift is twice the magnitude of the returned value.
    """
    if not 0 < alpha_ratio <= 1:
        raise ParameterError("alpha_ratio must lie in (0, 1]")
    if p.V1 <= 0:
        raise ParameterError("vector shift needs V1 > 0")
    ratio = p.V0 / (4 * p.V1)
    if ratio > 1:
        raise DomainError("V0 > 4 V1: the cell holds a single well")
    return alpha_ratio * math.sqrt(p.V0 * p.V1 * (1 - ratio) / 2) * p.V0 / (2 * p.V1) * m_F


def harmonic_width(p: LatticeParams) -> float:
    """Harmonic-oscillator length (E_R/V0)^(1/4)/k of one well, in units of 1/k_ref."""
    if p.V0 <= 0:
        raise ParameterError("harmonic width needs V0 > 0")
    return (1.0 / p.V0) ** 0.25 / p.k
