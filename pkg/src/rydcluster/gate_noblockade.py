"""Phase gate driven without blockade: pi pulse, free interaction, pi pulse.

Each computational input evolves in its own small basis:

* ``11`` in {11, +, rr}, where + is the symmetric single excitation;
* ``01`` and ``10`` in {01, 0r} (identical dynamics);
* ``00`` only acquires the off-resonant light shift.

Hamiltonians are written in MHz and converted to rad/us; Rydberg decay enters
as -i*gamma/2 per excited atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .numerics import propagate_sequence
from .params import GateOutcome, InteractionParams, PulseParams

TWO_PI = 2 * math.pi
SQRT2 = math.sqrt(2.0)

BASIS_11 = ("11", "+", "rr")
BASIS_SINGLE = ("01", "0r")


def pulse_duration(p: PulseParams) -> float:
    """Length (us) of one transfer pulse: Omega_eff * T = 1/4 cycle."""
    if p.Omega_eff == 0:
        raise ParameterError("zero Rabi frequency cannot produce the requested pulse area")
    return 0.25 / abs(p.Omega_eff)


def interaction_duration(i: InteractionParams) -> float:
    """Free-evolution time (us) accumulating a pi phase on rr."""
    return 0.5 / i.V_int if i.V_int > 0 else 0.0


def _drives(p: PulseParams) -> tuple[float, float]:
    s = p.drive_scale
    return p.Omega1 * s, p.Omega2 * s


def hamiltonian_11(O1: float, O2: float, Delta: float, V: float, gamma_us: float) -> np.ndarray:
    """Pair Hamiltonian (rad/us) in {11, +, rr} during a pulse."""
    c = -SQRT2 * O1 * O2 / Delta
    H = np.array(
        [
            [-2 * O1**2 / Delta, c, 0.0],
            [c, -(O1**2 + O2**2) / Delta, c],
            [0.0, c, V - 2 * O2**2 / Delta],
        ],
        dtype=complex,
    )
    return TWO_PI * H - 0.5j * gamma_us * np.diag([0.0, 1.0, 2.0])


def hamiltonian_single(O1: float, O2: float, Delta: float, Delta_hf: float, gamma_us: float) -> np.ndarray:
    """One atom in 0, the other driven: basis {01, 0r}."""
    H = np.array(
        [
            [-O1**2 * (1 / Delta + 1 / (Delta + Delta_hf)), -O1 * O2 / Delta],
            [-O1 * O2 / Delta, -(O2**2 / Delta + O1**2 / (Delta + Delta_hf))],
        ],
        dtype=complex,
    )
    return TWO_PI * H - 0.5j * gamma_us * np.diag([0.0, 1.0])


def light_shift_00(O1: float, Delta: float, Delta_hf: float) -> float:
    return -2 * O1**2 / (Delta + Delta_hf)


def run_gate(p: PulseParams, i: InteractionParams, dt: float | None = None) -> GateOutcome:
    """Integrate all four branches through the three-stage protocol."""
    T = pulse_duration(p)
    T_int = interaction_duration(i)
    O1, O2 = _drives(p)
    g = i.gamma_per_us

    H_pulse = hamiltonian_11(O1, O2, p.Delta, i.V_int, g)
    H_wait = TWO_PI * np.diag([0.0, 0.0, i.V_int]).astype(complex) - 0.5j * g * np.diag([0.0, 1.0, 2.0])
    psi11 = propagate_sequence([(H_pulse, T), (H_wait, T_int), (H_pulse, T)], [1, 0, 0], dt)

    H1 = hamiltonian_single(O1, O2, p.Delta, p.Delta_hf, g)
    H1_wait = -0.5j * g * np.diag([0.0, 1.0]).astype(complex)
    psi01 = propagate_sequence([(H1, T), (H1_wait, T_int), (H1, T)], [1, 0], dt)

    a00 = np.exp(-1j * TWO_PI * light_shift_00(O1, p.Delta, p.Delta_hf) * 2 * T)
    return GateOutcome(
        amplitudes={"00": np.array([a00]), "01": psi01, "10": psi01.copy(), "11": psi11},
        bases={"00": ("00",), "01": BASIS_SINGLE, "10": ("10", "r0"), "11": BASIS_11},
    )


def run_inactive(p: PulseParams, i: InteractionParams | None = None,
                 effective_ratio: float | None = None, keep_interaction: bool = True) -> float:
    """Average return probability of a pair sitting at a drive minimum.

    The drive on each atom is reduced so the effective Rabi frequency is
    ``effective_ratio`` times the nominal one (default: drive_ratio to the
    photon order).  Pulse timing stays that of the active pairs.  By default
    the pair still interacts with the same V_int as active pairs; pass
    ``keep_interaction=False`` to switch it off.
    """
    r = p.drive_ratio ** p.photon_order if effective_ratio is None else effective_ratio
    if not 0.0 <= r <= 1.0:
        raise ParameterError("effective drive ratio must lie in [0, 1]")
    i = i or InteractionParams(V_int=3.0)
    # T_int is fixed by the active pairs, so it is computed before V is dropped.
    T_int = interaction_duration(i)
    V = i.V_int if keep_interaction else 0.0
    scale = (1.0 + p.rabi_offset) * math.sqrt(r)
    O1, O2 = p.Omega1 * scale, p.Omega2 * scale
    T = pulse_duration(p)
    g = i.gamma_per_us

    H_pulse = hamiltonian_11(O1, O2, p.Delta, V, g)
    H_wait = TWO_PI * np.diag([0.0, 0.0, V]).astype(complex) - 0.5j * g * np.diag([0.0, 1.0, 2.0])
    psi11 = propagate_sequence([(H_pulse, T), (H_wait, T_int), (H_pulse, T)], [1, 0, 0])
    H1 = hamiltonian_single(O1, O2, p.Delta, p.Delta_hf, g)
    H1_wait = -0.5j * g * np.diag([0.0, 1.0]).astype(complex)
    psi01 = propagate_sequence([(H1, T), (H1_wait, T_int), (H1, T)], [1, 0])
    probs = [1.0, abs(psi01[0]) ** 2, abs(psi01[0]) ** 2, abs(psi11[0]) ** 2]
    return float(np.mean(probs))


def inactive_closed_form(effective_ratio: float) -> float:
    """Printed closed-form average return probability for an inactive pair."""
    c = math.cos(math.pi * effective_ratio)
    p11 = ((c * c - 1 + 2 * c) / 2) ** 2
    return (1.0 + 2 * c * c + p11) / 4


def survival(p: PulseParams, i: InteractionParams) -> dict:
    """Per-branch probability not lost to decay (norm of the integrated state)."""
    return run_gate(p, i).branch_norms


def decay_survival_11(Omega_eff: float, V_int: float, gamma: float) -> float:
    """Analytic |11> survival exp(-pi g/(2pi Omega_eff) - 2 pi g/(2pi V))."""
    g = gamma * 1e-6
    term_pulse = math.pi * g / (TWO_PI * Omega_eff)
    term_wait = TWO_PI * g / (TWO_PI * V_int) if V_int > 0 else 0.0
    return math.exp(-term_pulse - term_wait)


# Perturbative series for the {11, +, rr} pair Hamiltonian with equal drives,
# in units of Omega^2/Delta; x = V_int / (Omega^2/Delta).

def series_eigenvalues(x: float) -> np.ndarray:
    return np.array(
        [
            -2 + x / 2 - x**3 / 32,
            x / 4 + 5 * x**2 / 64,
            -4 + x / 4 - 5 * x**2 / 64,
        ]
    )


def series_eigenvectors(x: float) -> np.ndarray:
    """Columns are the series eigenvectors paired with :func:`series_eigenvalues`."""
    s = 1 / SQRT2
    v1 = [s * (1 + x**2 / 32), -x / 4, -s * (1 - 3 * x**2 / 32)]
    v2 = [
        -0.5 * (1 - 3 * x / 16 - 25 * x**2 / 512),
        s * (1 - x / 16 - 17 * x**2 / 512),
        -0.5 * (1 + 5 * x / 16 + 23 * x**2 / 512),
    ]
    v3 = [
        0.5 * (1 + 3 * x / 16 - 25 * x**2 / 512),
        s * (1 + x / 16 - 17 * x**2 / 512),
        0.5 * (1 - 5 * x / 16 + 23 * x**2 / 512),
    ]
    return np.array([v1, v2, v3], dtype=complex).T


def series_final_overlap(x: float) -> complex:
    """Second-order <11|Psi_final> after the full protocol."""
    return -1 + (0.25 + 9 * math.pi**2 / 128) * x**2 + 3j * math.pi / 8 * x


@dataclass(frozen=True)
class PerturbationReport:
    ratio: float
    eigenvalue_deviation: float
    eigenvector_deviation: float
    overlap_numeric: complex
    overlap_series: complex
    overlap_deviation: float
    regime_warning: bool

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "eigenvalue_deviation": self.eigenvalue_deviation,
            "eigenvector_deviation": self.eigenvector_deviation,
            "overlap_numeric": [self.overlap_numeric.real, self.overlap_numeric.imag],
            "overlap_series": [self.overlap_series.real, self.overlap_series.imag],
            "overlap_deviation": self.overlap_deviation,
            "regime_warning": self.regime_warning,
        }


def perturbation_check(p: PulseParams, i: InteractionParams) -> PerturbationReport:
    """Compare exact diagonalization and dynamics with the printed series.

    Deviations are in units of Omega^2/Delta and should scale as the cube of
    V_int/(Omega^2/Delta).
    """
    omega_eff = abs(p.Omega_eff)
    if omega_eff == 0:
        raise ParameterError("zero Rabi frequency")
    x = i.V_int / omega_eff
    H = np.real(hamiltonian_11(1.0, 1.0, 1.0, x, 0.0)) / TWO_PI
    w, v = np.linalg.eigh(H)
    lam = series_eigenvalues(x)
    vec = series_eigenvectors(x)
    order = np.argsort(lam)
    ev_dev = float(np.max(np.abs(np.sort(lam) - w)))
    vec_dev = 0.0
    for col, j in enumerate(order):
        num = v[:, col]
        ser = vec[:, j]
        sign = np.sign(np.real(np.vdot(num, ser))) or 1.0
        vec_dev = max(vec_dev, float(np.max(np.abs(sign * num - ser))))

    sym = PulseParams.from_effective(omega_eff, abs(p.Delta), Delta_hf=p.Delta_hf)
    numeric = run_gate(sym, InteractionParams(V_int=i.V_int, power=i.power)).kept("11")
    series = series_final_overlap(x)
    return PerturbationReport(
        ratio=x,
        eigenvalue_deviation=ev_dev,
        eigenvector_deviation=vec_dev,
        overlap_numeric=numeric,
        overlap_series=series,
        overlap_deviation=abs(numeric - series),
        regime_warning=x > 0.2,
    )
