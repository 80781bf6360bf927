"""Blockade phase gate with vector-shift addressing: pi on control, 2pi on target, pi on control.

The control (left) atom's 1-r line is resonant with the pulse while the target
is detuned by the vector shift Delta_vec; the 2pi pulse has the roles
reversed.  Branches:

* ``11``: basis {11, 1r, r1, rr} (control pulse) and its mirror with
  Delta_vec -> -Delta_vec and 1r <-> r1 (target pulse);
* ``01``: control pulse off-resonant, target pulse resonant;
* ``10``: control pulse resonant, target pulse off-resonant;
* ``00``: light-shift phase only.

Delta_vec is quoted in kHz, all other frequencies in MHz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParameterError
from .gate_noblockade import hamiltonian_single, light_shift_00
from .numerics import propagate_sequence
from .params import GateOutcome, InteractionParams, PulseParams

TWO_PI = 2 * math.pi
_SWAP_SINGLE = np.eye(4)[[0, 2, 1, 3]]

BASIS_11 = ("11", "1r", "r1", "rr")

# Quoted average return probability for one-photon excitation; the geometry
# behind it is not given, so it is stored rather than derived.
ONE_PHOTON_INACTIVE_P = 0.87


class Addressed(str, Enum):
    CONTROL = "control"
    TARGET = "target_atom"


class Area(str, Enum):
    PI = "pi"
    TWO_PI = "two_pi"


@dataclass(frozen=True)
class BlockadePulse:
    """Pulse parameters plus the left-right vector shift (kHz)."""

    base: PulseParams
    Delta_vec: float
    target: Addressed = Addressed.CONTROL
    area: Area = Area.PI

    def __post_init__(self):
        if self.Delta_vec == 0 or not math.isfinite(self.Delta_vec):
            raise ParameterError("Delta_vec must be finite and non-zero for selective addressing")

    @property
    def Delta_vec_MHz(self) -> float:
        return self.Delta_vec * 1e-3

    def duration(self) -> float:
        """Pulse length in us for this pulse's area."""
        quarter = 0.25 / abs(self.base.Omega_eff)
        return quarter if Area(self.area) is Area.PI else 2 * quarter


@dataclass(frozen=True)
class ThetaCondition:
    theta: float
    satisfied: bool
    nearest_valid_Omega2_over_Delta: float
    candidates: tuple

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "theta_over_pi": self.theta / math.pi,
            "satisfied": self.satisfied,
            "nearest_valid_Omega2_over_Delta": self.nearest_valid_Omega2_over_Delta,
            "candidates": list(self.candidates),
        }


def theta_check(Omega2_over_Delta: float, Delta_vec: float, tol: float = 1e-6) -> ThetaCondition:
    """Phase theta = pi Delta_vec / (Omega^2/Delta) and the nearest valid drives.

    Both inputs share a unit.  The condition is theta = 2 pi n for integer n >= 1.
    """
    if Omega2_over_Delta <= 0 or Delta_vec <= 0:
        raise ParameterError("Omega^2/Delta and Delta_vec must be positive")
    theta = math.pi * Delta_vec / Omega2_over_Delta
    residue = math.remainder(theta, TWO_PI)
    half_turns = Delta_vec / (2 * Omega2_over_Delta)
    lo, hi = max(1, math.floor(half_turns)), max(1, math.ceil(half_turns))
    candidates = tuple(sorted({Delta_vec / (2 * n) for n in (lo, hi)}, reverse=True))
    nearest = min(candidates, key=lambda c: abs(c - Omega2_over_Delta))
    return ThetaCondition(theta, abs(residue) <= tol and theta >= TWO_PI - tol, nearest, candidates)


def hamiltonian_pair(O1: float, O2: float, Delta: float, dv: float, V: float, gamma_us: float) -> np.ndarray:
    """Control-pulse Hamiltonian (rad/us) in {11, 1r, r1, rr}."""
    a = O1 * O2
    d1 = Delta + dv
    H = np.array(
        [
            [-(O1**2 / d1 + O2**2 / Delta), -a / d1, -a / Delta, 0.0],
            [-a / d1, dv - O1**2 / d1 - O2**2 / d1, 0.0, -a / d1],
            [-a / Delta, 0.0, -(O1**2 / d1 + O2**2 / Delta), -a / d1],
            [0.0, -a / d1, -a / d1, V + dv - 2 * O2**2 / d1],
        ],
        dtype=complex,
    )
    return TWO_PI * H - 0.5j * gamma_us * np.diag([0.0, 1.0, 1.0, 2.0])


def hamiltonian_offresonant_target(O1, O2, Delta, Delta_hf, dv, gamma_us) -> np.ndarray:
    """Control pulse seen by |01>: the driven target is detuned by dv."""
    H = np.array(
        [
            [-2 * O1**2 / (Delta + Delta_hf), -O1 * O2 / (Delta + Delta_hf)],
            [-O1 * O2 / (Delta + Delta_hf), dv - O1**2 / (Delta + Delta_hf + dv) - O2**2 / (Delta + dv)],
        ],
        dtype=complex,
    )
    return TWO_PI * H - 0.5j * gamma_us * np.diag([0.0, 1.0])


def hamiltonian_offresonant_control(O1, O2, Delta, Delta_hf, dv, gamma_us) -> np.ndarray:
    """Target pulse seen by |r0>: basis {10, r0}, the excited control detuned by -dv."""
    H = np.array(
        [
            [-(O1**2 / (Delta - dv) + O1**2 / (Delta + Delta_hf)), -O1 * O2 / (Delta - dv)],
            [-O1 * O2 / (Delta - dv), -(dv + O1**2 / (Delta + Delta_hf - dv) + O2**2 / (Delta - dv))],
        ],
        dtype=complex,
    )
    return TWO_PI * H - 0.5j * gamma_us * np.diag([0.0, 1.0])


def _check_regime(omega_eff: float, dv: float, V: float) -> None:
    if not (V > 5 * abs(dv) and abs(dv) > 2 * abs(omega_eff)):
        warnings.warn("outside V_int >> Delta_vec >> Omega^2/Delta; blockade selectivity is degraded",
                      stacklevel=3)


def run_blockade_gate(pulse: BlockadePulse, i: InteractionParams, dt: float | None = None,
                      effective_ratio: float = 1.0, warn: bool = True) -> GateOutcome:
    """Integrate the pi_c, 2pi_t, pi_c sequence for all four inputs.

    ``effective_ratio`` rescales the effective Rabi frequency of every pulse
    while keeping the nominal timing (used for pairs at drive minima).
    """
    p = pulse.base
    if p.Omega_eff == 0:
        raise ParameterError("zero Rabi frequency cannot produce the requested pulse area")
    dv = pulse.Delta_vec_MHz
    if warn:
        _check_regime(p.Omega_eff, dv, i.V_int)
        cond = theta_check(abs(p.Omega_eff), abs(dv))
        if not cond.satisfied:
            warnings.warn(f"theta = {cond.theta / math.pi:.6g} pi is not a multiple of 2 pi", stacklevel=2)
    T_pi = 0.25 / abs(p.Omega_eff)
    T_2pi = 2 * T_pi
    scale = p.drive_scale * math.sqrt(effective_ratio)
    O1, O2 = p.Omega1 * scale, p.Omega2 * scale
    g = i.gamma_per_us
    D, hf = p.Delta, p.Delta_hf

    H_c = hamiltonian_pair(O1, O2, D, dv, i.V_int, g)
    H_t = _SWAP_SINGLE @ hamiltonian_pair(O1, O2, D, -dv, i.V_int, g) @ _SWAP_SINGLE
    psi11 = propagate_sequence([(H_c, T_pi), (H_t, T_2pi), (H_c, T_pi)], [1, 0, 0, 0], dt)

    resonant = hamiltonian_single(O1, O2, D, hf, g)
    H01_c = hamiltonian_offresonant_target(O1, O2, D, hf, dv, g)
    psi01 = propagate_sequence([(H01_c, T_pi), (resonant, T_2pi), (H01_c, T_pi)], [1, 0], dt)

    H10_t = hamiltonian_offresonant_control(O1, O2, D, hf, dv, g)
    psi10 = propagate_sequence([(resonant, T_pi), (H10_t, T_2pi), (resonant, T_pi)], [1, 0], dt)

    a00 = np.exp(-1j * TWO_PI * light_shift_00(O1, D, hf) * (2 * T_pi + T_2pi))
    return GateOutcome(
        amplitudes={"00": np.array([a00]), "01": psi01, "10": psi10, "11": psi11},
        bases={"00": ("00",), "01": ("01", "0r"), "10": ("10", "r0"), "11": BASIS_11},
    )


def inactive_ratio(V0: float, V1: float) -> float:
    """Relative drive (1 - s)/(1 + s), s = sqrt((1 + V0/4V1)/2), at the inactive pair."""
    if V1 <= 0 or V0 < 0:
        raise ParameterError("need V1 > 0 and V0 >= 0")
    s = math.sqrt((1 + V0 / (4 * V1)) / 2)
    return (1 - s) / (1 + s)


def inactive_probabilities(ratio: float, photon_order: int = 2) -> dict:
    """Closed-form return probabilities for a pair at the drive minimum, theta = 2 pi n."""
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError("ratio must lie in [0, 1]")
    x = ratio**photon_order
    u = math.pi * x
    p11 = (
        math.cos(u / 2) ** 4 * math.cos(u) ** 2
        + math.sin(u / 2) ** 4
        - 0.5 * math.sin(u) ** 2 * math.cos(u) * math.cos(4 * u)
    )
    p_single = math.cos(u) ** 2
    return {"00": 1.0, "01": p_single, "10": p_single, "11": p11}


def run_blockade_inactive(ratio: float | None = None, photon_order: int = 2, numeric: bool = False,
                          Omega_eff: float = 0.05, Delta_vec: float = 200.0, Delta: float = 4.0e4,
                          V_int: float = 50.0) -> float:
    """Average probability that an inactive pair returns to its input state.

    The default ratio is that of a V0 = V1 superlattice.  With ``numeric`` the
    full gate is integrated with the effective drive reduced by
    ratio**photon_order (Omega_eff in MHz, Delta_vec in kHz); otherwise the
    closed form is used.
    """
    ratio = inactive_ratio(1.0, 1.0) if ratio is None else ratio
    if not 0.0 <= ratio <= 1.0:
        raise ParameterError("ratio must lie in [0, 1]")
    if not numeric:
        return float(np.mean(list(inactive_probabilities(ratio, photon_order).values())))
    base = PulseParams.from_effective(Omega_eff, Delta, photon_order=photon_order)
    out = run_blockade_gate(BlockadePulse(base, Delta_vec), InteractionParams(V_int=V_int),
                            effective_ratio=ratio**photon_order, warn=False)
    return out.mean_probability


def local_phase_stripped(outcome: GateOutcome) -> np.ndarray:
    """Diagonal map with single-qubit phases removed, keeping magnitudes and the conditional phase."""
    d = outcome.diagonal
    ref = d[0] / abs(d[0]) if abs(d[0]) > 0 else 1.0
    phase_b = np.exp(-1j * np.angle(d[1] / d[0]))
    phase_a = np.exp(-1j * np.angle(d[2] / d[0]))
    corr = np.array([1.0, phase_b, phase_a, phase_a * phase_b]) / ref
    return d * corr


def decay_survival_analytic(Omega_eff: float, gamma: float) -> dict:
    """Quoted branch survivals exp(-n pi g / (2 pi Omega_eff)) with n = 4, 3, 0 for 11, 10, 01."""
    if Omega_eff <= 0 or gamma < 0:
        raise ParameterError("need Omega_eff > 0 and gamma >= 0")
    rate = math.pi * gamma * 1e-6 / (TWO_PI * Omega_eff)
    return {"00": 1.0, "01": 1.0, "10": math.exp(-3 * rate), "11": math.exp(-4 * rate)}
