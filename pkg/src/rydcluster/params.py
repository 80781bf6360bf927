"""Pulse, interaction and outcome records shared by both gate models.

Frequencies are ordinary frequencies in MHz; the gate modules multiply by
2*pi to get angular rates in rad/us.  Decay rates are 1/lifetime in 1/s.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

BASIS_STATES = ("00", "01", "10", "11")
# Ideal gate signs: |00> -> +, the rest -> -.
IDEAL_SIGNS = {"00": 1.0, "01": -1.0, "10": -1.0, "11": -1.0}
RB87_HYPERFINE_MHZ = 6834.682610904


@dataclass(frozen=True)
class PulseParams:
    """Two-photon excitation through a detuned intermediate level."""

    Omega1: float
    Omega2: float
    Delta: float
    Delta_hf: float = RB87_HYPERFINE_MHZ
    photon_order: int = 2
    rabi_offset: float = 0.0
    drive_ratio: float = 1.0

    def __post_init__(self):
        for name in ("Omega1", "Omega2", "Delta", "Delta_hf", "rabi_offset", "drive_ratio"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.photon_order not in (1, 2, 4):
            raise ParameterError("photon_order must be 1, 2 or 4")
        if self.Delta == 0:
            raise ParameterError("intermediate detuning must be non-zero")
        if not 0.0 <= self.drive_ratio <= 1.0:
            raise ParameterError("drive_ratio must lie in [0, 1]")
        if abs(self.Delta) < 10 * max(abs(self.Omega1), abs(self.Omega2)):
            warnings.warn("Delta < 10 max(Omega): adiabatic elimination is marginal", stacklevel=3)

    @classmethod
    def from_effective(cls, Omega_eff: float, Delta: float, **kwargs) -> "PulseParams":
        """Equal single-photon Rabi frequencies giving Omega^2/Delta = Omega_eff."""
        if Omega_eff * Delta < 0:
            raise ParameterError("Omega_eff and Delta must share a sign")
        omega = math.sqrt(Omega_eff * Delta)
        return cls(omega, omega, Delta, **kwargs)

    @property
    def Omega_eff(self) -> float:
        """Nominal effective Rabi frequency Omega1*Omega2/Delta (MHz)."""
        return self.Omega1 * self.Omega2 / self.Delta

    @property
    def drive_scale(self) -> float:
        """Factor applied to each single-photon Rabi frequency during the run."""
        return (1.0 + self.rabi_offset) * math.sqrt(self.drive_ratio ** self.photon_order)


@dataclass(frozen=True)
class InteractionParams:
    """Pair interaction, its next-pair leakage ratio, decay and geometry."""

    V_int: float = 0.0
    delta_V_ratio: float | None = None
    gamma: float = 0.0
    power: int = 6
    R: float = 532.0
    omega_trap: float = 0.0

    def __post_init__(self):
        if self.power not in (3, 6):
            raise ParameterError("interaction power must be 3 or 6")
        if self.V_int < 0 or not math.isfinite(self.V_int):
            raise ParameterError("V_int must be finite and non-negative")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise ParameterError("gamma must be finite and non-negative")
        if self.delta_V_ratio is None:
            object.__setattr__(self, "delta_V_ratio", 1.0 / 3 ** self.power)

    @property
    def gamma_per_us(self) -> float:
        return self.gamma * 1e-6


@dataclass(frozen=True)
class GateOutcome:
    """Final amplitudes of each computational input after a gate.

    ``amplitudes[s][0]`` is the amplitude left in the input state ``s``;
    further entries are the other states of that branch's integrated basis.
    """

    amplitudes: dict
    bases: dict = field(default_factory=dict)

    def kept(self, state: str) -> complex:
        return complex(self.amplitudes[state][0])

    @property
    def diagonal(self) -> np.ndarray:
        return np.array([self.kept(s) for s in BASIS_STATES])

    @property
    def leakage(self) -> dict:
        return {s: 1.0 - abs(self.kept(s)) ** 2 for s in BASIS_STATES}

    @property
    def branch_norms(self) -> dict:
        return {s: float(np.linalg.norm(self.amplitudes[s]) ** 2) for s in BASIS_STATES}

    @property
    def phase(self) -> float:
        """Conditional phase arg d11 - arg d01 - arg d10 + arg d00, wrapped to (-pi, pi]."""
        d = self.diagonal
        raw = np.angle(d[3]) - np.angle(d[1]) - np.angle(d[2]) + np.angle(d[0])
        wrapped = -((-raw + math.pi) % (2 * math.pi) - math.pi)
        return float(wrapped)

    @property
    def fidelity_avg(self) -> float:
        """Average over inputs of |<ideal|U|input>|^2 with ideal signs (+,-,-,-)."""
        total = sum(abs(IDEAL_SIGNS[s] * self.kept(s)) ** 2 for s in BASIS_STATES)
        return float(min(1.0, total / 4))

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity_avg

    @property
    def mean_probability(self) -> float:
        """Average probability of returning to the input state (inactive pairs)."""
        return float(np.mean(np.abs(self.diagonal) ** 2))

    def to_dict(self) -> dict:
        return {
            "amplitudes": {
                s: {"re": np.real(self.amplitudes[s]).tolist(), "im": np.imag(self.amplitudes[s]).tolist()}
                for s in BASIS_STATES
            },
            "bases": {s: list(self.bases.get(s, ())) for s in BASIS_STATES},
            "leakage": self.leakage,
            "conditional_phase": self.phase,
            "fidelity_avg": self.fidelity_avg,
        }
