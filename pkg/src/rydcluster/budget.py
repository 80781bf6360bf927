"""Closed-form gate error budget, parameter presets and generation-time accounting.

Frequencies passed to the error formulas are ordinary frequencies in MHz and
decay rates are 1/lifetime in 1/s; every formula converts to angular units
internally, so ``2 pi gamma / V`` reads as gamma / V with V in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import constants

from .errors import DomainError, ParameterError
from .gate_blockade import ONE_PHOTON_INACTIVE_P, inactive_probabilities, inactive_ratio
from .gate_noblockade import inactive_closed_form
from .lattice import LatticeParams, harmonic_width

TWO_PI = 2 * math.pi

NO_BLOCKADE = "no_blockade"
BLOCKADE = "blockade"
SCHEMES = (NO_BLOCKADE, BLOCKADE)

# Position of an active pair on the excitation standing wave (k x_n).
ACTIVE_PAIR_PHASE = 5 * math.pi / 2
# Relative two-photon drive at inactive sites for the no-blockade lattice.
NO_BLOCKADE_DRIVE_RATIO = abs(math.cos(3 * math.pi / 8) / math.cos(7 * math.pi / 8))

# Quoted-only value; the printed formula gives about 0.115 at V0 = V1 = 100 E_R.
BLOCKADE_2PH_OMEGA_VAR_QUOTED = 0.15

TOTAL_TERMS = {
    NO_BLOCKADE: ("eps_omega_var", "eps_imp_exc", "eps_rydb_decay1", "eps_rydb_decay2"),
    BLOCKADE: ("eps_omega_var", "eps_imp_block", "eps_rydb_decay_blockade", "eps_mf_fluct"),
}


def _photon_scale(photon_order: int) -> float:
    if photon_order not in (1, 2, 4):
        raise ParameterError("photon_order must be 1, 2 or 4")
    return (photon_order / 2) ** 2


def omega_variation_error(scheme: str, photon_order: int = 2, V0: float = 100.0, V1: float = 100.0,
                          k: float = 1.0, pair_phase: float = ACTIVE_PAIR_PHASE) -> float:
    """Error from the spread of Rabi frequency over the motional ground state.

    Two-photon values; other photon orders scale as (order/2)^2.
    """
    a = harmonic_width(LatticeParams(V0, V1, k=k))
    scale = _photon_scale(photon_order)
    if scheme == NO_BLOCKADE:
        base = math.pi**2 * (k * a / 4) ** 2 * math.tan(pair_phase / 4 + math.pi / 4) ** 2
    elif scheme == BLOCKADE:
        if V1 <= 0 or V0 > 4 * V1:
            raise DomainError("blockade geometry needs 0 < V0 <= 4 V1")
        base = math.pi**2 * (k * a) ** 2 * inactive_ratio(V0, V1)
    else:
        raise ParameterError(f"unknown scheme {scheme!r}")
    return scale * base


def interaction_errors(V_int: float, Omega_eff: float, delta_V_ratio: float | None = None,
                       power: int = 6) -> tuple[float, float]:
    """Imperfect double excitation and cross-pair interaction errors."""
    if Omega_eff <= 0 or V_int < 0:
        raise ParameterError("need Omega_eff > 0 and V_int >= 0")
    if delta_V_ratio is None:
        delta_V_ratio = 1.0 / 3**power
    x = V_int / Omega_eff
    imp = x**2 / 8
    dif = (3 * math.pi**2 / 16) * (1 / 8 + 19 * math.pi**2 / 256) * delta_V_ratio * x**3
    return imp, dif


def decay_errors(scheme: str, gamma: float, V_int: float, Omega_eff: float) -> dict:
    """Rydberg-decay error terms; gamma in 1/s, frequencies in MHz."""
    if gamma < 0:
        raise ParameterError("gamma must be non-negative")
    g = gamma * 1e-6
    if scheme == NO_BLOCKADE:
        decay1 = TWO_PI * g / (TWO_PI * V_int) if V_int > 0 else 0.0
        decay2 = math.pi * g / (TWO_PI * Omega_eff)
        return {"eps_rydb_decay1": decay1, "eps_rydb_decay2": decay2}
    if scheme == BLOCKADE:
        return {"eps_rydb_decay_blockade": 7 * math.pi * g / (4 * TWO_PI * Omega_eff)}
    raise ParameterError(f"unknown scheme {scheme!r}")


def non_adiabatic_error(a: float, R: float, V_int: float = 0.0, omega_trap: float | None = None) -> float:
    """Interaction uncertainty from the motional spread; a and R share a unit.

    The second-order correction only holds for V_int <= omega_trap; otherwise
    the first term alone is returned as a lower bound.
    """
    ratio2 = (a / R) ** 2
    first = math.pi**2 / 4 * ratio2
    if omega_trap is None or omega_trap <= 0 or V_int > omega_trap:
        return first
    return max(0.0, first - math.pi**2 / 4 * ratio2**2 * (V_int / omega_trap) ** 2)


def imperfect_blockade_error(Omega_eff: float, Delta_vec: float) -> float:
    """Finite selectivity (Omega^2/Delta)^2 / (2 Delta_vec^2); both in one unit."""
    if Delta_vec == 0:
        raise ParameterError("Delta_vec must be non-zero")
    return Omega_eff**2 / (2 * Delta_vec**2)


def misc_errors(delta_omega: float = 1.0e3, T_PG: float = 25e-6, gamma_intermediate: float = 1 / 125e-9,
                Delta_MHz: float = 4.0e4) -> tuple[float, float]:
    """Magnetic-field dephasing (delta_omega T_PG)^2 and intermediate-state scattering."""
    mf = (delta_omega * T_PG) ** 2
    p_se = math.pi * gamma_intermediate / (TWO_PI * Delta_MHz * 1e6)
    return mf, p_se


def dipolar_interaction_MHz(dipole_debye: float, R_nm: float) -> float:
    """mu^2 / (4 pi eps0 R^3 h) in MHz."""
    debye = 1e-21 / constants.c
    mu = dipole_debye * debye
    energy = mu**2 / (4 * math.pi * constants.epsilon_0 * (R_nm * 1e-9) ** 3)
    return energy / constants.h * 1e-6


def noblockade_inactive_P(photon_order: int, drive_ratio: float = NO_BLOCKADE_DRIVE_RATIO) -> float:
    return inactive_closed_form(drive_ratio**photon_order)


@dataclass(frozen=True)
class Preset:
    """Raw physical parameters for one Table I column."""

    name: str
    scheme: str
    photon_order: int
    V0: float = 100.0
    V1: float = 100.0
    Omega_eff: float = 30.0  # MHz
    V_int: float | None = 3.0  # MHz; None derives it from the dipole moment
    gamma: float = 2000.0  # 1/s
    power: int = 6
    Delta_MHz: float = 4.0e4
    Delta_vec_kHz: float = 200.0
    delta_omega: float = 1.0e3  # 1/s
    T_PG_us: float = 25.0
    dipole_debye: float = 0.0
    R_nm: float = 500.0
    lattice_nm: float = 810.0
    E_R_kHz: float = 3.5

    def interaction_MHz(self) -> float:
        if self.V_int is not None:
            return self.V_int
        return dipolar_interaction_MHz(self.dipole_debye, self.R_nm)


PRESETS = {
    p.name: p
    for p in (
        Preset("rb_noblockade_2ph", NO_BLOCKADE, 2),
        Preset("rb_noblockade_4ph", NO_BLOCKADE, 4),
        Preset("rb_blockade_2ph", BLOCKADE, 2, Omega_eff=0.04, V_int=None, Delta_vec_kHz=200.0),
        Preset("csho_blockade_1ph", BLOCKADE, 1, V0=200.0, V1=100.0, Omega_eff=0.1, V_int=None,
               Delta_vec_kHz=1000.0),
        Preset("co_molecule_2ph", NO_BLOCKADE, 2, Omega_eff=0.1, V_int=None, gamma=2.0, power=3,
               dipole_debye=1.4, R_nm=500.0),
        Preset("co_molecule_4ph", NO_BLOCKADE, 4, Omega_eff=0.1, V_int=None, gamma=2.0, power=3,
               dipole_debye=1.4, R_nm=500.0),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class ErrorBudget:
    scheme: str
    photon_order: int
    terms: dict
    total: float
    inactive_P: float
    extras: dict = field(default_factory=dict)
    formula_values: dict = field(default_factory=dict)
    preset: str = ""

    def __post_init__(self):
        if any(v < 0 for v in self.terms.values()):
            raise DomainError("error terms must be non-negative")

    @property
    def eps_inact_exc(self) -> float:
        return 1.0 - self.inactive_P

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "scheme": self.scheme,
            "photon_order": self.photon_order,
            "terms": dict(self.terms),
            "total": self.total,
            "total_terms": list(TOTAL_TERMS[self.scheme]),
            "inactive_P": self.inactive_P,
            "eps_inact_exc": self.eps_inact_exc,
            "extras": dict(self.extras),
            "formula_values": dict(self.formula_values),
        }


def assemble_table(preset: str | Preset) -> ErrorBudget:
    """Evaluate every applicable error term for a preset.

    The total follows the table convention: inactive-site excitation and the
    non-adiabatic term are reported but not summed.
    """
    p = get_preset(preset) if isinstance(preset, str) else preset
    V = p.interaction_MHz()
    formula = {}
    extras = {}
    if p.scheme == NO_BLOCKADE:
        terms = {"eps_omega_var": omega_variation_error(NO_BLOCKADE, p.photon_order, p.V0, p.V1)}
        imp, dif = interaction_errors(V, p.Omega_eff, power=p.power)
        terms["eps_imp_exc"] = imp
        terms.update(decay_errors(NO_BLOCKADE, p.gamma, V, p.Omega_eff))
        a = harmonic_width(LatticeParams(p.V0, p.V1))
        extras["eps_dif_pairs"] = dif
        extras["eps_non_adiab"] = non_adiabatic_error(a, math.pi)
        extras["p_se_intermediate"] = misc_errors(Delta_MHz=p.Delta_MHz)[1]
        extras["V_int_MHz"] = V
        inactive = noblockade_inactive_P(p.photon_order)
    elif p.scheme == BLOCKADE:
        omega_var = omega_variation_error(BLOCKADE, p.photon_order, p.V0, p.V1)
        if p.photon_order == 2 and p.V0 == p.V1 == 100.0:
            formula["eps_omega_var"] = omega_var
            omega_var = BLOCKADE_2PH_OMEGA_VAR_QUOTED
        dv = p.Delta_vec_kHz * 1e-3
        terms = {
            "eps_omega_var": omega_var,
            "eps_imp_block": imperfect_blockade_error(p.Omega_eff, dv),
            **decay_errors(BLOCKADE, p.gamma, 0.0, p.Omega_eff),
            "eps_mf_fluct": misc_errors(p.delta_omega, p.T_PG_us * 1e-6)[0],
        }
        probs = inactive_probabilities(inactive_ratio(p.V0, p.V1), p.photon_order)
        inactive = sum(probs.values()) / 4
        if p.photon_order == 1:
            formula["inactive_P"] = inactive
            inactive = ONE_PHOTON_INACTIVE_P
    else:
        raise ParameterError(f"unknown scheme {p.scheme!r}")
    total = sum(terms[name] for name in TOTAL_TERMS[p.scheme])
    return ErrorBudget(p.scheme, p.photon_order, terms, total, inactive, extras, formula, p.name)


# Quoted table entries as written, keyed by preset then row.
TABLE_I_QUOTED = {
    "rb_noblockade_2ph": {
        "eps_omega_var": "1.05e-2", "eps_imp_exc": "1.25e-3", "eps_rydb_decay1": "6.7e-4",
        "eps_rydb_decay2": "3e-5", "eps_non_adiab": "2.5e-2", "total": "1.25e-2", "eps_inact_exc": "0.25",
    },
    "rb_noblockade_4ph": {
        "eps_omega_var": "4.2e-2", "eps_imp_exc": "1.25e-3", "eps_rydb_decay1": "6.7e-4",
        "eps_rydb_decay2": "3e-5", "eps_non_adiab": "2.5e-2", "total": "4.4e-2", "eps_inact_exc": "6.5e-3",
    },
    "rb_blockade_2ph": {
        "eps_omega_var": "0.15", "eps_imp_block": "2e-2", "eps_rydb_decay_blockade": "4.38e-2",
        "eps_mf_fluct": "6e-4", "total": "0.21", "eps_inact_exc": "2e-3",
    },
    "csho_blockade_1ph": {
        "eps_omega_var": "1.13e-2", "eps_imp_block": "5e-3", "eps_rydb_decay_blockade": "1.75e-2",
        "eps_mf_fluct": "6e-4", "total": "3.44e-2", "eps_inact_exc": "0.13",
    },
}


def quoted_tolerance(text: str) -> float:
    """Half a unit in the last compared significant digit (at most the second)."""
    mantissa = text.lower().split("e")[0].lstrip("0.").replace(".", "") or "0"
    digits = min(2, len(mantissa))
    value = float(text)
    exponent = math.floor(math.log10(abs(value)))
    return 0.5 * 10 ** (exponent - digits + 1)


def budget_value(b: ErrorBudget, row: str) -> float:
    if row == "total":
        return b.total
    if row == "eps_inact_exc":
        return b.eps_inact_exc
    if row in b.terms:
        return b.terms[row]
    return b.extras[row]


@dataclass(frozen=True)
class TimingBudget:
    steps: tuple
    total: float

    def to_dict(self) -> dict:
        return {"steps": [{"label": s, "duration_us": d} for s, d in self.steps], "total_us": self.total}


GATE_TIME_US = {NO_BLOCKADE: 20.0, BLOCKADE: 25.0}
MERGE_US = 600.0
V0_RAMP_US = 250.0
STRETCH_US = 730.0
ROUNDS_1D = 4


def timing(scheme: str, dimension: int) -> TimingBudget:
    """Generation time as a sum of documented steps (microseconds)."""
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}")
    if dimension not in (1, 2):
        raise ParameterError("dimension must be 1 or 2")
    gate = GATE_TIME_US[scheme]
    chain = [(f"gate round {j + 1}", gate) for j in range(ROUNDS_1D)]
    if scheme == BLOCKADE:
        chain.append(("double-well merge and split", MERGE_US))
    if dimension == 1:
        steps = chain
    else:
        rows = [(f"rows: {label}", d) for label, d in chain]
        cols = [(f"columns: {label}", d) for label, d in chain]
        middle = [("stretch x", STRETCH_US), ("shrink y", STRETCH_US)]
        if scheme == BLOCKADE:
            middle = [("lower V0", V0_RAMP_US), *middle, ("raise V3", V0_RAMP_US)]
        steps = rows + middle + cols
    steps = tuple(steps)
    return TimingBudget(steps, float(sum(d for _, d in steps)))


_ROW_LABELS = {
    "eps_omega_var": "eps_Omega_var",
    "eps_imp_exc": "eps_imp_exc",
    "eps_rydb_decay1": "eps_Rydb_decay1",
    "eps_rydb_decay2": "eps_Rydb_decay2",
    "eps_imp_block": "eps_imp_block",
    "eps_rydb_decay_blockade": "eps_Rydb_decay",
    "eps_mf_fluct": "eps_MF_fluct",
    "eps_non_adiab": "eps_non_adiab",
}


def format_table(budgets) -> str:
    """Plain-text table with one column per budget."""
    budgets = list(budgets)
    rows = []
    for b in budgets:
        for key in (*TOTAL_TERMS[b.scheme], "eps_non_adiab"):
            if (key in b.terms or key in b.extras) and key not in rows:
                rows.append(key)
    header = ["term"] + [b.preset or f"{b.scheme}/{b.photon_order}ph" for b in budgets]
    lines = [header]
    for key in rows:
        cells = [_ROW_LABELS.get(key, key)]
        for b in budgets:
            v = b.terms.get(key, b.extras.get(key))
            cells.append("-" if v is None else f"{v:.3e}")
        lines.append(cells)
    lines.append(["total (excl. inact, non-adiab)"] + [f"{b.total:.3e}" for b in budgets])
    lines.append(["eps_inact_exc = 1 - <P>"] + [f"{b.eps_inact_exc:.3e}" for b in budgets])
    widths = [max(len(r[j]) for r in lines) for j in range(len(header))]
    out = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in lines]
    out.insert(1, "-" * len(out[0]))
    return "\n".join(out)
