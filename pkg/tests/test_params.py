import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rydcluster.errors import ParameterError
from rydcluster.params import GateOutcome, InteractionParams, PulseParams


def test_pulse_validation():
    with pytest.raises(ParameterError):
        PulseParams(1.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        PulseParams(1.0, 1.0, 100.0, photon_order=3)
    with pytest.raises(ParameterError):
        PulseParams(1.0, 1.0, 100.0, drive_ratio=1.5)
    with pytest.raises(ParameterError):
        PulseParams(math.nan, 1.0, 100.0)
    with pytest.raises(ParameterError):
        PulseParams.from_effective(30.0, -4e4)


def test_marginal_detuning_warns_only():
    with pytest.warns(UserWarning, match="marginal"):
        PulseParams(10.0, 10.0, 50.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        PulseParams(10.0, 10.0, 200.0)


def test_from_effective_round_trip():
    p = PulseParams.from_effective(30.0, 4e4)
    assert p.Omega1 == p.Omega2
    assert p.Omega_eff == pytest.approx(30.0, rel=1e-14)


def test_drive_scale():
    p = PulseParams(1.0, 1.0, 100.0, rabi_offset=0.1, drive_ratio=0.5, photon_order=4)
    assert p.drive_scale == pytest.approx(1.1 * 0.25)


def test_interaction_defaults():
    assert InteractionParams(V_int=1.0).delta_V_ratio == pytest.approx(1 / 729)
    assert InteractionParams(V_int=1.0, power=3).delta_V_ratio == pytest.approx(1 / 27)
    assert InteractionParams(gamma=2000.0).gamma_per_us == pytest.approx(2e-3)
    for bad in ({"V_int": -1.0}, {"gamma": -1.0}, {"power": 4}):
        with pytest.raises(ParameterError):
            InteractionParams(**bad)


def outcome_from(diag, extra=0.0):
    amps = {s: np.array([d, extra]) for s, d in zip(("00", "01", "10", "11"), diag)}
    return GateOutcome(amplitudes=amps)


def test_ideal_outcome():
    out = outcome_from([1, -1, -1, -1])
    assert out.fidelity_avg == 1.0
    assert out.phase == pytest.approx(math.pi)
    assert all(v == pytest.approx(0.0) for v in out.leakage.values())


def test_fidelity_is_per_branch_magnitude():
    # Branch phases do not enter; only the kept amplitude magnitude does.
    out = outcome_from([1, 1j, -1, math.sqrt(0.5)])
    assert out.fidelity_avg == pytest.approx((1 + 1 + 1 + 0.5) / 4)
    assert out.mean_probability == pytest.approx(out.fidelity_avg)


amplitude = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


@given(st.lists(amplitude, min_size=4, max_size=4))
def test_outcome_ranges(diag):
    out = outcome_from(diag)
    assert 0.0 <= out.fidelity_avg <= 1.0
    assert all(-1e-12 <= v <= 1.0 for v in out.leakage.values())
    assert -math.pi < out.phase <= math.pi + 1e-12


def test_to_dict_fields():
    d = outcome_from([1, -1, -1, -1]).to_dict()
    assert set(d) == {"amplitudes", "bases", "leakage", "conditional_phase", "fidelity_avg"}
    assert d["amplitudes"]["11"]["re"][0] == -1.0
