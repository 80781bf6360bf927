"""Band-projected dynamics through lattice-manipulation schedules.

The state is the q = 0 plane-wave coefficient vector in the co-moving
coordinate xi = k(t) x, basis exp(2 i n xi).  In that frame the Hamiltonian is

    H(t) = k^2 diag(4 n^2) + V(xi; V0, V1, phi) + (dk/dt / k) D,

with D = (xi p + p xi)/2 the dilation generator, xi taken as a sawtooth on
[-pi/2, pi/2) so that each cell stretches about its own centre (xi = 0).
For constant k the last term vanishes and the central-equation Hamiltonian
of :mod:`rydcluster.lattice` is recovered.

Durations are in units of hbar/E_R; reported times are in microseconds.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParameterError
from .lattice import COUPLING_DIVISORS, DEFAULT_N_MAX, LatticeParams, central_matrix
from .numerics import AffineGenerator, default_step, evolve

SAMPLES_PER_UNIT_TIME = 8
# RK4 error at this resolution is far below the 1e-6 dt-halving budget.
RAMP_POINTS_PER_PERIOD = 80
_CONTINUITY_TOL = 1e-9


def us_to_recoil_units(t_us: float, E_R_kHz: float) -> float:
    return t_us * 1e-3 * 2 * math.pi * E_R_kHz


def recoil_units_to_us(t: float, E_R_kHz: float) -> float:
    return t * 1e3 / (2 * math.pi * E_R_kHz)


@dataclass(frozen=True)
class RampSegment:
    """One linear ramp; each path is a (start, end) pair."""

    duration: float
    V0: tuple
    V1: tuple
    phi: tuple = (0.0, 0.0)
    k: tuple = (1.0, 1.0)

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ParameterError("segment durations must be positive and finite")
        for name in ("V0", "V1", "phi", "k"):
            path = tuple(float(v) for v in getattr(self, name))
            if len(path) != 2 or not all(math.isfinite(v) for v in path):
                raise ParameterError(f"{name} path must be a finite (start, end) pair")
            object.__setattr__(self, name, path)
        if min(self.V0) < 0 or min(self.V1) < 0:
            raise ParameterError("schedule reaches a negative lattice depth")
        if min(self.k) <= 0:
            raise ParameterError("schedule reaches k <= 0")

    def at(self, s):
        """Path values at fractional position s in [0, 1]."""
        s = np.asarray(s, dtype=float)
        lerp = lambda path: path[0] + (path[1] - path[0]) * s  # noqa: E731
        return lerp(self.V0), lerp(self.V1), lerp(self.phi), lerp(self.k)

    def reversed(self) -> "RampSegment":
        return RampSegment(self.duration, self.V0[::-1], self.V1[::-1], self.phi[::-1], self.k[::-1])


@dataclass(frozen=True)
class RampSchedule:
    segments: tuple
    E_R_kHz: float = 3.5
    coupling: str = "physical"

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ParameterError("a schedule needs at least one segment")
        if self.coupling not in COUPLING_DIVISORS:
            raise ParameterError(f"unknown coupling convention {self.coupling!r}")
        if not self.E_R_kHz > 0:
            raise ParameterError("recoil energy must be positive")
        for prev, nxt in zip(segs, segs[1:]):
            for name in ("V0", "V1", "phi", "k"):
                if abs(getattr(prev, name)[1] - getattr(nxt, name)[0]) > _CONTINUITY_TOL:
                    raise ParameterError(f"{name} path is discontinuous between segments")
        object.__setattr__(self, "segments", segs)

    @property
    def total_duration(self) -> float:
        return sum(seg.duration for seg in self.segments)

    @property
    def total_time_us(self) -> float:
        return recoil_units_to_us(self.total_duration, self.E_R_kHz)

    def scaled(self, factor: float) -> "RampSchedule":
        if not (factor > 0 and math.isfinite(factor)):
            raise ParameterError("scale factors must be positive")
        return replace(self, segments=tuple(replace(s, duration=s.duration * factor) for s in self.segments))

    def reversed(self) -> "RampSchedule":
        return replace(self, segments=tuple(s.reversed() for s in reversed(self.segments)))

    def then(self, other: "RampSchedule") -> "RampSchedule":
        return replace(self, segments=self.segments + other.segments)

    def params_at_start(self) -> LatticeParams:
        s = self.segments[0]
        return LatticeParams(s.V0[0], s.V1[0], s.phi[0], s.k[0], self.E_R_kHz)

    def params_at_end(self) -> LatticeParams:
        s = self.segments[-1]
        return LatticeParams(s.V0[1], s.V1[1], s.phi[1], s.k[1], self.E_R_kHz)


def merge_schedule(E_R_kHz: float = 3.5, split_us=(250.0, 100.0, 250.0), V0_high: float = 100.0,
                   V0_low: float = 20.0, V1: float = 100.0, scale: float = 1.0) -> RampSchedule:
    """Lower V0, ramp phi from 0 to pi/2 at the low plateau, raise V0 again."""
    if len(split_us) != 3:
        raise ParameterError("the merge schedule has three segments")
    t1, t2, t3 = (scale * us_to_recoil_units(t, E_R_kHz) for t in split_us)
    half_pi = math.pi / 2
    return RampSchedule(
        (
            RampSegment(t1, (V0_high, V0_low), (V1, V1), (0.0, 0.0)),
            RampSegment(t2, (V0_low, V0_low), (V1, V1), (0.0, half_pi)),
            RampSegment(t3, (V0_low, V0_high), (V1, V1), (half_pi, half_pi)),
        ),
        E_R_kHz=E_R_kHz,
    )


def stretch_schedule(duration: float, k_start: float, k_end: float, V1: float,
                     E_R_kHz: float = 3.5) -> RampSchedule:
    """Single lattice V1 sin^2(k x) (minimum at the dilation centre) with k ramped linearly."""
    if k_end <= 0 or k_start <= 0:
        raise ParameterError("k must stay positive")
    return RampSchedule((RampSegment(duration, (V1, V1), (0.0, 0.0), (math.pi / 2,) * 2, (k_start, k_end)),),
                        E_R_kHz=E_R_kHz)


@dataclass(frozen=True)
class RetentionReport:
    retention: float
    times_us: np.ndarray
    band_populations: np.ndarray  # [sample, band]
    total_time: float  # us
    completeness: np.ndarray = field(default=None)  # all-band population sum per sample
    norm: np.ndarray = field(default=None)

    def to_dict(self) -> dict:
        return {
            "retention": self.retention,
            "total_time_us": self.total_time,
            "final_band_populations": self.band_populations[-1].tolist(),
            "max_completeness_error": float(np.max(np.abs(self.completeness - 1.0))),
            "max_norm_error": float(np.max(np.abs(self.norm - 1.0))),
        }

    def rows(self):
        """(time_us, P_band1, ..., P_bandN) rows for CSV export."""
        return np.column_stack([self.times_us, self.band_populations])


def _operator_terms(N_max: int, coupling: str) -> np.ndarray:
    n = np.arange(-N_max, N_max + 1)
    d = n.size
    c = COUPLING_DIVISORS[coupling]
    kinetic = np.diag(4.0 * n**2).astype(complex)
    identity = np.eye(d, dtype=complex)
    upper = np.diag(np.ones(d - 1), 1).astype(complex) / c
    lower = upper.T.copy()
    second = (np.diag(np.ones(d - 2), 2) + np.diag(np.ones(d - 2), -2)).astype(complex) / c
    # Sawtooth xi on one period: <n|xi|m> = -i (-1)^j / (2 j), j = m - n.
    j = n[None, :] - n[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = np.where(j != 0, -1j * np.power(-1.0, j) / (2.0 * j), 0.0)
    p = np.diag(2.0 * n).astype(complex)
    dilation = 0.5 * (xi @ p + p @ xi)
    return np.stack([kinetic, identity, upper, lower, second, dilation])


def _segment_generator(seg: RampSegment, t0: float, terms: np.ndarray) -> AffineGenerator:
    dk = (seg.k[1] - seg.k[0]) / seg.duration

    def coefficients(times):
        s = (np.asarray(times) - t0) / seg.duration
        V0, V1, phi, k = seg.at(s)
        out = np.empty((s.size, 6), dtype=complex)
        out[:, 0] = k**2
        out[:, 1] = 0.5 * (V0 + V1)
        out[:, 2] = V0 * np.exp(-2j * phi)
        out[:, 3] = V0 * np.exp(2j * phi)
        out[:, 4] = V1
        out[:, 5] = dk / k
        return out

    return AffineGenerator(terms, coefficients)


def _instantaneous(seg: RampSegment, s: float, E_R_kHz: float, N_max: int, coupling: str):
    V0, V1, phi, k = (float(v) for v in seg.at(s))
    H = central_matrix(LatticeParams(V0, V1, phi, k, E_R_kHz), 0.0, N_max, coupling)
    return np.linalg.eigh(H)[1]


def evolve_bands(schedule: RampSchedule, p0: LatticeParams | None = None, n_tracked: int = 4,
                 N_max: int = DEFAULT_N_MAX, dt: float | None = None,
                 samples_per_unit: float = SAMPLES_PER_UNIT_TIME,
                 points_per_period: int = RAMP_POINTS_PER_PERIOD) -> RetentionReport:
    """Start in the q = 0 ground band of the initial lattice and follow the schedule.

    ``p0``, when given, must agree with the schedule's starting point; only
    its recoil energy is otherwise used (for time conversion).
    """
    if p0 is not None:
        start = schedule.params_at_start()
        if any(abs(getattr(p0, f) - getattr(start, f)) > _CONTINUITY_TOL for f in ("V0", "V1", "phi", "k")):
            raise ParameterError("p0 does not match the start of the schedule")
        schedule = replace(schedule, E_R_kHz=p0.E_R_kHz)
    if not 1 <= n_tracked <= 2 * N_max + 1:
        raise ParameterError("n_tracked must lie between 1 and the basis size")
    terms = _operator_terms(N_max, schedule.coupling)
    E_R = schedule.E_R_kHz
    psi = _instantaneous(schedule.segments[0], 0.0, E_R, N_max, schedule.coupling)[:, 0].astype(complex)

    times, pops, complete, norms = [], [], [], []
    t0 = 0.0
    for index, seg in enumerate(schedule.segments):
        n_samples = max(2, int(math.ceil(seg.duration * samples_per_unit)) + 1)
        gen = _segment_generator(seg, t0, terms)
        span = (t0, t0 + seg.duration)
        step = dt if dt is not None else default_step(gen, span, points_per_period)
        res = evolve(gen, psi, span, dt=step, n_samples=n_samples)
        skip = 0 if index == 0 else 1  # segment start duplicates the previous end
        for t, state in zip(res.sample_times[skip:], res.samples[skip:]):
            vecs = _instantaneous(seg, (t - t0) / seg.duration, E_R, N_max, schedule.coupling)
            weights = np.abs(vecs.conj().T @ state) ** 2
            times.append(recoil_units_to_us(t, E_R))
            pops.append(weights[:n_tracked])
            complete.append(weights.sum())
            norms.append(np.linalg.norm(state))
        psi = res.final_state
        t0 += seg.duration

    pops = np.array(pops)
    return RetentionReport(
        retention=float(pops[-1, 0]),
        times_us=np.array(times),
        band_populations=pops,
        total_time=schedule.total_time_us,
        completeness=np.array(complete),
        norm=np.array(norms),
    )


def evolve_stretch(duration: float, k_start: float, k_end: float, V1: float, E_R_kHz: float = 3.5,
                   **kwargs) -> RetentionReport:
    """Linear k ramp of a single lattice of depth V1; duration in 1/E_R."""
    return evolve_bands(stretch_schedule(duration, k_start, k_end, V1, E_R_kHz), **kwargs)


def _retention_at(args):
    schedule, scale, kwargs = args
    return evolve_bands(schedule.scaled(scale), **kwargs).retention


def adiabaticity_scan(schedule: RampSchedule, scale_factors, jobs: int = 1, **kwargs) -> np.ndarray:
    """Rows of (scale, retention) with every duration multiplied by ``scale``."""
    scales = [float(s) for s in np.atleast_1d(scale_factors)]
    if not scales:
        raise ParameterError("scale list must be non-empty")
    for s in scales:
        if not (s > 0 and math.isfinite(s)):
            raise ParameterError("scale factors must be positive")
    tasks = [(schedule, s, kwargs) for s in scales]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            retentions = list(pool.map(_retention_at, tasks))
    else:
        retentions = [_retention_at(t) for t in tasks]
    return np.column_stack([scales, retentions])


@dataclass(frozen=True)
class TuningResult:
    scale: float
    retention: float
    schedule: RampSchedule
    scan: np.ndarray


def tune_schedule(schedule: RampSchedule, low: float = 0.85, high: float = 1.15, coarse_points: int = 7,
                  refine_rounds: int = 1, jobs: int = 1, **kwargs) -> TuningResult:
    """Pick the duration scale with the best retention inside [low, high].

    Retention oscillates with the scale, so a coarse grid is followed by
    finer grids around the current best point.
    """
    if not 0 < low < high:
        raise ParameterError("need 0 < low < high")
    grid = np.linspace(low, high, coarse_points)
    scan = adiabaticity_scan(schedule, grid, jobs=jobs, **kwargs)
    width = grid[1] - grid[0]
    for _ in range(refine_rounds):
        best = scan[np.argmax(scan[:, 1]), 0]
        fine = np.linspace(max(low, best - width), min(high, best + width), 5)
        scan = np.vstack([scan, adiabaticity_scan(schedule, fine, jobs=jobs, **kwargs)])
        width = fine[1] - fine[0]
    scan = scan[np.argsort(scan[:, 0])]
    best_row = scan[np.argmax(scan[:, 1])]
    return TuningResult(float(best_row[0]), float(best_row[1]), schedule.scaled(best_row[0]), scan)
