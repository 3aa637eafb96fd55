"""Spherical near-field measurement simulation.

The forward model follows the transmission formula: each measurement is
v * sum over probe order n, polarization h, degree l and order k of
c_{h,n} T_{hlk} D_l^{k,n} at the probe position. Coefficients are indexed
(h, l, k) with h in {1, 2} (TE/TM), 1 <= l <= B, |k| <= l. The probe
weights c_{h,n} are configuration: the raw formula would give both
polarizations identical dictionary columns, so the defaults weight them
differently (c_{1,+-1} = 1, c_{2,n} = n j) and their 2x2 matrix over n is
reported alongside every result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sampling
from .sampling import SamplePoint, preconditioner_weight
from .sensing import measure_mass, points_to_arrays
from .solver import SolverConfig, SolverResult, bpdn_ball
from .wigner import wigner_D

__all__ = [
    "TransmissionCoefficients",
    "ProbeSchedule",
    "coefficient_count",
    "coefficient_index",
    "default_probe_weights",
    "make_schedule",
    "build_dictionary",
    "transmission_forward",
    "recover_transmission",
    "baseline_least_squares",
    "pattern_cut",
]

DEFAULT_CHI_SET = (0.0, math.pi / 2)


def coefficient_count(B: int) -> int:
    """Number of (h, l, k) coefficients: 2 * B(B+2)."""
    if B < 1:
        raise ValueError("B must be >= 1")
    return 2 * B * (B + 2)


def coefficient_index(h: int, l: int, k: int, B: int) -> int:
    if h not in (1, 2) or not 1 <= l <= B or abs(k) > l:
        raise ValueError(f"invalid coefficient index (h={h}, l={l}, k={k})")
    return (h - 1) * B * (B + 2) + (l * l - 1) + (k + l)


def default_probe_weights(v_max: int = 1) -> dict[tuple[int, int], complex]:
    """c_{h,n} for n in {-v_max..v_max} \\ {0}; breaks the TE/TM degeneracy."""
    weights = {}
    for n in range(-v_max, v_max + 1):
        if n == 0:
            continue
        weights[(1, n)] = 1.0 + 0.0j
        weights[(2, n)] = 1j * n
    return weights


@dataclass
class TransmissionCoefficients:
    B: int
    values: np.ndarray
    v: complex = 1.0 + 0.0j
    v_max: int = 1
    probe_weights: dict[tuple[int, int], complex] = field(
        default_factory=default_probe_weights
    )

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (coefficient_count(self.B),):
            raise ValueError(
                f"expected {coefficient_count(self.B)} coefficients, "
                f"got shape {self.values.shape}"
            )

    def weight_condition(self) -> float:
        """Condition number of the (h x n) probe-weight matrix; must be
        finite for the two polarization blocks to be separable."""
        ns = sorted({n for (_, n) in self.probe_weights})
        W = np.array([[self.probe_weights.get((h, n), 0.0) for n in ns] for h in (1, 2)])
        return float(np.linalg.cond(W))


@dataclass
class ProbeSchedule:
    points: list[SamplePoint]
    chi_set: tuple[float, ...] = DEFAULT_CHI_SET

    def __post_init__(self):
        allowed = set(self.chi_set)
        for p in self.points:
            if p.chi not in allowed:
                raise ValueError(f"chi={p.chi} not in the declared set {self.chi_set}")


def make_schedule(
    rng: np.random.Generator,
    m: int,
    measure: str = sampling.PRODUCT,
    chi_set: tuple[float, ...] = DEFAULT_CHI_SET,
) -> ProbeSchedule:
    """m probe positions drawn from the measure, chi drawn from chi_set."""
    if measure == sampling.PRODUCT:
        raw = sampling.sample_product(rng, m)
    elif measure == sampling.TAN13:
        raw = sampling.sample_tan_measure(rng, m)
    else:
        raise ValueError(f"unknown measure {measure!r}")
    chis = rng.choice(chi_set, size=m)
    points = [
        SamplePoint(p.theta, p.phi, float(c), p.measure) for p, c in zip(raw, chis)
    ]
    return ProbeSchedule(points=points, chi_set=tuple(chi_set))


def build_dictionary(T: TransmissionCoefficients, schedule: ProbeSchedule) -> np.ndarray:
    """m x 2B(B+2) matrix whose (h, l, k) column is
    v * sum_n c_{h,n} D_l^{k,n} at the probe points (orders |n| > l skipped)."""
    theta, phi, chi, _ = points_to_arrays(schedule.points)
    m = len(theta)
    A = np.zeros((m, coefficient_count(T.B)), dtype=complex)
    for h in (1, 2):
        for l in range(1, T.B + 1):
            for k in range(-l, l + 1):
                col = np.zeros(m, dtype=complex)
                for n in range(-T.v_max, T.v_max + 1):
                    if n == 0 or abs(n) > l:
                        continue
                    c = T.probe_weights.get((h, n), 0.0)
                    if c != 0.0:
                        col += c * wigner_D(l, k, n, theta, phi, chi)
                A[:, coefficient_index(h, l, k, T.B)] = T.v * col
    return A


def transmission_forward(
    T: TransmissionCoefficients, schedule: ProbeSchedule
) -> np.ndarray:
    """Near-field samples at the scheduled probe positions."""
    return build_dictionary(T, schedule) @ T.values


def _preconditioned_system(template: TransmissionCoefficients, schedule: ProbeSchedule):
    theta, _, _, measure = points_to_arrays(schedule.points)
    A = build_dictionary(template, schedule)
    P = preconditioner_weight(measure, theta)
    scale = math.sqrt(measure_mass(measure)) / math.sqrt(len(theta))
    return scale * (P[:, None] * A), scale * P, scale


def recover_transmission(
    y: np.ndarray,
    schedule: ProbeSchedule,
    B: int,
    cfg: SolverConfig | None = None,
    epsilon: float = 0.0,
    v: complex = 1.0 + 0.0j,
    v_max: int = 1,
    probe_weights: dict | None = None,
) -> tuple[TransmissionCoefficients, SolverResult]:
    """l1 recovery of the transmission coefficients from near-field samples."""
    template = TransmissionCoefficients(
        B, np.zeros(coefficient_count(B)), v=v, v_max=v_max,
        probe_weights=probe_weights or default_probe_weights(v_max),
    )
    A_pre, p_scaled, scale = _preconditioned_system(template, schedule)
    radius = scale * math.sqrt(len(y)) * epsilon
    result = bpdn_ball(A_pre, p_scaled * np.asarray(y, dtype=complex), radius, cfg)
    recovered = TransmissionCoefficients(
        B, result.x, v=v, v_max=v_max, probe_weights=template.probe_weights
    )
    return recovered, result


def baseline_least_squares(
    y: np.ndarray,
    schedule: ProbeSchedule,
    B: int,
    v: complex = 1.0 + 0.0j,
    v_max: int = 1,
    probe_weights: dict | None = None,
    rcond: float = 1e-10,
) -> TransmissionCoefficients:
    """Minimum-norm truncated-SVD solution of the same preconditioned system,
    standing in for the classical pipeline at equal measurement count."""
    template = TransmissionCoefficients(
        B, np.zeros(coefficient_count(B)), v=v, v_max=v_max,
        probe_weights=probe_weights or default_probe_weights(v_max),
    )
    A_pre, p_scaled, _ = _preconditioned_system(template, schedule)
    x = np.linalg.pinv(A_pre, rcond=rcond) @ (p_scaled * np.asarray(y, dtype=complex))
    return TransmissionCoefficients(
        B, x, v=v, v_max=v_max, probe_weights=template.probe_weights
    )


def pattern_cut(
    T: TransmissionCoefficients,
    phi_cut: float,
    theta_grid: np.ndarray,
    chi: float = 0.0,
) -> tuple[np.ndarray, bool]:
    """Synthesis magnitude along a phi-cut, in dB normalized to 0 dB peak.

    Returns (dB array, defined flag); an all-zero pattern yields NaNs and
    defined=False.
    """
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta_grid.size == 0:
        raise ValueError("empty theta grid")
    points = [
        SamplePoint(float(t), float(phi_cut), float(chi), sampling.PRODUCT)
        for t in theta_grid
    ]
    schedule = ProbeSchedule(points=points, chi_set=(float(chi),))
    y = transmission_forward(T, schedule)
    mag = np.abs(y)
    peak = mag.max()
    if peak == 0.0:
        return np.full_like(mag, np.nan), False
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return db, True
