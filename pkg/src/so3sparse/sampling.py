"""Random sampling on SO(3) under the two measures used for sensing.

Two theta-marginals are supported: "product" (d theta, i.e. theta uniform)
and "tan13" (|tan theta|^{1/3} d theta). phi and chi are always uniform on
[0, 2 pi). Each measure comes with the preconditioner weight that turns
the sampled system back into an orthonormal one: weight(theta)^2 times the
theta-density is proportional to sin(theta) for both.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

PRODUCT = "product"
TAN13 = "tan13"

_CDF_MAGIC = b"WCSCDF01"

# total mass of |tan theta|^{1/3} d theta on [0, pi]
TAN13_THETA_MASS = 3.627598728468277

__all__ = [
    "PRODUCT",
    "TAN13",
    "SamplePoint",
    "MeasureSpec",
    "build_cdf_table",
    "save_cdf_table",
    "load_cdf_table",
    "default_tan_spec",
    "sample_product",
    "sample_tan_measure",
    "preconditioner_weight",
    "theta_density",
    "measure_mass",
]


class SamplePoint(NamedTuple):
    theta: float
    phi: float
    chi: float
    measure: str


@dataclass
class MeasureSpec:
    """Tabulated theta-CDF of a sampling measure (needed for tan13 only)."""

    kind: str
    thetas: np.ndarray
    cdf: np.ndarray
    _inv: PchipInterpolator | None = field(default=None, repr=False)
    _fwd: PchipInterpolator | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.thetas) != len(self.cdf) or len(self.thetas) < 2:
            raise ValueError("CDF table malformed")
        if np.any(np.diff(self.thetas) <= 0) or np.any(np.diff(self.cdf) <= 0):
            raise ValueError("CDF table must be strictly increasing")

    @property
    def resolution(self) -> int:
        return len(self.thetas)

    def inverse_cdf(self, u):
        if self._inv is None:
            self._inv = PchipInterpolator(self.cdf, self.thetas)
        return self._inv(u)

    def cdf_at(self, theta):
        if self._fwd is None:
            self._fwd = PchipInterpolator(self.thetas, self.cdf)
        return self._fwd(theta)


def _tan13_density(theta: float) -> float:
    return abs(math.tan(theta)) ** (1.0 / 3.0)


def build_cdf_table(resolution: int = 4096) -> MeasureSpec:
    """Tabulate the normalized CDF of |tan theta|^{1/3} on [0, pi].

    Piecewise adaptive quadrature; the cell containing the integrable
    pole at pi/2 (exponent -1/3) is split at the pole.
    """
    if resolution < 256:
        raise ValueError(f"resolution must be >= 256, got {resolution}")
    thetas = np.linspace(0.0, math.pi, resolution)
    increments = np.empty(resolution - 1)
    for i in range(resolution - 1):
        a, b = thetas[i], thetas[i + 1]
        pts = [math.pi / 2] if a < math.pi / 2 < b else None
        val, err = quad(_tan13_density, a, b, points=pts, limit=200,
                        epsabs=1e-13, epsrel=1e-12)
        if err > 1e-12 + 1e-10 * val:
            raise RuntimeError(
                f"CDF quadrature failed to converge on [{a:.6g}, {b:.6g}]"
            )
        increments[i] = val
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return MeasureSpec(kind=TAN13, thetas=thetas, cdf=cdf)


def save_cdf_table(spec: MeasureSpec, path) -> None:
    """Little-endian binary cache: 16-byte header then (theta, cdf) f64 pairs."""
    with open(path, "wb") as fh:
        fh.write(_CDF_MAGIC)
        fh.write(struct.pack("<Q", spec.resolution))
        pairs = np.column_stack([spec.thetas, spec.cdf]).astype("<f8")
        fh.write(pairs.tobytes())


def load_cdf_table(path) -> MeasureSpec:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CDF_MAGIC:
            raise ValueError(f"bad CDF cache magic {magic!r}")
        (resolution,) = struct.unpack("<Q", fh.read(8))
        pairs = np.frombuffer(fh.read(int(resolution) * 16), dtype="<f8")
        pairs = pairs.reshape(int(resolution), 2)
    return MeasureSpec(kind=TAN13, thetas=pairs[:, 0].copy(), cdf=pairs[:, 1].copy())


_DEFAULT_TAN_SPEC: MeasureSpec | None = None


def default_tan_spec() -> MeasureSpec:
    """Process-wide cached 4096-entry table for the tan13 measure."""
    global _DEFAULT_TAN_SPEC
    if _DEFAULT_TAN_SPEC is None:
        _DEFAULT_TAN_SPEC = build_cdf_table(4096)
    return _DEFAULT_TAN_SPEC


def sample_product(rng: np.random.Generator, m: int) -> list[SamplePoint]:
    """m i.i.d. points with theta uniform on [0, pi], phi and chi on [0, 2 pi)."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    theta = rng.uniform(0.0, math.pi, m)
    phi = rng.uniform(0.0, 2 * math.pi, m)
    chi = rng.uniform(0.0, 2 * math.pi, m)
    return [SamplePoint(t, p, c, PRODUCT) for t, p, c in zip(theta, phi, chi)]


def sample_tan_measure(
    rng: np.random.Generator, m: int, spec: MeasureSpec | None = None
) -> list[SamplePoint]:
    """m i.i.d. points with theta ~ |tan theta|^{1/3}/Z via inverse-CDF lookup."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    if spec is None:
        spec = default_tan_spec()
    if spec.kind != TAN13:
        raise ValueError(f"expected a {TAN13} CDF table, got {spec.kind}")
    theta = np.asarray(spec.inverse_cdf(rng.uniform(0.0, 1.0, m)))
    phi = rng.uniform(0.0, 2 * math.pi, m)
    chi = rng.uniform(0.0, 2 * math.pi, m)
    return [SamplePoint(t, p, c, TAN13) for t, p, c in zip(theta, phi, chi)]


def preconditioner_weight(measure, theta):
    """Diagonal preconditioner weight for a sample at colatitude theta.

    product: sin(theta)^{1/2};  tan13: (sin^2 theta |cos theta|)^{1/6}.
    Either way weight^2 times the theta-density is proportional to
    sin(theta), which is what restores orthonormality after sampling.
    """
    kind = measure.kind if isinstance(measure, MeasureSpec) else measure
    theta = np.asarray(theta, dtype=float)
    if kind == PRODUCT:
        return np.sqrt(np.abs(np.sin(theta)))
    if kind == TAN13:
        return (np.sin(theta) ** 2 * np.abs(np.cos(theta))) ** (1.0 / 6.0)
    raise ValueError(f"unknown measure {kind!r}")


def theta_density(measure, theta, normalized: bool = True):
    """theta-marginal density of the sampling measure.

    Unnormalized: 1 for product, |tan theta|^{1/3} for tan13. With
    normalized=True the density integrates to 1 over [0, pi].
    """
    kind = measure.kind if isinstance(measure, MeasureSpec) else measure
    theta = np.asarray(theta, dtype=float)
    if kind == PRODUCT:
        dens = np.ones_like(theta)
        return dens / math.pi if normalized else dens
    if kind == TAN13:
        dens = np.abs(np.tan(theta)) ** (1.0 / 3.0)
        return dens / TAN13_THETA_MASS if normalized else dens
    raise ValueError(f"unknown measure {kind!r}")


def measure_mass(measure) -> float:
    """Total mass of the unnormalized measure on SO(3), angular factors included."""
    kind = measure.kind if isinstance(measure, MeasureSpec) else measure
    if kind == PRODUCT:
        return math.pi * (2 * math.pi) ** 2
    if kind == TAN13:
        return TAN13_THETA_MASS * (2 * math.pi) ** 2
    raise ValueError(f"unknown measure {kind!r}")
