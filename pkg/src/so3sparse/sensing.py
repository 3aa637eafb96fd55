"""Measurement-matrix assembly, forward model, noise, preconditioning.

The sensed system is y = A g + eta where row i of A holds the Wigner-D
functions at sample point i. Preconditioning multiplies row i by the
measure's weight P_i, and rescales by sqrt(mass) / sqrt(m) so that the
columns of the scaled system are near-unit-norm; the rescaling is pure
conditioning (recorded in `scale`) and leaves the l1 program equivalent
to the ell2-ball program with radius sqrt(m) * epsilon.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import sampling
from .sampling import SamplePoint, measure_mass, preconditioner_weight
from .wigner import basis_count, evaluate_basis

__all__ = [
    "CoefficientVector",
    "SensingProblem",
    "PreconditionedSystem",
    "points_to_arrays",
    "build_matrix",
    "forward",
    "add_noise",
    "make_problem",
    "precondition",
    "gram_matrix",
    "save_problem",
    "load_problem",
]


@dataclass
class CoefficientVector:
    """Complex expansion coefficients over the bandwidth-B Wigner basis."""

    B: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (basis_count(self.B),):
            raise ValueError(
                f"expected {basis_count(self.B)} coefficients for B={self.B}, "
                f"got shape {self.values.shape}"
            )


def points_to_arrays(points: list[SamplePoint]):
    """(theta, phi, chi) arrays plus the common measure tag."""
    if not points:
        raise ValueError("empty point list")
    measures = {p.measure for p in points}
    if len(measures) != 1:
        raise ValueError(f"mixed measures in point list: {measures}")
    theta = np.array([p.theta for p in points])
    phi = np.array([p.phi for p in points])
    chi = np.array([p.chi for p in points])
    return theta, phi, chi, measures.pop()


def build_matrix(points: list[SamplePoint], B: int) -> np.ndarray:
    """m x N matrix of raw Wigner-D evaluations in canonical column order."""
    theta, phi, chi, _ = points_to_arrays(points)
    return evaluate_basis(B, theta, phi, chi)


def forward(g: CoefficientVector, points: list[SamplePoint]) -> np.ndarray:
    """Synthesize the bandlimited function at the sample points: y = A g."""
    return build_matrix(points, g.B) @ g.values


def add_noise(y: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. noise uniform on the complex disk of radius epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0:
        return y.copy()
    m = len(y)
    radius = epsilon * np.sqrt(rng.uniform(0.0, 1.0, m))
    angle = rng.uniform(0.0, 2 * math.pi, m)
    return y + radius * np.exp(1j * angle)


@dataclass
class SensingProblem:
    A: np.ndarray          # m x N raw basis evaluations
    P: np.ndarray          # length-m preconditioner weights
    y: np.ndarray          # length-m observations
    epsilon: float         # per-entry noise bound (inf-norm sense)
    points: list[SamplePoint]
    B: int
    scale: float = 1.0     # conditioning factor applied by precondition()

    @property
    def m(self) -> int:
        return len(self.y)


@dataclass
class PreconditionedSystem:
    A: np.ndarray          # scale * diag(P) @ A_raw
    y: np.ndarray          # scale * P * y_raw
    radius: float          # scale * sqrt(m) * epsilon
    scale: float


def make_problem(
    points: list[SamplePoint], B: int, y: np.ndarray, epsilon: float = 0.0
) -> SensingProblem:
    theta, _, _, measure = points_to_arrays(points)
    A = build_matrix(points, B)
    P = preconditioner_weight(measure, theta)
    return SensingProblem(A=A, P=P, y=np.asarray(y, dtype=complex),
                          epsilon=float(epsilon), points=points, B=B)


def precondition(problem: SensingProblem) -> PreconditionedSystem:
    """Preconditioned, conditioned system and the matching constraint radius.

    The solved program is the ball-constrained one with radius
    sqrt(m) * epsilon on the preconditioned system; both sides are then
    multiplied by scale = sqrt(mass) / sqrt(m), which changes nothing in
    the minimizer and makes columns near-unit-norm.
    """
    m = problem.m
    _, _, _, measure = points_to_arrays(problem.points)
    scale = math.sqrt(measure_mass(measure)) / math.sqrt(m)
    problem.scale = scale
    A_pre = scale * (problem.P[:, None] * problem.A)
    y_pre = scale * (problem.P * problem.y)
    radius = scale * math.sqrt(m) * problem.epsilon
    return PreconditionedSystem(A=A_pre, y=y_pre, radius=radius, scale=scale)


def gram_matrix(B: int, measure: str | None = None) -> np.ndarray:
    """Quadrature Gram matrix of the bandwidth-B basis; identity if exact.

    measure None: raw Wigner-D functions against sin(theta) d(theta, phi, chi).
    measure "product"/"tan13": preconditioned functions against the
    (unnormalized) sampling measure. In theta the quadrature is
    Gauss-Legendre with B+1 nodes in x = cos(theta) (integrands are
    polynomials of degree <= 2B-1 there once the sin(theta) weight from
    weight^2 * density is absorbed); phi and chi use uniform 4B-point
    grids, exact for the trigonometric frequencies present.
    """
    x, wx = np.polynomial.legendre.leggauss(B + 1)
    theta = np.arccos(x)
    if measure is None:
        w_theta = wx                                   # sin(theta) dtheta = dx
    else:
        # integrand carries weight(theta)^2 * density = sin(theta); pull the
        # sin back out of dx = sin(theta) dtheta so roundoff is the only error
        dens = sampling.theta_density(measure, theta, normalized=False)
        p2 = preconditioner_weight(measure, theta) ** 2
        comb = p2 * dens
        # tan13 density diverges at theta = pi/2 while the weight vanishes;
        # the product has the finite limit sin(theta)
        bad = ~np.isfinite(comb)
        comb[bad] = np.sin(theta[bad])
        w_theta = wx * comb / np.sin(theta)
    Q = 4 * B
    phi = 2 * math.pi * np.arange(Q) / Q
    chi = 2 * math.pi * np.arange(Q) / Q
    w_ang = (2 * math.pi / Q) ** 2

    tt, pp, cc = np.meshgrid(theta, phi, chi, indexing="ij")
    ww = np.broadcast_to(w_theta[:, None, None], tt.shape).ravel() * w_ang
    F = evaluate_basis(B, tt.ravel(), pp.ravel(), cc.ravel())
    return F.conj().T @ (ww[:, None] * F)


def save_problem(directory, problem: SensingProblem) -> None:
    """Serialize to points.csv / y.csv / meta.json inside `directory`."""
    os.makedirs(directory, exist_ok=True)
    _, _, _, measure = points_to_arrays(problem.points)
    with open(os.path.join(directory, "points.csv"), "w") as fh:
        fh.write("theta,phi,chi,measure\n")
        for p in problem.points:
            fh.write(f"{p.theta:.17g},{p.phi:.17g},{p.chi:.17g},{p.measure}\n")
    with open(os.path.join(directory, "y.csv"), "w") as fh:
        fh.write("re,im\n")
        for v in problem.y:
            fh.write(f"{v.real:.17g},{v.imag:.17g}\n")
    meta = {
        "B": problem.B,
        "m": problem.m,
        "epsilon": problem.epsilon,
        "measure": measure,
        "scale": problem.scale,
    }
    with open(os.path.join(directory, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_problem(directory) -> SensingProblem:
    with open(os.path.join(directory, "meta.json")) as fh:
        meta = json.load(fh)
    points = []
    with open(os.path.join(directory, "points.csv")) as fh:
        next(fh)
        for line in fh:
            t, p, c, meas = line.strip().split(",")
            points.append(SamplePoint(float(t), float(p), float(c), meas))
    ys = []
    with open(os.path.join(directory, "y.csv")) as fh:
        next(fh)
        for line in fh:
            re, im = line.strip().split(",")
            ys.append(complex(float(re), float(im)))
    problem = make_problem(points, meta["B"], np.array(ys), meta["epsilon"])
    problem.scale = meta.get("scale", 1.0)
    return problem
