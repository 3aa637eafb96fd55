"""Exact evaluation of Jacobi polynomials, Wigner-d and Wigner-D functions.

The basis is the set of Wigner-D functions of degree l < B, linearized
degree-major (l, then k, then n), giving N = B(2B-1)(2B+1)/3 columns.
All evaluators accept scalars or numpy arrays for the angular arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

__all__ = [
    "WignerIndex",
    "basis_count",
    "all_indices",
    "jacobi_eval",
    "wigner_d",
    "wigner_D",
    "spherical_harmonic",
    "evaluate_basis",
]


def basis_count(B: int) -> int:
    """Number of Wigner-D functions of degree l < B."""
    if B < 1:
        raise ValueError(f"bandwidth must be >= 1, got {B}")
    return B * (2 * B - 1) * (2 * B + 1) // 3


@dataclass(frozen=True)
class WignerIndex:
    """One basis function (l, k, n) within a bandwidth-B expansion."""

    l: int
    k: int
    n: int
    B: int

    def __post_init__(self):
        if not 1 <= self.B:
            raise ValueError(f"bandwidth must be >= 1, got {self.B}")
        if not 0 <= self.l < self.B:
            raise ValueError(f"degree l={self.l} outside [0, {self.B - 1}]")
        if abs(self.k) > self.l or abs(self.n) > self.l:
            raise ValueError(f"orders (k={self.k}, n={self.n}) exceed degree l={self.l}")

    @property
    def column(self) -> int:
        """Linearized column index, a bijection onto {0, ..., N-1}."""
        l, k, n = self.l, self.k, self.n
        return l * (2 * l - 1) * (2 * l + 1) // 3 + (k + l) * (2 * l + 1) + (n + l)

    @classmethod
    def from_column(cls, j: int, B: int) -> "WignerIndex":
        if not 0 <= j < basis_count(B):
            raise ValueError(f"column {j} outside basis of bandwidth {B}")
        l = 0
        while (l + 1) * (2 * l + 1) * (2 * l + 3) // 3 <= j:
            l += 1
        r = j - l * (2 * l - 1) * (2 * l + 1) // 3
        k, n = divmod(r, 2 * l + 1)
        return cls(l=l, k=k - l, n=n - l, B=B)


def all_indices(B: int) -> list[WignerIndex]:
    """All indices of the bandwidth-B basis in canonical column order."""
    return [
        WignerIndex(l, k, n, B)
        for l in range(B)
        for k in range(-l, l + 1)
        for n in range(-l, l + 1)
    ]


def jacobi_eval(alpha: int, mu: int, lam: int, x):
    """Jacobi polynomial P_alpha^(mu,lam)(x) on [-1, 1].

    Ascending three-term recurrence in the degree at fixed (mu, lam);
    stable and O(alpha) per point.
    """
    if alpha < 0 or mu < 0 or lam < 0:
        raise ValueError("degree and orders must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise ValueError("argument outside [-1, 1]")

    p_prev = np.ones_like(x)
    if alpha == 0:
        return p_prev
    a, b = mu, lam
    p = 0.5 * (a - b) + 0.5 * (a + b + 2) * x
    for m in range(2, alpha + 1):
        c = 2 * m + a + b
        a1 = 2 * m * (m + a + b) * (c - 2)
        a2 = (c - 1) * (a * a - b * b)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (m + a - 1) * (m + b - 1) * c
        p, p_prev = ((a2 + a3 * x) * p - a4 * p_prev) / a1, p
    return p


def _jacobi_params(l: int, k: int, n: int):
    """(mu, lam, alpha, omega, log_gamma) for the d-function at (l, k, n)."""
    mu = abs(k - n)
    lam = abs(k + n)
    alpha = l - (mu + lam) // 2
    omega = 1.0 if n >= k else float((-1) ** ((n - k) % 2))
    log_gamma = (
        gammaln(alpha + 1)
        + gammaln(alpha + mu + lam + 1)
        - gammaln(alpha + mu + 1)
        - gammaln(alpha + lam + 1)
    )
    return mu, lam, alpha, omega, log_gamma


def wigner_d(l: int, k: int, n: int, theta):
    """Wigner-d function d_l^{k,n}(cos theta), theta in [0, pi].

    sqrt(gamma) goes through log-gamma differences so large degrees do
    not overflow the factorial ratio.
    """
    if abs(k) > l or abs(n) > l or l < 0:
        raise ValueError(f"invalid index (l={l}, k={k}, n={n})")
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > np.pi)):
        raise ValueError("theta outside [0, pi]")
    mu, lam, alpha, omega, log_gamma = _jacobi_params(l, k, n)
    half = 0.5 * theta
    val = (
        omega
        * math.exp(0.5 * log_gamma)
        * np.sin(half) ** mu
        * np.cos(half) ** lam
        * jacobi_eval(alpha, mu, lam, np.cos(theta))
    )
    return val


def _norm_factor(l: int) -> float:
    return math.sqrt((2 * l + 1) / (8.0 * math.pi**2))


def wigner_D(l: int, k: int, n: int, theta, phi, chi):
    """Wigner-D function N_l e^{-jk phi} d_l^{k,n}(cos theta) e^{-jn chi}."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    return (
        _norm_factor(l)
        * np.exp(-1j * (k * phi + n * chi))
        * wigner_d(l, k, n, theta)
    )


def spherical_harmonic(l: int, k: int, theta, phi):
    """Spherical harmonic Y_l^k(theta, phi), Condon-Shortley convention.

    Obtained from the order-zero Wigner-D function: the chi-independent
    slice D_l^{-k,0}(theta, phi, 0) equals (-1)^k Y_l^k / sqrt(2 pi).
    """
    if abs(k) > l:
        raise ValueError(f"|k|={abs(k)} exceeds degree l={l}")
    sign = float((-1) ** (k % 2))
    return sign * math.sqrt(2.0 * math.pi) * wigner_D(l, -k, 0, theta, phi, 0.0)


def evaluate_basis(B: int, theta, phi, chi) -> np.ndarray:
    """Dense (npoints, N) matrix of all Wigner-D functions of degree l < B.

    Columns follow the canonical linearization. The theta-dependent factor
    is shared between (k, n) and its order-swap, so each d-profile is
    computed once.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    chi = np.atleast_1d(np.asarray(chi, dtype=float))
    npts = theta.shape[0]
    out = np.empty((npts, basis_count(B)), dtype=complex)
    for l in range(B):
        nl = _norm_factor(l)
        # phase tables e^{-j k phi}, e^{-j n chi} for k, n in [-l, l]
        orders = np.arange(-l, l + 1)
        ephi = np.exp(-1j * np.outer(phi, orders))
        echi = np.exp(-1j * np.outer(chi, orders))
        d_cache: dict[tuple[int, int], np.ndarray] = {}
        base = l * (2 * l - 1) * (2 * l + 1) // 3
        for ik, k in enumerate(orders):
            for i_n, n in enumerate(orders):
                key = (min(k, n), max(k, n))
                if key not in d_cache:
                    d_cache[key] = wigner_d(l, key[0], key[1], theta)
                d = d_cache[key]
                if n < k and (k - n) % 2 == 1:
                    d = -d
                j = base + ik * (2 * l + 1) + i_n
                out[:, j] = nl * ephi[:, ik] * echi[:, i_n] * d
    return out
