"""Integrals ``Omega(x_m, x_n) = int H`` and greedy lower-bound certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from ._parallel import ordered_map
from .core import HamburgerHamiltonian
from .errors import IndexOrderError, NumericInstability


@dataclass(frozen=True)
class OmegaPrefix:
    """Cumulative sums of ``l cos^2``, ``l sin^2`` and ``l cos sin`` (leading zero included)."""

    H: HamburgerHamiltonian
    cc: np.ndarray
    ss: np.ndarray
    cs: np.ndarray

    @classmethod
    def from_hamiltonian(cls, H: HamburgerHamiltonian) -> "OmegaPrefix":
        def cum(v):
            out = np.zeros(H.N + 1)
            np.cumsum(v, out=out[1:])
            out.flags.writeable = False
            return out
        return cls(H, cum(H.lengths * H.cos ** 2), cum(H.lengths * H.sin ** 2),
                   cum(H.lengths * H.cos * H.sin))

    @property
    def N(self) -> int:
        return self.H.N


def _prefix(obj) -> OmegaPrefix:
    return obj if isinstance(obj, OmegaPrefix) else OmegaPrefix.from_hamiltonian(obj)


def _check(m: int, n: int, N: int) -> None:
    if not 0 <= m < n <= N:
        raise IndexOrderError(f"need 0 <= m < n <= {N}, got m={m}, n={n}")


def omega(prefix, m: int, n: int) -> np.ndarray:
    """``Omega(x_m, x_n)`` as a symmetric 2x2 matrix."""
    P = _prefix(prefix)
    _check(m, n, P.N)
    a = P.cc[n] - P.cc[m]
    b = P.cs[n] - P.cs[m]
    d = P.ss[n] - P.ss[m]
    return np.array([[a, b], [b, d]])


def det_omega(prefix, m, n):
    """``det Omega(x_m, x_n)`` from prefix differences; ``m``, ``n`` may be arrays."""
    P = _prefix(prefix)
    m = np.asarray(m)
    n = np.asarray(n)
    if np.any(m < 0) or np.any(n > P.N) or np.any(m >= n):
        raise IndexOrderError(f"need 0 <= m < n <= {P.N}")
    a = P.cc[n] - P.cc[m]
    b = P.cs[n] - P.cs[m]
    d = P.ss[n] - P.ss[m]
    out = np.maximum(a * d - b * b, 0.0)
    return out if out.ndim else float(out)


def det_omega_bruteforce(H: HamburgerHamiltonian, m: int, n: int) -> float:
    """``1/2 sum_{j,k} l_j l_k sin^2(phi_j - phi_k)`` over intervals ``m < j, k <= n``."""
    _check(m, n, H.N)
    l = H.lengths[m:n]
    phi = H.angles[m:n]
    S = np.sin(phi[:, None] - phi[None, :]) ** 2
    return 0.5 * float(l @ S @ l)


@dataclass(frozen=True)
class Certificate:
    """Points ``n_0 = 0 < n_1 < ... < n_k`` with every gap's det Omega at least ``c/r^2``."""

    r: float
    c: float
    points: np.ndarray
    gap_dets: np.ndarray
    L: float

    @property
    def k(self) -> int:
        return len(self.points) - 1

    @property
    def threshold(self) -> float:
        return self.c / self.r ** 2

    @property
    def bracket(self) -> float:
        return lower_bound_value(self, self.L)

    def to_dict(self) -> dict:
        return {"r": self.r, "c": self.c, "k": self.k,
                "points": [int(p) for p in self.points], "bracket": self.bracket}


def certificate(prefix, r: float, c: float = 1.0, N: Optional[int] = None) -> Certificate:
    """Greedy certificate at radius ``r`` over the first ``N`` intervals (default all).

    Scans forward from index 0 and records ``n`` as soon as
    ``det Omega(x_last, x_n) >= c/r^2``.  Determinants are accumulated from the
    local sums since the last point, and every gap is re-verified afterwards
    with the same summation order.
    """
    if not (r > 0 and c > 0):
        raise ValueError("r and c must be positive")
    H = _prefix(prefix).H
    N = H.N if N is None else int(N)
    if not 0 <= N <= H.N:
        raise IndexOrderError(f"N = {N} outside 0..{H.N}")
    thr = c / r ** 2
    pts = _kernels.greedy_points(H.lengths, H.cos, H.sin, thr, N)
    dets = _kernels.gap_determinants(H.lengths, H.cos, H.sin, pts)
    cert = Certificate(float(r), float(c), pts, dets, float(H.x[N]))
    verify(cert)
    return cert


def certificates(prefix, radii, c: float = 1.0, threads=None) -> list:
    P = _prefix(prefix)
    return ordered_map(lambda r: certificate(P, r, c), radii, threads)


def verify(cert: Certificate) -> None:
    if cert.k and not np.all(cert.gap_dets >= cert.threshold):
        bad = int(np.argmin(cert.gap_dets))
        raise NumericInstability(
            f"certificate gap {bad} has det {cert.gap_dets[bad]:.3g} < {cert.threshold:.3g}")


def verify_against_prefix(cert: Certificate, prefix, rtol: float = 1e-9) -> bool:
    """Cross-check recorded gaps with prefix-sum determinants (up to rounding)."""
    if cert.k == 0:
        return True
    d = np.atleast_1d(det_omega(prefix, cert.points[:-1], cert.points[1:]))
    return bool(np.all(d >= cert.threshold * (1 - rtol)))


def lower_bound_value(cert: Certificate, L: float) -> float:
    """``k log 2 - log r - log(2 L / sqrt(c))``, with the universal prefactor set to 1."""
    return cert.k * math.log(2) - math.log(cert.r) - math.log(2 * L / math.sqrt(cert.c))
