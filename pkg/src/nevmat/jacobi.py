"""Jacobi parameters, their Hamburger Hamiltonians, and power-asymptotic classification.

The dictionary works in the default gauge ``l_1 = 1``, ``phi_1 = pi/2``.  In
terms of the orthogonal polynomials of the first and second kind at ``z = 0``

    l_{k+1} = p_k(0)^2 + q_k(0)^2,     tan phi_{k+1} = -p_k(0) / q_k(0),

and the parameters are recovered from

    a_0 = tan phi_2,
    a_n = -sin(phi_{n+2} - phi_n) / (l_{n+1} sin(phi_{n+2} - phi_{n+1}) sin(phi_{n+1} - phi_n)),
    b_n = 1 / (sqrt(l_{n+1} l_{n+2}) |sin(phi_{n+2} - phi_{n+1})|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .core import HamburgerHamiltonian
from .errors import (
    ConfigParseError,
    GaugeMismatchError,
    NonPositiveBError,
    ZeroOffDiagonalError,
)

GAUGE_TOL = 1e-9
CASE_TOL = 1e-12
CASES = ("LargeDiagonal", "SmallDiagonal", "SimplyCritical", "DoublyCritical")


@dataclass(frozen=True)
class JacobiParameters:
    """Diagonal ``a`` and off-diagonal ``b``; ``a[k]``, ``b[k]`` carry the label ``n0 + k``.

    The recurrence always uses ``a[0]``, ``b[0]`` as its first coefficients;
    ``n0`` records which formula index produced them.
    """

    a: np.ndarray
    b: np.ndarray
    n0: int = 0

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float)
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("a and b must be 1-d")
        if np.any(b == 0):
            raise ZeroOffDiagonalError(f"b_{int(np.flatnonzero(b == 0)[0])} vanishes")
        if np.any(~(b > 0)):
            raise NonPositiveBError(f"b_{int(np.flatnonzero(~(b > 0))[0])} is not positive")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __len__(self):
        return min(self.a.size, self.b.size)

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "n0": self.n0}

    @classmethod
    def from_dict(cls, d: dict) -> "JacobiParameters":
        try:
            return cls(d["a"], d["b"], int(d.get("n0", 0)))
        except KeyError as exc:
            raise ConfigParseError(f"Jacobi JSON lacks field {exc}") from None


def pq_at_zero(params: JacobiParameters, N: int):
    """``p_k(0)`` and ``q_k(0)`` for ``k = 0 .. N-1``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if len(params) < N - 1:
        raise ValueError(f"need {N - 1} parameters, have {len(params)}")
    a = np.ascontiguousarray(params.a[: max(N - 1, 1)])
    b = np.ascontiguousarray(params.b[: max(N - 1, 1)])
    if N > 1 and np.any(b[: N - 1] == 0):
        raise ZeroOffDiagonalError("zero off-diagonal entry")
    return _kernels.pq_recurrence(a, b, N)


def jacobi_to_hamiltonian(params: JacobiParameters, N: int) -> HamburgerHamiltonian:
    """Hamburger Hamiltonian with ``N`` intervals (uses ``N - 1`` parameter pairs).

    Angle increments are taken in ``(-pi/2, pi/2)``.  Their sines come from the
    Wronskian ``b_k (p_k q_{k+1} - p_{k+1} q_k) = 1`` rather than from
    differencing nearly parallel vectors, which keeps them exact even when the
    lengths grow by hundreds of orders of magnitude.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    p, q = pq_at_zero(params, N)
    lengths = p * p + q * q
    root = np.sqrt(lengths)
    norm = root[:-1] * root[1:]
    # (q, -p) direction: cross product equals 1/b, dot product from the vectors
    cross = (1.0 / params.b[: N - 1]) / norm
    dot = (q[:-1] * q[1:] + p[:-1] * p[1:]) / norm
    # representative in (-pi/2, pi/2] without subtracting pi from a near-pi angle
    sign = np.where(dot < 0, -1.0, 1.0)
    steps = np.arctan2(sign * cross, np.abs(dot))
    return HamburgerHamiltonian.from_steps(lengths, math.pi / 2, steps)


def _check_gauge(H: HamburgerHamiltonian) -> None:
    if abs(H.lengths[0] - 1.0) > GAUGE_TOL:
        raise GaugeMismatchError(f"l_1 = {H.lengths[0]} differs from 1")
    if abs(math.sin(H.angles[0] - math.pi / 2)) > GAUGE_TOL:
        raise GaugeMismatchError(f"phi_1 = {H.angles[0]} differs from pi/2 mod pi")


def hamiltonian_to_jacobi(H: HamburgerHamiltonian) -> JacobiParameters:
    """Inverse dictionary; ``N`` intervals give ``N - 1`` pairs ``(a_n, b_n)``."""
    _check_gauge(H)
    if H.N < 2:
        raise ValueError("need at least two intervals")
    d = H.steps
    sd = np.sin(d)
    l = H.lengths
    a = np.empty(H.N - 1)
    # tan(phi_2) with phi_2 = phi_1 + d_1, phi_1 = pi/2 mod pi
    a[0] = -1.0 / math.tan(d[0] + (H.angles[0] - math.pi / 2))
    if H.N > 2:
        a[1:] = -np.sin(d[1:] + d[:-1]) / (l[1:-1] * sd[1:] * sd[:-1])
    b = 1.0 / (np.sqrt(l[:-1]) * np.sqrt(l[1:]) * np.abs(sd))
    return JacobiParameters(a, b)


def dictionary_residuals(params: JacobiParameters, H: HamburgerHamiltonian) -> dict:
    """Relative residuals of the three recovery identities at every index."""
    back = hamiltonian_to_jacobi(H)
    n = len(back)

    def rel(x, y):
        return np.abs(x - y) / np.maximum(np.abs(y), 1e-300)

    return {
        "a0": float(rel(back.a[:1], params.a[:1]).max()),
        "a": rel(back.a[1:n], params.a[1:n]),
        "b": rel(back.b[:n], params.b[:n]),
    }


Perturbation = Union[None, np.ndarray, dict]


def _perturbation(value, n: np.ndarray) -> np.ndarray:
    if value is None:
        return np.zeros_like(n)
    if isinstance(value, dict):
        return float(value.get("c", 1.0)) * n ** (-float(value["decay"]))
    arr = np.asarray(value, dtype=float)
    if arr.size < n.size:
        raise ValueError(f"explicit perturbation has {arr.size} terms, need {n.size}")
    return arr[: n.size]


@dataclass(frozen=True)
class PowerSpec:
    """``b_n = n^beta1 (x0 + x1/n + x2/n^2 + chi_n)``, ``a_n = n^beta2 (y0 + y1/n + y2/n^2 + mu_n)``.

    ``chi`` and ``mu`` are ``None``, an explicit sequence starting at ``n = 1``,
    or ``{"c": c, "decay": d}`` for ``c n^{-d}``.
    """

    beta1: float
    beta2: float
    x0: float
    y0: float
    x1: float = 0.0
    y1: float = 0.0
    x2: float = 0.0
    y2: float = 0.0
    chi: Perturbation = field(default=None, compare=False)
    mu: Perturbation = field(default=None, compare=False)

    def __post_init__(self):
        if not self.x0 > 0:
            raise ValueError("x0 must be positive")
        if self.y0 == 0:
            raise ValueError("y0 must be nonzero")

    @property
    def sigma(self) -> float:
        return 2 * self.x1 / self.x0 - 2 * self.y1 / self.y0

    @property
    def eta(self) -> float:
        x0, x1, x2, y0, y1, y2 = self.x0, self.x1, self.x2, self.y0, self.y1, self.y2
        return 2 * (2 * x2 / x0 - 2 * y2 / y0 + y1 / y0 - 2 * x1 * y1 / (x0 * y0)
                    + 2 * y1 ** 2 / y0 ** 2)

    def scaled(self, factor: float) -> "PowerSpec":
        f = float(factor)
        return PowerSpec(self.beta1, self.beta2, f * self.x0, f * self.y0, f * self.x1,
                         f * self.y1, f * self.x2, f * self.y2)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in
             ("beta1", "beta2", "x0", "x1", "x2", "y0", "y1", "y2")}
        for k in ("chi", "mu"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v if isinstance(v, dict) else np.asarray(v, dtype=float).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PowerSpec":
        try:
            beta1 = float(d.get("beta1", d.get("beta")))
            beta2 = float(d.get("beta2", beta1))
            return cls(beta1, beta2, float(d["x0"]), float(d["y0"]),
                       float(d.get("x1", 0.0)), float(d.get("y1", 0.0)),
                       float(d.get("x2", 0.0)), float(d.get("y2", 0.0)),
                       d.get("chi"), d.get("mu"))
        except (KeyError, TypeError) as exc:
            raise ConfigParseError(f"power spec JSON is incomplete: {exc}") from None


def generate_power(spec: PowerSpec, N: int) -> JacobiParameters:
    """Literal evaluation for ``n = 1 .. N``; ``a[k]``, ``b[k]`` hold index ``n = k + 1``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    n = np.arange(1, N + 1, dtype=float)
    inv = 1.0 / n
    b = n ** spec.beta1 * (spec.x0 + spec.x1 * inv + spec.x2 * inv ** 2
                           + _perturbation(spec.chi, n))
    a = n ** spec.beta2 * (spec.y0 + spec.y1 * inv + spec.y2 * inv ** 2
                           + _perturbation(spec.mu, n))
    bad = np.flatnonzero(~(b > 0))
    if bad.size:
        raise NonPositiveBError(f"b_{bad[0] + 1} = {b[bad[0]]} is not positive")
    return JacobiParameters(a, b, n0=1)


@dataclass(frozen=True)
class Classification:
    case: str
    sigma: float
    eta: Optional[float]
    limit_circle: bool
    predicted_order: Optional[float]
    growth_law: str
    boundary: bool = False
    hypothesis: str = ""

    def to_dict(self) -> dict:
        return {"case": self.case, "sigma": self.sigma, "eta": self.eta,
                "limitCircle": self.limit_circle, "predictedOrder": self.predicted_order,
                "growthLaw": self.growth_law, "boundary": self.boundary,
                "hypothesis": self.hypothesis}


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= CASE_TOL * max(1.0, abs(x), abs(y))


def classify(spec: PowerSpec) -> Classification:
    """Case, limit circle verdict and order of the Nevanlinna matrix for ``spec``.

    Equalities between exponents and coefficients are decided with a relative
    tolerance of ``1e-12``.
    """
    beta1, beta2 = spec.beta1, spec.beta2
    sigma = spec.sigma
    ratio_equal = _close(abs(spec.y0), 2 * spec.x0)
    powers_equal = _close(beta1, beta2)
    plain = "O(n^-(1+eps)) perturbations"
    if beta2 > beta1 and not powers_equal or (powers_equal and not ratio_equal
                                              and abs(spec.y0) > 2 * spec.x0):
        return Classification("LargeDiagonal", sigma, None, False, None, "limit point",
                              hypothesis=plain)
    if beta2 < beta1 and not powers_equal or (powers_equal and not ratio_equal):
        lc = beta1 > 1
        return Classification("SmallDiagonal", sigma, None, lc, 1 / beta1 if lc else None,
                              "r^(1/beta1)" if lc else "limit point", hypothesis=plain)

    beta = beta1
    if not _close(beta, sigma):
        lc = 1.5 < beta < sigma
        hyp = "sum sqrt(n) (|chi_n| + |mu_n|) < inf"
        if not lc:
            return Classification("SimplyCritical", sigma, None, False, None, "limit point",
                                  hypothesis=hyp)
        if _close(beta, 2.0):
            return Classification("SimplyCritical", sigma, None, True, 0.5,
                                  "boundary beta1 = 2", boundary=True, hypothesis=hyp)
        if beta < 2:
            return Classification("SimplyCritical", sigma, None, True, 1 / (2 * (beta - 1)),
                                  "r^(1/(2(beta1-1)))", hypothesis=hyp)
        return Classification("SimplyCritical", sigma, None, True, 1 / beta, "r^(1/beta1)",
                              hypothesis=hyp)

    eta = spec.eta
    lc = 2 < beta < 1.5 + eta
    return Classification("DoublyCritical", sigma, eta, lc, 1 / beta if lc else None,
                          "r^(1/beta1)" if lc else "limit point",
                          hypothesis="chi_n - x2/n^2, mu_n - y2/n^2 = O(n^-(2+eps))")
