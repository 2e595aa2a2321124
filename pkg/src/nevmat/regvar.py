"""Power-log regularly varying functions.

A :class:`RegVarSpec` represents ``c * t**index * (log(t) + 1)**log_exp`` on
``[1, inf)``.  The ``+1`` shift keeps negative log exponents finite at ``t = 1``
and does not change the asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .errors import (
    BelowRangeError,
    DivergentTailError,
    IndexConstraintError,
    RegimeMismatchError,
)


@dataclass(frozen=True)
class RegVarSpec:
    c: float = 1.0
    index: float = 0.0
    log_exp: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"scale c must be positive, got {self.c}")

    def __call__(self, t):
        return evaluate(self, t)

    def log_value(self, t):
        t = np.asarray(t, dtype=float)
        out = math.log(self.c) + self.index * np.log(t)
        if self.log_exp != 0.0:
            out = out + self.log_exp * np.log1p(np.log(t))
        return out

    def __mul__(self, other: "RegVarSpec") -> "RegVarSpec":
        return RegVarSpec(self.c * other.c, self.index + other.index,
                          self.log_exp + other.log_exp)

    def __truediv__(self, other: "RegVarSpec") -> "RegVarSpec":
        return self * other.reciprocal()

    def reciprocal(self) -> "RegVarSpec":
        return RegVarSpec(1.0 / self.c, -self.index, -self.log_exp)

    @property
    def eventually_increasing(self) -> bool:
        return self.index > 0 or (self.index == 0 and self.log_exp > 0)

    @property
    def integrable(self) -> bool:
        return self.index < -1 or (self.index == -1 and self.log_exp < -1)

    def to_dict(self) -> dict:
        return {"type": "power", "c": self.c, "index": self.index, "logExp": self.log_exp}

    @classmethod
    def from_dict(cls, d: dict) -> "RegVarSpec":
        if "index" in d:
            index = float(d["index"])
        elif "delta" in d:
            index = -float(d["delta"])
        else:
            index = 0.0
        return cls(float(d.get("c", 1.0)), index, float(d.get("logExp", 0.0)))


def evaluate(spec: RegVarSpec, t):
    """Value ``c t^index (log t + 1)^log_exp``; accepts scalars or arrays."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1):
        raise ValueError("regularly varying functions are defined on t >= 1")
    out = spec.c * t_arr ** spec.index
    if spec.log_exp != 0.0:
        out = out * (np.log(t_arr) + 1.0) ** spec.log_exp
    return out if out.ndim else float(out)


def _monotone_threshold(spec: RegVarSpec) -> float:
    # d/du log a(e^u) = index + log_exp / (u + 1); positive beyond returned u
    if spec.index > 0 and spec.log_exp < 0:
        return max(0.0, -spec.log_exp / spec.index - 1.0)
    return 0.0


def asymptotic_inverse(spec: RegVarSpec, x):
    """``sup{t >= 1 : a(t) < x}`` for an eventually increasing ``a``.

    The root is located in ``u = log t`` on the increasing branch, starting
    from the pure-power inverse and expanding the bracket geometrically.
    """
    if not spec.eventually_increasing:
        raise IndexConstraintError(
            f"asymptotic inverse needs a positive index (got {spec.index}, "
            f"logExp {spec.log_exp})")
    xs = np.asarray(x, dtype=float)
    out = np.array([_inverse_scalar(spec, float(v)) for v in xs.ravel()])
    return out.reshape(xs.shape) if xs.ndim else float(out[0])


def _inverse_scalar(spec: RegVarSpec, x: float) -> float:
    if not x > 0:
        raise BelowRangeError(f"x = {x} is below the range of the function")
    log_x = math.log(x)
    log_c = math.log(spec.c)
    alpha, beta = spec.index, spec.log_exp

    def f(u):
        return log_c + alpha * u + beta * math.log1p(u) - log_x

    lo = _monotone_threshold(spec)
    if f(lo) >= 0:
        raise BelowRangeError(
            f"x = {x} does not exceed the minimum {math.exp(f(lo) + log_x):.6g}")
    if alpha > 0:
        guess = (log_x - log_c) / alpha
    else:
        guess = math.expm1(min((log_x - log_c) / beta, 700.0))
    hi = max(guess, lo) + 1.0
    while f(hi) < 0:
        hi = 2.0 * hi + 1.0
    u = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(u)


def tail_integral(spec: RegVarSpec, x: float, method: str = "auto") -> float:
    """``int_x^inf a(t) dt`` for an integrable tail.

    ``method`` is ``"auto"`` (closed form when available), ``"closed"`` or
    ``"quad"``.  The quadrature runs in ``u = log t + 1`` where the integrand is
    ``exp((index+1)(u-1)) u^log_exp``.
    """
    if not spec.integrable:
        raise DivergentTailError(
            f"tail of t^{spec.index} (log t + 1)^{spec.log_exp} diverges")
    if x < 1:
        raise ValueError("tail integrals start at x >= 1")
    alpha, beta = spec.index, spec.log_exp
    has_closed = beta == 0.0 or alpha == -1.0
    if method == "closed" and not has_closed:
        raise ValueError("no closed form for this spec")
    if method == "closed" or (method == "auto" and has_closed):
        if alpha == -1.0:
            return spec.c * (math.log(x) + 1.0) ** (beta + 1.0) / (-beta - 1.0)
        return spec.c * x ** (alpha + 1.0) / (-alpha - 1.0)
    if method not in ("auto", "quad"):
        raise ValueError(f"unknown method {method!r}")

    u0 = math.log(x) + 1.0
    if alpha == -1.0:
        val, _ = integrate.quad(lambda u: (u / u0) ** beta, u0, np.inf,
                                epsabs=0.0, epsrel=1e-12, limit=200)
        return spec.c * u0 ** beta * val
    rate = alpha + 1.0
    prefactor = spec.c * x ** rate * u0 ** beta

    def g(v):
        return math.exp(rate * v) * (1.0 + v / u0) ** beta

    cutoff = 60.0 / -rate
    body, _ = integrate.quad(g, 0.0, cutoff, epsabs=0.0, epsrel=1e-12, limit=200)
    # beyond the cutoff the integrand is below e^-60 of its start
    tail = g(cutoff) / -rate
    return prefactor * (body + tail)


@dataclass(frozen=True)
class EnvelopeCurves:
    """Lower/upper growth envelopes built from the length and increment laws."""

    d_l: RegVarSpec
    d_phi: RegVarSpec
    r_min: float

    def h(self, r):
        return asymptotic_inverse(self.d_phi / self.d_l, r)

    def k(self, r):
        return asymptotic_inverse((self.d_l * self.d_phi).reciprocal(), r)

    def m(self, r):
        r_arr = np.asarray(r, dtype=float)
        hs = np.atleast_1d(self.h(r_arr))
        vals = np.array([tail_integral(self.d_l, max(1.0, hv)) for hv in hs])
        out = r_arr * vals.reshape(r_arr.shape)
        return out if out.ndim else float(out)


def envelopes(d_l: RegVarSpec, d_phi: RegVarSpec) -> EnvelopeCurves:
    ratio = d_phi / d_l
    inv_prod = (d_l * d_phi).reciprocal()
    if not d_l.integrable:
        raise IndexConstraintError("length law must be summable")
    if -(d_l.index + d_phi.index) <= 1:
        raise IndexConstraintError(
            f"need delta_l + delta_phi > 1, got {-(d_l.index + d_phi.index)}")
    if not (ratio.eventually_increasing and inv_prod.eventually_increasing):
        raise IndexConstraintError("d_phi/d_l and 1/(d_l d_phi) must increase")
    r_min = 0.0
    for f in (ratio, inv_prod):
        r_min = max(r_min, math.exp(f.log_value(math.exp(_monotone_threshold(f)))))
    return EnvelopeCurves(d_l, d_phi, r_min)


@dataclass(frozen=True)
class OrderPrediction:
    order: Optional[float]
    lower: float
    upper: float
    case: str


def predicted_order(d_l: RegVarSpec, d_phi: RegVarSpec,
                    schedule: Optional[str] = None) -> OrderPrediction:
    """Order predicted for a family with the given laws and angle schedule.

    ``schedule`` is ``"monotone"``, ``"alternating"``, ``"two-point"`` or
    ``None`` (no sign information: only the sandwich interval is known).
    """
    delta_l, delta_phi = -d_l.index, -d_phi.index

    if delta_l == 1 and delta_phi == 1 and d_phi.log_exp == 0 and d_l.log_exp < 0:
        nu = -d_l.log_exp
        if not 1 < nu < 2 or schedule != "monotone":
            raise RegimeMismatchError(
                "log-corrected family needs nu in (1, 2) and monotone angles")
        return OrderPrediction(1 / nu, 1 / nu, 1 / nu, "log-family")

    if d_l.log_exp != 0 or d_phi.log_exp != 0:
        raise RegimeMismatchError("log corrections only supported for the log-family")
    total = delta_l + delta_phi
    if not 1 < total < 2:
        raise RegimeMismatchError(f"delta_l + delta_phi = {total} outside (1, 2)")
    lower = 1 / total
    upper = (1 - delta_phi) / (delta_l - delta_phi)
    if schedule == "monotone":
        if not delta_phi > 0:
            raise RegimeMismatchError("monotone case needs delta_phi > 0")
        return OrderPrediction(upper, lower, upper, "monotone")
    if schedule in ("alternating", "two-point"):
        if not delta_l > 1:
            raise RegimeMismatchError("oscillating case needs delta_l > 1")
        return OrderPrediction(lower, lower, upper, "oscillating")
    if schedule is None or schedule == "general":
        return OrderPrediction(None, lower, upper, "general")
    raise RegimeMismatchError(f"unknown schedule {schedule!r}")
