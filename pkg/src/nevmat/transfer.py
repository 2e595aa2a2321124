"""Overflow-safe monodromy products ``W_H(z) = T_1 T_2 ... T_N``."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from ._parallel import ordered_map
from .core import HamburgerHamiltonian
from .errors import ProductOverflowError

J = np.array([[0.0, -1.0], [1.0, 0.0]])
OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class LogScaled2x2:
    """The matrix ``exp(log_scale) * entries`` with ``max |entries| = 1``.

    The determinant is carried separately as ``exp(log_abs_det) * det_phase``.
    For long products it is accumulated from the pivots of the factorised
    product, which is far more accurate than ``det(entries) * exp(2 log_scale)``
    once the two rows of ``entries`` differ in size by more than ``~1e8``.
    """

    entries: np.ndarray
    log_scale: float
    log_abs_det: float
    det_phase: complex = 1.0

    @classmethod
    def from_matrix(cls, M) -> "LogScaled2x2":
        M = np.asarray(M, dtype=complex)
        mx = float(np.max(np.abs(M)))
        d = complex(np.linalg.det(M))
        if mx == 0.0:
            return cls(M.copy(), 0.0, -math.inf, 1.0)
        log_abs = math.log(abs(d)) if d != 0 else -math.inf
        phase = d / abs(d) if d != 0 else 1.0
        return cls(M / mx, math.log(mx), log_abs, phase)

    @classmethod
    def identity(cls) -> "LogScaled2x2":
        return cls(np.eye(2, dtype=complex), 0.0, 0.0, 1.0)

    def value(self) -> np.ndarray:
        """Dense matrix; overflows to ``inf`` when ``log_scale`` exceeds ~709."""
        return self.entries * math.exp(self.log_scale)

    def det(self) -> complex:
        return math.exp(self.log_abs_det) * self.det_phase

    def det_literal(self) -> complex:
        """``det(entries) * exp(2 log_scale)``; loses accuracy as ``log_scale`` grows."""
        e = self.entries
        return complex(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0]) * math.exp(2 * self.log_scale)

    def transpose(self) -> "LogScaled2x2":
        return LogScaled2x2(self.entries.T.copy(), self.log_scale, self.log_abs_det, self.det_phase)

    def conj(self) -> "LogScaled2x2":
        return LogScaled2x2(self.entries.conj(), self.log_scale, self.log_abs_det,
                            complex(self.det_phase).conjugate())

    def __matmul__(self, other: "LogScaled2x2") -> "LogScaled2x2":
        M = self.entries @ other.entries
        mx = float(np.max(np.abs(M)))
        return LogScaled2x2(M / mx, self.log_scale + other.log_scale + math.log(mx),
                            self.log_abs_det + other.log_abs_det,
                            self.det_phase * other.det_phase)


@dataclass(frozen=True)
class NevanlinnaEntries:
    """``A, B, C, D`` of ``W_H = [[C, A], [-D, -B]]``, all scaled by ``exp(log_scale)``."""

    A: complex
    B: complex
    C: complex
    D: complex
    log_scale: float
    log_abs_det: float = 0.0
    det_phase: complex = 1.0

    def value(self, name: str) -> complex:
        return getattr(self, name) * math.exp(self.log_scale)

    def log_abs(self, name: str) -> float:
        v = abs(getattr(self, name))
        return math.log(v) + self.log_scale if v > 0 else -math.inf

    def det(self) -> complex:
        """``A D - B C`` of the represented matrix (equal to ``det W_H``)."""
        return math.exp(self.log_abs_det) * self.det_phase

    def det_literal(self) -> complex:
        return (self.A * self.D - self.B * self.C) * math.exp(2 * self.log_scale)


def interval_matrix(l: float, phi: float, z: complex) -> np.ndarray:
    """Transfer factor ``I - z l xi xi^T J`` of one interval."""
    c, s = math.cos(phi), math.sin(phi)
    zl = z * l
    return np.array([[1 - zl * c * s, zl * c * c],
                     [-zl * s * s, 1 + zl * c * s]], dtype=complex)


def _check_count(H: HamburgerHamiltonian, N: Optional[int]) -> int:
    N = H.N if N is None else int(N)
    if not 0 <= N <= H.N:
        raise ValueError(f"N = {N} outside 0..{H.N}")
    return N


def monodromy(H: HamburgerHamiltonian, z: complex, N: Optional[int] = None,
              order: str = "forward") -> LogScaled2x2:
    """``W_H(x_N; z)``, accumulated as ``W <- W T_j``.

    ``order="reverse"`` multiplies the transposed factors from the right end
    and transposes back, which is the same product along another rounding path.
    """
    N = _check_count(H, N)
    z = complex(z)
    if N == 0 or z == 0:
        return LogScaled2x2.identity()
    if abs(z) * float(np.max(H.lengths[:N])) > OVERFLOW_LIMIT:
        raise ProductOverflowError(f"|z| l_j exceeds {OVERFLOW_LIMIT:g}")
    if order not in ("forward", "reverse"):
        raise ValueError(f"unknown order {order!r}")
    res = _kernels.product_lq(H.lengths, H.cos, H.sin, z, N, order == "reverse")
    q00, q01, q10, q11, ll1, ll2, ph2, m, kappa = res
    E = np.array([[q00, q01], [m * q00 + kappa * q10, m * q01 + kappa * q11]])
    mx = float(np.max(np.abs(E)))
    det_q = q00 * q11 - q01 * q10
    if not (math.isfinite(ll1) and math.isfinite(ll2) and np.isfinite(mx) and mx > 0):
        raise ProductOverflowError("non-finite value in the monodromy product")
    W = LogScaled2x2(E / mx, ll1 + math.log(mx), ll1 + ll2 + math.log(abs(det_q)),
                     ph2 * det_q / abs(det_q))
    return W.transpose() if order == "reverse" else W


def monodromy_many(H: HamburgerHamiltonian, zs, N=None, threads=None) -> list:
    """:func:`monodromy` at every ``z`` in ``zs``; ``N`` may be a scalar or a sequence."""
    zs = list(zs)
    Ns = [N] * len(zs) if N is None or np.isscalar(N) else list(N)
    return ordered_map(lambda zn: monodromy(H, zn[0], zn[1]), zip(zs, Ns), threads)


def nevanlinna_entries(W: LogScaled2x2) -> NevanlinnaEntries:
    e = W.entries
    return NevanlinnaEntries(A=complex(e[0, 1]), B=complex(-e[1, 1]), C=complex(e[0, 0]),
                             D=complex(-e[1, 0]), log_scale=W.log_scale,
                             log_abs_det=W.log_abs_det, det_phase=W.det_phase)


def log_norm(W: LogScaled2x2) -> float:
    """``log`` of the Frobenius norm of the represented matrix."""
    return W.log_scale + math.log(float(np.linalg.norm(W.entries)))


def log_norm_ir(H: HamburgerHamiltonian, r: float, N: Optional[int] = None) -> float:
    """Growth proxy ``log ||W_H(i r)||``."""
    return log_norm(monodromy(H, 1j * r, N))


def log_norm_circle(H: HamburgerHamiltonian, r: float, N: Optional[int] = None,
                    points: int = 16, threads=None) -> float:
    """``max log ||W_H(z)||`` over ``points`` equally spaced ``z`` on ``|z| = r``."""
    zs = [r * cmath.exp(2j * math.pi * k / points) for k in range(points)]
    return max(log_norm(W) for W in monodromy_many(H, zs, N, threads))
