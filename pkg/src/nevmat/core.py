"""Hamburger Hamiltonians: validated (length, angle) data and family generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigParseError, DegenerateAngleStepError, NonPositiveLengthError
from .regvar import RegVarSpec

ANGLE_TOL = 1e-12
SCHEDULES = ("monotone", "alternating", "two-point")


class HamburgerHamiltonian:
    """Piecewise constant Hamiltonian ``xi(phi_j) xi(phi_j)^T`` on ``[x_{j-1}, x_j)``.

    Immutable after construction.  ``x`` carries the leading ``x_0 = 0`` so
    ``x[n]`` is the n-th partition point and ``x[-1] = L``.  ``steps`` holds
    the increments ``phi_{j+1} - phi_j``; it equals ``diff(angles)`` unless the
    Hamiltonian was built with :meth:`from_steps`.
    """

    __slots__ = ("lengths", "angles", "steps", "cos", "sin", "x", "_suffix")

    def __init__(self, lengths, angles, *, steps=None, _validated=False):
        lengths = np.array(lengths, dtype=float)
        angles = np.array(angles, dtype=float)
        if not _validated:
            _validate(lengths, angles, steps)
        steps = np.diff(angles) if steps is None else np.array(steps, dtype=float)
        x = np.empty(lengths.size + 1)
        x[0] = 0.0
        np.cumsum(lengths, out=x[1:])
        cos, sin = np.cos(angles), np.sin(angles)
        for arr in (lengths, angles, steps, cos, sin, x):
            arr.flags.writeable = False
        self.lengths = lengths
        self.angles = angles
        self.steps = steps
        self.cos = cos
        self.sin = sin
        self.x = x
        self._suffix = None

    @classmethod
    def from_steps(cls, lengths, phi1: float, steps) -> "HamburgerHamiltonian":
        """Build from ``phi_1`` and exact increments ``phi_{j+1} - phi_j``.

        The increments are kept alongside the angles, so steps far below the
        resolution of the raw angles (as produced by rapidly growing ``l_j``)
        remain usable by the Jacobi dictionary.
        """
        steps = np.array(steps, dtype=float)
        angles = np.empty(steps.size + 1)
        angles[0] = phi1
        np.cumsum(steps, out=angles[1:])
        angles[1:] += phi1
        return cls(lengths, angles, steps=steps)

    def __len__(self):
        return self.lengths.size

    def __repr__(self):
        return f"HamburgerHamiltonian(N={len(self)}, L={self.L:.6g})"

    @property
    def N(self) -> int:
        return self.lengths.size

    @property
    def L(self) -> float:
        return float(self.x[-1])

    def xi(self, j: int) -> np.ndarray:
        """Direction vector of interval ``j`` (1-based, as in ``l_j``)."""
        return np.array([self.cos[j - 1], self.sin[j - 1]])

    def truncate(self, n: int) -> "HamburgerHamiltonian":
        if not 1 <= n <= self.N:
            raise ValueError(f"truncation {n} outside 1..{self.N}")
        if n == self.N:
            return self
        return HamburgerHamiltonian(self.lengths[:n], self.angles[:n],
                                    steps=self.steps[: n - 1], _validated=True)

    def with_angles(self, angles) -> "HamburgerHamiltonian":
        return HamburgerHamiltonian(self.lengths, angles)

    def suffix_sums(self) -> np.ndarray:
        if self._suffix is None:
            s = np.zeros(self.N + 1)
            np.cumsum(self.lengths[::-1], out=s[-2::-1])
            s.flags.writeable = False
            self._suffix = s
        return self._suffix

    def to_dict(self) -> dict:
        return {"lengths": self.lengths.tolist(), "angles": self.angles.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "HamburgerHamiltonian":
        try:
            return build_explicit(d["lengths"], d["angles"])
        except KeyError as exc:
            raise ConfigParseError(f"Hamiltonian JSON lacks field {exc}") from None


def _validate(lengths: np.ndarray, angles: np.ndarray, steps=None) -> None:
    if lengths.ndim != 1 or angles.shape != lengths.shape:
        raise ValueError("lengths and angles must be 1-d sequences of equal size")
    if lengths.size == 0:
        raise ValueError("a Hamiltonian needs at least one interval")
    bad = np.flatnonzero(~(lengths > 0) | ~np.isfinite(lengths))
    if bad.size:
        raise NonPositiveLengthError(f"l_{bad[0] + 1} = {lengths[bad[0]]} is not positive")
    if not np.all(np.isfinite(angles)):
        raise ValueError("angles must be finite")
    if steps is None:
        sines = np.abs(np.sin(np.diff(angles)))
        tol = ANGLE_TOL
    else:
        steps = np.asarray(steps, dtype=float)
        if steps.shape != (lengths.size - 1,) or not np.all(np.isfinite(steps)):
            raise ValueError("steps must be finite with one entry per consecutive pair")
        # exact increments are meaningful at any size; only exact degeneracy is rejected
        sines = np.abs(np.sin(steps))
        tol = 0.0
    bad = np.flatnonzero(~(sines > tol))
    if bad.size:
        j = int(bad[0]) + 1
        raise DegenerateAngleStepError(
            j, f"|sin(phi_{j + 1} - phi_{j})| = {sines[bad[0]]:.3g} <= {tol}")


def build_explicit(lengths, angles) -> HamburgerHamiltonian:
    return HamburgerHamiltonian(lengths, angles)


def tail_length(H: HamburgerHamiltonian, m: int) -> float:
    """``sum_{j > m} l_j`` over the stored intervals."""
    if not 0 <= m <= H.N:
        raise ValueError(f"index {m} outside 0..{H.N}")
    return float(H.suffix_sums()[m])


@dataclass(frozen=True)
class FamilySpec:
    """Laws generating a Hamburger Hamiltonian interval by interval.

    Angle schedules:

    - ``monotone``: ``phi_{j+1} = phi_j + d_phi(j)``
    - ``alternating``: ``phi_{j+1} = phi_j + (-1)^j d_phi(j)``
    - ``two-point``: ``phi_j`` alternates between ``phi1`` and ``phi1 + theta``
      (``theta`` defaults to ``d_phi(1)``)
    """

    length_law: RegVarSpec
    increment_law: RegVarSpec = field(default_factory=lambda: RegVarSpec(1.0, -0.5))
    schedule: str = "monotone"
    phi1: float = math.pi / 2
    l1: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown angle schedule {self.schedule!r}")
        if not self.length_law.integrable:
            raise ValueError("length law is not summable (limit point case)")
        if self.l1 is not None and not self.l1 > 0:
            raise NonPositiveLengthError(f"l1 = {self.l1} is not positive")
        if self.schedule == "two-point":
            if not 0 < self.two_point_theta < math.pi:
                raise ValueError("two-point angle gap must lie in (0, pi)")

    @property
    def two_point_theta(self) -> float:
        return self.theta if self.theta is not None else float(self.increment_law(1.0))

    def to_dict(self) -> dict:
        d = {
            "lengthLaw": self.length_law.to_dict(),
            "angleSchedule": self.schedule,
            "incrementLaw": self.increment_law.to_dict(),
            "phi1": self.phi1,
        }
        if self.l1 is not None:
            d["l1"] = self.l1
        if self.theta is not None:
            d["theta"] = self.theta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        try:
            return cls(
                length_law=RegVarSpec.from_dict(d["lengthLaw"]),
                increment_law=RegVarSpec.from_dict(d.get("incrementLaw", {"c": 1.0, "index": -0.5})),
                schedule=d.get("angleSchedule", "monotone"),
                phi1=float(d.get("phi1", math.pi / 2)),
                l1=None if d.get("l1") is None else float(d["l1"]),
                theta=None if d.get("theta") is None else float(d["theta"]),
            )
        except KeyError as exc:
            raise ConfigParseError(f"family JSON lacks field {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "FamilySpec":
        return cls.from_dict(json.loads(text))


def build_family(spec: FamilySpec, N: int) -> HamburgerHamiltonian:
    """Eager truncation of ``spec`` to its first ``N`` intervals."""
    if N < 1:
        raise ValueError("N must be at least 1")
    j = np.arange(1, N + 1, dtype=float)
    lengths = np.asarray(spec.length_law(j), dtype=float).reshape(N)
    if spec.l1 is not None:
        lengths[0] = spec.l1

    if spec.schedule == "two-point":
        angles = np.empty(N)
        angles[0::2] = spec.phi1
        angles[1::2] = spec.phi1 + spec.two_point_theta
        return HamburgerHamiltonian(lengths, angles)
    inc = np.asarray(spec.increment_law(j[:-1]), dtype=float).reshape(N - 1)
    if inc.size and not (inc.max() < math.pi and inc.min() > 0):
        raise ValueError("increment law values must lie in (0, pi)")
    if spec.schedule == "alternating":
        inc[0::2] *= -1.0  # j = 1, 3, ... carry (-1)^j = -1
    return HamburgerHamiltonian.from_steps(lengths, spec.phi1, inc)
