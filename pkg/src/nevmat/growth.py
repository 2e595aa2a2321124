"""Radius scans of ``log ||W_H(i r)||``, order fits, zero counts and envelope comparison."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from ._parallel import ordered_map
from .core import FamilySpec, HamburgerHamiltonian, build_family
from .errors import (
    ConfigParseError,
    DensityUnstableError,
    IndexConstraintError,
    NonPositiveLogLogError,
    TruncationUnstableError,
    WindowTooSmallError,
)
from .jacobi import JacobiParameters, PowerSpec, generate_power, jacobi_to_hamiltonian
from .omega import certificate, lower_bound_value
from .regvar import EnvelopeCurves, envelopes
from .transfer import monodromy, nevanlinna_entries, log_norm

MAX_INTERVALS = 2 ** 24


# --------------------------------------------------------------------- sources

class HamiltonianSource:
    """Something that can produce the first ``N`` intervals of a Hamiltonian."""

    label = "source"
    max_intervals: Optional[int] = None
    curves: Optional[EnvelopeCurves] = None

    def hamiltonian(self, N: int) -> HamburgerHamiltonian:
        raise NotImplementedError

    def h(self, r: float) -> Optional[float]:
        """Index beyond which the tail is negligible at radius ``r`` (``None``: use all)."""
        return None


class ExplicitSource(HamiltonianSource):
    label = "explicit"

    def __init__(self, H: HamburgerHamiltonian):
        self.H = H
        self.max_intervals = H.N

    def hamiltonian(self, N: int) -> HamburgerHamiltonian:
        return self.H.truncate(min(N, self.H.N))


class _CachedSource(HamiltonianSource):
    """Builds the largest requested truncation once and slices it afterwards."""

    def __init__(self):
        self._H: Optional[HamburgerHamiltonian] = None

    def _build(self, N: int) -> HamburgerHamiltonian:
        raise NotImplementedError

    def hamiltonian(self, N: int) -> HamburgerHamiltonian:
        if self.max_intervals is not None:
            N = min(N, self.max_intervals)
        if self._H is None or self._H.N < N:
            self._H = self._build(N)
        return self._H.truncate(N)

    def _empirical_h(self, r: float) -> float:
        """First ``j`` with ``max_{i<=j} |sin(phi_{i+1} - phi_i)| / l_i >= r``."""
        n = 1024 if self._H is None else self._H.N
        while True:
            if self.max_intervals is not None:
                n = min(n, self.max_intervals)
            H = self.hamiltonian(n)
            ratio = np.maximum.accumulate(np.abs(np.sin(H.steps)) / H.lengths[:-1])
            hit = np.flatnonzero(ratio >= r)
            if hit.size:
                return float(hit[0] + 1)
            if n >= MAX_INTERVALS or (self.max_intervals is not None and n >= self.max_intervals):
                return float(n)
            n *= 2


class FamilySource(_CachedSource):
    label = "family"

    def __init__(self, spec: FamilySpec):
        super().__init__()
        self.spec = spec
        try:
            self.curves = envelopes(spec.length_law, spec.increment_law)
        except IndexConstraintError:
            self.curves = None

    def _build(self, N):
        return build_family(self.spec, N)

    def h(self, r):
        if self.curves is not None and r > self.curves.r_min:
            return float(self.curves.h(r))
        return self._empirical_h(r)


class JacobiSource(_CachedSource):
    label = "jacobi"

    def __init__(self, params: JacobiParameters):
        super().__init__()
        self.params = params
        self.max_intervals = len(params) + 1

    def _build(self, N):
        return jacobi_to_hamiltonian(self.params, N)

    def h(self, r):
        return self._empirical_h(r)


class PowerSource(_CachedSource):
    """Hamiltonian of the Jacobi matrix generated from a :class:`PowerSpec`."""

    label = "power"

    def __init__(self, spec: PowerSpec):
        super().__init__()
        self.spec = spec

    def _build(self, N):
        return jacobi_to_hamiltonian(generate_power(self.spec, max(N - 1, 1)), max(N, 2))

    def h(self, r):
        return self._empirical_h(r)


def as_source(obj) -> HamiltonianSource:
    if isinstance(obj, HamiltonianSource):
        return obj
    if isinstance(obj, HamburgerHamiltonian):
        return ExplicitSource(obj)
    if isinstance(obj, FamilySpec):
        return FamilySource(obj)
    if isinstance(obj, PowerSpec):
        return PowerSource(obj)
    if isinstance(obj, JacobiParameters):
        return JacobiSource(obj)
    raise TypeError(f"cannot scan a {type(obj).__name__}")


# ------------------------------------------------------------------ truncation

@dataclass(frozen=True)
class TruncationRule:
    """``N(r) = ceil(K h(r))``.

    With ``K=None`` the constant is calibrated by doubling from ``K0`` until
    doubling ``N`` at the largest radius changes ``logM`` by less than ``tol``.
    """

    K: Optional[float] = None
    K0: float = 16.0
    K_max: float = 4096.0
    tol: float = 0.02
    max_intervals: int = MAX_INTERVALS
    min_intervals: int = 64

    def intervals(self, K: float, h: Optional[float], cap: Optional[int]) -> int:
        if h is None:
            return cap if cap is not None else self.max_intervals
        n = max(self.min_intervals, int(math.ceil(K * h)))
        n = min(n, self.max_intervals)
        return min(n, cap) if cap is not None else n


@dataclass(frozen=True)
class Calibration:
    K: float
    relative_change: float
    history: tuple


def calibrate(source: HamiltonianSource, r: float, rule: TruncationRule) -> Calibration:
    """Pick ``K`` for ``source`` by the doubling self-check at radius ``r``."""
    h = source.h(r)
    cap = source.max_intervals
    if h is None or rule.K is not None:
        return Calibration(rule.K or 1.0, 0.0, ())
    K = rule.K0
    history = []
    while K <= rule.K_max:
        n1 = rule.intervals(K, h, cap)
        n2 = rule.intervals(2 * K, h, cap)
        H = source.hamiltonian(n2)
        v1 = log_norm(monodromy(H, 1j * r, n1))
        v2 = log_norm(monodromy(H, 1j * r, n2))
        change = abs(v2 - v1) / max(abs(v2), 1e-300)
        history.append((K, n1, n2, v1, v2, change))
        if change < rule.tol or n1 == n2:
            return Calibration(K, change, tuple(history))
        if n2 >= rule.max_intervals:
            break
        K *= 2
    raise TruncationUnstableError(
        f"doubling N at r = {r:g} still changes logM by {history[-1][-1]:.2%} "
        f"(K = {history[-1][0]:g}, N = {history[-1][2]})")


# ------------------------------------------------------------------------ scan

def geometric_grid(r_min: float, r_max: float, points: Optional[int] = None,
                   per_decade: Optional[float] = None) -> np.ndarray:
    """Geometric grid; default density is 30 points per 1.5 decades (at least 10 points)."""
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    if points is None:
        per_decade = 20.0 if per_decade is None else per_decade
        points = max(10, int(math.ceil(per_decade * math.log10(r_max / r_min))) + 1)
    return np.geomspace(r_min, r_max, int(points))


def _check_grid(radii: np.ndarray) -> None:
    if radii.ndim != 1 or radii.size < 10:
        raise ValueError("a scan needs a geometric grid of at least 10 radii")
    if not np.all(radii > 0) or not np.all(np.diff(radii) > 0):
        raise ValueError("radii must be positive and strictly increasing")
    q = np.diff(np.log(radii))
    if np.max(np.abs(q - q.mean())) > 1e-6 * q.mean():
        raise ValueError("radius grid is not geometric")


@dataclass
class GrowthScan:
    radii: np.ndarray
    logM: np.ndarray
    N: np.ndarray
    k_lower: np.ndarray
    k_env: Optional[np.ndarray] = None
    m_env: Optional[np.ndarray] = None
    log_w22: Optional[np.ndarray] = None
    bracket: Optional[np.ndarray] = None
    K: Optional[float] = None
    calibration: Optional[Calibration] = field(default=None, repr=False)

    def window(self, r_min=None, r_max=None) -> np.ndarray:
        lo = -np.inf if r_min is None else r_min * (1 - 1e-12)
        hi = np.inf if r_max is None else r_max * (1 + 1e-12)
        return (self.radii >= lo) & (self.radii <= hi)


def scan(source, radii: Sequence[float], rule: Optional[TruncationRule] = None,
         c: float = 1.0, threads: Optional[int] = None) -> GrowthScan:
    """``log ||W(i r)||`` and greedy certificates on every radius of ``radii``."""
    src = as_source(source)
    rule = rule or TruncationRule()
    radii = np.asarray(radii, dtype=float)
    _check_grid(radii)
    cal = calibrate(src, float(radii[-1]), rule)
    Ns = np.array([rule.intervals(cal.K, src.h(float(r)), src.max_intervals) for r in radii])
    Ns = np.maximum.accumulate(Ns)
    H = src.hamiltonian(int(Ns[-1]))
    Ns = np.minimum(Ns, H.N)

    def one(item):
        r, n = item
        W = monodromy(H, 1j * r, int(n))
        cert = certificate(H, r, c, N=int(n))
        ne = nevanlinna_entries(W)
        return log_norm(W), ne.log_abs("B"), cert.k, lower_bound_value(cert, float(H.x[n]))

    rows = ordered_map(one, list(zip(radii, Ns)), threads)
    logM, lw22, ks, br = (np.array(col) for col in zip(*rows))
    k_env = m_env = None
    if src.curves is not None:
        k_env = np.asarray(src.curves.k(radii), dtype=float)
        m_env = np.asarray(src.curves.m(radii), dtype=float)
    return GrowthScan(radii, logM, Ns.astype(np.int64), ks.astype(np.int64), k_env, m_env,
                      lw22, br, cal.K if src.h(float(radii[-1])) is not None else None, cal)


SCAN_COLUMNS = ("r", "logM", "N", "k_lower", "k_env", "m_env")


def write_scan_csv(scan_: GrowthScan, target) -> None:
    """Write the six scan columns to a path or an open text file."""
    if hasattr(target, "write"):
        _write_rows(scan_, target)
    else:
        with open(target, "w", newline="") as fh:
            _write_rows(scan_, fh)


def _write_rows(scan_: GrowthScan, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SCAN_COLUMNS)
    for i in range(scan_.radii.size):
        ke = "" if scan_.k_env is None else repr(float(scan_.k_env[i]))
        me = "" if scan_.m_env is None else repr(float(scan_.m_env[i]))
        w.writerow([repr(float(scan_.radii[i])), repr(float(scan_.logM[i])),
                    int(scan_.N[i]), int(scan_.k_lower[i]), ke, me])


def read_scan_csv(path) -> GrowthScan:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from None
    if not rows or "r" not in rows[0] or "logM" not in rows[0]:
        raise ConfigParseError(f"{path}: not a scan CSV")

    def col(name, kind=float):
        vals = [row.get(name, "") for row in rows]
        if all(v in ("", None) for v in vals):
            return None
        return np.array([kind(v) if v not in ("", None) else np.nan for v in vals])

    return GrowthScan(col("r"), col("logM"),
                      col("N", int) if col("N") is not None else np.zeros(len(rows), int),
                      col("k_lower", int) if col("k_lower") is not None
                      else np.zeros(len(rows), int),
                      col("k_env"), col("m_env"))


# ------------------------------------------------------------------------- fits

@dataclass(frozen=True)
class OrderFit:
    rho: float
    amplitude: float
    residual: float
    window: tuple

    def to_dict(self) -> dict:
        return {"rho": self.rho, "amplitude": self.amplitude, "residual": self.residual,
                "window": list(self.window)}


def power_fit(r, y):
    """Least-squares ``y ~ A r^rho`` in log-log coordinates.

    Returns ``(rho, A, residual)`` with ``residual = max |A r^rho / y - 1|``.
    """
    lr, ly = np.log(r), np.log(y)
    rho, icpt = np.polyfit(lr, ly, 1)
    fit = np.exp(icpt + rho * lr)
    return float(rho), float(math.exp(icpt)), float(np.max(np.abs(fit / y - 1)))


def fit_order(scan_or_radii, logM=None, window: Optional[tuple] = None) -> OrderFit:
    """Slope of ``log logM`` against ``log r`` over ``window = (r_min, r_max)``."""
    if isinstance(scan_or_radii, GrowthScan):
        radii, values = scan_or_radii.radii, scan_or_radii.logM
    else:
        radii, values = np.asarray(scan_or_radii, float), np.asarray(logM, float)
    lo, hi = window if window is not None else (radii.min(), radii.max())
    sel = (radii >= lo * (1 - 1e-12)) & (radii <= hi * (1 + 1e-12))
    if sel.sum() < 5:
        raise WindowTooSmallError(f"only {int(sel.sum())} radii in window {lo, hi}")
    v = values[sel]
    if not np.all(v > 1):
        raise NonPositiveLogLogError("logM must exceed 1 on the fit window")
    rho, amp, res = power_fit(radii[sel], v)
    return OrderFit(rho, amp, res, (float(radii[sel][0]), float(radii[sel][-1])))


def exponent_of(radii, values, window=None) -> float:
    """Log-log slope of any positive curve (used for ``k_lower`` and envelopes)."""
    radii = np.asarray(radii, float)
    values = np.asarray(values, float)
    lo, hi = window if window is not None else (radii.min(), radii.max())
    sel = (radii >= lo * (1 - 1e-12)) & (radii <= hi * (1 + 1e-12)) & (values > 0)
    if sel.sum() < 5:
        raise WindowTooSmallError(f"only {int(sel.sum())} usable points")
    return power_fit(radii[sel], values[sel])[0]


# ----------------------------------------------------------------------- zeros

ENTRY_POSITION = {"C": (0, 0), "A": (0, 1), "D": (1, 0), "B": (1, 1)}


@dataclass(frozen=True)
class ZeroCount:
    entry: str
    zeros: np.ndarray
    radii: np.ndarray
    counts: np.ndarray
    density: float

    def n(self, r) -> np.ndarray:
        return np.searchsorted(np.sort(np.abs(self.zeros)), np.asarray(r), side="right")


def entry_values(H: HamburgerHamiltonian, entry: str, xs) -> tuple:
    """Real values of ``entry`` at real ``xs`` as ``(normalised value, log scale)``."""
    row, col = ENTRY_POSITION[entry]
    xs = np.ascontiguousarray(xs, dtype=float)
    u, v, logs = _kernels.real_rows(H.lengths, H.cos, H.sin, xs, H.N, row)
    return (u if col == 0 else v), logs


def _sign_brackets(xs: np.ndarray, vals: np.ndarray):
    """Exact grid zeros and brackets ``(lo, hi)`` of strict sign changes."""
    s = np.sign(vals)
    exact = xs[s == 0]
    nz = np.flatnonzero(s != 0)
    a, b = nz[:-1], nz[1:]
    change = s[a] != s[b]
    # a bracket spanning exact zeros is already accounted for
    adjacent = (b - a) == 1
    sel = change & adjacent
    return exact, xs[a[sel]], xs[b[sel]]


def _refine(H, entry, lo, hi, rtol=1e-9):
    if lo.size == 0:
        return lo
    f_lo = np.sign(entry_values(H, entry, lo)[0])
    for _ in range(200):
        width = hi - lo
        if np.all(width <= rtol * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300):
            break
        mid = 0.5 * (lo + hi)
        f_mid = np.sign(entry_values(H, entry, mid)[0])
        left = f_mid == f_lo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
        f_lo = np.where(left, f_mid, f_lo)
        zero = f_mid == 0
        lo = np.where(zero, mid, lo)
        hi = np.where(zero, mid, hi)
    return 0.5 * (lo + hi)


def _grid(r_max: float, density: float) -> np.ndarray:
    n = int(math.ceil(r_max * density))
    return np.linspace(-r_max, r_max, 2 * n + 1)


def count_zeros(H: HamburgerHamiltonian, entry: str, r_max: float, density: float = 4.0,
                radii: Optional[Sequence[float]] = None, check: bool = True) -> ZeroCount:
    """Real zeros of ``entry`` in ``[-r_max, r_max]`` and the counting function.

    Zeros are bracketed by sign changes on a uniform grid with ``density``
    points per unit length, then bisected to ``1e-9`` relative.  With ``check``
    the grid density is doubled and the total count must not change.
    """
    entry = entry.upper().lstrip("-")
    if entry not in ENTRY_POSITION:
        raise ValueError(f"entry must be one of A, B, C, D, got {entry!r}")
    if not (r_max > 0 and density > 0):
        raise ValueError("r_max and density must be positive")
    xs = _grid(r_max, density)
    exact, lo, hi = _sign_brackets(xs, entry_values(H, entry, xs)[0])
    if check:
        xs2 = _grid(r_max, 2 * density)
        e2, lo2, _ = _sign_brackets(xs2, entry_values(H, entry, xs2)[0])
        if e2.size + lo2.size != exact.size + lo.size:
            raise DensityUnstableError(
                f"zero count {exact.size + lo.size} changes to {e2.size + lo2.size} "
                f"when the grid density doubles to {2 * density:g}")
    zeros = np.sort(np.concatenate([exact, _refine(H, entry, lo, hi)]))
    radii = np.geomspace(max(r_max / 1e3, 1e-9), r_max, 40) if radii is None \
        else np.asarray(radii, dtype=float)
    counts = np.searchsorted(np.sort(np.abs(zeros)), radii, side="right")
    return ZeroCount(entry, zeros, radii, counts, float(density))


def convergence_exponent(radii, counts, window: Optional[tuple] = None) -> float:
    """Log-log slope of the counting function.

    The default window is the upper half (in ``log r``) of the radii where the
    count is positive.
    """
    radii = np.asarray(radii, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if np.any(np.diff(counts) < 0):
        raise ValueError("counting function must be nondecreasing")
    pos = counts > 0
    if window is None:
        if pos.sum() < 5:
            raise WindowTooSmallError("fewer than 5 radii with a positive count")
        lr = np.log(radii[pos])
        mid = 0.5 * (lr.min() + lr.max())
        window = (math.exp(mid), float(radii[pos].max()))
    return exponent_of(radii, np.where(pos, counts, 0.0), window)


# ----------------------------------------------------------------------- bounds

@dataclass(frozen=True)
class BoundReport:
    ratio_k: np.ndarray
    ratio_m: np.ndarray
    k_band: tuple
    m_band: tuple
    band_factor: float

    @property
    def lower_ok(self) -> bool:
        lo, hi = self.k_band
        return lo > 0 and hi / lo <= self.band_factor

    @property
    def upper_ok(self) -> bool:
        lo, hi = self.m_band
        return math.isfinite(hi) and lo > 0 and hi / lo <= self.band_factor

    @property
    def sandwich(self) -> bool:
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        return {"kBand": list(self.k_band), "mBand": list(self.m_band),
                "lowerBounded": self.lower_ok, "upperBounded": self.upper_ok,
                "sandwich": self.sandwich}


def compare_bounds(scan_: GrowthScan, curves: Optional[EnvelopeCurves] = None,
                   band_factor: float = 20.0) -> BoundReport:
    """Ratios ``logM / k(r)`` and ``logM / m(r)`` along the scan."""
    if curves is not None:
        k = np.asarray(curves.k(scan_.radii), dtype=float)
        m = np.asarray(curves.m(scan_.radii), dtype=float)
    elif scan_.k_env is not None and scan_.m_env is not None:
        k, m = scan_.k_env, scan_.m_env
    else:
        raise ValueError("no envelope curves available for this scan")
    rk = scan_.logM / k
    rm = scan_.logM / m
    return BoundReport(rk, rm, (float(rk.min()), float(rk.max())),
                       (float(rm.min()), float(rm.max())), band_factor)

