import math

import numpy as np
import pytest

from nevmat.core import FamilySpec, build_explicit, build_family
from nevmat.errors import (
    DensityUnstableError,
    NonPositiveLogLogError,
    TruncationUnstableError,
    WindowTooSmallError,
)
from nevmat.growth import (
    GrowthScan,
    PowerSource,
    TruncationRule,
    calibrate,
    compare_bounds,
    convergence_exponent,
    count_zeros,
    entry_values,
    fit_order,
    geometric_grid,
    read_scan_csv,
    scan,
    write_scan_csv,
)
from nevmat.jacobi import PowerSpec
from nevmat.regvar import RegVarSpec, envelopes
from nevmat.transfer import monodromy

from oracles import dense_product, random_hamiltonian

MONOTONE = FamilySpec(RegVarSpec(1, -1.25), RegVarSpec(1, -0.5), "monotone")


def synthetic_scan(r, logM):
    n = np.zeros(r.size, dtype=np.int64)
    return GrowthScan(r, np.asarray(logM, float), n, n)


def test_two_interval_scan_matches_closed_form():
    l, a = [0.6, 1.3], [0.2, 1.4]
    H = build_explicit(l, a)
    radii = geometric_grid(0.1, 50, 12)
    s = scan(H, radii)
    for r, v in zip(radii, s.logM):
        M = dense_product(l, a, 1j * r)
        assert v == pytest.approx(math.log(np.linalg.norm(M)), rel=1e-12)
    assert np.all(s.N == 2)


def test_small_radius_limit():
    H = build_explicit(*random_hamiltonian(np.random.default_rng(1), 30))
    s = scan(H, geometric_grid(1e-9, 1e-8, 10))
    np.testing.assert_allclose(s.logM, math.log(math.sqrt(2)), atol=1e-7)


def test_scan_grid_checks():
    H = build_explicit([1, 1], [0, 1])
    with pytest.raises(ValueError):
        scan(H, geometric_grid(1, 10, 5))
    with pytest.raises(ValueError):
        scan(H, np.linspace(1, 10, 12))


def test_truncation_self_check_monotone_family():
    rule = TruncationRule()
    from nevmat.growth import FamilySource
    src = FamilySource(MONOTONE)
    cal = calibrate(src, 300.0, rule)
    assert cal.relative_change < 0.02
    n = rule.intervals(cal.K, src.h(300.0), None)
    H = src.hamiltonian(2 * n)
    v1 = math.log(np.linalg.norm(monodromy(H, 300j, n).entries)) + monodromy(H, 300j, n).log_scale
    v2 = math.log(np.linalg.norm(monodromy(H, 300j, 2 * n).entries)) + \
        monodromy(H, 300j, 2 * n).log_scale
    assert abs(v2 - v1) / v2 < 0.02


def test_truncation_unstable_when_budget_too_small():
    rule = TruncationRule(K0=1.0, K_max=2.0, tol=1e-9)
    from nevmat.growth import FamilySource
    with pytest.raises(TruncationUnstableError):
        calibrate(FamilySource(MONOTONE), 300.0, rule)


def test_scan_properties():
    s = scan(MONOTONE, geometric_grid(5, 60, 12))
    assert np.all(s.logM >= 0)
    assert np.all(np.diff(s.N) >= 0)
    assert np.all(np.diff(s.logM) >= -1e-9 * s.logM[1:])
    assert np.all(np.diff(s.k_lower) >= 0)
    assert s.k_env is not None and s.m_env is not None


def test_scan_is_deterministic():
    radii = geometric_grid(5, 40, 10)
    a = scan(MONOTONE, radii, threads=1)
    b = scan(MONOTONE, radii, threads=3)
    np.testing.assert_array_equal(a.logM, b.logM)
    np.testing.assert_array_equal(a.k_lower, b.k_lower)


def test_certificate_lower_bound_consistent_with_scan():
    s = scan(MONOTONE, geometric_grid(5, 60, 12))
    ratio = s.log_w22 / np.maximum(s.k_lower, 1)
    assert np.all(s.log_w22 >= 0)
    assert ratio.max() / ratio.min() < 20
    assert np.all(s.bracket <= s.logM + 1.0)


def test_fit_exact_power():
    r = geometric_grid(10, 1000, 20)
    f = fit_order(r, 5 * r ** 0.6)
    assert f.rho == pytest.approx(0.6, abs=1e-12)
    assert f.amplitude == pytest.approx(5, rel=1e-10)
    assert f.residual < 1e-12


def test_fit_perturbed_power():
    r = geometric_grid(10, 1000, 30)
    f = fit_order(synthetic_scan(r, 5 * r ** 0.6 * (1 + 0.01 * np.sin(np.log(r)))))
    assert abs(f.rho - 0.6) <= 0.01


def test_fit_constant():
    r = geometric_grid(10, 1000, 12)
    assert fit_order(r, np.full(r.size, 3.0)).rho == pytest.approx(0.0, abs=1e-12)


def test_fit_window_errors():
    r = geometric_grid(10, 1000, 12)
    with pytest.raises(WindowTooSmallError):
        fit_order(r, r, window=(10, 20))
    with pytest.raises(NonPositiveLogLogError):
        fit_order(r, np.full(r.size, 0.5))


def test_fit_window_subrange():
    r = geometric_grid(10, 1000, 21)
    f = fit_order(r, 2 * r ** 0.7, window=(50, 500))
    assert f.window[0] >= 50 and f.window[1] <= 500
    assert f.rho == pytest.approx(0.7)


def quadratic_roots(l, a, entry):
    # entries of (I + z M1)(I + z M2) as polynomials in z
    J = np.array([[0, -1], [1, 0]])
    M = [-li * np.outer([math.cos(t), math.sin(t)], [math.cos(t), math.sin(t)]) @ J
         for li, t in zip(l, a)]
    pos = {"C": (0, 0), "A": (0, 1), "D": (1, 0), "B": (1, 1)}[entry]
    c0 = np.eye(2)[pos]
    c1 = (M[0] + M[1])[pos]
    c2 = (M[0] @ M[1])[pos]
    roots = np.roots([c2, c1, c0]) if abs(c2) > 1e-14 else np.roots([c1, c0])
    return np.sort(roots[np.abs(roots.imag) < 1e-12].real)


@pytest.mark.parametrize("entry", ["A", "B", "C", "D"])
def test_two_interval_zero_count(entry):
    l, a = [0.8, 1.1], [0.3, 1.5]
    H = build_explicit(l, a)
    ref = quadratic_roots(l, a, entry)
    z = count_zeros(H, entry, 20.0, density=8)
    ref = ref[np.abs(ref) <= 20]
    assert z.zeros.size == ref.size
    np.testing.assert_allclose(z.zeros, ref, rtol=1e-9, atol=1e-12)


def test_entry_c_has_no_zero_near_origin(rng):
    H = build_explicit(*random_hamiltonian(rng, 40))
    assert entry_values(H, "C", np.array([0.0]))[0][0] == 1.0
    z = count_zeros(H, "C", 1e-3, density=1e4)
    assert z.zeros.size == 0


def test_zero_count_below_degree(rng):
    N = 25
    H = build_explicit(*random_hamiltonian(rng, N))
    z = count_zeros(H, "B", 2000.0, density=40)
    assert z.zeros.size <= N


def test_zeros_are_refined(rng):
    H = build_explicit(*random_hamiltonian(rng, 60))
    z = count_zeros(H, "B", 30.0, density=20)
    assert z.zeros.size > 0
    for x in z.zeros:
        lo, hi = x * (1 - 1e-8), x * (1 + 1e-8)
        vals, _ = entry_values(H, "B", np.array([lo, hi]))
        assert np.sign(vals[0]) != np.sign(vals[1])


def test_density_self_check():
    H = build_explicit(*random_hamiltonian(np.random.default_rng(3), 200))
    with pytest.raises(DensityUnstableError):
        count_zeros(H, "B", 200.0, density=0.05)


def test_convergence_exponent_sqrt():
    r = np.geomspace(10, 1e6, 60)
    assert convergence_exponent(r, np.floor(r ** 0.5)) == pytest.approx(0.5, abs=0.02)


def test_convergence_exponent_logarithmic():
    r = np.geomspace(1e2, 1e20, 60)
    assert convergence_exponent(r, np.floor(np.log(r))) <= 0.05


def test_convergence_exponent_window_too_small():
    with pytest.raises(WindowTooSmallError):
        convergence_exponent(np.geomspace(1, 10, 8), [0, 0, 0, 0, 0, 1, 1, 2])


def test_compare_bounds_exact_m():
    cur = envelopes(RegVarSpec(1, -1.25), RegVarSpec(1, -0.5))
    r = geometric_grid(10, 300, 15)
    s = synthetic_scan(r, cur.m(r))
    rep = compare_bounds(s, cur)
    assert rep.m_band[0] == pytest.approx(1) and rep.m_band[1] == pytest.approx(1)
    assert rep.k_band[0] <= rep.k_band[1]
    assert rep.sandwich


def test_scan_csv_round_trip(tmp_path):
    s = scan(MONOTONE, geometric_grid(5, 40, 10))
    path = tmp_path / "scan.csv"
    write_scan_csv(s, path)
    header = path.read_text().splitlines()[0]
    assert header == "r,logM,N,k_lower,k_env,m_env"
    t = read_scan_csv(path)
    np.testing.assert_array_equal(t.radii, s.radii)
    np.testing.assert_array_equal(t.logM, s.logM)
    np.testing.assert_array_equal(t.N, s.N)
    np.testing.assert_array_equal(t.k_lower, s.k_lower)
    np.testing.assert_array_equal(t.m_env, s.m_env)


def test_power_source_builds_limit_circle_hamiltonian():
    src = PowerSource(PowerSpec(1.75, 1.75, 1, -2, x1=2))
    H = src.hamiltonian(1000)
    assert H.N == 1000 and H.lengths[0] == 1.0
    assert src.h(50.0) > src.h(10.0)


def test_sub_window_stability():
    s = scan(build_family(FamilySpec(RegVarSpec(1, -2.0), RegVarSpec(1, -0.5), "two-point",
                                     theta=1.0), 50_000), geometric_grid(10, 300, 20))
    a = fit_order(s, window=(10, 100)).rho
    b = fit_order(s, window=(30, 300)).rho
    assert 0 <= a <= 1 and 0 <= b <= 1
