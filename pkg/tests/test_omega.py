import json
import math

import numpy as np
import pytest

from nevmat.core import build_explicit
from nevmat.errors import IndexOrderError
from nevmat.omega import (
    OmegaPrefix,
    certificate,
    det_omega,
    det_omega_bruteforce,
    lower_bound_value,
    omega,
    verify_against_prefix,
)

from oracles import det_omega_double_sum, random_hamiltonian


def test_prefix_trace_is_partition(rng):
    H = build_explicit(*random_hamiltonian(rng, 300))
    P = OmegaPrefix.from_hamiltonian(H)
    np.testing.assert_allclose(P.cc + P.ss, H.x, rtol=1e-12)
    assert np.all(np.diff(P.cc) >= 0) and np.all(np.diff(P.ss) >= 0)


def test_single_interval_is_rank_one():
    H = build_explicit([2.0, 1.0, 3.0], [0.3, 1.1, 2.0])
    O = omega(H, 1, 2)
    np.testing.assert_allclose(O, 1.0 * np.outer(H.xi(2), H.xi(2)), atol=1e-15)
    assert det_omega(H, 1, 2) == pytest.approx(0.0, abs=1e-15)


def test_full_range_trace(rng):
    H = build_explicit(*random_hamiltonian(rng, 50))
    assert np.trace(omega(H, 0, 50)) == pytest.approx(H.L, rel=1e-12)


def test_orthogonal_pair():
    H = build_explicit([1, 1], [0, math.pi / 2])
    np.testing.assert_allclose(omega(H, 0, 2), np.eye(2), atol=1e-15)


def test_two_interval_determinant():
    l1, l2, step = 0.7, 1.9, 0.4
    H = build_explicit([l1, l2], [0.2, 0.2 + step])
    expected = l1 * l2 * math.sin(step) ** 2
    assert det_omega(H, 0, 2) == pytest.approx(expected, rel=1e-13)
    assert det_omega_bruteforce(H, 0, 2) == pytest.approx(expected, rel=1e-13)


def test_index_order():
    H = build_explicit([1, 1], [0, 1])
    for m, n in [(1, 1), (2, 1), (-1, 1), (0, 3)]:
        with pytest.raises(IndexOrderError):
            det_omega(H, m, n)
        with pytest.raises(IndexOrderError):
            det_omega_bruteforce(H, m, n)
    with pytest.raises(IndexOrderError):
        omega(H, 1, 0)


def test_bruteforce_against_loop_oracle(rng):
    l, a = random_hamiltonian(rng, 40)
    H = build_explicit(l, a)
    assert det_omega_bruteforce(H, 5, 33) == pytest.approx(
        det_omega_double_sum(l[5:33], a[5:33]), rel=1e-12)


def test_prefix_matches_bruteforce(rng):
    for _ in range(200):
        N = int(rng.integers(2, 200))
        H = build_explicit(*random_hamiltonian(rng, N))
        P = OmegaPrefix.from_hamiltonian(H)
        m = int(rng.integers(0, N - 1))
        n = int(rng.integers(m + 2, N + 1))
        ref = det_omega_bruteforce(H, m, n)
        assert abs(det_omega(P, m, n) - ref) <= 1e-10 * ref


def test_vectorised_queries(rng):
    H = build_explicit(*random_hamiltonian(rng, 60))
    m = np.array([0, 3, 10])
    n = np.array([5, 40, 60])
    d = det_omega(H, m, n)
    assert d.shape == (3,)
    assert d[1] == pytest.approx(det_omega(H, 3, 40))


def test_monotone_in_endpoints(rng):
    H = build_explicit(*random_hamiltonian(rng, 120))
    P = OmegaPrefix.from_hamiltonian(H)
    m = 20
    d = det_omega(P, np.full(100, m), np.arange(m + 1, 121))
    assert np.all(np.diff(d) >= -1e-12 * d[1:])
    n = 110
    d = det_omega(P, np.arange(0, n), np.full(n, n))
    assert np.all(np.diff(d) <= 1e-12 * d[:-1])


def two_interval_cert_instance():
    # l1 l2 sin^2(step) = 1e-4
    step = math.asin(0.01)
    return build_explicit([1.0, 1.0], [0.5, 0.5 + step])


def test_certificate_two_intervals():
    H = two_interval_cert_instance()
    assert certificate(H, 200.0).k == 1
    assert certificate(H, 50.0).k == 0


def test_certificate_total_determinant_insufficient(rng):
    H = build_explicit(*random_hamiltonian(rng, 30))
    total = det_omega(H, 0, 30)
    r = 0.5 / math.sqrt(total)
    assert certificate(H, r).k == 0


def test_certificate_gaps_verified(rng):
    H = build_explicit(*random_hamiltonian(rng, 3000))
    P = OmegaPrefix.from_hamiltonian(H)
    for r in (1.0, 10.0, 100.0):
        cert = certificate(P, r, c=2.0)
        assert cert.points[0] == 0
        assert np.all(np.diff(cert.points) > 0)
        assert np.all(cert.gap_dets >= cert.threshold)
        assert verify_against_prefix(cert, P)


def test_certificate_k_monotone_in_r(rng):
    H = build_explicit(*random_hamiltonian(rng, 2000))
    ks = [certificate(H, r).k for r in np.geomspace(0.5, 500, 25)]
    assert all(b >= a for a, b in zip(ks, ks[1:]))


def test_certificate_prefix_truncation(rng):
    H = build_explicit(*random_hamiltonian(rng, 500))
    cert = certificate(H, 30.0, N=200)
    assert cert.points[-1] <= 200
    assert cert.L == pytest.approx(H.x[200])


def test_certificate_json():
    cert = certificate(two_interval_cert_instance(), 200.0)
    d = json.loads(json.dumps(cert.to_dict()))
    assert set(d) == {"r", "c", "k", "points", "bracket"}
    assert d["points"] == [0, 2]


def test_lower_bound_examples():
    class C:
        pass

    c = C()
    c.k, c.r, c.c = 0, 1.0, 4.0
    assert lower_bound_value(c, 2.0) == pytest.approx(-math.log(2))
    c.k, c.r = 100, math.e
    assert lower_bound_value(c, 1.0) == pytest.approx(100 * math.log(2) - 1)
    base = lower_bound_value(c, 1.0)
    c.k = 101
    assert lower_bound_value(c, 1.0) - base == pytest.approx(math.log(2))


def test_certificate_bad_arguments():
    H = build_explicit([1, 1], [0, 1])
    with pytest.raises(ValueError):
        certificate(H, 0.0)
    with pytest.raises(ValueError):
        certificate(H, 1.0, c=-1)
