import json
import math

import numpy as np
import pytest

from nevmat.core import (
    FamilySpec,
    HamburgerHamiltonian,
    build_explicit,
    build_family,
    tail_length,
)
from nevmat.errors import DegenerateAngleStepError, NonPositiveLengthError
from nevmat.regvar import RegVarSpec

from oracles import random_hamiltonian


def test_single_interval():
    H = build_explicit([1.0], [math.pi / 2])
    assert H.L == 1.0
    np.testing.assert_array_equal(H.x, [0.0, 1.0])


def test_equal_angles_are_degenerate():
    with pytest.raises(DegenerateAngleStepError) as info:
        build_explicit([1, 1], [math.pi / 2, math.pi / 2])
    assert info.value.index == 1


def test_angles_differing_by_pi_are_degenerate():
    with pytest.raises(DegenerateAngleStepError):
        build_explicit([1, 1], [0.0, math.pi])


def test_cumulative_sums():
    H = build_explicit([1, 2, 3], [0, math.pi / 4, math.pi / 2])
    np.testing.assert_array_equal(H.x, [0, 1, 3, 6])
    assert H.L == 6


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_nonpositive_length(bad):
    with pytest.raises(NonPositiveLengthError):
        build_explicit([1, bad], [0, 1])


def test_partition_matches_sum(rng):
    l, a = random_hamiltonian(rng, 500)
    H = build_explicit(l, a)
    assert np.all(np.diff(H.x) > 0)
    assert abs(H.x[-1] - l.sum()) <= 1e-12 * l.sum()


def test_xi_accessor():
    H = build_explicit([1, 1], [0.0, math.pi / 2])
    np.testing.assert_allclose(H.xi(1), [1, 0])
    np.testing.assert_allclose(H.xi(2), [0, 1], atol=1e-16)


def test_arrays_are_read_only():
    H = build_explicit([1, 2], [0, 1])
    with pytest.raises(ValueError):
        H.lengths[0] = 5


@pytest.mark.parametrize("m,expected", [(1, 5.0), (3, 0.0), (0, 6.0)])
def test_tail_length(m, expected):
    H = build_explicit([1, 2, 3], [0, 1, 2])
    assert tail_length(H, m) == expected


def test_tail_length_range():
    H = build_explicit([1, 2, 3], [0, 1, 2])
    with pytest.raises(ValueError):
        tail_length(H, 4)


LAWS = dict(length_law=RegVarSpec(1.0, -2.0), increment_law=RegVarSpec(1.0, -0.5))


def test_monotone_family():
    H = build_family(FamilySpec(**LAWS, schedule="monotone"), 3)
    np.testing.assert_allclose(H.lengths, [1, 1 / 4, 1 / 9])
    p = math.pi / 2
    np.testing.assert_allclose(H.angles, [p, p + 1, p + 1 + 2 ** -0.5])


def test_alternating_family():
    H = build_family(FamilySpec(**LAWS, schedule="alternating"), 3)
    p = math.pi / 2
    np.testing.assert_allclose(H.angles, [p, p - 1, p - 1 + 2 ** -0.5])


def test_two_point_family():
    spec = FamilySpec(**LAWS, schedule="two-point", phi1=0.0, theta=math.pi / 3)
    H = build_family(spec, 4)
    np.testing.assert_allclose(H.angles, [0, math.pi / 3, 0, math.pi / 3])


def test_monotone_family_is_strictly_increasing():
    spec = FamilySpec(RegVarSpec(1, -1.25), RegVarSpec(1, -0.5))
    H = build_family(spec, 10_000)
    assert np.all(np.diff(H.angles) > 0)


def test_family_is_deterministic():
    spec = FamilySpec(RegVarSpec(1, -1.25), RegVarSpec(1, -0.5), "alternating")
    np.testing.assert_array_equal(build_family(spec, 100).angles, build_family(spec, 100).angles)


def test_family_start_length_override():
    spec = FamilySpec(RegVarSpec(1, -1.25), l1=3.0)
    assert build_family(spec, 5).lengths[0] == 3.0


def test_family_rejects_divergent_lengths():
    with pytest.raises(ValueError):
        FamilySpec(RegVarSpec(1, -1.0))


def test_family_json_round_trip():
    text = ('{"lengthLaw":{"type":"power","c":1.0,"delta":1.25,"logExp":0.0},'
            '"angleSchedule":"monotone","incrementLaw":{"c":1,"delta":0.5},'
            '"phi1":1.5707963,"l1":1.0}')
    spec = FamilySpec.from_json(text)
    assert spec.length_law.index == -1.25
    assert spec.increment_law.index == -0.5
    assert FamilySpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_hamiltonian_json_round_trip(rng):
    l, a = random_hamiltonian(rng, 20)
    H = build_explicit(l, a)
    H2 = HamburgerHamiltonian.from_dict(json.loads(json.dumps(H.to_dict())))
    np.testing.assert_array_equal(H2.lengths, H.lengths)
    np.testing.assert_array_equal(H2.angles, H.angles)


def test_from_steps_keeps_tiny_increments():
    H = HamburgerHamiltonian.from_steps([1, 1, 1], math.pi / 2, [1e-200, 0.5])
    assert H.steps[0] == 1e-200
    with pytest.raises(DegenerateAngleStepError):
        HamburgerHamiltonian.from_steps([1, 1], 0.0, [0.0])


def test_truncate_keeps_steps():
    H = HamburgerHamiltonian.from_steps([1, 1, 1], 0.0, [1e-200, 0.5])
    T = H.truncate(2)
    assert T.N == 2 and T.steps[0] == 1e-200
