import math

import numpy as np
import pytest

from bellharness.qmoracle import (
    Observable,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    UnitVector3,
    chsh_operator,
    correlation_curve,
    expectation,
    joint_observable,
    linearity_check,
    singlet_correlation,
    singlet_state,
    spin_matrix,
)

TSIRELSON = 2.0 * math.sqrt(2.0)


def test_unit_vector_normalizes():
    v = UnitVector3(3.0, 0.0, 4.0)
    assert v.x == pytest.approx(0.6)
    assert v.z == pytest.approx(0.8)
    assert v.dot(v) == pytest.approx(1.0)


def test_unit_vector_rejects_zero():
    with pytest.raises(ValueError):
        UnitVector3(0.0, 0.0, 0.0)


def test_from_xz_degrees_convention():
    # 0 degrees is +z, 90 degrees is +x
    z = UnitVector3.from_xz_degrees(0.0)
    assert (z.x, z.y, z.z) == pytest.approx((0.0, 0.0, 1.0))
    x = UnitVector3.from_xz_degrees(90.0)
    assert (x.x, x.y, x.z) == pytest.approx((1.0, 0.0, 0.0))


def test_pauli_algebra():
    ident = np.eye(2)
    for p in (PAULI_X, PAULI_Y, PAULI_Z):
        assert np.allclose(p @ p, ident)
    assert np.allclose(PAULI_X @ PAULI_Y, 1j * PAULI_Z)


def test_observable_rejects_non_hermitian():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(ValueError):
        Observable(m)


def test_observable_rejects_wrong_shape():
    with pytest.raises(ValueError):
        Observable(np.eye(2, dtype=complex))


def test_singlet_normalized():
    v = singlet_state().amplitudes
    assert np.vdot(v, v).real == pytest.approx(1.0)
    assert v[0] == 0 and v[3] == 0


def test_correlation_is_minus_dot_product():
    rng = np.random.default_rng(20240902)
    for _ in range(1000):
        raw = rng.standard_normal((2, 3))
        a = UnitVector3(*raw[0])
        b = UnitVector3(*raw[1])
        assert abs(singlet_correlation(a, b) - (-a.dot(b))) < 1e-10


def test_correlation_at_45_degrees():
    a = UnitVector3.from_xz_degrees(0.0)
    b = UnitVector3.from_xz_degrees(45.0)
    assert singlet_correlation(a, b) == pytest.approx(-math.sqrt(2.0) / 2.0, abs=1e-12)


def test_equal_settings_give_minus_one():
    for angle in (0.0, 17.0, 90.0, 133.0):
        v = UnitVector3.from_xz_degrees(angle)
        assert singlet_correlation(v, v) == pytest.approx(-1.0, abs=1e-12)


def test_rotation_invariance():
    # E depends only on a.b: rotate both settings by a random rotation
    rng = np.random.default_rng(20240903)
    a = UnitVector3.from_xz_degrees(10.0)
    b = UnitVector3.from_xz_degrees(55.0)
    base = singlet_correlation(a, b)
    for _ in range(10):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        angle = rng.uniform(0, 2 * math.pi)
        k = np.array(
            [
                [0, -axis[2], axis[1]],
                [axis[2], 0, -axis[0]],
                [-axis[1], axis[0], 0],
            ]
        )
        rot = np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)
        ra = UnitVector3(*(rot @ a.as_array()))
        rb = UnitVector3(*(rot @ b.as_array()))
        assert abs(singlet_correlation(ra, rb) - base) < 1e-9


def test_canonical_angles_reach_minus_tsirelson():
    a1 = UnitVector3.from_xz_degrees(0.0)
    a2 = UnitVector3.from_xz_degrees(90.0)
    b1 = UnitVector3.from_xz_degrees(45.0)
    b2 = UnitVector3.from_xz_degrees(-45.0)
    state = singlet_state()
    s = (
        expectation(joint_observable(a1, b1), state)
        + expectation(joint_observable(a1, b2), state)
        + expectation(joint_observable(a2, b1), state)
        - expectation(joint_observable(a2, b2), state)
    )
    assert s == pytest.approx(-TSIRELSON, abs=1e-12)


def test_chsh_operator_norm_at_canonical_angles():
    op = chsh_operator(
        UnitVector3.from_xz_degrees(0.0),
        UnitVector3.from_xz_degrees(90.0),
        UnitVector3.from_xz_degrees(45.0),
        UnitVector3.from_xz_degrees(-45.0),
    )
    assert op.max_abs_eigenvalue() == pytest.approx(TSIRELSON, abs=1e-12)


def test_chsh_operator_norm_never_exceeds_tsirelson():
    rng = np.random.default_rng(20240904)
    worst = 0.0
    for _ in range(1000):
        raw = rng.standard_normal((4, 3))
        vs = [UnitVector3(*row) for row in raw]
        worst = max(worst, chsh_operator(*vs).max_abs_eigenvalue())
    assert worst <= TSIRELSON + 1e-9


def test_chsh_square_identity():
    # (A1B1 + A1B2 + A2B1 - A2B2)^2 = 4 - [A1,A2](x)[B1,B2] bounds the norm
    a1 = spin_matrix(UnitVector3.from_xz_degrees(0.0))
    a2 = spin_matrix(UnitVector3.from_xz_degrees(90.0))
    b1 = spin_matrix(UnitVector3.from_xz_degrees(45.0))
    b2 = spin_matrix(UnitVector3.from_xz_degrees(-45.0))
    c = (
        np.kron(a1, b1) + np.kron(a1, b2) + np.kron(a2, b1) - np.kron(a2, b2)
    )
    expected = 4 * np.eye(4) - np.kron(a1 @ a2 - a2 @ a1, b1 @ b2 - b2 @ b1)
    assert np.allclose(c @ c, expected, atol=1e-12)


def test_linearity_of_expectation():
    rng = np.random.default_rng(20240905)
    state = singlet_state()
    for _ in range(100):
        obs = []
        for _ in range(rng.integers(2, 5)):
            raw = rng.standard_normal((2, 3))
            obs.append(joint_observable(UnitVector3(*raw[0]), UnitVector3(*raw[1])))
        weights = [float(w) for w in rng.uniform(-2, 2, size=len(obs))]
        assert linearity_check(obs, weights, state) < 1e-10


def test_linearity_check_mismatched_lengths():
    state = singlet_state()
    obs = [joint_observable(UnitVector3.from_xz_degrees(0.0), UnitVector3.from_xz_degrees(45.0))]
    with pytest.raises(ValueError):
        linearity_check(obs, [1.0, 2.0], state)


def test_linearity_check_empty():
    with pytest.raises(ValueError):
        linearity_check([], [], singlet_state())


def test_swap_antisymmetric_settings():
    # singlet correlation is symmetric under swapping stations
    a = UnitVector3.from_xz_degrees(20.0)
    b = UnitVector3.from_xz_degrees(75.0)
    assert singlet_correlation(a, b) == pytest.approx(singlet_correlation(b, a), abs=1e-12)


def test_zz_observable_expectation():
    obs = Observable(np.kron(PAULI_Z, PAULI_Z))
    assert expectation(obs, singlet_state()) == pytest.approx(-1.0, abs=1e-12)


def test_correlation_curve_matches_cosine():
    angles = [0.0, 30.0, 45.0, 90.0, 120.0, 180.0]
    rows = correlation_curve(angles)
    assert [r[0] for r in rows] == angles
    for theta, value in rows:
        assert value == pytest.approx(-math.cos(math.radians(theta)), abs=1e-12)
