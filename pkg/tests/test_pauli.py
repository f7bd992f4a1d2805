"""Pauli-string algebra: phases, weights, commutation, matrix oracle."""
import numpy as np
import pytest

from dualshadows.pauli import PauliString


def random_pauli(n, rng):
    return PauliString(
        n,
        int(rng.integers(0, 1 << n)),
        int(rng.integers(0, 1 << n)),
        int(rng.integers(0, 4)),
    )


def test_single_qubit_products():
    x = PauliString.from_ops(1, {0: "X"})
    y = PauliString.from_ops(1, {0: "Y"})
    z = PauliString.from_ops(1, {0: "Z"})
    # X Z = -i Y
    assert (x * z) == y.scaled(3)
    # Z X = +i Y
    assert (z * x) == y.scaled(1)
    # X Y = i Z
    assert (x * y) == z.scaled(1)


def test_hermitian_square_is_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = random_pauli(5, rng)
        if not p.is_hermitian():
            p = p.scaled(1)
        sq = p * p
        assert sq.is_identity() and sq.phase == 0


def test_disjoint_factors_commute_with_plus_phase():
    a = PauliString.from_ops(2, {0: "X"})
    b = PauliString.from_ops(2, {1: "Z"})
    prod = a * b
    assert prod == PauliString.from_ops(2, {0: "X", 1: "Z"})
    assert prod.phase == 0


def test_mul_matches_matrix_oracle():
    rng = np.random.default_rng(11)
    for _ in range(40):
        p, q = random_pauli(4, rng), random_pauli(4, rng)
        got = (p * q).to_matrix()
        want = p.to_matrix() @ q.to_matrix()
        assert np.allclose(got, want, atol=1e-12)


def test_mul_associative():
    rng = np.random.default_rng(13)
    for _ in range(40):
        p, q, r = (random_pauli(6, rng) for _ in range(3))
        assert (p * q) * r == p * (q * r)


def test_weights_examples():
    assert PauliString.identity(6).weights() == (6, 0, 0, 0)
    p = PauliString.from_ops(6, {1: "X", 2: "X"})
    assert p.weights() == (4, 2, 0, 0)
    assert p.w_xy == 2
    q = PauliString.from_ops(4, {1: "Y", 2: "Z"})
    assert q.weights() == (2, 0, 1, 1)
    assert q.w_xy == 1


def test_weights_sum_to_n():
    rng = np.random.default_rng(17)
    for _ in range(30):
        p = random_pauli(8, rng)
        w = p.weights()
        assert all(c >= 0 for c in w) and sum(w) == 8
        assert p.weight == 8 - w[0]


def test_commutes_examples():
    yx = PauliString.from_ops(2, {0: "Y", 1: "X"})
    xy = PauliString.from_ops(2, {0: "X", 1: "Y"})
    assert yx.commutes(xy)
    x = PauliString.from_ops(1, {0: "X"})
    z = PauliString.from_ops(1, {0: "Z"})
    assert not x.commutes(z)
    assert z.commutes(PauliString.identity(1))


def test_commutes_matches_matrix_oracle():
    rng = np.random.default_rng(19)
    for _ in range(40):
        p, q = random_pauli(4, rng), random_pauli(4, rng)
        mp, mq = p.to_matrix(), q.to_matrix()
        comm = np.linalg.norm(mp @ mq - mq @ mp)
        assert p.commutes(q) == (comm < 1e-12)


def test_text_roundtrip():
    rng = np.random.default_rng(23)
    for _ in range(30):
        p = random_pauli(9, rng)
        assert PauliString.from_text(p.to_text(), 9) == p
    assert PauliString.from_text("-i Y0 Y2", 3) == PauliString.from_ops(
        3, {0: "Y", 2: "Y"}, phase=3
    )


def test_validation_errors():
    with pytest.raises(ValueError):
        PauliString(2, x=4)  # mask exceeds register
    with pytest.raises(ValueError):
        PauliString.from_text("X0", 2)  # missing phase tag
    with pytest.raises(ValueError):
        PauliString.from_text("+1 X0 Z0", 2)  # duplicate qubit
    with pytest.raises(ValueError):
        PauliString.identity(2) * PauliString.identity(3)
