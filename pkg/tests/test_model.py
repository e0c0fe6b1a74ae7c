import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chiralrbm.model import (
    BlockTridiagonalOperator,
    ChiralOperator,
    anticommutator_norm,
    build_chiral_model,
    build_full_model,
    build_general_chiral_model,
    from_json,
    load,
    save,
    to_dense,
    to_json,
)
from chiralrbm.sampling import InvalidDimensionError, RngStream

BUILDERS = [build_full_model, build_chiral_model, build_general_chiral_model]


def dense_anticommutator(H):
    D = to_dense(H)
    P = ChiralOperator(H.n, H.W).to_dense()
    return np.linalg.norm(D @ P + P @ D)


def test_full_model_two_by_two_layout():
    H = build_full_model(2, 1, RngStream(4))
    v1, v2 = H.V[0][0, 0], H.V[1][0, 0]
    t = H.T[0][0, 0]
    expected = np.array([[v1, -np.conj(t)], [-t, v2]])
    assert np.array_equal(to_dense(H), expected)
    assert v1.imag == 0 and v2.imag == 0


def test_full_model_band_structure():
    H = build_full_model(4, 3, RngStream(1))
    D = to_dense(H)
    assert D.shape == (12, 12)
    for x in range(4):
        for y in range(4):
            block = D[3 * x:3 * x + 3, 3 * y:3 * y + 3]
            if abs(x - y) > 1:
                assert not np.any(block)
    assert np.array_equal(D[3:6, 0:3], -H.T[0])
    assert np.array_equal(D[0:3, 3:6], -H.T[0].conj().T)


@pytest.mark.parametrize("builder", BUILDERS)
@given(n=st.integers(2, 7), W=st.integers(1, 4), seed=st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_every_builder_exactly_hermitian(builder, n, W, seed):
    H = builder(n, W, RngStream(seed))
    D = to_dense(H)
    assert np.array_equal(D, D.conj().T)
    assert H.N == n * W
    assert all(np.array_equal(v, v.conj().T) for v in H.V)


def test_chiral_model_structure():
    H = build_chiral_model(2, 2, RngStream(0))
    assert len(H.T) == 1 and np.array_equal(H.T[0], np.eye(2))
    assert all(not np.any(v) for v in H.V)
    H = build_chiral_model(4, 2, RngStream(0))
    assert np.array_equal(H.T[0], np.eye(2)) and np.array_equal(H.T[2], np.eye(2))
    assert not np.array_equal(H.T[1], np.eye(2))


def test_chiral_dense_n2_w1():
    H = build_chiral_model(2, 1, RngStream(0))
    assert np.array_equal(to_dense(H), np.array([[0, -1], [-1, 0]], dtype=complex))


def test_general_chiral_n2_w1():
    H = build_general_chiral_model(2, 1, RngStream(8))
    t = H.T[0][0, 0]
    assert np.array_equal(to_dense(H), np.array([[0, -np.conj(t)], [-t, 0]]))


def test_general_chiral_odd_n_singular():
    H = build_general_chiral_model(3, 2, RngStream(2))
    s = np.linalg.svd(to_dense(H), compute_uv=False)
    # sublattice imbalance: 2 blocks of one parity vs 1 of the other leaves a W-dim kernel
    assert np.sum(s < 1e-12 * s[0]) == 2


@pytest.mark.parametrize("n", [1, 0])
def test_builders_reject_small_n(n):
    for builder in BUILDERS:
        with pytest.raises(InvalidDimensionError):
            builder(n, 2, RngStream(0))


class TestChiralSymmetry:
    @pytest.mark.parametrize("builder", [build_chiral_model, build_general_chiral_model])
    @pytest.mark.parametrize("n", [2, 3, 6])
    def test_chiral_anticommutes(self, builder, n):
        H = builder(n, 3, RngStream(n))
        assert anticommutator_norm(H) == 0.0
        assert dense_anticommutator(H) == 0.0

    def test_full_model_breaks_symmetry(self):
        H = build_full_model(4, 3, RngStream(0))
        assert anticommutator_norm(H) > 0
        expected = 2 * np.sqrt(sum(np.linalg.norm(v) ** 2 for v in H.V))
        assert np.isclose(anticommutator_norm(H), expected)
        assert np.isclose(anticommutator_norm(H), dense_anticommutator(H))

    def test_zero_operator(self):
        H = BlockTridiagonalOperator([np.zeros((2, 2))] * 3, [np.zeros((2, 2))] * 2)
        assert anticommutator_norm(H) == 0.0

    def test_single_nonzero_diagonal_block(self):
        H0 = build_chiral_model(4, 2, RngStream(0))
        V = list(H0.V)
        V[2] = np.diag([1e-3, 0.0])
        assert anticommutator_norm(BlockTridiagonalOperator(V, H0.T)) > 0

    @pytest.mark.parametrize("n,W", [(1, 1), (4, 2), (5, 3)])
    def test_grading_is_involution(self, n, W):
        P = ChiralOperator(n, W).to_dense()
        assert np.array_equal(P @ P, np.eye(n * W))
        assert np.array_equal(P, P.conj().T)
        assert P[0, 0] == -1


class TestOperatorValue:
    def test_blocks_are_read_only(self):
        H = build_full_model(3, 2, RngStream(0))
        with pytest.raises(ValueError):
            H.V[0][0, 0] = 1

    def test_rejects_mismatched_lists(self):
        with pytest.raises(InvalidDimensionError):
            BlockTridiagonalOperator([np.zeros((2, 2))] * 3, [np.zeros((2, 2))])
        with pytest.raises(InvalidDimensionError):
            BlockTridiagonalOperator([np.zeros((2, 2)), np.zeros((3, 3))], [np.zeros((2, 2))])


class TestSerialization:
    def test_json_round_trip_exact(self, tmp_path):
        H = build_full_model(3, 2, RngStream(6))
        path = tmp_path / "h.json"
        save(H, path, meta={"seed": 6})
        back = load(path)
        assert all(np.array_equal(a, b) for a, b in zip(H.V, back.V))
        assert all(np.array_equal(a, b) for a, b in zip(H.T, back.T))
        doc = json.loads(path.read_text())
        assert doc["meta"] == {"seed": 6}

    def test_layout_row_major_pairs(self):
        V = [np.array([[1, 2 + 3j], [2 - 3j, 4]])] * 2
        T = [np.array([[5j, 6], [7, 8]])]
        doc = to_json(BlockTridiagonalOperator(V, T))
        assert doc["n"] == 2 and doc["W"] == 2
        assert doc["T"][0] == [[0.0, 5.0], [6.0, 0.0], [7.0, 0.0], [8.0, 0.0]]
        assert doc["V"][0][1] == [2.0, 3.0]

    def test_rejects_foreign_document(self):
        with pytest.raises(ValueError):
            from_json({"format": "something-else"})
