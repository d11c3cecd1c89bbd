import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_max_assignment
from insertkit.errors import DegenerateEmbeddingError, NumericalError, ShapeError
from insertkit.losses import ffip_loss
from insertkit.matching import (
    Face,
    FaceSet,
    MatchResult,
    hungarian_max,
    load_faceset_json,
    match_faces,
    similarity_matrix,
)


def faceset(*embeddings):
    return FaceSet(tuple(Face(box=None, embedding=tuple(e)) for e in embeddings))


class TestFaceSet:
    def test_zero_embedding_rejected(self):
        with pytest.raises(DegenerateEmbeddingError):
            Face(box=None, embedding=(0.0, 0.0))

    def test_mixed_dims_rejected(self):
        with pytest.raises(ShapeError):
            faceset([1.0, 0.0], [1.0, 0.0, 0.0])


class TestSimilarityMatrix:
    def test_axis_vectors(self):
        S = similarity_matrix(faceset([1.0, 0.0]), faceset([1.0, 0.0], [0.0, 1.0]))
        assert np.array_equal(S, [[1.0, 0.0]])

    def test_self_similarity_symmetric(self):
        fs = faceset([1.0, 2.0], [3.0, -1.0])
        S = similarity_matrix(fs, fs)
        assert np.allclose(S, S.T)
        assert np.allclose(np.diag(S), 1.0)

    def test_entries_in_range(self, rng):
        pred = faceset(*[rng.standard_normal(4) for _ in range(3)])
        src = faceset(*[rng.standard_normal(4) for _ in range(5)])
        S = similarity_matrix(pred, src)
        assert np.all(S >= -1.0) and np.all(S <= 1.0)

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            similarity_matrix(faceset([1.0, 0.0]), faceset([1.0, 0.0, 0.0]))


class TestHungarian:
    def test_fixture_diagonal(self):
        result = hungarian_max(np.array([[0.9, 0.1], [0.2, 0.8]]))
        assert result.pairs == ((0, 0), (1, 1))
        assert result.total == pytest.approx(1.7, abs=1e-12)

    def test_fixture_antidiagonal(self):
        result = hungarian_max(np.array([[0.1, 0.9], [0.95, 0.2]]))
        assert result.pairs == ((0, 1), (1, 0))
        assert result.total == pytest.approx(1.85, abs=1e-12)

    def test_identity_matrix(self):
        n = 5
        result = hungarian_max(np.eye(n))
        assert result.pairs == tuple((i, i) for i in range(n))
        assert result.total == n

    def test_empty(self):
        assert hungarian_max(np.zeros((0, 3))).pairs == ()
        assert hungarian_max(np.zeros((3, 0))).total == 0.0

    def test_non_finite_rejected(self):
        with pytest.raises(NumericalError):
            hungarian_max(np.array([[1.0, np.nan], [0.0, 1.0]]))

    def test_one_to_one_and_size(self, rng):
        for _ in range(50):
            n_p, n_s = rng.integers(1, 7, size=2)
            S = rng.standard_normal((n_p, n_s))
            result = hungarian_max(S)
            assert len(result.pairs) == min(n_p, n_s)
            assert len({i for i, _ in result.pairs}) == len(result.pairs)
            assert len({j for _, j in result.pairs}) == len(result.pairs)
            assert result.total == pytest.approx(sum(result.similarities), abs=1e-12)

    def test_matches_brute_force_square(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            S = rng.standard_normal((n, n))
            assert hungarian_max(S).total == pytest.approx(
                brute_force_max_assignment(S), abs=1e-9
            )

    def test_matches_brute_force_rectangular(self, rng):
        for _ in range(60):
            n_p, n_s = rng.integers(1, 6, size=2)
            S = rng.standard_normal((n_p, n_s))
            assert hungarian_max(S).total == pytest.approx(
                brute_force_max_assignment(S), abs=1e-9
            )

    @given(seed=st.integers(0, 2**31), const=st.floats(-5, 5))
    @settings(max_examples=40, deadline=None)
    def test_constant_shift_invariance(self, seed, const):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        S = rng.standard_normal((n, n))
        base = hungarian_max(S)
        shifted = hungarian_max(S + const)
        assert shifted.total == pytest.approx(base.total + n * const, abs=1e-9)
        # returned pairing still optimal on the shifted matrix
        assert shifted.total == pytest.approx(brute_force_max_assignment(S + const), abs=1e-9)

    def test_minimizes_ffip_over_all_pairings(self, rng):
        # maximizing the similarity total minimizes the identity loss
        for _ in range(20):
            n = int(rng.integers(1, 6))
            pred = [rng.standard_normal(4) for _ in range(n)]
            src = [rng.standard_normal(4) for _ in range(n)]
            pred_set = faceset(*pred)
            src_set = faceset(*src)
            matches = match_faces(pred_set, src_set)
            chosen = ffip_loss(pred, src, matches).value
            for perm in itertools.permutations(range(n)):
                alt = MatchResult(
                    pairs=tuple((i, perm[i]) for i in range(n)),
                    similarities=(0.0,) * n,
                    total=0.0,
                )
                assert chosen <= ffip_loss(pred, src, alt).value + 1e-12

    def test_deterministic(self, rng):
        S = rng.standard_normal((5, 5))
        assert hungarian_max(S) == hungarian_max(S.copy())


class TestFaceSetJson:
    def test_round_trip(self, tmp_path):
        doc = {
            "faces": [
                {"box": [0, 0, 4, 4], "embedding": [1.0, 0.0]},
                {"box": None, "embedding": [0.5, 0.5]},
            ]
        }
        path = tmp_path / "faces.json"
        path.write_text(json.dumps(doc))
        fs = load_faceset_json(path)
        assert len(fs) == 2
        assert fs.faces[0].embedding == (1.0, 0.0)
        assert fs.faces[1].box is None
