from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from spencerkit.errors import DimensionMismatch
from spencerkit.exactla import (ExactMatrix, NoSolution, ParticularSolution,
                                Subspace, is_positive_definite, ldlt_pivots,
                                rat, rat_str, solve_affine,
                                tensor_index_maps, vec, vec_is_zero, vstack)


def test_rational_serialisation():
    assert rat_str(Fraction(3, 4)) == "3/4"
    assert rat_str(Fraction(-7, 2)) == "-7/2"
    assert rat_str(Fraction(5)) == "5"
    assert rat("3/4") == Fraction(3, 4)
    assert rat("-2") == Fraction(-2)
    assert rat(Fraction(1, 3)) == Fraction(1, 3)


class TestKernel:
    def test_identity_kernel_trivial(self):
        assert ExactMatrix.identity(3).kernel().dim == 0

    def test_zero_map_kernel_full(self):
        assert ExactMatrix.zeros(2, 5).kernel().dim == 5

    def test_rank_one_kernel(self):
        # hand Gaussian elimination: kernel spanned by (-2, 1)
        k = ExactMatrix.from_rows([[1, 2], [2, 4]]).kernel()
        assert k.dim == 1
        assert k.basis.to_rows() == [[Fraction(1), Fraction(-1, 2)]]


class TestSolveAffine:
    def test_identity(self):
        sol = solve_affine(ExactMatrix.identity(3), vec([5, -2, 7]))
        assert isinstance(sol, ParticularSolution)
        assert sol.x == vec([5, -2, 7])

    def test_trivial_system(self):
        sol = solve_affine(ExactMatrix.zeros(2, 2), vec([0, 0]))
        assert sol.x == vec([0, 0])

    def test_back_substitution(self):
        sol = solve_affine(ExactMatrix.from_rows([[1, 1], [0, 1]]),
                           vec([3, 1]))
        assert sol.x == vec([2, 1])

    def test_inconsistent(self):
        sol = solve_affine(ExactMatrix.from_rows([[1, 1], [1, 1]]),
                           vec([1, 2]))
        assert isinstance(sol, NoSolution)
        assert vec_is_zero(sol.combination)
        assert sol.rhs != 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_affine(ExactMatrix.identity(2), vec([1, 2, 3]))


class TestIndexTables:
    def test_sym2(self):
        table = tensor_index_maps(2, "sym2")
        assert table.tuples == ((0, 0), (0, 1), (1, 1))
        assert table.index(1, 0) == 1  # sorted lookup

    def test_wedge2(self):
        assert tensor_index_maps(3, "wedge2").size == 3

    def test_sym3_count(self):
        assert tensor_index_maps(4, "sym3").size == 20

    def test_full2_and_mixed(self):
        assert tensor_index_maps(3, "full2").size == 9
        assert tensor_index_maps(2, "mixed", 5).size == 10

    def test_wedge_sign(self):
        table = tensor_index_maps(4, "wedge2")
        assert table.sign(0, 1) == 1
        assert table.sign(1, 0) == -1
        assert table.sign(2, 2) == 0


small_entries = st.integers(min_value=-6, max_value=6)


@st.composite
def matrices(draw, max_dim=5):
    rows = draw(st.integers(min_value=0, max_value=max_dim))
    cols = draw(st.integers(min_value=0, max_value=max_dim))
    data = draw(st.lists(st.lists(small_entries, min_size=cols,
                                  max_size=cols),
                         min_size=rows, max_size=rows))
    return ExactMatrix.from_rows(data, cols=cols)


@settings(max_examples=120, deadline=None)
@given(matrices())
def test_kernel_is_annihilated(m):
    kernel = m.kernel()
    for i in range(kernel.dim):
        assert vec_is_zero(m.apply(kernel.basis.row_tuple(i)))


@settings(max_examples=120, deadline=None)
@given(matrices())
def test_rank_nullity(m):
    assert m.rank() + m.kernel().dim == m.cols


@settings(max_examples=120, deadline=None)
@given(matrices())
def test_rref_idempotent(m):
    r = m.rref()
    assert r.rref() == r


@settings(max_examples=120, deadline=None)
@given(matrices(max_dim=4),
       st.lists(small_entries, min_size=0, max_size=4))
def test_solvability_matches_rank_criterion(m, rhs):
    rhs = rhs[:m.rows] + [0] * (m.rows - len(rhs))
    b = vec(rhs)
    augmented = ExactMatrix.from_rows(
        [list(m.row_tuple(i)) + [b[i]] for i in range(m.rows)],
        cols=m.cols + 1)
    sol = solve_affine(m, b)
    if isinstance(sol, NoSolution):
        assert augmented.rank() > m.rank()
    else:
        assert augmented.rank() == m.rank()
        assert m.apply(sol.x) == b


class TestSubspace:
    def test_coordinates_and_containment(self):
        sub = Subspace.from_vectors(3, [[1, 0, 1], [0, 1, 1]])
        assert sub.contains([1, 1, 2])
        assert not sub.contains([1, 1, 0])
        coords = sub.coordinates([2, -1, 1])
        assert coords == (Fraction(2), Fraction(-1))

    def test_sum_and_intersection(self):
        a = Subspace.from_vectors(3, [[1, 0, 0], [0, 1, 0]])
        b = Subspace.from_vectors(3, [[0, 1, 0], [0, 0, 1]])
        assert a.add(b).dim == 3
        meet = a.intersect(b)
        assert meet.dim == 1
        assert meet.contains([0, 1, 0])

    def test_canonical_equality(self):
        a = Subspace.from_vectors(2, [[2, 4]])
        b = Subspace.from_vectors(2, [[1, 2]])
        assert a == b
        assert a.basis.to_rows() == b.basis.to_rows()

    def test_matrix_ops(self):
        m = ExactMatrix.from_rows([[1, 2], [3, 4]])
        assert (m @ ExactMatrix.identity(2)) == m
        assert (m - m).is_zero()
        assert m.transpose().transpose() == m
        assert m.trace() == 5
        stacked = vstack([m, ExactMatrix.identity(2)])
        assert stacked.rows == 4


class TestPositiveDefiniteness:
    def test_positive_definite(self):
        m = ExactMatrix.from_rows([[2, 1], [1, 2]])
        assert is_positive_definite(m)
        assert all(p > 0 for p in ldlt_pivots(m))

    def test_indefinite(self):
        m = ExactMatrix.from_rows([[1, 2], [2, 1]])
        assert not is_positive_definite(m)

    def test_semi_definite_rejected(self):
        m = ExactMatrix.from_rows([[1, 1], [1, 1]])
        assert not is_positive_definite(m)
