"""Exact rational dense linear algebra.

Everything here is exact: entries are `fractions.Fraction`, eliminations are
fraction-free on integer-scaled rows, and canonical forms are reduced row
echelon with sorted pivot columns, so equality of subspaces is literal
equality of entries.  No floating point appears anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd
from typing import Iterable, Optional, Sequence, Union

from .errors import DimensionMismatch

Rational = Fraction

RationalLike = Union[int, str, Fraction]


def rat(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        if "/" in value:
            p, q = value.split("/")
            return Fraction(int(p), int(q))
        return Fraction(int(value))
    raise TypeError(f"cannot interpret {value!r} as a rational")


def rat_str(value: Fraction) -> str:
    """Canonical serialisation: "p/q", or "p" when the denominator is 1."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ---------------------------------------------------------------------------
# integer sparse row helpers (elimination core)
# ---------------------------------------------------------------------------


def _axpy(arow: dict, brow: dict, a: int, b: int) -> dict:
    """a*arow + b*brow over integer sparse rows."""
    out = {c: a * v for c, v in arow.items()}
    for c, v in brow.items():
        w = out.get(c, 0) + b * v
        if w:
            out[c] = w
        elif c in out:
            del out[c]
    return out


def _strip_row(row: dict) -> dict:
    """Divide by the content and make the leading entry positive."""
    if not row:
        return row
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            break
    lead = min(row)
    if row[lead] < 0:
        g = -g
    if g not in (0, 1):
        row = {c: v // g for c, v in row.items()}
    return row


def _to_int_row(row: dict) -> dict:
    """Scale a sparse row of Fractions to a stripped integer row."""
    if not row:
        return {}
    mult = 1
    for v in row.values():
        d = v.denominator
        mult = mult // gcd(mult, d) * d
    return _strip_row({c: int(v * mult) for c, v in row.items()})


def _echelon(int_rows: Iterable[dict]) -> dict:
    """Forward elimination; maps pivot column -> stripped integer row."""
    pivots: dict = {}
    for row in int_rows:
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                pivots[lead] = _strip_row(row)
                break
            row = _strip_row(_axpy(row, piv, piv[lead], -row[lead]))
        # fully reduced rows vanish and are dropped
    return pivots


def _back_substitute(pivots: dict) -> dict:
    cols = sorted(pivots)
    for idx in range(len(cols) - 1, -1, -1):
        c = cols[idx]
        prow = pivots[c]
        for c2 in cols[:idx]:
            r = pivots[c2]
            if c in r:
                pivots[c2] = _strip_row(_axpy(r, prow, prow[c], -r[c]))
    return pivots


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


class ExactMatrix:
    """Immutable dense-semantics matrix of exact rationals, stored sparsely."""

    __slots__ = ("rows", "cols", "_rows", "_rref")

    def __init__(self, rows: int, cols: int,
                 entries: Optional[Iterable[tuple]] = None):
        if rows < 0 or cols < 0:
            raise DimensionMismatch("negative matrix dimensions")
        self.rows = rows
        self.cols = cols
        data = [dict() for _ in range(rows)]
        if entries:
            for i, j, v in entries:
                if not (0 <= i < rows and 0 <= j < cols):
                    raise DimensionMismatch(f"entry ({i},{j}) out of range")
                q = rat(v)
                if q:
                    data[i][j] = q
                elif j in data[i]:
                    del data[i][j]
        self._rows = data
        self._rref = None

    @classmethod
    def from_rows(cls, rows_data: Sequence[Sequence[RationalLike]],
                  cols: Optional[int] = None) -> "ExactMatrix":
        nrows = len(rows_data)
        ncols = cols if cols is not None else (len(rows_data[0]) if nrows else 0)
        entries = []
        for i, row in enumerate(rows_data):
            if len(row) != ncols:
                raise DimensionMismatch("ragged rows")
            for j, v in enumerate(row):
                entries.append((i, j, v))
        return cls(nrows, ncols, entries)

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls(n, n, [(i, i, 1) for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "ExactMatrix":
        return cls(rows, cols)

    @classmethod
    def from_row_dicts(cls, row_dicts: Sequence[dict], cols: int) -> "ExactMatrix":
        m = cls(len(row_dicts), cols)
        for i, rd in enumerate(row_dicts):
            m._rows[i] = {j: rat(v) for j, v in rd.items() if rat(v)}
        return m

    # -- access ------------------------------------------------------------

    def entry(self, i: int, j: int) -> Fraction:
        return self._rows[i].get(j, Fraction(0))

    def row_dict(self, i: int) -> dict:
        return dict(self._rows[i])

    def row_tuple(self, i: int) -> tuple:
        rd = self._rows[i]
        return tuple(rd.get(j, Fraction(0)) for j in range(self.cols))

    def to_rows(self) -> list:
        return [list(self.row_tuple(i)) for i in range(self.rows)]

    def nnz(self) -> int:
        return sum(len(r) for r in self._rows)

    def is_zero(self) -> bool:
        return all(not r for r in self._rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and \
            self._rows == other._rows

    def __hash__(self):
        return hash((self.rows, self.cols,
                     tuple(tuple(sorted(r.items())) for r in self._rows)))

    def __repr__(self):
        return f"ExactMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("add: shape mismatch")
        out = ExactMatrix(self.rows, self.cols)
        for i in range(self.rows):
            row = dict(self._rows[i])
            for j, v in other._rows[i].items():
                w = row.get(j, Fraction(0)) + v
                if w:
                    row[j] = w
                elif j in row:
                    del row[j]
            out._rows[i] = row
        return out

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + other.scale(-1)

    def scale(self, factor: RationalLike) -> "ExactMatrix":
        q = rat(factor)
        out = ExactMatrix(self.rows, self.cols)
        if q:
            for i in range(self.rows):
                out._rows[i] = {j: v * q for j, v in self._rows[i].items()}
        return out

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch("matmul: inner dimensions differ")
        out = ExactMatrix(self.rows, other.cols)
        orows = other._rows
        for i in range(self.rows):
            acc: dict = {}
            for k, v in self._rows[i].items():
                for j, w in orows[k].items():
                    t = acc.get(j, Fraction(0)) + v * w
                    if t:
                        acc[j] = t
                    elif j in acc:
                        del acc[j]
            out._rows[i] = acc
        return out

    def apply(self, vec: Sequence[RationalLike]) -> tuple:
        """Matrix-vector product, returning a tuple of Fractions."""
        if len(vec) != self.cols:
            raise DimensionMismatch("apply: vector length mismatch")
        v = [rat(x) for x in vec]
        out = []
        for i in range(self.rows):
            acc = Fraction(0)
            for j, w in self._rows[i].items():
                if v[j]:
                    acc += w * v[j]
            out.append(acc)
        return tuple(out)

    def transpose(self) -> "ExactMatrix":
        out = ExactMatrix(self.cols, self.rows)
        for i in range(self.rows):
            for j, v in self._rows[i].items():
                out._rows[j][i] = v
        return out

    def trace(self) -> Fraction:
        if self.rows != self.cols:
            raise DimensionMismatch("trace of non-square matrix")
        return sum((self._rows[i].get(i, Fraction(0)) for i in range(self.rows)),
                   Fraction(0))

    def commutator(self, other: "ExactMatrix") -> "ExactMatrix":
        return self @ other - other @ self

    def anticommutator(self, other: "ExactMatrix") -> "ExactMatrix":
        return self @ other + other @ self

    # -- canonical forms -----------------------------------------------------

    def rref(self) -> "ExactMatrix":
        """Reduced row echelon form with pivots sorted by column (canonical)."""
        return self._rref_data()[0]

    def pivot_columns(self) -> tuple:
        return self._rref_data()[1]

    def _rref_data(self):
        if self._rref is None:
            pivots = _back_substitute(_echelon(
                _to_int_row(r) for r in self._rows if r))
            cols = sorted(pivots)
            out = ExactMatrix(len(cols), self.cols)
            for i, c in enumerate(cols):
                prow = pivots[c]
                lead = prow[c]
                out._rows[i] = {j: Fraction(v, lead) for j, v in prow.items()}
            out._rref = (out, tuple(cols))
            self._rref = (out, tuple(cols))
        return self._rref

    def rank(self) -> int:
        return len(self.pivot_columns())

    def kernel(self) -> "Subspace":
        """Canonical basis of the right kernel {x : Mx = 0}."""
        rref, pivots = self._rref_data()
        pivot_set = set(pivots)
        free = [c for c in range(self.cols) if c not in pivot_set]
        basis_rows = []
        for f in free:
            vec = {f: Fraction(1)}
            for i, pc in enumerate(pivots):
                coef = rref._rows[i].get(f)
                if coef:
                    vec[pc] = -coef
            basis_rows.append(vec)
        mat = ExactMatrix(len(basis_rows), self.cols)
        for i, rd in enumerate(basis_rows):
            mat._rows[i] = rd
        return Subspace(self.cols, mat.rref())

    def row_space(self) -> "Subspace":
        return Subspace(self.cols, self.rref())

    def column_space(self) -> "Subspace":
        return self.transpose().row_space()

    def to_serialisable(self) -> list:
        return [[rat_str(self.entry(i, j)) for j in range(self.cols)]
                for i in range(self.rows)]


def vstack(mats: Sequence[ExactMatrix]) -> ExactMatrix:
    if not mats:
        return ExactMatrix(0, 0)
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise DimensionMismatch("vstack: column counts differ")
    out = ExactMatrix(sum(m.rows for m in mats), cols)
    i = 0
    for m in mats:
        for r in range(m.rows):
            out._rows[i] = dict(m._rows[r])
            i += 1
    return out


def hstack(mats: Sequence[ExactMatrix]) -> ExactMatrix:
    if not mats:
        return ExactMatrix(0, 0)
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise DimensionMismatch("hstack: row counts differ")
    out = ExactMatrix(rows, sum(m.cols for m in mats))
    for i in range(rows):
        row: dict = {}
        off = 0
        for m in mats:
            for j, v in m._rows[i].items():
                row[off + j] = v
            off += m.cols
        out._rows[i] = row
    return out


def block_diag(mats: Sequence[ExactMatrix]) -> ExactMatrix:
    out = ExactMatrix(sum(m.rows for m in mats), sum(m.cols for m in mats))
    roff = coff = 0
    for m in mats:
        for i in range(m.rows):
            out._rows[roff + i] = {coff + j: v for j, v in m._rows[i].items()}
        roff += m.rows
        coff += m.cols
    return out


def kron(a: ExactMatrix, b: ExactMatrix) -> ExactMatrix:
    out = ExactMatrix(a.rows * b.rows, a.cols * b.cols)
    for i in range(a.rows):
        for j, v in a._rows[i].items():
            for k in range(b.rows):
                row = out._rows[i * b.rows + k]
                for l, w in b._rows[k].items():
                    row[j * b.cols + l] = v * w
    return out


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------


def vec(values: Sequence[RationalLike]) -> tuple:
    return tuple(rat(v) for v in values)


def vec_add(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def vec_sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def vec_scale(a: Sequence[Fraction], c: RationalLike) -> tuple:
    q = rat(c)
    return tuple(x * q for x in a)


def vec_is_zero(a: Sequence[Fraction]) -> bool:
    return all(x == 0 for x in a)


def zero_vec(n: int) -> tuple:
    return (Fraction(0),) * n


def basis_vec(n: int, i: int) -> tuple:
    return tuple(Fraction(1) if j == i else Fraction(0) for j in range(n))


# ---------------------------------------------------------------------------
# subspaces
# ---------------------------------------------------------------------------


class Subspace:
    """A linear subspace held by its canonical RREF basis (one vector per row)."""

    __slots__ = ("ambient_dim", "basis")

    def __init__(self, ambient_dim: int, basis: ExactMatrix):
        if basis.cols != ambient_dim:
            raise DimensionMismatch("basis vectors have the wrong length")
        self.ambient_dim = ambient_dim
        self.basis = basis

    @classmethod
    def from_vectors(cls, ambient_dim: int,
                     vectors: Sequence[Sequence[RationalLike]]) -> "Subspace":
        mat = ExactMatrix(len(vectors), ambient_dim,
                          [(i, j, v) for i, row in enumerate(vectors)
                           for j, v in enumerate(row)])
        return cls(ambient_dim, mat.rref())

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ExactMatrix.identity(ambient_dim))

    @classmethod
    def trivial(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, ExactMatrix(0, ambient_dim))

    @property
    def dim(self) -> int:
        return self.basis.rows

    def basis_vectors(self) -> list:
        return [self.basis.row_tuple(i) for i in range(self.dim)]

    def coordinates(self, vector: Sequence[RationalLike]) -> Optional[tuple]:
        """Coefficients of `vector` against the RREF basis, or None."""
        v = [rat(x) for x in vector]
        if len(v) != self.ambient_dim:
            raise DimensionMismatch("vector has the wrong length")
        pivots = self.basis.pivot_columns()
        coords = tuple(v[c] for c in pivots)
        residual = list(v)
        for i, c in enumerate(coords):
            if c:
                for j, w in self.basis._rows[i].items():
                    residual[j] -= c * w
        if any(residual):
            return None
        return coords

    def contains(self, vector: Sequence[RationalLike]) -> bool:
        return self.coordinates(vector) is not None

    def contains_subspace(self, other: "Subspace") -> bool:
        return all(self.contains(other.basis.row_tuple(i))
                   for i in range(other.dim))

    def add(self, other: "Subspace") -> "Subspace":
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch("subspace sum: ambient dims differ")
        return Subspace(self.ambient_dim,
                        vstack([self.basis, other.basis]).rref())

    def intersect(self, other: "Subspace") -> "Subspace":
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch("intersection: ambient dims differ")
        # x = B1^T u = B2^T w; solve for (u, w) in the kernel of [B1^T | -B2^T]
        joint = hstack([self.basis.transpose(),
                        other.basis.transpose().scale(-1)])
        sol = joint.kernel()
        vectors = []
        for k in range(sol.dim):
            coeffs = sol.basis.row_tuple(k)[: self.dim]
            v = zero_vec(self.ambient_dim)
            for i, c in enumerate(coeffs):
                if c:
                    v = vec_add(v, vec_scale(self.basis.row_tuple(i), c))
            vectors.append(v)
        return Subspace.from_vectors(self.ambient_dim, vectors)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (self.ambient_dim == other.ambient_dim
                and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


# ---------------------------------------------------------------------------
# affine solving
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParticularSolution:
    x: tuple


@dataclass(frozen=True)
class NoSolution:
    """Inconsistency certificate: an echelon row with 0 = nonzero."""
    combination: tuple     # row of the echelon form over the A-columns (all 0)
    rhs: Fraction          # the corresponding nonzero right-hand side


def solve_affine(A: ExactMatrix, b: Sequence[RationalLike]):
    """Exact x with Ax = b, or a NoSolution certificate.

    The particular solution is canonical: free variables (relative to the
    sorted-pivot RREF) are set to zero.
    """
    if A.rows != len(b):
        raise DimensionMismatch("solve_affine: rhs length differs from rows")
    bcol = A.cols
    aug_rows = []
    for i in range(A.rows):
        row = dict(A._rows[i])
        q = rat(b[i])
        if q:
            row[bcol] = q
        aug_rows.append(row)
    aug = ExactMatrix(A.rows, A.cols + 1)
    for i, rd in enumerate(aug_rows):
        aug._rows[i] = rd
    rref, pivots = aug._rref_data()
    if bcol in pivots:
        i = pivots.index(bcol)
        row = rref.row_tuple(i)
        return NoSolution(combination=row[:bcol], rhs=row[bcol])
    x = [Fraction(0)] * A.cols
    for i, pc in enumerate(pivots):
        x[pc] = rref._rows[i].get(bcol, Fraction(0))
    return ParticularSolution(x=tuple(x))


def ldlt_pivots(M: ExactMatrix) -> list:
    """Pivots of the LDL^T decomposition of a symmetric matrix, without
    permutation.  Stops early (appending the offending pivot) when a pivot
    is <= 0, which certifies failure of positive-definiteness."""
    if M.rows != M.cols:
        raise DimensionMismatch("ldlt_pivots expects a square matrix")
    if M != M.transpose():
        raise DimensionMismatch("ldlt_pivots expects a symmetric matrix")
    n = M.rows
    work = [[M.entry(i, j) for j in range(n)] for i in range(n)]
    pivots = []
    for k in range(n):
        d = work[k][k]
        pivots.append(d)
        if d <= 0:
            return pivots
        for i in range(k + 1, n):
            f = work[i][k] / d
            if f:
                for j in range(k, n):
                    work[i][j] -= f * work[k][j]
    return pivots


def is_positive_definite(M: ExactMatrix) -> bool:
    if M.rows == 0:
        return True
    pivots = ldlt_pivots(M)
    return len(pivots) == M.rows and all(p > 0 for p in pivots)


# ---------------------------------------------------------------------------
# index tables for tensor powers
# ---------------------------------------------------------------------------


class IndexTable:
    """Bijection between flat coordinates and (multi-)indices."""

    __slots__ = ("kind", "dims", "tuples", "_lookup")

    def __init__(self, kind: str, dims: tuple, tuples: tuple):
        self.kind = kind
        self.dims = dims
        self.tuples = tuples
        self._lookup = {t: i for i, t in enumerate(tuples)}

    @property
    def size(self) -> int:
        return len(self.tuples)

    def index(self, *idx: int) -> int:
        if self.kind in ("sym2", "sym3", "wedge2"):
            key = tuple(sorted(idx))
        else:
            key = tuple(idx)
        return self._lookup[key]

    def sign(self, *idx: int) -> int:
        """Sign picked up by sorting (only nontrivial for wedge2)."""
        if self.kind == "wedge2":
            i, j = idx
            if i == j:
                return 0
            return 1 if i < j else -1
        return 1

    def __repr__(self):
        return f"IndexTable({self.kind}, dims={self.dims}, size={self.size})"


def tensor_index_maps(n: int, kind: str, n2: Optional[int] = None) -> IndexTable:
    """Bijective table between flat coordinates and (multi-)indices."""
    if n < 0 or (n2 is not None and n2 < 0):
        raise DimensionMismatch("negative dimension")
    if kind == "sym2":
        tuples = tuple((i, j) for i in range(n) for j in range(i, n))
        assert len(tuples) == n * (n + 1) // 2
        return IndexTable(kind, (n,), tuples)
    if kind == "wedge2":
        tuples = tuple((i, j) for i in range(n) for j in range(i + 1, n))
        assert len(tuples) == n * (n - 1) // 2
        return IndexTable(kind, (n,), tuples)
    if kind == "sym3":
        tuples = tuple((i, j, k) for i in range(n)
                       for j in range(i, n) for k in range(j, n))
        assert len(tuples) == comb(n + 2, 3)
        return IndexTable(kind, (n,), tuples)
    if kind == "full2":
        tuples = tuple((i, j) for i in range(n) for j in range(n))
        return IndexTable(kind, (n,), tuples)
    if kind == "mixed":
        if n2 is None:
            raise DimensionMismatch("mixed index table needs two dimensions")
        tuples = tuple((i, j) for i in range(n) for j in range(n2))
        return IndexTable(kind, (n, n2), tuples)
    raise ValueError(f"unknown index table kind {kind!r}")
