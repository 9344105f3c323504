"""Schur and R-symmetry algebras, the extended flat model superalgebra, and
graded subalgebras with their closure and homogeneity checks."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .certs import Certificate
from .cliffspin import CliffordRep, DiracCurrent, spin_generators
from .errors import (DimensionMismatch, JacobiViolation, NotClosed,
                     NotCompactForm)
from .exactla import (ExactMatrix, Subspace, is_positive_definite,
                      rat_str, tensor_index_maps, vec_add,
                      vec_scale, zero_vec)


# ---------------------------------------------------------------------------
# subalgebras of End(S)
# ---------------------------------------------------------------------------


class EndoSubalgebra:
    """A commutator-closed subspace of End(S), held by a canonical basis."""

    def __init__(self, spinor_dim: int, basis: Subspace):
        self.spinor_dim = spinor_dim
        self.basis = basis
        self.matrices: List[ExactMatrix] = [
            _unflatten(spinor_dim, basis.basis.row_tuple(i))
            for i in range(basis.dim)
        ]
        self.bracket_table: List[List[tuple]] = []
        for a in self.matrices:
            row = []
            for b in self.matrices:
                coords = self.coordinates(a.commutator(b))
                if coords is None:
                    raise NotClosed("endomorphism algebra not closed under "
                                    "commutator",
                                    witness=a.commutator(b).to_serialisable())
                row.append(coords)
            self.bracket_table.append(row)

    @classmethod
    def from_matrices(cls, spinor_dim: int,
                      matrices: Sequence[ExactMatrix]) -> "EndoSubalgebra":
        vectors = [_flatten(m) for m in matrices]
        return cls(spinor_dim, Subspace.from_vectors(spinor_dim ** 2, vectors))

    @property
    def dim(self) -> int:
        return self.basis.dim

    def coordinates(self, mat: ExactMatrix) -> Optional[tuple]:
        return self.basis.coordinates(_flatten(mat))

    def contains(self, mat: ExactMatrix) -> bool:
        return self.coordinates(mat) is not None

    def matrix_of(self, coords: Sequence[Fraction]) -> ExactMatrix:
        out = ExactMatrix.zeros(self.spinor_dim, self.spinor_dim)
        for c, m in zip(coords, self.matrices):
            if c:
                out = out + m.scale(c)
        return out

    def bracket_coords(self, x: Sequence[Fraction],
                       y: Sequence[Fraction]) -> tuple:
        out = zero_vec(self.dim)
        for i, xi in enumerate(x):
            if not xi:
                continue
            for j, yj in enumerate(y):
                if yj:
                    out = vec_add(out, vec_scale(self.bracket_table[i][j],
                                                 xi * yj))
        return out

    def __repr__(self):
        return f"EndoSubalgebra(dim={self.dim}, on S^{self.spinor_dim})"


def _flatten(mat: ExactMatrix) -> tuple:
    return tuple(mat.entry(i, j) for i in range(mat.rows)
                 for j in range(mat.cols))


def _unflatten(n: int, flat: Sequence[Fraction]) -> ExactMatrix:
    return ExactMatrix(n, n, [(i, j, flat[i * n + j])
                              for i in range(n) for j in range(n)
                              if flat[i * n + j]])


def compute_schur_algebra(rep: CliffordRep) -> EndoSubalgebra:
    """Canonical basis of the commutant of the spin generators in End(S)."""
    ns = rep.spinor_dim
    full2 = tensor_index_maps(ns, "full2")
    gens = spin_generators(rep)
    entries: Dict[tuple, Fraction] = {}
    nrow = 0
    for sig in gens.sigma:
        # [a, sigma]_{ij} = sum_k a_ik sigma_kj - sigma_ik a_kj
        for i in range(ns):
            for j in range(ns):
                for k in range(ns):
                    v = sig.entry(k, j)
                    if v:
                        key = (nrow, full2.index(i, k))
                        entries[key] = entries.get(key, Fraction(0)) + v
                    v = sig.entry(i, k)
                    if v:
                        key = (nrow, full2.index(k, j))
                        entries[key] = entries.get(key, Fraction(0)) - v
                nrow += 1
    system = ExactMatrix(nrow, ns * ns,
                         [(r, c, v) for (r, c), v in entries.items() if v])
    return EndoSubalgebra(ns, system.kernel())


def compute_r_symmetry_algebra(rep: CliffordRep,
                               current: DiracCurrent) -> EndoSubalgebra:
    """Elements of the Schur algebra infinitesimally preserving the current:
    kappa(a x, y) + kappa(x, a y) = 0 for all spinors."""
    schur = compute_schur_algebra(rep)
    ns = rep.spinor_dim
    n = rep.dim_v
    if schur.dim == 0:
        return schur
    entries: Dict[tuple, Fraction] = {}
    nrow = 0
    for a in range(n):
        K = current.components[a]
        for i in range(ns):
            for j in range(ns):
                for p, B in enumerate(schur.matrices):
                    acc = Fraction(0)
                    for k in range(ns):
                        bk = B.entry(k, i)
                        if bk:
                            acc += bk * K.entry(k, j)
                        bk = B.entry(k, j)
                        if bk:
                            acc += K.entry(i, k) * bk
                    if acc:
                        entries[(nrow, p)] = acc
                nrow += 1
    system = ExactMatrix(nrow, schur.dim,
                         [(r, c, v) for (r, c), v in entries.items()])
    sol = system.kernel()
    mats = [schur.matrix_of(sol.basis.row_tuple(k)) for k in range(sol.dim)]
    return EndoSubalgebra.from_matrices(ns, mats)


# ---------------------------------------------------------------------------
# graded bracket tensors and the super Jacobi identity
# ---------------------------------------------------------------------------


@dataclass
class GradedBracketTensor:
    """A bracket on a finite graded super vector space, as a full ordered
    table of sparse structure-constant vectors."""
    component_names: tuple      # e.g. ("V", "S", "so", "r")
    component_dims: tuple
    parities: tuple             # per flat basis index: 0 even, 1 odd
    degrees: Optional[tuple]    # per flat basis index, or None if filtered
    table: dict                 # (i, j) -> {k: Fraction}

    @property
    def total_dim(self) -> int:
        return sum(self.component_dims)

    def offsets(self) -> tuple:
        out = []
        acc = 0
        for d in self.component_dims:
            out.append(acc)
            acc += d
        return tuple(out)

    def component_of(self, k: int) -> str:
        acc = 0
        for name, d in zip(self.component_names, self.component_dims):
            acc += d
            if k < acc:
                return name
        raise IndexError(k)

    def bracket(self, i: int, j: int) -> dict:
        return self.table.get((i, j), {})

    def bracket_vec(self, i: int, v: dict) -> dict:
        """[x_i, v] for a sparse coefficient vector v."""
        out: dict = {}
        for j, c in v.items():
            for k, w in self.bracket(i, j).items():
                t = out.get(k, Fraction(0)) + c * w
                if t:
                    out[k] = t
                elif k in out:
                    del out[k]
        return out

    def vec_bracket(self, v: dict, k: int) -> dict:
        """[v, x_k] for a sparse coefficient vector v."""
        out: dict = {}
        for i, c in v.items():
            for t, w in self.bracket(i, k).items():
                u = out.get(t, Fraction(0)) + c * w
                if u:
                    out[t] = u
                elif t in out:
                    del out[t]
        return out


def graded_jacobi_check(tensor: GradedBracketTensor) -> Certificate:
    """Exact super-antisymmetry, degree additivity and Jacobi identity.

    Jacobi is checked in super-derivation form,
    [x,[y,z]] = [[x,y],z] + (-1)^{|x||y|} [y,[x,z]], over all basis triples.
    """
    n = tensor.total_dim
    par = tensor.parities
    deg = tensor.degrees
    for i in range(n):
        for j in range(n):
            bij = tensor.bracket(i, j)
            sign = -1 if (par[i] * par[j]) % 2 == 0 else 1
            bji = tensor.bracket(j, i)
            for k in set(bij) | set(bji):
                if bij.get(k, Fraction(0)) != sign * bji.get(k, Fraction(0)):
                    return Certificate(
                        False, "super-antisymmetry violated",
                        witness={"pair": (i, j), "target": k})
            if deg is not None:
                want = deg[i] + deg[j]
                for k, v in bij.items():
                    if v and deg[k] != want:
                        return Certificate(
                            False, "bracket does not respect the Z-degree",
                            witness={"pair": (i, j), "target": k,
                                     "degree": deg[k], "expected": want})
    for i in range(n):
        pi = par[i]
        for j in range(n):
            sgn = -1 if (pi * par[j]) % 2 else 1
            bij = tensor.bracket(i, j)
            for k in range(n):
                # [x_i,[x_j,x_k]] - [[x_i,x_j],x_k] - (-1)^{|i||j|}[x_j,[x_i,x_k]]
                acc = tensor.bracket_vec(i, tensor.bracket(j, k))
                for t, v in tensor.vec_bracket(bij, k).items():
                    w = acc.get(t, Fraction(0)) - v
                    if w:
                        acc[t] = w
                    elif t in acc:
                        del acc[t]
                for t, v in tensor.bracket_vec(j, tensor.bracket(i, k)).items():
                    w = acc.get(t, Fraction(0)) - sgn * v
                    if w:
                        acc[t] = w
                    elif t in acc:
                        del acc[t]
                if acc:
                    t = sorted(acc)[0]
                    return Certificate(
                        False, "super Jacobi identity violated",
                        witness={"triple": (i, j, k), "target": t,
                                 "defect": rat_str(acc[t])})
    return Certificate(True, "graded Jacobi identity holds exactly")


# ---------------------------------------------------------------------------
# the extended flat model superalgebra
# ---------------------------------------------------------------------------


class ExtendedFlatModel:
    """V + S + (so(V) + r) with the flat brackets, as structure constants.

    Basis order: V (degree -2), S (degree -1, odd when kappa is symmetric),
    so(V) in the E_ij basis, then the canonical basis of r (both degree 0).
    """

    def __init__(self, rep: CliffordRep, current: DiracCurrent,
                 r: EndoSubalgebra):
        self.rep = rep
        self.current = current
        self.r = r
        self.gens = spin_generators(rep)
        self.dim_v = rep.dim_v
        self.dim_s = rep.spinor_dim
        self.dim_so = self.gens.dim
        self.dim_r = r.dim
        self.odd_spinors = current.symmetry == "symmetric"
        self.tensor = self._build_tensor()

    # offsets into the flat basis
    @property
    def off_v(self) -> int:
        return 0

    @property
    def off_s(self) -> int:
        return self.dim_v

    @property
    def off_so(self) -> int:
        return self.dim_v + self.dim_s

    @property
    def off_r(self) -> int:
        return self.dim_v + self.dim_s + self.dim_so

    @property
    def total_dim(self) -> int:
        return self.dim_v + self.dim_s + self.dim_so + self.dim_r

    @property
    def dims(self) -> dict:
        return {"V": self.dim_v, "S": self.dim_s,
                "so": self.dim_so, "r": self.dim_r}

    def _build_tensor(self) -> GradedBracketTensor:
        nv, ns, nso, nr = self.dim_v, self.dim_s, self.dim_so, self.dim_r
        off_s, off_so, off_r = self.off_s, self.off_so, self.off_r
        spar = 1 if self.odd_spinors else 0
        parities = tuple([0] * nv + [spar] * ns + [0] * (nso + nr))
        degrees = tuple([-2] * nv + [-1] * ns + [0] * (nso + nr))
        table: dict = {}

        def put(i, j, chunk):
            vecd = {k: v for k, v in chunk.items() if v}
            if vecd:
                table[(i, j)] = vecd

        gens = self.gens
        # [so, so]
        for a in range(nso):
            for b in range(nso):
                comm = gens.e_mats[a].commutator(gens.e_mats[b])
                coords = gens.so_coordinates(comm)
                put(off_so + a, off_so + b,
                    {off_so + k: c for k, c in enumerate(coords)})
        # [so, V] and [so, S]
        for a in range(nso):
            emat, smat = gens.e_mats[a], gens.sigma[a]
            for i in range(nv):
                put(off_so + a, i,
                    {k: emat.entry(k, i) for k in range(nv)})
                put(i, off_so + a,
                    {k: -emat.entry(k, i) for k in range(nv)})
            for i in range(ns):
                put(off_so + a, off_s + i,
                    {off_s + k: smat.entry(k, i) for k in range(ns)})
                put(off_s + i, off_so + a,
                    {off_s + k: -smat.entry(k, i) for k in range(ns)})
        # [r, r], [r, S]
        for p in range(nr):
            for q in range(nr):
                coords = self.r.bracket_table[p][q]
                put(off_r + p, off_r + q,
                    {off_r + k: c for k, c in enumerate(coords)})
            mat = self.r.matrices[p]
            for i in range(ns):
                put(off_r + p, off_s + i,
                    {off_s + k: mat.entry(k, i) for k in range(ns)})
                put(off_s + i, off_r + p,
                    {off_s + k: -mat.entry(k, i) for k in range(ns)})
        # [S, S] = kappa (symmetric current: symmetric bracket of odd elements;
        # skew current: antisymmetric bracket of even elements)
        for i in range(ns):
            for j in range(ns):
                val = self.current.value_basis(i, j)
                put(off_s + i, off_s + j, {a: val[a] for a in range(nv)})
        return GradedBracketTensor(
            component_names=("V", "S", "so", "r"),
            component_dims=(nv, ns, nso, nr),
            parities=parities, degrees=degrees, table=table)

    # -- actions -------------------------------------------------------------

    def so_matrix(self, coords: Sequence[Fraction]) -> ExactMatrix:
        return self.gens.so_matrix(coords)

    def spin_matrix(self, coords: Sequence[Fraction]) -> ExactMatrix:
        return self.gens.spin_matrix(coords)

    def r_matrix(self, coords: Sequence[Fraction]) -> ExactMatrix:
        return self.r.matrix_of(coords)

    def kappa_vec(self, x: Sequence[Fraction], y: Sequence[Fraction]) -> tuple:
        return self.current.value(x, y)

    def to_json(self) -> dict:
        names = {"V": (self.off_v, self.dim_v), "S": (self.off_s, self.dim_s),
                 "A": (self.off_so, self.dim_so), "r": (self.off_r, self.dim_r)}
        out: dict = {"dims": self.dims, "odd_spinors": self.odd_spinors,
                     "brackets": {}}
        pairs = [("A", "A", "A", "AA"), ("A", "r", "r", "Ar"),
                 ("r", "r", "r", "rr"), ("A", "V", "V", "AV"),
                 ("A", "S", "S", "AS"), ("r", "V", "V", "rV"),
                 ("r", "S", "S", "rS"), ("S", "S", "V", "SS_V"),
                 ("S", "S", "A", "SS_A"), ("S", "S", "r", "SS_r"),
                 ("V", "S", "S", "VS"), ("V", "V", "V", "VV")]
        for c1, c2, c3, key in pairs:
            o1, d1 = names[c1]
            o2, d2 = names[c2]
            o3, d3 = names[c3]
            tensor = []
            for i in range(d1):
                rows = []
                for j in range(d2):
                    chunk = self.tensor.bracket(o1 + i, o2 + j)
                    rows.append([rat_str(chunk.get(o3 + k, Fraction(0)))
                                 for k in range(d3)])
                tensor.append(rows)
            out["brackets"][key] = tensor
        return out


def build_extended_flat_model(rep: CliffordRep, current: DiracCurrent,
                              r: Optional[EndoSubalgebra] = None
                              ) -> ExtendedFlatModel:
    """Assemble the extended flat model and verify the graded Jacobi identity
    exhaustively before returning.  A Jacobi failure signals inconsistent
    inputs (for example a non-equivariant current)."""
    r_full = compute_r_symmetry_algebra(rep, current)
    if r is None:
        r = r_full
    else:
        for mat in r.matrices:
            if not r_full.contains(mat):
                raise NotClosed(
                    "supplied r is not contained in the R-symmetry algebra",
                    witness=mat.to_serialisable())
    model = ExtendedFlatModel(rep, current, r)
    cert = graded_jacobi_check(model.tensor)
    if not cert.passed:
        raise JacobiViolation(cert.detail, triple=cert.witness)
    return model


# ---------------------------------------------------------------------------
# graded subalgebras
# ---------------------------------------------------------------------------


@dataclass
class GradedSubalgebra:
    """a = V' + S' + (h + r') inside an extended flat model.

    Coordinates: Vp in the ambient V basis, Sp in the ambient S basis, h in
    the E_ij coordinates of so(V), rp in the canonical basis of r.  Diagonally
    embedded degree-0 subalgebras are structurally unrepresentable here, which
    is the intended rejection of that case.
    """
    model: ExtendedFlatModel
    Vp: Subspace
    Sp: Subspace
    h: Subspace
    rp: Subspace
    highly_susy: bool = False
    transitive: bool = False
    homogeneity_rank: int = 0

    @property
    def dims(self) -> dict:
        return {"V'": self.Vp.dim, "S'": self.Sp.dim,
                "h": self.h.dim, "r'": self.rp.dim}

    def h_so_matrices(self) -> List[ExactMatrix]:
        return [self.model.so_matrix(self.h.basis.row_tuple(i))
                for i in range(self.h.dim)]

    def h_spin_matrices(self) -> List[ExactMatrix]:
        return [self.model.spin_matrix(self.h.basis.row_tuple(i))
                for i in range(self.h.dim)]

    def rp_matrices(self) -> List[ExactMatrix]:
        return [self.model.r_matrix(self.rp.basis.row_tuple(i))
                for i in range(self.rp.dim)]

    def maximal(self) -> bool:
        return (self.Sp.dim == self.model.dim_s
                and self.Vp.dim == self.model.dim_v
                and self.h.dim == self.model.dim_so
                and self.rp.dim == self.model.dim_r)


def kappa_restriction_matrix(model: ExtendedFlatModel,
                             Sp: Subspace) -> ExactMatrix:
    """Matrix of kappa restricted to Sym^2 S', columns over the pair basis."""
    k = Sp.dim
    pairs = tensor_index_maps(k, "sym2")
    svecs = Sp.basis_vectors()
    cols = []
    for (i, j) in pairs.tuples:
        cols.append(model.kappa_vec(svecs[i], svecs[j]))
    return ExactMatrix(model.dim_v, pairs.size,
                       [(a, c, col[a]) for c, col in enumerate(cols)
                        for a in range(model.dim_v) if col[a]])


def make_graded_subalgebra(model: ExtendedFlatModel, Vp: Subspace,
                           Sp: Subspace, h: Subspace,
                           rp: Subspace) -> GradedSubalgebra:
    """Validate all closure conditions and compute the flags."""
    if Vp.ambient_dim != model.dim_v or Sp.ambient_dim != model.dim_s \
            or h.ambient_dim != model.dim_so or rp.ambient_dim != model.dim_r:
        raise DimensionMismatch("subspace ambients do not match the model")
    svecs = Sp.basis_vectors()
    # kappa(Sym^2 S') inside V'
    for i in range(Sp.dim):
        for j in range(i, Sp.dim):
            image = model.kappa_vec(svecs[i], svecs[j])
            if not Vp.contains(image):
                raise NotClosed("kappa(S', S') leaves V'",
                                witness=[rat_str(c) for c in image])
    # h closed under commutator
    h_so = [model.so_matrix(h.basis.row_tuple(i)) for i in range(h.dim)]
    for i, A in enumerate(h_so):
        for B in h_so[i:]:
            comm = A.commutator(B)
            if not h.contains(model.gens.so_coordinates(comm)):
                raise NotClosed("h is not closed under the commutator",
                                witness=comm.to_serialisable())
    # r' closed under commutator
    for i in range(rp.dim):
        for j in range(i, rp.dim):
            coords = model.r.bracket_coords(rp.basis.row_tuple(i),
                                            rp.basis.row_tuple(j))
            if not rp.contains(coords):
                raise NotClosed("r' is not closed under the commutator",
                                witness=[rat_str(c) for c in coords])
    # h preserves V' and S'
    h_spin = [model.spin_matrix(h.basis.row_tuple(i)) for i in range(h.dim)]
    for A, AS in zip(h_so, h_spin):
        for v in Vp.basis_vectors():
            if not Vp.contains(A.apply(v)):
                raise NotClosed("h does not preserve V'",
                                witness=[rat_str(c) for c in A.apply(v)])
        for s in svecs:
            if not Sp.contains(AS.apply(s)):
                raise NotClosed("h does not preserve S'",
                                witness=[rat_str(c) for c in AS.apply(s)])
    # r' preserves S' (it acts trivially on V)
    rp_mats = [model.r_matrix(rp.basis.row_tuple(i)) for i in range(rp.dim)]
    for a in rp_mats:
        for s in svecs:
            if not Sp.contains(a.apply(s)):
                raise NotClosed("r' does not preserve S'",
                                witness=[rat_str(c) for c in a.apply(s)])
    sub = GradedSubalgebra(model=model, Vp=Vp, Sp=Sp, h=h, rp=rp)
    sub.homogeneity_rank = kappa_restriction_matrix(model, Sp).rank()
    sub.highly_susy = (2 * Sp.dim > model.dim_s
                       and Vp.dim == model.dim_v)
    # transitivity: h + r' acts faithfully on V' + S'
    ann_dim = _a0_annihilator_dim(sub)
    sub.transitive = sub.highly_susy and ann_dim == 0
    return sub


def _a0_annihilator_dim(sub: GradedSubalgebra) -> int:
    """Dimension of the annihilator of V' + S' inside h + r'."""
    model = sub.model
    cols = sub.h.dim + sub.rp.dim
    if cols == 0:
        return 0
    h_so = sub.h_so_matrices()
    h_spin = sub.h_spin_matrices()
    rp_mats = sub.rp_matrices()
    rows = []
    for v in sub.Vp.basis_vectors():
        for a in range(model.dim_v):
            rows.append([m.apply(v)[a] for m in h_so] +
                        [Fraction(0)] * sub.rp.dim)
    for s in sub.Sp.basis_vectors():
        for i in range(model.dim_s):
            rows.append([m.apply(s)[i] for m in h_spin] +
                        [m.apply(s)[i] for m in rp_mats])
    system = ExactMatrix.from_rows(rows, cols=cols)
    return system.kernel().dim


def annihilator_in_so(model: ExtendedFlatModel, Sp: Subspace) -> Subspace:
    """{A in so(V) : A . s = 0 for all s in S'} via the spin action."""
    rows = []
    mats = [model.gens.sigma[k] for k in range(model.dim_so)]
    for s in Sp.basis_vectors():
        for i in range(model.dim_s):
            rows.append([m.apply(s)[i] for m in mats])
    return ExactMatrix.from_rows(rows, cols=model.dim_so).kernel()


def stabiliser_in_so(model: ExtendedFlatModel, Sp: Subspace) -> Subspace:
    """{A in so(V) : A . S' is contained in S'}."""
    return _stabiliser(model.gens.sigma, model.dim_so, Sp)


def stabiliser_in_r(model: ExtendedFlatModel, Sp: Subspace) -> Subspace:
    return _stabiliser(model.r.matrices, model.dim_r, Sp)


def _stabiliser(mats: Sequence[ExactMatrix], dim: int,
                Sp: Subspace) -> Subspace:
    if dim == 0:
        return Subspace.trivial(0)
    ns = Sp.ambient_dim
    pivots = Sp.basis.pivot_columns()
    rows = []
    for s in Sp.basis_vectors():
        images = [m.apply(s) for m in mats]
        for k in range(dim):
            w = list(images[k])
            # residual of w modulo S' (RREF basis: subtract pivot coords)
            for bi, pc in enumerate(pivots):
                c = w[pc]
                if c:
                    brow = Sp.basis.row_tuple(bi)
                    for idx in range(ns):
                        w[idx] -= c * brow[idx]
            images[k] = tuple(w)
        for i in range(ns):
            rows.append([images[k][i] for k in range(dim)])
    return ExactMatrix.from_rows(rows, cols=dim).kernel()


def random_subspace(ambient_dim: int, dim: int, seed: int,
                    coeff_bound: int = 3) -> Subspace:
    """Seeded random subspace of the requested dimension (retry on rank loss)."""
    rnd = random.Random(seed)
    while True:
        vectors = [[rnd.randint(-coeff_bound, coeff_bound)
                    for _ in range(ambient_dim)] for _ in range(dim)]
        sub = Subspace.from_vectors(ambient_dim, vectors)
        if sub.dim == dim:
            return sub


def random_highly_susy_subalgebra(model: ExtendedFlatModel, dim_sp: int,
                                  seed: int,
                                  rp_mode: str = "stabiliser"
                                  ) -> GradedSubalgebra:
    """Random S' of the given dimension, h = stabiliser of S', V' = V.

    rp_mode is "stabiliser" (largest valid r'), "zero", or "full" (only valid
    when r preserves S').
    """
    if 2 * dim_sp <= model.dim_s:
        raise DimensionMismatch("requested S' is not highly supersymmetric")
    Sp = random_subspace(model.dim_s, dim_sp, seed)
    h = stabiliser_in_so(model, Sp)
    if rp_mode == "zero":
        rp = Subspace.trivial(model.dim_r)
    elif rp_mode == "full":
        rp = Subspace.full(model.dim_r)
    else:
        rp = stabiliser_in_r(model, Sp)
    return make_graded_subalgebra(model, Subspace.full(model.dim_v),
                                  Sp, h, rp)


def full_subalgebra(model: ExtendedFlatModel) -> GradedSubalgebra:
    return make_graded_subalgebra(model,
                                  Subspace.full(model.dim_v),
                                  Subspace.full(model.dim_s),
                                  Subspace.full(model.dim_so),
                                  Subspace.full(model.dim_r))


# ---------------------------------------------------------------------------
# faithful splitting of r'
# ---------------------------------------------------------------------------


def faithful_split(rp: EndoSubalgebra,
                   Sp: Subspace) -> Tuple[EndoSubalgebra, EndoSubalgebra]:
    """Split r' = r'' + ann(S') as a direct sum of ideals, r'' acting
    faithfully on S'.

    The inner product is the negated trace form of the action on S; it must
    be positive-definite (checked by exact LDL^T pivots), which is the
    compactness hypothesis.
    """
    ns = rp.spinor_dim
    if Sp.ambient_dim != ns:
        raise DimensionMismatch("S' lives in the wrong spinor module")
    for a in rp.matrices:
        for s in Sp.basis_vectors():
            if not Sp.contains(a.apply(s)):
                raise NotClosed("r' does not preserve S'",
                                witness=[rat_str(c) for c in a.apply(s)])
    k = rp.dim
    if k == 0:
        return rp, EndoSubalgebra.from_matrices(ns, [])
    gram = ExactMatrix(k, k, [(i, j, -(rp.matrices[i] @ rp.matrices[j]).trace())
                              for i in range(k) for j in range(k)])
    if not is_positive_definite(gram):
        raise NotCompactForm("negated trace form on r' is not positive-definite")
    # annihilator of S' inside r'
    rows = []
    for s in Sp.basis_vectors():
        for i in range(ns):
            rows.append([m.apply(s)[i] for m in rp.matrices])
    ann_coords = ExactMatrix.from_rows(rows, cols=k).kernel()
    # orthogonal complement of the annihilator under the trace form
    if ann_coords.dim == 0:
        rpp_coords = Subspace.full(k)
    else:
        rows = [(gram @ ann_coords.basis.transpose()).transpose().row_tuple(i)
                for i in range(ann_coords.dim)]
        rpp_coords = ExactMatrix.from_rows(rows, cols=k).kernel()
    ann = EndoSubalgebra.from_matrices(
        ns, [rp.matrix_of(ann_coords.basis.row_tuple(i))
             for i in range(ann_coords.dim)])
    rpp = EndoSubalgebra.from_matrices(
        ns, [rp.matrix_of(rpp_coords.basis.row_tuple(i))
             for i in range(rpp_coords.dim)])
    # direct-sum and ideal certificates, entrywise
    if rpp.dim + ann.dim != k or rpp.basis.intersect(ann.basis).dim != 0:
        raise NotClosed("r' does not split as r'' + ann")
    for a in rpp.matrices:
        for b in ann.matrices:
            if not a.commutator(b).is_zero():
                raise NotClosed("[r'', ann] is nonzero",
                                witness=a.commutator(b).to_serialisable())
    for a in rp.matrices:
        for b in ann.matrices:
            if not ann.contains(a.commutator(b)):
                raise NotClosed("ann is not an ideal of r'")
        for b in rpp.matrices:
            if not rpp.contains(a.commutator(b)):
                raise NotClosed("r'' is not an ideal of r'")
    # r'' acts faithfully on S'
    if rpp.dim:
        rows = []
        for s in Sp.basis_vectors():
            for i in range(ns):
                rows.append([m.apply(s)[i] for m in rpp.matrices])
        if ExactMatrix.from_rows(rows, cols=rpp.dim).kernel().dim != 0:
            raise NotClosed("r'' fails to act faithfully on S'")
    return rpp, ann
