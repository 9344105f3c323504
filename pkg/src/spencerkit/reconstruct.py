"""Algebraic homogeneous-space certificates for a filtered deformation: the
Nomizu map of the invariant connection, its torsion-freeness and
equivariance, and the curvature values at the origin."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .deform import FilteredDeformation
from .errors import (CurvatureMismatch, EquivarianceViolation,
                     TorsionViolation)
from .exactla import (ExactMatrix, basis_vec, rat_str, vec_add, vec_is_zero,
                      vec_scale, zero_vec)

UNCHECKED_HYPOTHESES = ("G0 simply connected", "K closed", "R' closed")


@dataclass
class NomizuMap:
    """Linear map g0 = V + h + r' -> so(V) + r encoding the invariant
    connection: v + A + a  |->  (A + lambda1(v), a + lambda2(v))."""
    deformation: FilteredDeformation
    matrix: ExactMatrix   # (dim so + dim r) x (dim V + dim h + dim r')

    def apply(self, coords: Sequence[Fraction]) -> tuple:
        return self.matrix.apply(coords)

    def so_part(self, coords: Sequence[Fraction]) -> tuple:
        out = self.apply(coords)
        return out[:self.deformation.subalgebra.model.dim_so]

    def r_part(self, coords: Sequence[Fraction]) -> tuple:
        out = self.apply(coords)
        return out[self.deformation.subalgebra.model.dim_so:]

    def to_json(self) -> dict:
        return {"matrix": self.matrix.to_serialisable()}


def _even_basis_layout(deformation: FilteredDeformation):
    """(dim V, dim h, dim r') and the flat offsets of the even part within
    the deformation basis."""
    n, nsp, dh, dr = deformation.tensor.component_dims
    return n, dh, dr, nsp


def _even_bracket(deformation: FilteredDeformation, x: Sequence[Fraction],
                  y: Sequence[Fraction]) -> tuple:
    """Bracket of two even elements given in (V | h | r') coordinates."""
    n, dh, dr, nsp = _even_basis_layout(deformation)
    tensor = deformation.tensor
    total = tensor.total_dim

    def to_flat(coords):
        flat = {}
        for b in range(n):
            if coords[b]:
                flat[b] = coords[b]
        for k in range(dh):
            if coords[n + k]:
                flat[n + nsp + k] = coords[n + k]
        for p in range(dr):
            if coords[n + dh + p]:
                flat[n + nsp + dh + p] = coords[n + dh + p]
        return flat

    fx, fy = to_flat(x), to_flat(y)
    acc: dict = {}
    for i, ci in fx.items():
        for j, cj in fy.items():
            for k, v in tensor.bracket(i, j).items():
                w = acc.get(k, Fraction(0)) + ci * cj * v
                if w:
                    acc[k] = w
                elif k in acc:
                    del acc[k]
    out = [Fraction(0)] * (n + dh + dr)
    for k, v in acc.items():
        if k < n:
            out[k] = v
        elif k < n + nsp:
            raise CurvatureMismatch("even-even bracket has an odd component")
        elif k < n + nsp + dh:
            out[n + (k - n - nsp)] = v
        else:
            out[n + dh + (k - n - nsp - dh)] = v
    return tuple(out)


def build_nomizu_map(deformation: FilteredDeformation) -> NomizuMap:
    """Assemble the Nomizu map and verify all three defining properties
    exactly: restriction to h + r' is the inclusion, equivariance under the
    isotropy algebra, and the torsion-free criterion."""
    datum = deformation.datum
    sub = deformation.subalgebra
    model = sub.model
    n, dh, dr, _ = _even_basis_layout(deformation)
    nso, nr = model.dim_so, model.dim_r
    entries = []
    for b in range(n):
        for t, c in enumerate(datum.lam1_coords(b)):
            if c:
                entries.append((t, b, c))
        for t, c in enumerate(datum.lam2_coords(b)):
            if c:
                entries.append((nso + t, b, c))
    for k in range(dh):
        for t, c in enumerate(sub.h.basis.row_tuple(k)):
            if c:
                entries.append((t, n + k, c))
    for p in range(dr):
        for t, c in enumerate(sub.rp.basis.row_tuple(p)):
            if c:
                entries.append((nso + t, n + dh + p, c))
    nomizu = NomizuMap(deformation=deformation,
                       matrix=ExactMatrix(nso + nr, n + dh + dr, entries))
    _verify_inclusion(nomizu)
    _verify_equivariance(nomizu)
    _verify_torsion_free(nomizu)
    return nomizu


def _verify_inclusion(nomizu: NomizuMap) -> None:
    sub = nomizu.deformation.subalgebra
    n, dh, dr, _ = _even_basis_layout(nomizu.deformation)
    dim = n + dh + dr
    for k in range(dh):
        want = tuple(sub.h.basis.row_tuple(k)) + zero_vec(sub.model.dim_r)
        if nomizu.apply(basis_vec(dim, n + k)) != want:
            raise EquivarianceViolation("restriction to h is not the "
                                        "inclusion")
    for p in range(dr):
        want = zero_vec(sub.model.dim_so) + tuple(sub.rp.basis.row_tuple(p))
        if nomizu.apply(basis_vec(dim, n + dh + p)) != want:
            raise EquivarianceViolation("restriction to r' is not the "
                                        "inclusion")


def _verify_equivariance(nomizu: NomizuMap) -> None:
    """Phi(ad_X y) = ad_{Phi X} Phi(y) for X in the isotropy algebra."""
    deformation = nomizu.deformation
    sub = deformation.subalgebra
    model = sub.model
    n, dh, dr, _ = _even_basis_layout(deformation)
    dim = n + dh + dr
    nso = model.dim_so
    actors = [basis_vec(dim, n + k) for k in range(dh + dr)]
    for actor in actors:
        a_so = model.so_matrix(nomizu.so_part(actor))
        a_r = model.r_matrix(nomizu.r_part(actor))
        for x in range(dim):
            xvec = basis_vec(dim, x)
            lhs = nomizu.apply(_even_bracket(deformation, actor, xvec))
            phi_x = nomizu.apply(xvec)
            rhs_so = model.gens.so_coordinates(
                a_so.commutator(model.so_matrix(phi_x[:nso])))
            comm_r = a_r.commutator(model.r_matrix(phi_x[nso:]))
            rhs_r = model.r.coordinates(comm_r)
            if rhs_r is None:
                raise EquivarianceViolation("commutator leaves the "
                                            "R-symmetry algebra")
            if tuple(lhs) != tuple(rhs_so) + tuple(rhs_r):
                raise EquivarianceViolation(
                    f"Nomizu map is not equivariant at generator {actor}")


def _verify_torsion_free(nomizu: NomizuMap) -> None:
    """pr_so(Phi X).Ybar - pr_so(Phi Y).Xbar - [X,Y]bar = 0."""
    deformation = nomizu.deformation
    model = deformation.subalgebra.model
    n, dh, dr, _ = _even_basis_layout(deformation)
    dim = n + dh + dr
    for x in range(dim):
        xvec = basis_vec(dim, x)
        xbar = xvec[:n]
        mx = model.so_matrix(nomizu.so_part(xvec))
        for y in range(dim):
            yvec = basis_vec(dim, y)
            my = model.so_matrix(nomizu.so_part(yvec))
            val = vec_add(mx.apply(yvec[:n]),
                          vec_scale(my.apply(xbar), -1))
            bracket_bar = _even_bracket(deformation, xvec, yvec)[:n]
            val = tuple(a - b for a, b in zip(val, bracket_bar))
            if not vec_is_zero(val):
                raise TorsionViolation(
                    f"torsion-free criterion fails at basis pair ({x},{y})")


@dataclass
class CurvatureAtOrigin:
    """R = -theta1 and F = -theta2 on horizontal pairs, re-derived from the
    Nomizu map's bracket defect and cross-checked coefficientwise."""
    R0: list   # [b][c] -> so coordinates
    F0: list   # [b][c] -> r coordinates

    def to_json(self) -> dict:
        return {
            "R0": [[[rat_str(c) for c in col] for col in row]
                   for row in self.R0],
            "F0": [[[rat_str(c) for c in col] for col in row]
                   for row in self.F0],
        }


def curvature_at_origin(deformation: FilteredDeformation,
                        nomizu: NomizuMap) -> CurvatureAtOrigin:
    """Wang-formula curvature [Phi X, Phi Y] - Phi([X, Y]) on horizontal
    pairs, asserted equal to (-theta1, -theta2); vertical pairs are asserted
    flat; the first Bianchi identity is asserted for R0."""
    sub = deformation.subalgebra
    model = sub.model
    theta = deformation.theta
    n, dh, dr, _ = _even_basis_layout(deformation)
    dim = n + dh + dr
    nso = model.dim_so

    def wang(xvec, yvec):
        phi_x, phi_y = nomizu.apply(xvec), nomizu.apply(yvec)
        so_comm = model.gens.so_coordinates(
            model.so_matrix(phi_x[:nso]).commutator(
                model.so_matrix(phi_y[:nso])))
        r_comm = model.r.coordinates(
            model.r_matrix(phi_x[nso:]).commutator(
                model.r_matrix(phi_y[nso:])))
        if r_comm is None:
            raise CurvatureMismatch("commutator leaves the R-symmetry "
                                    "algebra")
        phi_br = nomizu.apply(_even_bracket(deformation, xvec, yvec))
        return (tuple(a - b for a, b in zip(so_comm, phi_br[:nso])),
                tuple(a - b for a, b in zip(r_comm, phi_br[nso:])))

    R0 = [[zero_vec(nso) for _ in range(n)] for _ in range(n)]
    F0 = [[zero_vec(model.dim_r) for _ in range(n)] for _ in range(n)]
    for b in range(n):
        for c in range(n):
            got_so, got_r = wang(basis_vec(dim, b), basis_vec(dim, c))
            want_so = vec_scale(theta.theta1[b][c], -1)
            want_r = vec_scale(theta.theta2[b][c], -1)
            if got_so != tuple(want_so) or got_r != tuple(want_r):
                raise CurvatureMismatch(
                    f"Wang curvature differs from -theta at pair ({b},{c})")
            R0[b][c] = got_so
            F0[b][c] = got_r
    # vertical and mixed pairs must be flat
    for x in range(dim):
        for y in range(n, dim):
            got_so, got_r = wang(basis_vec(dim, x), basis_vec(dim, y))
            if not (vec_is_zero(got_so) and vec_is_zero(got_r)):
                raise CurvatureMismatch(
                    f"curvature does not vanish on vertical pair ({x},{y})")
    # first Bianchi identity for R0
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                acc = model.so_matrix(R0[a][b]).apply(basis_vec(n, c))
                acc = vec_add(acc, model.so_matrix(R0[b][c]).apply(
                    basis_vec(n, a)))
                acc = vec_add(acc, model.so_matrix(R0[c][a]).apply(
                    basis_vec(n, b)))
                if not vec_is_zero(acc):
                    raise CurvatureMismatch("R0 violates the first Bianchi "
                                            "identity")
    return CurvatureAtOrigin(R0=R0, F0=F0)


def reconstruction_certificate(deformation: FilteredDeformation,
                               nomizu: NomizuMap,
                               curvature: CurvatureAtOrigin) -> dict:
    """The emitted certificate; group-level hypotheses are reported as
    unchecked because they are assumptions, not computations."""
    f0_zero = all(vec_is_zero(v) for row in curvature.F0 for v in row)
    return {
        "nomizu": nomizu.matrix.to_serialisable(),
        "R0": curvature.to_json()["R0"],
        "F0": curvature.to_json()["F0"],
        "F0_zero": f0_zero,
        "unchecked_hypotheses": list(UNCHECKED_HYPOTHESES),
    }
