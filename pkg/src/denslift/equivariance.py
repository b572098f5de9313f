"""Infinitesimal equivariance machinery.

Equivariance of a lifting map along a vector field is measured by the defect
ad_X(h(D)) - h(ad_X D); for volume-form liftings the same defect is produced
by varying the volume along the flow, which is what ties the distinguished
(anti-)self-adjoint member to coordinate independence.  Divergence-free
fields and divergenceless tensors are modeled generically, with the linear
constraint and all its prolongations solved by eliminating the jets of the
last axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .errors import DimensionTooSmallError, ExceptionalWeightError
from .jets import DiffPolynomial, JetSymbol
from .lifting import (
    VolLiftParams,
    VolumeForm,
    canonical_lift,
    distinguished_coefficients,
    distinguished_lift,
    first_order_lift,
    second_order_canonical_lift,
    vol_lift,
)
from .operators import DensityOperator, ad_vf
from .scalars import HALF, ONE, Scalar

VectorField = Sequence[DiffPolynomial]


def divergence(components: VectorField, rho: VolumeForm) -> DiffPolynomial:
    """div_rho X = d_i X^i + X^i d_i log rho."""
    out = DiffPolynomial.zero()
    log_jet = rho.log_density()
    for i, comp in enumerate(components, start=1):
        out = out + comp.derive(i)
        if not rho.is_coordinate:
            out = out + comp * log_jet.derive(i)
    return out


def ad_weight(components: VectorField, op: DensityOperator, l0) -> DensityOperator:
    """Action of the field on an operator given at a fixed weight."""
    return ad_vf(components, op).restrict(l0)


@dataclass(frozen=True)
class LiftingHandle:
    """A lifting map reified so its own Lie derivative can be formed."""

    kind: str
    l0: Scalar
    rho: Optional[VolumeForm] = None
    params: Optional[VolLiftParams] = None
    c: Optional[Scalar] = None
    weight_polys: Optional[tuple] = None

    @staticmethod
    def canonical(l0, rho: VolumeForm) -> "LiftingHandle":
        return LiftingHandle("canonical", Scalar.of(l0), rho)

    @staticmethod
    def vol(l0, rho: VolumeForm, params: VolLiftParams) -> "LiftingHandle":
        return LiftingHandle("vol", Scalar.of(l0), rho, params=params)

    @staticmethod
    def distinguished(l0, rho: VolumeForm) -> "LiftingHandle":
        return LiftingHandle("distinguished", Scalar.of(l0), rho)

    @staticmethod
    def first_order(l0, c) -> "LiftingHandle":
        return LiftingHandle("first_order", Scalar.of(l0), c=Scalar.of(c))

    @staticmethod
    def second_order_canonical(l0) -> "LiftingHandle":
        return LiftingHandle("second_order_canonical", Scalar.of(l0))

    @staticmethod
    def proj(l0) -> "LiftingHandle":
        return LiftingHandle("proj", Scalar.of(l0))

    @staticmethod
    def proj_regular(l0, weight_polys) -> "LiftingHandle":
        return LiftingHandle("proj_regular", Scalar.of(l0),
                             weight_polys=tuple(tuple(p) for p in weight_polys))

    def __call__(self, delta: DensityOperator) -> DensityOperator:
        if self.kind == "canonical":
            return canonical_lift(delta, self.l0, self.rho)
        if self.kind == "vol":
            return vol_lift(delta, self.l0, self.rho, self.params)
        if self.kind == "distinguished":
            return distinguished_lift(delta, self.l0, self.rho)
        if self.kind == "first_order":
            return first_order_lift(delta, self.l0, self.c)
        if self.kind == "second_order_canonical":
            return second_order_canonical_lift(delta, self.l0)
        if self.kind == "proj":
            from .projective import proj_lift

            return proj_lift(delta, self.l0)
        if self.kind == "proj_regular":
            from .projective import proj_regular_lift

            return proj_regular_lift(delta, self.l0, list(self.weight_polys))
        raise ValueError(f"unknown lifting handle kind {self.kind!r}")


def ad_on_lifting(handle: LiftingHandle, delta: DensityOperator,
                  components: VectorField) -> DensityOperator:
    """Defect ad_X(h(D)) - h(ad_X D); zero iff h is equivariant at D along X."""
    lifted = handle(delta)
    moved = ad_weight(components, delta, handle.l0)
    return ad_vf(components, lifted) - handle(moved)


def _family_coefficients(kind: str, l0: Scalar, n: int,
                         params: Optional[VolLiftParams], dim: int):
    """Vertical polynomials (A, B, C, D) of the regular family member."""
    ident = DensityOperator.identity(dim)
    zero = DensityOperator.zero(dim)
    u = DensityOperator.lam_poly(dim, [-l0, ONE])
    if kind == "canonical":
        return ident, zero, zero, zero
    if kind == "distinguished":
        if l0 == HALF:
            raise ExceptionalWeightError("exceptional weight 1/2")
        a, b = distinguished_coefficients(l0, n)
        return (DensityOperator.lam_poly(dim, a), DensityOperator.lam_poly(dim, b),
                zero, zero)
    if kind == "vol":
        sign = Fraction((-1) ** params.n)
        a_poly = ident - params.b * u
        b_poly = (params.b * sign) * u
        c_poly, d_poly = zero, zero
        u_pow = ident
        for k in range(1, params.n + 1):
            u_pow = u_pow @ u
            c_poly = c_poly + u_pow * params.c[k - 1]
            d_poly = d_poly + u_pow * params.d[k - 1]
        return a_poly, b_poly, c_poly, d_poly
    raise ValueError(f"no variation formula for lifting kind {kind!r}")


def volume_variation(kind: str, delta: DensityOperator, l0, rho: VolumeForm,
                     h: DiffPolynomial,
                     params: Optional[VolLiftParams] = None) -> DensityOperator:
    """First-order response of the lifting to rho -> rho (1 + h).

    The canonical lift varies by (L - l0)[h, P(D)]; adjoint and vertical
    pieces of the family vary by the adjoint and the evaluation of that same
    commutator.
    """
    l0 = Scalar.of(l0)
    dim = delta.dim
    n = delta.total_order()
    lifted = canonical_lift(delta, l0, rho)
    h_op = DensityOperator.function(dim, h)
    core = DensityOperator.lam_poly(dim, [-l0, ONE]) @ h_op.commutator(lifted)
    a_poly, b_poly, c_poly, d_poly = _family_coefficients(kind, l0, n, params, dim)
    out = a_poly @ core + b_poly @ core.adjoint()
    if not c_poly.is_zero():
        out = out + c_poly * core.app1()
    if not d_poly.is_zero():
        out = out + d_poly * core.adjoint().app1()
    return out


def check_adX_variation_identity(delta: DensityOperator, l0, rho: VolumeForm,
                                 components: VectorField, kind: str = "canonical",
                                 params: Optional[VolLiftParams] = None) -> bool:
    """ad_X of the lifting equals its volume variation at delta rho = rho div X."""
    l0 = Scalar.of(l0)
    if kind == "canonical":
        handle = LiftingHandle.canonical(l0, rho)
    elif kind == "vol":
        handle = LiftingHandle.vol(l0, rho, params)
    elif kind == "distinguished":
        handle = LiftingHandle.distinguished(l0, rho)
    else:
        raise ValueError(f"identity check undefined for kind {kind!r}")
    lhs = ad_on_lifting(handle, delta, components)
    rhs = volume_variation(kind, delta, l0, rho, divergence(components, rho), params)
    return lhs == rhs


@dataclass(frozen=True)
class DivFreeField:
    """Generic vector field with the divergence constraint solved for axis dim."""

    dim: int
    components: Tuple[DiffPolynomial, ...]

    def rewrite(self, sym: JetSymbol) -> Optional[DiffPolynomial]:
        if sym.base != "X" or sym.upper != (self.dim,) or self.dim not in sym.lower:
            return None
        rest = list(sym.lower)
        rest.remove(self.dim)
        out = DiffPolynomial.zero()
        for j in range(1, self.dim):
            out = out - DiffPolynomial.of_symbol(
                JetSymbol("X", (j,), tuple(rest) + (j,)))
        return out

    def reduce(self, obj):
        if isinstance(obj, DiffPolynomial):
            return obj.substitute_jets(self.rewrite)
        return obj.map_coefficients(lambda c: c.substitute_jets(self.rewrite))


def generic_divfree_field(dim: int, jet_order: int = 0) -> DivFreeField:
    """Generic jet components X^i with d_i X^i = 0 imposed by elimination.

    Jets here are symbolic and closed under prolongation, so the order
    argument only documents intent; the substitution covers all orders.
    """
    if dim < 2:
        raise DimensionTooSmallError("divergence constraint needs dim >= 2")
    comps = tuple(DiffPolynomial.jet("X", (i,)) for i in range(1, dim + 1))
    return DivFreeField(dim, comps)


def _second_order_tensor_parts(op: DensityOperator):
    """Tensor components (S, T, R) of S^{ik} d_i d_k + T^i d_i + R."""
    dim = op.dim
    s = {}
    for i in range(1, dim + 1):
        for j in range(i, dim + 1):
            coeff = op.coefficient(0, (i, j))
            s[(i, j)] = coeff if i == j else coeff * Fraction(1, 2)
    t = [op.coefficient(0, (i,)) for i in range(1, dim + 1)]
    r = op.coefficient(0, ())
    return s, t, r


def sdiff_basis_map(op: DensityOperator, a1, a2, a3, b1, b2, c) -> DensityOperator:
    """F(D) = a1 S dd + a2 (div S) d + a3 div div S + b1 T d + b2 div T + c R."""
    a1, a2, a3, b1, b2, c = (Scalar.of(v) for v in (a1, a2, a3, b1, b2, c))
    dim = op.dim
    s, t, r = _second_order_tensor_parts(op)

    def s_at(i, j):
        return s[(min(i, j), max(i, j))]

    terms = {}

    def bump(key, poly):
        if poly.is_zero():
            return
        prev = terms.get(key)
        terms[key] = poly if prev is None else prev + poly

    for i in range(1, dim + 1):
        for j in range(1, dim + 1):
            bump((0, tuple(sorted((i, j)))), s_at(i, j) * a1)
    for k in range(1, dim + 1):
        div_s = DiffPolynomial.zero()
        for i in range(1, dim + 1):
            div_s = div_s + s_at(i, k).derive(i)
        bump((0, (k,)), div_s * a2 + t[k - 1] * b1)
    divdiv = DiffPolynomial.zero()
    div_t = DiffPolynomial.zero()
    for i in range(1, dim + 1):
        div_t = div_t + t[i - 1].derive(i)
        for k in range(1, dim + 1):
            divdiv = divdiv + s_at(i, k).derive(i).derive(k)
    bump((0, ()), divdiv * a3 + div_t * b2 + r * c)
    return DensityOperator(dim, terms)


def classify_sdiff_map(a1, a2, a3, b1, b2, c, dim: int) -> DensityOperator:
    """Equivariance residual of the coefficient map along a generic
    divergence-free field; zero exactly on the b1 = a1 - a2, b2 = -a3 plane."""
    if dim < 3:
        raise DimensionTooSmallError("classification needs dim >= 3")
    delta = _generic_second_order_operator(dim)
    X = generic_divfree_field(dim)

    def fmap(op):
        return sdiff_basis_map(op, a1, a2, a3, b1, b2, c)

    moved = ad_weight(X.components, delta, 0)
    residual = ad_weight(X.components, fmap(delta), 0) - fmap(moved)
    return X.reduce(residual)


def _generic_second_order_operator(dim: int) -> DensityOperator:
    terms = {}
    for i in range(1, dim + 1):
        for j in range(i, dim + 1):
            factor = 1 if i == j else 2
            terms[(0, (i, j))] = DiffPolynomial.jet("S", (i, j)) * factor
        terms[(0, (i,))] = DiffPolynomial.jet("T", (i,))
    terms[(0, ())] = DiffPolynomial.jet("R")
    return DensityOperator(dim, terms)


@dataclass(frozen=True)
class DivFreeTensor:
    """Generic symmetric rank-k tensor, optionally divergenceless."""

    dim: int
    rank: int
    constrained: bool = True
    base: str = "S"

    def operator(self) -> DensityOperator:
        if self.rank == 0:
            return DensityOperator.function(self.dim, DiffPolynomial.jet(self.base))
        terms = {}
        for idx in _tuples(self.dim, self.rank):
            key = (0, tuple(sorted(idx)))
            add = DiffPolynomial.jet(self.base, idx)
            prev = terms.get(key)
            terms[key] = add if prev is None else prev + add
        return DensityOperator(self.dim, terms)

    def rewrite(self, sym: JetSymbol) -> Optional[DiffPolynomial]:
        if not self.constrained or sym.base != self.base:
            return None
        if self.dim not in sym.upper or self.dim not in sym.lower:
            return None
        upper_rest = list(sym.upper)
        upper_rest.remove(self.dim)
        lower_rest = list(sym.lower)
        lower_rest.remove(self.dim)
        out = DiffPolynomial.zero()
        for j in range(1, self.dim):
            out = out - DiffPolynomial.of_symbol(
                JetSymbol(self.base, tuple(upper_rest) + (j,), tuple(lower_rest) + (j,)))
        return out

    def reduce(self, obj):
        if isinstance(obj, DiffPolynomial):
            return obj.substitute_jets(self.rewrite)
        return obj.map_coefficients(lambda cf: cf.substitute_jets(self.rewrite))


def _tuples(dim, rank):
    if rank == 0:
        yield ()
        return
    for rest in _tuples(dim, rank - 1):
        for i in range(1, dim + 1):
            yield rest + (i,)


def divfree_tensor_lift_check(tensor: DivFreeTensor, l0) -> bool:
    """Whether the signed distinguished lift of the tensor operator is
    equivariant along a generic (unconstrained) field, modulo the constraint."""
    l0 = Scalar.of(l0)
    if l0 == HALF:
        raise ExceptionalWeightError("exceptional weight 1/2")
    delta = tensor.operator()
    rho = VolumeForm.coordinate()
    handle = LiftingHandle.distinguished(l0, rho)
    X = [DiffPolynomial.jet("X", (i,)) for i in range(1, tensor.dim + 1)]
    defect = ad_on_lifting(handle, delta, X)
    return tensor.reduce(defect).is_zero()
