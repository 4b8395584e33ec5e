"""Linear equivariant kernels between induced representations.

The full object is a two-argument kernel kappa(g, g') mapping V_rho to
V_sigma.  Successive reductions remove redundancy without changing the
operator: canonicalisation fixes the right-covariance gauge, G-invariant
kernels collapse to one argument, one-argument kernels descend to the
coset space G/H' and finally to double cosets H\\G/H'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (ConstraintViolationError, DimensionMismatchError,
                     HomsteerError, NotGInvariantError)
from .features import FeatureMap, SectionFeature
from .groups import DoubleCosetSpace, GroupTable, Quotient, twist
from .reps import Representation

NULLSPACE_CUTOFF = 1e-9
INVARIANCE_TOL = 1e-10
# Two-argument kernels hold |G|^2 matrices; keep them to modest orders.
TWO_ARG_MAX_ORDER = 720


def _check_pair(sigma: Representation, rho: Representation) -> GroupTable:
    if sigma.group is not rho.group:
        raise HomsteerError("kernel representations must share one parent group")
    return sigma.group


@dataclass(frozen=True)
class TwoArgKernel:
    """kappa(g, g') in hom(V_rho, V_sigma), left-covariant in g:
    kappa(gh, g') = sigma(h^-1) kappa(g, g') for h in the output subgroup."""

    sigma: Representation
    rho: Representation
    values: np.ndarray  # (|G|, |G|, d_sigma, d_rho)

    def __post_init__(self):
        grp = _check_pair(self.sigma, self.rho)
        if grp.order > TWO_ARG_MAX_ORDER:
            raise HomsteerError(
                f"two-argument kernels capped at order {TWO_ARG_MAX_ORDER}")
        self.values.setflags(write=False)
        want = (grp.order, grp.order, self.sigma.dim, self.rho.dim)
        if self.values.shape != want:
            raise DimensionMismatchError(f"expected {want}, got {self.values.shape}")

    @property
    def group(self) -> GroupTable:
        return self.sigma.group

    def left_covariance_residual(self) -> float:
        """Max violation of kappa(gh, g') = sigma(h^-1) kappa(g, g')."""
        grp = self.group
        worst = 0.0
        for h in self.sigma.subgroup.elements:
            s = self.sigma.mat_inv(h)
            shifted = self.values[grp.mult[:, h]]
            expected = np.einsum('ik,abkj->abij', s, self.values)
            worst = max(worst, float(np.abs(shifted - expected).max()))
        return worst

    def right_covariance_residual(self) -> float:
        """Max violation of kappa(g, g'h') = kappa(g, g') rho(h');
        zero exactly for canonical representatives."""
        grp = self.group
        worst = 0.0
        for h in self.rho.subgroup.elements:
            r = self.rho.mat(h)
            shifted = self.values[:, grp.mult[:, h]]
            expected = self.values @ r
            worst = max(worst, float(np.abs(shifted - expected).max()))
        return worst

    def invariance_residual(self) -> float:
        """Max violation of kappa(kg, kg') = kappa(g, g') over all k."""
        grp = self.group
        worst = 0.0
        for k in range(grp.order):
            moved = self.values[grp.mult[k]][:, grp.mult[k]]
            worst = max(worst, float(np.abs(moved - self.values).max()))
        return worst


def apply_two_arg(kernel: TwoArgKernel, f: FeatureMap) -> FeatureMap:
    """[Phi f](g) = sum_{g'} kappa(g, g') f(g') (counting measure)."""
    out = np.einsum('abij,bj->ai', kernel.values, f.values)
    return FeatureMap(_output_rep(kernel), out)


def _output_rep(kernel) -> Representation:
    return kernel.sigma


def canonical_representative(kernel: TwoArgKernel) -> TwoArgKernel:
    """Average the right argument over H' to fix the gauge.

    kappa_0(g, g') = (1/|H'|) sum_h kappa(g, g'h) rho(h^-1).  The result
    is right-covariant and induces exactly the same operator on every
    Mackey feature map, with no extra scaling.
    """
    grp = kernel.group
    sub = kernel.rho.subgroup
    out = np.zeros_like(kernel.values)
    for h in sub.elements:
        out += kernel.values[:, grp.mult[:, h]] @ kernel.rho.mat_inv(h)
    out /= len(sub)
    return TwoArgKernel(kernel.sigma, kernel.rho, out)


@dataclass(frozen=True)
class OneArgKernel:
    """kappa_hat(g) = kappa(e, g) of a G-invariant kernel.

    Fully steerable kernels satisfy kappa_hat(h g h') =
    sigma(h) kappa_hat(g) rho(h'); the right half holds only after
    canonicalisation.
    """

    sigma: Representation
    rho: Representation
    values: np.ndarray  # (|G|, d_sigma, d_rho)

    def __post_init__(self):
        grp = _check_pair(self.sigma, self.rho)
        self.values.setflags(write=False)
        want = (grp.order, self.sigma.dim, self.rho.dim)
        if self.values.shape != want:
            raise DimensionMismatchError(f"expected {want}, got {self.values.shape}")

    @property
    def group(self) -> GroupTable:
        return self.sigma.group

    def left_equivariance_residual(self) -> float:
        """Max violation of kappa_hat(hg) = sigma(h) kappa_hat(g)."""
        grp = self.group
        worst = 0.0
        for h in self.sigma.subgroup.elements:
            shifted = self.values[grp.mult[h]]
            expected = np.einsum('ik,akj->aij', self.sigma.mat(h), self.values)
            worst = max(worst, float(np.abs(shifted - expected).max()))
        return worst

    def right_equivariance_residual(self) -> float:
        """Max violation of kappa_hat(gh') = kappa_hat(g) rho(h')."""
        grp = self.group
        worst = 0.0
        for h in self.rho.subgroup.elements:
            shifted = self.values[grp.mult[:, h]]
            expected = self.values @ self.rho.mat(h)
            worst = max(worst, float(np.abs(shifted - expected).max()))
        return worst

    def bi_equivariance_residual(self) -> float:
        return max(self.left_equivariance_residual(),
                   self.right_equivariance_residual())


def reduce_to_one_arg(kernel: TwoArgKernel, tol: float = INVARIANCE_TOL) -> OneArgKernel:
    """Collapse a G-invariant two-argument kernel to kappa_hat(g) = kappa(e, g)."""
    residual = kernel.invariance_residual()
    if residual > tol:
        raise NotGInvariantError(
            f"diagonal invariance residual {residual:.3e} exceeds {tol:.0e}")
    return OneArgKernel(kernel.sigma, kernel.rho,
                        kernel.values[kernel.group.identity].copy())


def expand_to_two_arg(kernel: OneArgKernel) -> TwoArgKernel:
    """kappa(g, g') = kappa_hat(g^-1 g'), the unique G-invariant extension."""
    grp = kernel.group
    idx = grp.mult[grp.inv, :]  # idx[g, g'] = g^-1 g'
    return TwoArgKernel(kernel.sigma, kernel.rho, kernel.values[idx])


def gcnn_apply(kernel: OneArgKernel, f: FeatureMap) -> FeatureMap:
    """Group-convolution form [Phi f](g) = sum_{g'} kappa_hat(g^-1 g') f(g')."""
    grp = kernel.group
    out = np.empty((grp.order, kernel.sigma.dim))
    for g in range(grp.order):
        gathered = kernel.values[grp.mult[int(grp.inv[g])]]
        out[g] = np.einsum('bij,bj->i', gathered, f.values)
    return FeatureMap(kernel.sigma, out)


@dataclass(frozen=True)
class QuotientKernel:
    """Restriction of a canonical one-argument kernel to the section of
    G/H': kappa_q(x) = kappa_hat(s(x))."""

    quotient: Quotient  # cosets of the input subgroup H'
    sigma: Representation
    rho: Representation
    values: np.ndarray  # (|G/H'|, d_sigma, d_rho)

    def __post_init__(self):
        _check_pair(self.sigma, self.rho)
        self.values.setflags(write=False)
        want = (self.quotient.size, self.sigma.dim, self.rho.dim)
        if self.values.shape != want:
            raise DimensionMismatchError(f"expected {want}, got {self.values.shape}")

    def constraint_residual(self) -> float:
        """Max violation of kappa_q(h |> x) = sigma(h) kappa_q(x) rho(h'(x,h))^-1
        with h'(x, h) the twist cocycle of the coset action."""
        q = self.quotient
        worst = 0.0
        for h in self.sigma.subgroup.elements:
            s = self.sigma.mat(h)
            for x in range(q.size):
                hp = twist(q, x, h)
                lhs = self.values[q.act(h, x)]
                rhs = s @ self.values[x] @ self.rho.mat_inv(hp)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst


def to_quotient_kernel(kernel: OneArgKernel, quotient: Quotient,
                       tol: float = INVARIANCE_TOL) -> QuotientKernel:
    """Restrict to the section.  The kernel must be right-covariant so that
    no information is lost; canonicalise first otherwise."""
    if quotient.subgroup.elements != kernel.rho.subgroup.elements:
        raise HomsteerError("quotient must be by the input-side subgroup")
    residual = kernel.right_equivariance_residual()
    if residual > tol:
        raise ConstraintViolationError(
            f"right covariance residual {residual:.3e}; canonicalise first")
    return QuotientKernel(quotient, kernel.sigma, kernel.rho,
                          kernel.values[quotient.section].copy())


def from_quotient_kernel(kernel: QuotientKernel) -> OneArgKernel:
    """Rebuild kappa_hat(g) = kappa_q(pi(g)) rho(s(pi(g))^-1 g)."""
    q = kernel.quotient
    grp = q.group
    out = np.empty((grp.order, kernel.sigma.dim, kernel.rho.dim))
    for g in range(grp.order):
        x = int(q.coset_of[g])
        h = grp.op(int(grp.inv[q.section[x]]), g)
        out[g] = kernel.values[x] @ kernel.rho.mat(h)
    return OneArgKernel(kernel.sigma, kernel.rho, out)


def quotient_apply(kernel: QuotientKernel, sf: SectionFeature) -> SectionFeature:
    """Section-level operator matching the dense one under the counting
    measure: [Psi f_X](x) = |H'| sum_{x'} kappa_hat(s(x)^-1 s(x')) f_X(x').

    The |H'| factor accounts for the redundant copies each coset carries
    in the dense sum over G.
    """
    q = kernel.quotient
    grp = q.group
    scale = float(len(q.subgroup))
    out = np.empty((q.size, kernel.sigma.dim))
    for x in range(q.size):
        acc = np.zeros(kernel.sigma.dim)
        sx_inv = int(grp.inv[q.section[x]])
        for xp in range(q.size):
            g = grp.op(sx_inv, int(q.section[xp]))
            y = int(q.coset_of[g])
            h = grp.op(int(grp.inv[q.section[y]]), g)
            khat = kernel.values[y] @ kernel.rho.mat(h)
            acc += khat @ sf.values[xp]
        out[x] = scale * acc
    return SectionFeature(q, kernel.sigma, out)


@dataclass(frozen=True)
class DoubleCosetKernel:
    """One matrix per double coset H gamma H', kappa_d(x) = kappa_hat(gamma(x)),
    constrained by the class stabiliser."""

    space: DoubleCosetSpace
    sigma: Representation
    rho: Representation
    values: np.ndarray  # (#classes, d_sigma, d_rho)

    def __post_init__(self):
        _check_pair(self.sigma, self.rho)
        self.values.setflags(write=False)
        want = (self.space.size, self.sigma.dim, self.rho.dim)
        if self.values.shape != want:
            raise DimensionMismatchError(f"expected {want}, got {self.values.shape}")

    def conjugated_rho(self, x: int, h: int) -> np.ndarray:
        """rho^x(h) = rho(gamma(x)^-1 h gamma(x)) for h in the stabiliser."""
        grp = self.space.group
        g = int(self.space.gamma[x])
        conj = grp.op(grp.op(int(grp.inv[g]), h), g)
        return self.rho.mat(conj)

    def constraint_residual(self) -> float:
        """Max violation of sigma(h) kappa_d(x) = kappa_d(x) rho^x(h) over
        stabiliser elements h."""
        worst = 0.0
        for x in range(self.space.size):
            for h in self.space.stabilizers[x].elements:
                lhs = self.sigma.mat(h) @ self.values[x]
                rhs = self.values[x] @ self.conjugated_rho(x, h)
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst


def to_double_coset_kernel(kernel: OneArgKernel, space: DoubleCosetSpace,
                           tol: float = INVARIANCE_TOL) -> DoubleCosetKernel:
    """Sample a fully steerable kernel at the class representatives."""
    residual = kernel.bi_equivariance_residual()
    if residual > tol:
        raise ConstraintViolationError(
            f"bi-equivariance residual {residual:.3e} exceeds {tol:.0e}")
    return DoubleCosetKernel(space, kernel.sigma, kernel.rho,
                             kernel.values[space.gamma].copy())


def from_double_coset_kernel(kernel: DoubleCosetKernel) -> OneArgKernel:
    """Rebuild kappa_hat(g) = sigma(h) kappa_d(x) rho(h') from any
    factorisation g = h gamma(x) h'; the stabiliser constraint makes the
    result independent of the factorisation chosen."""
    space = kernel.space
    grp = space.group
    right = space.right
    out = np.empty((grp.order, kernel.sigma.dim, kernel.rho.dim))
    for g in range(grp.order):
        x = int(space.class_of[g])
        rep = int(space.gamma[x])
        rep_inv = int(grp.inv[rep])
        for h in space.left.elements:
            hp = grp.op(grp.op(rep_inv, int(grp.inv[h])), g)
            if hp in right:
                out[g] = kernel.sigma.mat(h) @ kernel.values[x] @ kernel.rho.mat(hp)
                break
        else:
            raise HomsteerError(f"element {g} not factorisable over its class")
    return OneArgKernel(kernel.sigma, kernel.rho, out)


def averaging_projector_apply(kernel: OneArgKernel) -> OneArgKernel:
    """Project onto the fully steerable subspace:
    (P kappa_hat)(g) = avg_{h, h'} sigma(h)^-1 kappa_hat(h g h') rho(h')^-1."""
    grp = kernel.group
    H = kernel.sigma.subgroup
    Hp = kernel.rho.subgroup
    out = np.zeros_like(kernel.values)
    for h in H.elements:
        s_inv = kernel.sigma.mat_inv(h)
        for hp in Hp.elements:
            gathered = kernel.values[grp.mult[h][grp.mult[:, hp]]]
            out += np.einsum('ik,akl,lj->aij', s_inv, gathered,
                             kernel.rho.mat_inv(hp))
    out /= len(H) * len(Hp)
    return OneArgKernel(kernel.sigma, kernel.rho, out)


def solve_steerable_basis(sigma: Representation, rho: Representation,
                          cutoff: float = NULLSPACE_CUTOFF) -> np.ndarray:
    """Orthonormal basis of fully steerable one-argument kernels.

    Stacks the linear constraints kappa_hat(hg) = sigma(h) kappa_hat(g)
    and kappa_hat(gh') = kappa_hat(g) rho(h') over all group elements and
    computes the null space by SVD (relative cutoff).  Each basis vector
    has its first nonzero coordinate made positive.

    Returns an array of shape (n_basis, |G|, d_sigma, d_rho).
    """
    grp = _check_pair(sigma, rho)
    n, ds, dr = grp.order, sigma.dim, rho.dim
    dim = n * ds * dr
    eye_g = np.eye(n)
    blocks = []
    for h in sigma.subgroup.elements:
        if h == grp.identity:
            continue
        perm = np.zeros((n, n))
        perm[np.arange(n), grp.mult[h]] = 1.0  # row g picks kappa_hat(hg)
        move = np.kron(perm, np.eye(ds * dr))
        act = np.kron(eye_g, np.kron(sigma.mat(h), np.eye(dr)))
        blocks.append(move - act)
    for hp in rho.subgroup.elements:
        if hp == grp.identity:
            continue
        perm = np.zeros((n, n))
        perm[np.arange(n), grp.mult[:, hp]] = 1.0  # row g picks kappa_hat(g hp)
        move = np.kron(perm, np.eye(ds * dr))
        # vec(K rho(hp)) = (I x rho(hp)^T) vec(K)
        act = np.kron(eye_g, np.kron(np.eye(ds), rho.mat(hp).T))
        blocks.append(move - act)
    if not blocks:
        basis = np.eye(dim)
    else:
        A = np.vstack(blocks)
        basis = scipy.linalg.null_space(A, rcond=cutoff).T
    fixed = []
    for v in basis:
        nz = np.nonzero(np.abs(v) > cutoff)[0]
        if len(nz) and v[nz[0]] < 0:
            v = -v
        fixed.append(v)
    if not fixed:
        return np.zeros((0, n, ds, dr))
    return np.array(fixed).reshape(-1, n, ds, dr)


def steerable_dimension_oracle(sigma: Representation, rho: Representation) -> int:
    """Dimension of the steerable kernel space as the rank of the
    averaging projector, computed through its trace:

    rank P = tr P = avg_{h, h'} #{g : h g h' = g} * tr sigma(h^-1) * tr rho(h'^-1).
    """
    grp = _check_pair(sigma, rho)
    total = 0.0
    for h in sigma.subgroup.elements:
        chi_s = float(np.trace(sigma.mat_inv(h)))
        row = grp.mult[h]
        for hp in rho.subgroup.elements:
            fixed = int(np.count_nonzero(grp.mult[row, hp] == np.arange(grp.order)))
            total += fixed * chi_s * float(np.trace(rho.mat_inv(hp)))
    total /= len(sigma.subgroup) * len(rho.subgroup)
    rank = round(total)
    if abs(total - rank) > 1e-6:
        raise HomsteerError(f"projector trace {total} is not close to an integer")
    return rank


def double_coset_dimension(sigma: Representation, rho: Representation,
                           space: DoubleCosetSpace,
                           cutoff: float = NULLSPACE_CUTOFF) -> int:
    """Steerable dimension summed class by class: each double coset
    contributes the intertwiners between sigma and the conjugated rho
    restricted to the class stabiliser."""
    grp = _check_pair(sigma, rho)
    ds, dr = sigma.dim, rho.dim
    total = 0
    for x in range(space.size):
        rep = int(space.gamma[x])
        rep_inv = int(grp.inv[rep])
        rows = []
        for h in space.stabilizers[x].elements:
            if h == grp.identity:
                continue
            conj = grp.op(grp.op(rep_inv, h), rep)
            # sigma(h) L - L rho^x(h) = 0 as a matrix on vec(L)
            rows.append(np.kron(sigma.mat(h), np.eye(dr))
                        - np.kron(np.eye(ds), rho.mat(conj).T))
        if not rows:
            total += ds * dr
        else:
            total += scipy.linalg.null_space(np.vstack(rows), rcond=cutoff).shape[1]
    return total
