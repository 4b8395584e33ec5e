"""Finite-dimensional real matrix representations of groups and subgroups.

All representations live over 64-bit floats; homomorphism and identity
checks use an absolute tolerance of 1e-12 per entry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, HomsteerError, InvalidOrderError
from .groups import GroupTable, Subgroup

REP_TOL = 1e-12
REGULAR_REP_MAX_ORDER = 64


@dataclass(frozen=True)
class Representation:
    """A map from the elements of a subgroup to invertible matrices.

    The domain is always a Subgroup; use Subgroup.full(group) for a
    representation of the whole group.  mat(g) takes a parent element
    index.
    """

    subgroup: Subgroup
    dim: int
    matrices: np.ndarray  # (|H|, dim, dim), ordered like subgroup.elements
    unitary: bool = False
    name: str = "rep"

    def __post_init__(self):
        self.matrices.setflags(write=False)
        if self.matrices.shape != (len(self.subgroup), self.dim, self.dim):
            raise DimensionMismatchError(
                f"expected {(len(self.subgroup), self.dim, self.dim)}, "
                f"got {self.matrices.shape}")

    @property
    def group(self) -> GroupTable:
        return self.subgroup.parent

    def mat(self, g: int) -> np.ndarray:
        return self.matrices[self.subgroup.pos(g)]

    def mat_inv(self, g: int) -> np.ndarray:
        return self.matrices[self.subgroup.pos(int(self.group.inv[g]))]

    def is_trivial(self) -> bool:
        eye = np.eye(self.dim)
        return all(np.allclose(m, eye, atol=REP_TOL) for m in self.matrices)

    def check(self) -> float:
        """Max violation of identity, homomorphism and (if flagged) unitarity."""
        grp = self.group
        worst = float(np.abs(self.mat(grp.identity) - np.eye(self.dim)).max())
        for a in self.subgroup.elements:
            for b in self.subgroup.elements:
                prod = self.mat(a) @ self.mat(b)
                worst = max(worst, float(np.abs(prod - self.mat(grp.op(a, b))).max()))
            if self.unitary:
                gram = self.mat(a).T @ self.mat(a)
                worst = max(worst, float(np.abs(gram - np.eye(self.dim)).max()))
        return worst


def _as_subgroup(domain: GroupTable | Subgroup) -> Subgroup:
    return domain if isinstance(domain, Subgroup) else Subgroup.full(domain)


def trivial_rep(domain: GroupTable | Subgroup, dim: int) -> Representation:
    """Every element maps to the identity matrix."""
    sub = _as_subgroup(domain)
    if dim < 1:
        raise DimensionMismatchError("trivial rep needs dim >= 1")
    mats = np.broadcast_to(np.eye(dim), (len(sub), dim, dim)).copy()
    return Representation(sub, dim, mats, unitary=True, name=f"trivial{dim}")


def regular_rep(domain: GroupTable | Subgroup) -> Representation:
    """Permutation matrices of left translation; dim equals the group order."""
    sub = _as_subgroup(domain)
    if len(sub) > REGULAR_REP_MAX_ORDER:
        raise InvalidOrderError(
            f"regular rep capped at order {REGULAR_REP_MAX_ORDER}, got {len(sub)}")
    n = len(sub)
    grp = sub.parent
    mats = np.zeros((n, n, n))
    for i, g in enumerate(sub.elements):
        for j, k in enumerate(sub.elements):
            mats[i, sub.pos(grp.op(g, k)), j] = 1.0
    return Representation(sub, n, mats, unitary=True, name="regular")


def sign_rep_z2(subgroup: Subgroup) -> Representation:
    """1-dim rep of an order-2 subgroup sending the non-identity element to -1."""
    if len(subgroup) != 2:
        raise HomsteerError(f"sign rep needs an order-2 subgroup, got order {len(subgroup)}")
    mats = np.array([[[1.0]] if e == subgroup.parent.identity else [[-1.0]]
                     for e in subgroup.elements])
    return Representation(subgroup, 1, mats, unitary=True, name="sign")


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_block_rep(domain: int | GroupTable | Subgroup, freqs: list[int]) -> Representation:
    """Block-diagonal 2x2 rotation rep of Z_n with angles 2*pi*m*x/n.

    Accepts n (builds Z_n), a cyclic GroupTable, or a cyclic Subgroup
    indexed by exponent.  Frequencies must be integers so that the blocks
    close up mod n and the map is a genuine representation.
    """
    if isinstance(domain, int):
        from .groups import make_cyclic
        domain = make_cyclic(domain)
    sub = _as_subgroup(domain)
    n = len(sub)
    if any(int(m) != m for m in freqs):
        raise HomsteerError("rotation frequencies must be integers")
    grp = sub.parent
    # The domain must be cyclic generated by its minimal non-identity power.
    dim = 2 * len(freqs)
    mats = np.zeros((n, dim, dim))
    for i, g in enumerate(sub.elements):
        # For Z_n constructors the element index equals the exponent.
        x = g
        for bi, m in enumerate(freqs):
            mats[i, 2 * bi:2 * bi + 2, 2 * bi:2 * bi + 2] = rotation_matrix(
                2.0 * np.pi * int(m) * x / n)
    rep = Representation(sub, dim, mats, unitary=True, name=f"rotation{list(freqs)}")
    if rep.check() > 1e-10:
        raise HomsteerError("rotation rep is not a homomorphism; "
                            "domain must be a cyclic group indexed by exponent")
    _ = grp
    return rep


@dataclass(frozen=True)
class HomRep:
    """The representation (sigma x rho*)(h, h') L = sigma(h) L rho(h')^-1
    of H x H' on hom(V_rho, V_sigma)."""

    sigma: Representation
    rho: Representation

    @property
    def dim(self) -> int:
        return self.sigma.dim * self.rho.dim

    @property
    def group(self) -> GroupTable:
        return self.sigma.group

    def act(self, h: int, hp: int, L: np.ndarray) -> np.ndarray:
        return self.sigma.mat(h) @ L @ self.rho.mat_inv(hp)

    def check(self) -> float:
        """Max homomorphism violation of the product-group action."""
        grp_l = self.sigma.group
        grp_r = self.rho.group
        rng = np.random.default_rng(0)
        L = rng.uniform(-1, 1, size=(self.sigma.dim, self.rho.dim))
        worst = 0.0
        for h1 in self.sigma.subgroup.elements:
            for h2 in self.sigma.subgroup.elements:
                for hp1 in self.rho.subgroup.elements:
                    for hp2 in self.rho.subgroup.elements:
                        lhs = self.act(h1, hp1, self.act(h2, hp2, L))
                        rhs = self.act(grp_l.op(h1, h2), grp_r.op(hp1, hp2), L)
                        worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst


def hom_rep(sigma: Representation, rho: Representation) -> HomRep:
    return HomRep(sigma=sigma, rho=rho)
