"""Induced representations as concrete feature maps on a finite group.

A FeatureMap stores one vector per group element (dense, redundant by a
factor |H'|); a SectionFeature stores one vector per coset and is the
compact form.  lift and sink are the mutually inverse maps between the
two pictures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotInducedError
from .groups import GroupTable, Quotient, Subgroup, twist
from .reps import Representation

MACKEY_ACCEPT_TOL = 1e-10
# sink rejects above this; the gap to the acceptance tolerance avoids
# flapping on inputs right at the boundary.
MACKEY_REJECT_TOL = 1e-8


@dataclass(frozen=True)
class FeatureMap:
    """An element of the induced representation: values f(g) in V_rho
    obeying f(gh) = rho(h^-1) f(g) for h in the inducing subgroup."""

    rep: Representation
    values: np.ndarray  # (|G|, dim)

    def __post_init__(self):
        self.values.setflags(write=False)
        if self.values.shape != (self.group.order, self.rep.dim):
            raise DimensionMismatchError(
                f"expected {(self.group.order, self.rep.dim)}, got {self.values.shape}")

    @property
    def group(self) -> GroupTable:
        return self.rep.group

    @property
    def subgroup(self) -> Subgroup:
        return self.rep.subgroup

    def mackey_residual(self) -> float:
        """Max violation of f(gh) = rho(h^-1) f(g) over all g, h."""
        grp = self.group
        worst = 0.0
        for h in self.subgroup.elements:
            rho_hinv = self.rep.mat_inv(h)
            shifted = self.values[grp.mult[:, h]]  # f(gh) for every g
            expected = self.values @ rho_hinv.T
            worst = max(worst, float(np.abs(shifted - expected).max()))
        return worst

    def __add__(self, other: "FeatureMap") -> "FeatureMap":
        return FeatureMap(self.rep, self.values + other.values)

    def __sub__(self, other: "FeatureMap") -> "FeatureMap":
        return FeatureMap(self.rep, self.values - other.values)


@dataclass(frozen=True)
class SectionFeature:
    """Section-level features: one unconstrained vector per coset."""

    quotient: Quotient
    rep: Representation
    values: np.ndarray  # (|G/H|, dim)

    def __post_init__(self):
        self.values.setflags(write=False)
        if self.values.shape != (self.quotient.size, self.rep.dim):
            raise DimensionMismatchError(
                f"expected {(self.quotient.size, self.rep.dim)}, got {self.values.shape}")


def mackey_project(raw: np.ndarray, rep: Representation) -> FeatureMap:
    """Symmetrise raw per-element vectors onto the Mackey subspace.

    [Pf](g) = (1/|H'|) sum_h rho(h^-1) f(g h^-1).  P is idempotent,
    linear and G-equivariant, and fixes Mackey inputs pointwise.
    """
    grp = rep.group
    sub = rep.subgroup
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (grp.order, rep.dim):
        raise DimensionMismatchError(
            f"expected {(grp.order, rep.dim)}, got {raw.shape}")
    out = np.zeros_like(raw)
    for h in sub.elements:
        hinv = int(grp.inv[h])
        out += raw[grp.mult[:, hinv]] @ rep.mat(hinv).T
    out /= len(sub)
    return FeatureMap(rep, out)


def g_action(k: int, f: FeatureMap) -> FeatureMap:
    """[kf](g) = f(k^-1 g); a pure index permutation."""
    grp = f.group
    kinv = int(grp.inv[k])
    return FeatureMap(f.rep, f.values[grp.mult[kinv, :]])


def lift(sf: SectionFeature) -> FeatureMap:
    """Lift section-level features to the group (Lambda-up).

    [lift f_X](g) = rho(h(g)^-1) f_X(pi(g)) with h(g) = s(gH)^-1 g.
    """
    q = sf.quotient
    grp = q.group
    out = np.empty((grp.order, sf.rep.dim))
    for g in range(grp.order):
        x = int(q.coset_of[g])
        h = grp.op(int(grp.inv[q.section[x]]), g)
        out[g] = sf.rep.mat_inv(h) @ sf.values[x]
    return FeatureMap(sf.rep, out)


def sink(f: FeatureMap, quotient: Quotient) -> SectionFeature:
    """Restrict a Mackey feature map to the section (Lambda-down).

    Rejects inputs whose Mackey residual exceeds the rejection threshold.
    """
    residual = f.mackey_residual()
    if residual > MACKEY_REJECT_TOL:
        raise NotInducedError(
            f"Mackey residual {residual:.3e} exceeds {MACKEY_REJECT_TOL:.0e}")
    values = f.values[quotient.section]
    return SectionFeature(quotient, f.rep, values.copy())


def section_action(k: int, sf: SectionFeature) -> SectionFeature:
    """(k f_X)(x) = rho(h(x, k^-1)^-1) f_X(k^-1 |> x)."""
    q = sf.quotient
    grp = q.group
    kinv = int(grp.inv[k])
    out = np.empty_like(sf.values)
    for x in range(q.size):
        src = q.act(kinv, x)
        h = twist(q, x, kinv)
        out[x] = sf.rep.mat_inv(h) @ sf.values[src]
    return SectionFeature(q, sf.rep, out)


def random_feature(rep: Representation, rng: np.random.Generator) -> FeatureMap:
    """Seeded random Mackey feature: uniform [-1, 1] entries, projected."""
    raw = rng.uniform(-1.0, 1.0, size=(rep.group.order, rep.dim))
    return mackey_project(raw, rep)


def random_section_feature(quotient: Quotient, rep: Representation,
                           rng: np.random.Generator) -> SectionFeature:
    values = rng.uniform(-1.0, 1.0, size=(quotient.size, rep.dim))
    return SectionFeature(quotient, rep, values)
