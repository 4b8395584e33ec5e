"""Finite groups as explicit multiplication tables.

Elements are dense integer indices into a Cayley table, so multiplication
is O(1) and iteration order is deterministic.  Constructors reject orders
above MAX_ORDER to keep the O(|G|^2) kernel tables and O(|G|^3)
associativity checks tractable.

Measure convention: sums over G and over subgroups use the counting
measure; operations that need a normalised subgroup average divide by the
subgroup order explicitly and say so in their docstring.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidOrderError, InvalidSectionError, InvalidSubgroupError

MAX_ORDER = 5040
# Full associativity check is cubic; above this order we sample triples.
FULL_ASSOC_CHECK_ORDER = 512
_ASSOC_SAMPLES = 20000


@dataclass(frozen=True)
class GroupTable:
    """A finite group given by its Cayley table.

    mult[a, b] is the index of the product a*b, inv[a] the index of the
    inverse and identity the index of the neutral element.
    """

    order: int
    mult: np.ndarray
    inv: np.ndarray
    identity: int
    labels: tuple[str, ...] | None = None
    name: str = "group"

    def __post_init__(self):
        self.mult.setflags(write=False)
        self.inv.setflags(write=False)

    def op(self, a: int, b: int) -> int:
        return int(self.mult[a, b])

    def elements(self) -> range:
        return range(self.order)

    def conjugate(self, g: int, h: int) -> int:
        """g h g^-1."""
        return int(self.mult[self.mult[g, h], self.inv[g]])

    def label(self, g: int) -> str:
        return self.labels[g] if self.labels is not None else str(g)

    def __len__(self) -> int:
        return self.order


def _validate_table(mult: np.ndarray, name: str, rng_seed: int = 0) -> tuple[np.ndarray, int]:
    n = mult.shape[0]
    if mult.shape != (n, n):
        raise InvalidOrderError(f"{name}: Cayley table must be square, got {mult.shape}")
    identity = None
    for e in range(n):
        if np.array_equal(mult[e], np.arange(n)) and np.array_equal(mult[:, e], np.arange(n)):
            identity = e
            break
    if identity is None:
        raise InvalidOrderError(f"{name}: no identity element found")
    inv = np.full(n, -1, dtype=mult.dtype)
    for g in range(n):
        hits = np.nonzero(mult[g] == identity)[0]
        if len(hits) != 1 or mult[hits[0], g] != identity:
            raise InvalidOrderError(f"{name}: element {g} has no two-sided inverse")
        inv[g] = hits[0]
    if n <= FULL_ASSOC_CHECK_ORDER:
        for a in range(n):
            if not np.array_equal(mult[mult[a]], mult[a][mult]):
                raise InvalidOrderError(f"{name}: associativity fails for a={a}")
    else:
        rng = np.random.default_rng(rng_seed)
        abc = rng.integers(0, n, size=(_ASSOC_SAMPLES, 3))
        lhs = mult[mult[abc[:, 0], abc[:, 1]], abc[:, 2]]
        rhs = mult[abc[:, 0], mult[abc[:, 1], abc[:, 2]]]
        if not np.array_equal(lhs, rhs):
            raise InvalidOrderError(f"{name}: sampled associativity check failed")
    return inv, identity


def _make_group(mult: np.ndarray, labels: Sequence[str] | None, name: str) -> GroupTable:
    n = mult.shape[0]
    if n > MAX_ORDER:
        raise InvalidOrderError(f"{name}: order {n} exceeds ceiling {MAX_ORDER}")
    dtype = np.int16 if n < 2**15 else np.int32
    mult = np.ascontiguousarray(mult.astype(dtype))
    inv, identity = _validate_table(mult, name)
    return GroupTable(
        order=n,
        mult=mult,
        inv=inv,
        identity=int(identity),
        labels=tuple(labels) if labels is not None else None,
        name=name,
    )


def make_cyclic(n: int) -> GroupTable:
    """Z_n under addition mod n; identity is 0."""
    if n < 1:
        raise InvalidOrderError("cyclic group needs n >= 1")
    idx = np.arange(n)
    mult = (idx[:, None] + idx[None, :]) % n
    return _make_group(mult, [str(k) for k in range(n)], f"Z{n}")


def make_dihedral(n: int) -> GroupTable:
    """D_n of order 2n as pairs (rotation k, flip b), index k + n*b.

    (k1,b1)*(k2,b2) = (k1 + (-1)^b1 * k2 mod n, b1 xor b2).
    """
    if n < 1:
        raise InvalidOrderError("dihedral group needs n >= 1")
    order = 2 * n
    mult = np.empty((order, order), dtype=np.int64)
    for k1, b1 in itertools.product(range(n), range(2)):
        for k2, b2 in itertools.product(range(n), range(2)):
            k = (k1 - k2) % n if b1 else (k1 + k2) % n
            mult[k1 + n * b1, k2 + n * b2] = k + n * (b1 ^ b2)
    labels = [f"r{k}" for k in range(n)] + [f"sr{k}" for k in range(n)]
    return _make_group(mult, labels, f"D{n}")


def make_symmetric(n: int) -> GroupTable:
    """S_n, elements enumerated in lexicographic one-line order.

    Composition convention: (tau o pi)(i) = tau(pi(i)), i.e.
    mult[a, b] = index of the permutation i -> perm_a(perm_b(i)).
    """
    if not 1 <= n <= 7:
        raise InvalidOrderError("symmetric group supported for 1 <= n <= 7")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    order = len(perms)
    # Big-endian positional code makes code order == lexicographic order.
    weights = n ** np.arange(n - 1, -1, -1)
    codes = perms @ weights
    # codes is already sorted ascending; composition then rank lookup.
    mult = np.empty((order, order), dtype=np.int64)
    for a in range(order):
        composed = perms[a][perms]  # (order, n): a(b(i)) for every b
        mult[a] = np.searchsorted(codes, composed @ weights)
    labels = ["".join(map(str, p)) for p in perms]
    g = _make_group(mult, labels, f"S{n}")
    return g


def symmetric_point_action(n: int) -> np.ndarray:
    """Action table act[g, i] = perm_g(i) for S_n in the same element order."""
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64)


def make_semidirect(n: int, flip: bool) -> GroupTable:
    """Z_n x| Z_2 (flip=True) or the direct product Z_n x Z_2 (flip=False).

    Pairs (t, h) with index t + n*h and product
    (t1,h1)*(t2,h2) = (t1 + (-1)^(h1 if flip) * t2 mod n, h1 xor h2).
    The canonical global section is s(x) = (x, 0) with projection
    pi((t, h)) = t, matching coset index == translation part.
    """
    if n < 1:
        raise InvalidOrderError("semidirect product needs n >= 1")
    order = 2 * n
    mult = np.empty((order, order), dtype=np.int64)
    for t1, h1 in itertools.product(range(n), range(2)):
        sign = -1 if (flip and h1) else 1
        for t2, h2 in itertools.product(range(n), range(2)):
            mult[t1 + n * h1, t2 + n * h2] = (t1 + sign * t2) % n + n * (h1 ^ h2)
    labels = [f"t{t}" for t in range(n)] + [f"ft{t}" for t in range(n)]
    op = "x|" if flip else "x"
    return _make_group(mult, labels, f"Z{n}{op}Z2")


@dataclass(frozen=True)
class Subgroup:
    """A subgroup as a sorted list of parent element indices."""

    parent: GroupTable
    elements: tuple[int, ...]
    side: str = "left"
    _pos: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        elems = tuple(sorted(self.elements))
        object.__setattr__(self, "elements", elems)
        g = self.parent
        eset = set(elems)
        if g.identity not in eset:
            raise InvalidSubgroupError("subgroup must contain the identity")
        for a in elems:
            if int(g.inv[a]) not in eset:
                raise InvalidSubgroupError(f"subgroup not closed under inversion at {a}")
            for b in elems:
                if int(g.mult[a, b]) not in eset:
                    raise InvalidSubgroupError(f"subgroup not closed under product {a}*{b}")
        object.__setattr__(self, "_pos", {e: i for i, e in enumerate(elems)})

    @classmethod
    def full(cls, group: GroupTable) -> "Subgroup":
        return cls(group, tuple(range(group.order)))

    @classmethod
    def trivial(cls, group: GroupTable) -> "Subgroup":
        return cls(group, (group.identity,))

    @classmethod
    def generated(cls, group: GroupTable, generators: Sequence[int]) -> "Subgroup":
        elems = {group.identity}
        frontier = list(generators)
        while frontier:
            g = frontier.pop()
            if g in elems:
                continue
            elems.add(g)
            for h in list(elems):
                for prod in (group.op(g, h), group.op(h, g)):
                    if prod not in elems:
                        frontier.append(prod)
            frontier.append(int(group.inv[g]))
        return cls(group, tuple(elems))

    @property
    def order(self) -> int:
        return len(self.elements)

    def pos(self, g: int) -> int:
        return self._pos[g]

    def __contains__(self, g: int) -> bool:
        return g in self._pos

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class Quotient:
    """Left coset decomposition G/H with a normalised section s(eH) = e."""

    group: GroupTable
    subgroup: Subgroup
    cosets: tuple[tuple[int, ...], ...]
    coset_of: np.ndarray
    section: np.ndarray

    def __post_init__(self):
        self.coset_of.setflags(write=False)
        self.section.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.cosets)

    def act(self, g: int, x: int) -> int:
        """Induced action of g on the coset index x: g |> x = coset of g*s(x)."""
        return int(self.coset_of[self.group.mult[g, self.section[x]]])


def left_cosets(group: GroupTable, subgroup: Subgroup,
                section_hint: Sequence[int] | None = None) -> Quotient:
    """Partition G into left cosets gH.

    The default section takes the minimal element index of each coset and
    is then re-rooted so that s(eH) = e.  A section_hint must be a
    transversal; it is re-rooted the same way.
    """
    if subgroup.parent is not group:
        raise InvalidSubgroupError("subgroup does not belong to this group")
    n = group.order
    coset_of = np.full(n, -1, dtype=np.int64)
    cosets: list[tuple[int, ...]] = []
    for g in range(n):
        if coset_of[g] >= 0:
            continue
        members = tuple(sorted(int(group.mult[g, h]) for h in subgroup.elements))
        idx = len(cosets)
        for m in members:
            coset_of[m] = idx
        cosets.append(members)
    section = np.array([c[0] for c in cosets], dtype=np.int64)
    if section_hint is not None:
        hint = np.asarray(section_hint, dtype=np.int64)
        if len(hint) != len(cosets) or sorted(int(coset_of[g]) for g in hint) != list(range(len(cosets))):
            raise InvalidSectionError("section hint is not a transversal of the cosets")
        section = np.empty(len(cosets), dtype=np.int64)
        for g in hint:
            section[coset_of[g]] = g
    # Normalise so the coset of the identity is represented by the identity.
    section[coset_of[group.identity]] = group.identity
    return Quotient(group=group, subgroup=subgroup, cosets=tuple(cosets),
                    coset_of=coset_of, section=section)


def twist(q: Quotient, x: int, g: int) -> int:
    """Twist cocycle h(x, g) = s(g |> x)^-1 g s(x), an element of H.

    It is the unique h in H with g*s(x) = s(g |> x)*h.
    """
    grp = q.group
    gx = q.act(g, x)
    h = grp.op(grp.op(int(grp.inv[q.section[gx]]), g), int(q.section[x]))
    assert h in q.subgroup
    return h


@dataclass(frozen=True)
class DoubleCosetSpace:
    """Double cosets H g H' with representatives gamma and class stabilisers."""

    group: GroupTable
    left: Subgroup
    right: Subgroup
    classes: tuple[tuple[int, ...], ...]
    class_of: np.ndarray
    gamma: np.ndarray
    stabilizers: tuple[Subgroup, ...]

    def __post_init__(self):
        self.class_of.setflags(write=False)
        self.gamma.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.classes)


def double_cosets(group: GroupTable, left: Subgroup, right: Subgroup) -> DoubleCosetSpace:
    """Partition G into double cosets H g H'.

    The representative gamma of each class is its minimal element index.
    The stabiliser of class x is {h in H | h gamma(x) H' = gamma(x) H'},
    found by direct test.
    """
    n = group.order
    class_of = np.full(n, -1, dtype=np.int64)
    classes: list[tuple[int, ...]] = []
    for g in range(n):
        if class_of[g] >= 0:
            continue
        members = sorted({
            int(group.mult[group.mult[h, g], hp])
            for h in left.elements for hp in right.elements
        })
        idx = len(classes)
        for m in members:
            class_of[m] = idx
        classes.append(tuple(members))
    gamma = np.array([c[0] for c in classes], dtype=np.int64)
    right_cosets_of = left_cosets(group, right).coset_of
    stabilizers = []
    for rep in gamma:
        target = right_cosets_of[int(rep)]
        stab = tuple(h for h in left.elements
                     if right_cosets_of[group.op(h, int(rep))] == target)
        stabilizers.append(Subgroup(group, stab))
    return DoubleCosetSpace(group=group, left=left, right=right,
                            classes=tuple(classes), class_of=class_of,
                            gamma=gamma, stabilizers=tuple(stabilizers))


def haar_sum(group: GroupTable, f: Callable[[int], np.ndarray],
             normalized: bool = False) -> np.ndarray:
    """Sum of f over G in ascending element order (counting measure).

    With normalized=True the result is divided by |G|.
    """
    total = np.asarray(f(0), dtype=np.float64).copy()
    for g in range(1, group.order):
        total += f(g)
    if normalized:
        total /= group.order
    return total
