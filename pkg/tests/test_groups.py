import numpy as np
import pytest

from homsteer import (InvalidSubgroupError, Subgroup, double_cosets,
                      left_cosets, make_cyclic, make_dihedral, make_semidirect,
                      make_symmetric, symmetric_point_action, twist)


def exhaustive_laws(grp):
    idx = np.arange(grp.order)
    assert np.array_equal(grp.mult[grp.identity], idx)
    assert np.array_equal(grp.mult[:, grp.identity], idx)
    assert np.array_equal(grp.mult[idx, grp.inv], np.full(grp.order, grp.identity))
    for a in range(grp.order):
        assert np.array_equal(grp.mult[grp.mult[a]], grp.mult[a][grp.mult])


@pytest.mark.parametrize("grp", [
    make_cyclic(1), make_cyclic(12), make_dihedral(4), make_symmetric(4),
    make_semidirect(8, True), make_semidirect(6, False)])
def test_constructors_satisfy_group_laws(grp):
    exhaustive_laws(grp)


def test_orders():
    assert make_cyclic(7).order == 7
    assert make_dihedral(5).order == 10
    assert make_symmetric(5).order == 120
    assert make_semidirect(9, True).order == 18


def test_symmetric_composition_convention():
    # op(a, b) must compose as (a o b)(i) = a(b(i)) on one-line labels
    grp = make_symmetric(3)
    labels = grp.labels
    for a in range(grp.order):
        for b in range(grp.order):
            word = "".join(labels[a][int(labels[b][i])] for i in range(3))
            assert labels[grp.op(a, b)] == word


def test_symmetric_point_action_is_an_action():
    grp = make_symmetric(4)
    act = symmetric_point_action(4)
    for a in range(grp.order):
        for b in range(grp.order):
            assert all(act[grp.op(a, b), i] == act[a, act[b, i]]
                       for i in range(4))


def test_semidirect_flip_conjugation():
    grp = make_semidirect(8, True)
    flip = 8  # the reflection at the origin
    for t in range(8):
        conj = grp.op(grp.op(flip, t), int(grp.inv[flip]))
        assert conj == (-t) % 8


def test_subgroup_rejects_non_closed_sets():
    grp = make_symmetric(3)
    with pytest.raises(InvalidSubgroupError):
        Subgroup(grp, (0, 3))  # 3 is a 3-cycle: not closed without its square


def test_generated_subgroup():
    grp = make_dihedral(4)
    rot = Subgroup.generated(grp, [1])
    assert len(rot.elements) == 4
    assert Subgroup.full(grp).elements == tuple(range(8))
    assert Subgroup.trivial(grp).elements == (grp.identity,)


def test_cosets_partition_and_section_is_rooted():
    grp = make_symmetric(4)
    sub = Subgroup.generated(grp, [1])
    q = left_cosets(grp, sub)
    assert q.size * len(sub.elements) == grp.order
    seen = set()
    for x in range(q.size):
        coset = {grp.op(int(q.section[x]), h) for h in sub.elements}
        assert seen.isdisjoint(coset)
        seen |= coset
        assert q.coset_of[q.section[x]] == x
    assert seen == set(range(grp.order))
    assert int(q.section[q.coset_of[grp.identity]]) == grp.identity


def test_coset_action_and_twist_factorisation():
    grp = make_dihedral(4)
    sub = Subgroup(grp, (grp.identity, 4))
    q = left_cosets(grp, sub)
    for g in range(grp.order):
        for x in range(q.size):
            y = q.act(g, x)
            h = twist(q, x, g)
            assert h in sub.elements
            # g s(x) = s(g |> x) h(x, g)
            assert grp.op(g, int(q.section[x])) == grp.op(int(q.section[y]), h)


def test_twist_cocycle_identity():
    grp = make_semidirect(6, True)
    sub = Subgroup(grp, (grp.identity, 6))
    q = left_cosets(grp, sub)
    for x in range(q.size):
        for g1 in range(grp.order):
            for g2 in range(grp.order):
                lhs = twist(q, x, grp.op(g2, g1))
                rhs = grp.op(twist(q, q.act(g1, x), g2), twist(q, x, g1))
                assert lhs == rhs


def test_double_cosets_partition_group():
    grp = make_symmetric(4)
    left = Subgroup.generated(grp, [1])
    right = Subgroup.generated(grp, [2])
    space = double_cosets(grp, left, right)
    counts = np.zeros(space.size, dtype=int)
    for g in range(grp.order):
        counts[space.class_of[g]] += 1
    assert counts.sum() == grp.order
    for x in range(space.size):
        gamma = int(space.gamma[x])
        assert space.class_of[gamma] == x
        for h in space.stabilizers[x].elements:
            assert space.class_of[grp.op(h, gamma)] == x
