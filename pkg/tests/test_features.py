import numpy as np
import pytest

from homsteer import (FeatureMap, NotInducedError, Subgroup, g_action,
                      left_cosets, lift, mackey_project, make_dihedral,
                      make_semidirect, make_symmetric, random_feature,
                      random_section_feature, section_action, sign_rep_z2,
                      sink, regular_rep)


@pytest.fixture
def setting():
    grp = make_semidirect(6, True)
    sub = Subgroup(grp, (grp.identity, 6))
    rho = sign_rep_z2(sub)
    q = left_cosets(grp, sub)
    return grp, sub, rho, q


def test_random_feature_is_mackey(setting):
    _, _, rho, _ = setting
    f = random_feature(rho, np.random.default_rng(0))
    assert f.mackey_residual() <= 1e-14


def test_projector_idempotent_and_fixes_mackey(setting):
    grp, _, rho, _ = setting
    rng = np.random.default_rng(1)
    raw = rng.uniform(-1, 1, size=(grp.order, rho.dim))
    p = mackey_project(raw, rho)
    assert p.mackey_residual() <= 1e-14
    again = mackey_project(p.values, rho)
    assert np.abs(again.values - p.values).max() <= 1e-14


def test_projector_equivariance(setting):
    grp, _, rho, _ = setting
    rng = np.random.default_rng(2)
    raw = rng.uniform(-1, 1, size=(grp.order, rho.dim))
    p = mackey_project(raw, rho)
    for k in range(grp.order):
        moved_raw = raw[grp.mult[int(grp.inv[k])]]
        lhs = mackey_project(moved_raw, rho)
        rhs = g_action(k, p)
        assert np.abs(lhs.values - rhs.values).max() <= 1e-14


def test_g_action_is_a_left_action(setting):
    _, _, rho, _ = setting
    f = random_feature(rho, np.random.default_rng(3))
    grp = f.group
    for a in range(grp.order):
        for b in range(grp.order):
            lhs = g_action(a, g_action(b, f))
            rhs = g_action(grp.op(a, b), f)
            assert np.abs(lhs.values - rhs.values).max() == 0.0


def test_lift_sink_round_trips(setting):
    _, _, rho, q = setting
    rng = np.random.default_rng(4)
    sf = random_section_feature(q, rho, rng)
    f = lift(sf)
    assert f.mackey_residual() <= 1e-14
    assert np.abs(sink(f, q).values - sf.values).max() == 0.0
    g = random_feature(rho, rng)
    assert np.abs(lift(sink(g, q)).values - g.values).max() <= 1e-14


def test_lift_intertwines_the_actions(setting):
    grp, _, rho, q = setting
    sf = random_section_feature(q, rho, np.random.default_rng(5))
    f = lift(sf)
    for k in range(grp.order):
        lhs = lift(section_action(k, sf))
        rhs = g_action(k, f)
        assert np.abs(lhs.values - rhs.values).max() <= 1e-13


def test_sink_rejects_non_induced_input(setting):
    grp, _, rho, q = setting
    values = np.arange(float(grp.order)).reshape(-1, 1)
    f = FeatureMap(rho, values)
    assert f.mackey_residual() > 1e-8
    with pytest.raises(NotInducedError):
        sink(f, q)


def test_higher_dimensional_fiber():
    grp = make_dihedral(4)
    sub = Subgroup(grp, (grp.identity, 4))
    rho = regular_rep(sub)
    q = left_cosets(grp, sub)
    sf = random_section_feature(q, rho, np.random.default_rng(6))
    f = lift(sf)
    assert f.values.shape == (8, 2)
    assert f.mackey_residual() <= 1e-14
    assert np.abs(sink(f, q).values - sf.values).max() == 0.0
