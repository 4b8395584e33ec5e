import numpy as np
import pytest

from homsteer import (NotGInvariantError, OneArgKernel, Subgroup, TwoArgKernel,
                      apply_two_arg, canonical_representative,
                      double_coset_dimension, double_cosets, expand_to_two_arg,
                      from_double_coset_kernel, from_quotient_kernel,
                      g_action, gcnn_apply, left_cosets, make_dihedral,
                      make_semidirect, make_symmetric, quotient_apply,
                      random_feature, random_section_feature, reduce_to_one_arg,
                      regular_rep, sign_rep_z2, sink, lift,
                      solve_steerable_basis, steerable_dimension_oracle,
                      to_double_coset_kernel, to_quotient_kernel, trivial_rep)


@pytest.fixture
def setting():
    grp = make_symmetric(3)
    sub = Subgroup.generated(grp, [1])  # the transposition (01)
    sigma = sign_rep_z2(sub)
    rho = sign_rep_z2(sub)
    return grp, sub, sigma, rho


def seeded_steerable(sigma, rho, seed=0):
    basis = solve_steerable_basis(sigma, rho)
    coefs = np.random.default_rng(seed).uniform(-1, 1, size=len(basis))
    return OneArgKernel(sigma, rho, np.tensordot(coefs, basis, axes=1))


def random_left_covariant(sigma, rho, seed=0):
    grp = sigma.group
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1, 1, size=(grp.order, grp.order, sigma.dim, rho.dim))
    acc = np.zeros_like(raw)
    for h in sigma.subgroup.elements:
        acc += np.einsum('ik,abkj->abij', sigma.mat(h), raw[grp.mult[:, h]])
    return TwoArgKernel(sigma, rho, acc / len(sigma.subgroup.elements))


def test_left_covariant_construction(setting):
    _, _, sigma, rho = setting
    kappa = random_left_covariant(sigma, rho)
    assert kappa.left_covariance_residual() <= 1e-14
    assert kappa.right_covariance_residual() > 1e-2  # generic gauge


def test_canonicalisation_preserves_the_operator(setting):
    _, _, sigma, rho = setting
    kappa = random_left_covariant(sigma, rho)
    k0 = canonical_representative(kappa)
    assert k0.right_covariance_residual() <= 1e-14
    assert k0.left_covariance_residual() <= 1e-14
    rng = np.random.default_rng(1)
    for _ in range(4):
        f = random_feature(rho, rng)
        lhs = apply_two_arg(kappa, f)
        rhs = apply_two_arg(k0, f)
        assert np.abs(lhs.values - rhs.values).max() <= 1e-13


def test_canonicalisation_idempotent(setting):
    _, _, sigma, rho = setting
    k0 = canonical_representative(random_left_covariant(sigma, rho))
    again = canonical_representative(k0)
    assert np.abs(again.values - k0.values).max() <= 1e-14


def test_invariance_reduction_round_trip(setting):
    _, _, sigma, rho = setting
    khat = seeded_steerable(sigma, rho)
    two = expand_to_two_arg(khat)
    assert two.invariance_residual() == 0.0
    back = reduce_to_one_arg(two)
    assert np.abs(back.values - khat.values).max() == 0.0


def test_reduction_rejects_non_invariant_kernel(setting):
    grp, _, sigma, rho = setting
    rng = np.random.default_rng(2)
    raw = rng.uniform(-1, 1, size=(grp.order, grp.order, 1, 1))
    acc = np.zeros_like(raw)
    for h in sigma.subgroup.elements:
        acc += np.einsum('ik,abkj->abij', sigma.mat(h), raw[grp.mult[:, h]])
    kappa = TwoArgKernel(sigma, rho, acc / 2)
    with pytest.raises(NotGInvariantError):
        reduce_to_one_arg(kappa)


def test_invariant_kernel_operator_is_equivariant(setting):
    _, _, sigma, rho = setting
    khat = seeded_steerable(sigma, rho)
    rng = np.random.default_rng(3)
    grp = sigma.group
    for _ in range(4):
        f = random_feature(rho, rng)
        out = gcnn_apply(khat, f)
        for k in range(grp.order):
            lhs = gcnn_apply(khat, g_action(k, f))
            rhs = g_action(k, out)
            assert np.abs(lhs.values - rhs.values).max() <= 1e-13


def test_quotient_kernel_round_trip(setting):
    grp, sub, sigma, rho = setting
    khat = seeded_steerable(sigma, rho)
    q = left_cosets(grp, sub)
    qk = to_quotient_kernel(khat, q)
    assert qk.constraint_residual() <= 1e-13
    back = from_quotient_kernel(qk)
    assert np.abs(back.values - khat.values).max() <= 1e-13


def test_double_coset_kernel_round_trip(setting):
    grp, sub, sigma, rho = setting
    khat = seeded_steerable(sigma, rho)
    space = double_cosets(grp, sub, sub)
    dk = to_double_coset_kernel(khat, space)
    assert dk.constraint_residual() <= 1e-13
    back = from_double_coset_kernel(dk)
    assert np.abs(back.values - khat.values).max() <= 1e-13


def test_quotient_apply_matches_dense_conjugation(setting):
    grp, sub, sigma, rho = setting
    khat = seeded_steerable(sigma, rho)
    q = left_cosets(grp, sub)
    qk = to_quotient_kernel(khat, q)
    rng = np.random.default_rng(4)
    for _ in range(4):
        sf = random_section_feature(q, rho, rng)
        direct = quotient_apply(qk, sf)
        conj = sink(gcnn_apply(khat, lift(sf)), q)
        assert np.abs(direct.values - conj.values).max() <= 1e-13


def test_basis_dimensions_agree(setting):
    grp, sub, sigma, rho = setting
    basis = solve_steerable_basis(sigma, rho)
    space = double_cosets(grp, sub, sub)
    dim = steerable_dimension_oracle(sigma, rho)
    assert len(basis) == dim
    assert double_coset_dimension(sigma, rho, space) == dim
    for vec in basis:
        k = OneArgKernel(sigma, rho, np.array(vec))
        assert k.bi_equivariance_residual() <= 1e-12


def test_trivial_reps_dimension_counts_double_cosets():
    grp = make_symmetric(4)
    sub = Subgroup.generated(grp, [1])
    sigma = trivial_rep(sub, 1)
    rho = trivial_rep(sub, 1)
    space = double_cosets(grp, sub, sub)
    assert steerable_dimension_oracle(sigma, rho) == space.size
    assert len(solve_steerable_basis(sigma, rho)) == space.size


def test_regular_rep_basis():
    grp = make_dihedral(3)
    sub = Subgroup(grp, (grp.identity, 3))
    sigma = regular_rep(sub)
    rho = regular_rep(sub)
    basis = solve_steerable_basis(sigma, rho)
    assert len(basis) == steerable_dimension_oracle(sigma, rho)
    space = double_cosets(grp, sub, sub)
    assert len(basis) == double_coset_dimension(sigma, rho, space)
