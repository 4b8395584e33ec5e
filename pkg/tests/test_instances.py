import numpy as np
import pytest

from homsteer import (AttentionParams, ConstraintViolationError,
                      DegenerateNormalizationError, DimensionMismatchError,
                      FeatureMap, ImplicitKernelSpec, Subgroup,
                      UnsupportedRepsError, apply_nonlinear,
                      check_omega_constraints, dot_bias_alpha, implicit_conv_apply,
                      implicit_omega, left_cosets, lie_omega,
                      lie_transformer_apply, lifted_operator, make_cyclic,
                      make_semidirect, make_symmetric, random_attention_params,
                      random_feature, random_section_feature, rel_bias_omega,
                      relative_bias_attention_apply, rotary_attention_apply,
                      rotary_omega, rotary_relative_residual,
                      self_attention_apply, self_attention_omega, sign_rep_z2,
                      stabilizer_subgroup, symmetrize_implicit_kernel,
                      trivial_rep)

# ---------------------------------------------------------------------------
# Implicit steerable kernels


@pytest.fixture
def implicit_setting():
    grp = make_semidirect(8, True)
    sub = Subgroup(grp, (grp.identity, 8))
    sigma = sign_rep_z2(sub)
    rho = sign_rep_z2(sub)
    rng = np.random.default_rng(0)
    table = rng.uniform(-1, 1, size=(8, 1, 1))
    coefs = rng.uniform(-1, 1, size=3)

    def base(x, z1, z2):
        return table[x] * (coefs[0] + coefs[1] * (z1 @ z2) + coefs[2] * (z1 @ z1))

    raw = ImplicitKernelSpec(grp, sigma, rho, rho, base)
    return grp, sub, sigma, rho, raw


def test_symmetrization_enforces_steerability(implicit_setting):
    _, _, _, _, raw = implicit_setting
    spec = symmetrize_implicit_kernel(raw)
    assert spec.constraint_residual(trials=8, seed=1) <= 1e-13


def test_symmetrization_idempotent(implicit_setting):
    _, _, _, _, raw = implicit_setting
    spec = symmetrize_implicit_kernel(raw)
    twice = symmetrize_implicit_kernel(spec)
    rng = np.random.default_rng(2)
    for _ in range(4):
        z1 = rng.uniform(-1, 1, size=1)
        z2 = rng.uniform(-1, 1, size=1)
        for x in range(8):
            assert np.abs(np.asarray(spec.base(x, z1, z2))
                          - np.asarray(twice.base(x, z1, z2))).max() <= 1e-14


def test_implicit_apply_requires_symmetrization(implicit_setting):
    _, _, _, rho, raw = implicit_setting
    sf = random_section_feature(raw.quotient, rho, np.random.default_rng(3))
    with pytest.raises(ConstraintViolationError):
        implicit_conv_apply(raw, sf)


def test_implicit_conjugation_identity(implicit_setting):
    _, _, _, rho, raw = implicit_setting
    spec = symmetrize_implicit_kernel(raw)
    omega = implicit_omega(spec)
    section_op = lifted_operator(omega, spec.quotient)
    rng = np.random.default_rng(4)
    for _ in range(4):
        sf = random_section_feature(spec.quotient, rho, rng)
        native = implicit_conv_apply(spec, sf)
        conj = section_op(sf)
        assert np.abs(native.values - conj.values).max() <= 1e-12


def test_implicit_omega_constraints(implicit_setting):
    _, _, _, _, raw = implicit_setting
    omega = implicit_omega(symmetrize_implicit_kernel(raw))
    h_res, hp_res = check_omega_constraints(omega, trials=4, seed=5)
    assert max(h_res, hp_res) <= 1e-12


# ---------------------------------------------------------------------------
# Self-attention on S_n


def test_self_attention_conjugation_identity():
    n = 4
    grp = make_symmetric(n)
    sub = stabilizer_subgroup(grp, n)
    q = left_cosets(grp, sub)
    p = random_attention_params(3, 2, 4, seed=6)
    omega = self_attention_omega(p, n)
    rho_in = trivial_rep(sub, 3)
    section_op = lifted_operator(omega, q)
    rng = np.random.default_rng(7)
    for _ in range(4):
        sf = random_section_feature(q, rho_in, rng)
        native = self_attention_apply(p, sf)
        conj = section_op(sf)
        assert np.abs(native.values - conj.values).max() <= 1e-12


def test_self_attention_omega_constraints():
    p = random_attention_params(2, 2, 3, seed=8)
    omega = self_attention_omega(p, 3)
    h_res, hp_res = check_omega_constraints(omega, trials=4, seed=9)
    assert max(h_res, hp_res) <= 1e-12


def test_self_attention_rejects_nontrivial_reps():
    grp = make_symmetric(3)
    sub = stabilizer_subgroup(grp, 3)
    p = random_attention_params(1, 1, 2, seed=10)
    with pytest.raises(UnsupportedRepsError):
        self_attention_omega(p, 3, rho=sign_rep_z2(sub))


# ---------------------------------------------------------------------------
# Relative-bias and rotary attention on Z_n


def test_rel_bias_conjugation_identity():
    grp = make_cyclic(8)
    p = random_attention_params(2, 2, 4, seed=11, n_psi=8)
    omega = rel_bias_omega(p, grp)
    sub = Subgroup.trivial(grp)
    q = left_cosets(grp, sub)
    rho_in = trivial_rep(sub, 2)
    section_op = lifted_operator(omega, q)
    rng = np.random.default_rng(12)
    for _ in range(4):
        sf = random_section_feature(q, rho_in, rng)
        native = relative_bias_attention_apply(p, sf)
        conj = section_op(sf)
        assert np.abs(native.values - conj.values).max() <= 1e-12


def test_rel_bias_requires_full_bias_table():
    grp = make_cyclic(8)
    p = random_attention_params(2, 2, 4, seed=13, n_psi=5)
    with pytest.raises(DimensionMismatchError):
        rel_bias_omega(p, grp)


def test_rotary_relative_identity():
    assert rotary_relative_residual(8, (1, 2)) <= 1e-12
    assert rotary_relative_residual(12, (1, 3, 5)) <= 1e-12


def test_rotary_conjugation_identity():
    grp = make_cyclic(12)
    p = random_attention_params(2, 2, 4, seed=14, freqs=(1, 3))
    omega = rotary_omega(p, grp)
    sub = Subgroup.trivial(grp)
    q = left_cosets(grp, sub)
    rho_in = trivial_rep(sub, 2)
    section_op = lifted_operator(omega, q)
    rng = np.random.default_rng(15)
    for _ in range(4):
        sf = random_section_feature(q, rho_in, rng)
        native = rotary_attention_apply(p, sf)
        conj = section_op(sf)
        assert np.abs(native.values - conj.values).max() <= 1e-12


def test_rotary_embed_dim_must_match_frequencies():
    grp = make_cyclic(8)
    p = random_attention_params(2, 2, 3, seed=16, freqs=(1, 2))
    sub = Subgroup.trivial(grp)
    q = left_cosets(grp, sub)
    sf = random_section_feature(q, trivial_rep(sub, 2), np.random.default_rng(17))
    with pytest.raises(DimensionMismatchError):
        rotary_attention_apply(p, sf)


# ---------------------------------------------------------------------------
# LieTransformer


def test_lie_transformer_matches_functional_kernel():
    grp = make_cyclic(8)
    sub = Subgroup.trivial(grp)
    rho = trivial_rep(sub, 2)
    sigma = trivial_rep(sub, 2)
    p = random_attention_params(2, 2, 3, seed=18, n_psi=8)
    alpha = dot_bias_alpha(p, grp)
    omega = lie_omega(alpha, p.WV, sigma, rho)
    rng = np.random.default_rng(19)
    for _ in range(4):
        f = random_feature(rho, rng)
        native = lie_transformer_apply(alpha, p.WV, f)
        functional = apply_nonlinear(omega, f)
        assert np.abs(native.values - functional.values).max() <= 1e-12


def test_lie_transformer_reduces_to_rel_bias_on_cyclic():
    grp = make_cyclic(8)
    sub = Subgroup.trivial(grp)
    rho = trivial_rep(sub, 2)
    p = random_attention_params(2, 2, 3, seed=20, n_psi=8)
    alpha = dot_bias_alpha(p, grp)
    omega_rb = rel_bias_omega(p, grp)
    rng = np.random.default_rng(21)
    for _ in range(4):
        f = random_feature(rho, rng)
        lie_out = lie_transformer_apply(alpha, p.WV, f)
        rb_out = apply_nonlinear(omega_rb, f)
        assert np.abs(lie_out.values - rb_out.values).max() <= 1e-12


def test_lie_transformer_rejects_nontrivial_reps():
    grp = make_semidirect(4, True)
    sub = Subgroup(grp, (grp.identity, 4))
    rho = sign_rep_z2(sub)
    f = random_feature(rho, np.random.default_rng(22))
    with pytest.raises(UnsupportedRepsError):
        lie_transformer_apply(lambda v, vp, g: 1.0, np.eye(1), f)


def test_lie_transformer_degenerate_normalization():
    grp = make_cyclic(4)
    sub = Subgroup.trivial(grp)
    rho = trivial_rep(sub, 1)
    f = FeatureMap(rho, np.ones((4, 1)))
    with pytest.raises(DegenerateNormalizationError):
        lie_transformer_apply(lambda v, vp, g: 0.0, np.eye(1), f)
