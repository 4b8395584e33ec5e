"""Concrete architectures expressed as functional kernels.

Five operator families, each with a native (section-level or dense)
implementation and a functional-kernel form, so the two routes can be
compared numerically:

  * group convolution (linear kernel as a functional kernel),
  * implicit steerable convolution with feature-dependent kernels on the
    discrete affine group Z_n x| Z_2,
  * softmax self-attention on S_n,
  * relative-bias and rotary attention on Z_n,
  * LieTransformer-style normalised attention on a general finite group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import softmax

from .errors import (ConstraintViolationError, DegenerateNormalizationError,
                     DimensionMismatchError, HomsteerError,
                     UnsupportedGroupError, UnsupportedRepsError)
from .features import FeatureMap, SectionFeature, lift, sink
from .groups import (GroupTable, Quotient, Subgroup, left_cosets,
                     make_symmetric, symmetric_point_action)
from .kernels import OneArgKernel
from .nonlinear import OmegaHat
from .reps import Representation, rotation_block_rep, trivial_rep

KERNEL_REJECT_TOL = 1e-8


# ---------------------------------------------------------------------------
# Group convolution as a functional kernel


def gcnn_omega(kernel: OneArgKernel, tol: float = KERNEL_REJECT_TOL) -> OmegaHat:
    """omega_hat(f, g') = kappa_hat(g') f(g'); summing against shifted
    inputs reproduces the group convolution exactly."""
    residual = kernel.bi_equivariance_residual()
    if residual > tol:
        raise ConstraintViolationError(
            f"kernel bi-equivariance residual {residual:.3e} exceeds {tol:.0e}")

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        return kernel.values[gp] @ f.values[gp]

    def fn_all(f: FeatureMap) -> np.ndarray:
        return np.einsum('aij,aj->ai', kernel.values, f.values)

    return OmegaHat(kernel.sigma, kernel.rho, fn, fn_all, name="gcnn")


# ---------------------------------------------------------------------------
# Implicit steerable kernels on the discrete affine group Z_n x| Z_2


def affine_context(group: GroupTable) -> tuple[int, Subgroup, Quotient]:
    """(n, H, G/H) for a group built as Z_n x| Z_2 or Z_n x Z_2, with the
    point subgroup H = {(0,0), (0,1)} and the translation section s(x) = (x,0)."""
    n = group.order // 2
    labels = group.labels
    if (group.order % 2 or labels is None or labels[0] != "t0"
            or not labels[n].startswith("f")):
        raise UnsupportedGroupError(
            f"{group.name}: expected a Z_n x| Z_2 style group")
    sub = Subgroup(group, (group.identity, n))
    q = left_cosets(group, sub, section_hint=list(range(n)))
    return n, sub, q


@dataclass(frozen=True)
class ImplicitKernelSpec:
    """A feature-dependent convolution kernel on X = Z_n.

    base(x, z1, z2) returns a dim(V_sigma) x dim(V_rho) matrix; z1, z2
    are feature vectors transforming in rho_z.  Steerable kernels satisfy
    base(h |> x, rho_z(h) z1, rho_z(h) z2) = sigma(h) base(x, z1, z2) rho(h)^-1.
    """

    group: GroupTable
    sigma: Representation
    rho: Representation
    rho_z: Representation
    base: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    symmetrized: bool = False
    _ctx: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_ctx", affine_context(self.group))

    @property
    def n(self) -> int:
        return self._ctx[0]

    @property
    def subgroup(self) -> Subgroup:
        return self._ctx[1]

    @property
    def quotient(self) -> Quotient:
        return self._ctx[2]

    def constraint_residual(self, trials: int = 16, seed: int = 0) -> float:
        """Max steerability violation over exhaustive (h, x) and sampled z."""
        q = self.quotient
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            z1 = rng.uniform(-1, 1, size=self.rho_z.dim)
            z2 = rng.uniform(-1, 1, size=self.rho_z.dim)
            for x in range(self.n):
                base = np.asarray(self.base(x, z1, z2), dtype=np.float64)
                for h in self.subgroup.elements:
                    moved = np.asarray(self.base(
                        q.act(h, x), self.rho_z.mat(h) @ z1,
                        self.rho_z.mat(h) @ z2), dtype=np.float64)
                    expected = self.sigma.mat(h) @ base @ self.rho.mat_inv(h)
                    worst = max(worst, float(np.abs(moved - expected).max()))
        return worst


def symmetrize_implicit_kernel(spec: ImplicitKernelSpec) -> ImplicitKernelSpec:
    """Average the base kernel over H to enforce steerability:

    k_sym(x, z1, z2) = (1/|H|) sum_h sigma(h)^-1 k(h |> x, rho_z(h) z1,
    rho_z(h) z2) rho(h).  Idempotent on already-steerable kernels.
    """
    q = spec.quotient
    sub = spec.subgroup
    sigma, rho, rho_z, base = spec.sigma, spec.rho, spec.rho_z, spec.base

    def k_sym(x: int, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
        acc = np.zeros((sigma.dim, rho.dim))
        for h in sub.elements:
            term = np.asarray(base(q.act(h, x), rho_z.mat(h) @ z1,
                                   rho_z.mat(h) @ z2), dtype=np.float64)
            acc += sigma.mat_inv(h) @ term @ rho.mat(h)
        return acc / len(sub)

    return ImplicitKernelSpec(spec.group, sigma, rho, rho_z, k_sym,
                              symmetrized=True)


def implicit_conv_apply(spec: ImplicitKernelSpec,
                        sf: SectionFeature) -> SectionFeature:
    """[Psi f](x) = sum_{x'} k(x' - x, f(x), f(x')) f(x') on X = Z_n."""
    if not spec.symmetrized:
        raise ConstraintViolationError("kernel must be symmetrized first")
    n = spec.n
    out = np.empty((n, spec.sigma.dim))
    for x in range(n):
        acc = np.zeros(spec.sigma.dim)
        for xp in range(n):
            mat = np.asarray(spec.base((xp - x) % n, sf.values[x], sf.values[xp]),
                             dtype=np.float64)
            acc += mat @ sf.values[xp]
        out[x] = acc
    return SectionFeature(sf.quotient, spec.sigma, out)


def implicit_omega(spec: ImplicitKernelSpec) -> OmegaHat:
    """Lift the section-level convolution to a functional kernel.

    omega_hat(f, g') = (1/|H|) k(pi(g'), fX(0), fX(pi(g'))) rho(h(g')) f(g')
    with fX the section restriction of f.  The 1/|H| factor compensates
    the |H|-fold redundancy of the dense sum over G relative to the sum
    over X, making the conjugation identity with implicit_conv_apply
    exact under the counting measure.
    """
    if not spec.symmetrized:
        raise ConstraintViolationError("kernel must be symmetrized first")
    q = spec.quotient
    grp = spec.group
    scale = 1.0 / len(spec.subgroup)

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        fx = f.values[q.section]
        x = int(q.coset_of[gp])
        h = grp.op(int(grp.inv[q.section[x]]), gp)
        mat = np.asarray(spec.base(x, fx[0], fx[x]), dtype=np.float64)
        return scale * (mat @ spec.rho.mat(h) @ f.values[gp])

    return OmegaHat(spec.sigma, spec.rho, fn, name="implicit")


# ---------------------------------------------------------------------------
# Attention


@dataclass(frozen=True)
class AttentionParams:
    """Weights of a single-head dot-product attention layer.

    WQ, WK embed queries and keys (d_embed x c); WV maps values
    (c_out x c); logits are scaled by 1/sqrt(d_embed).  psi is a relative
    positional bias table, freqs the rotary frequency list.
    """

    WQ: np.ndarray
    WK: np.ndarray
    WV: np.ndarray
    psi: np.ndarray | None = None
    freqs: tuple[int, ...] | None = None
    combine: str = "add"  # how psi enters the logits: "add" or "mul"

    def __post_init__(self):
        for name in ("WQ", "WK", "WV"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise HomsteerError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)
        if self.WQ.shape != self.WK.shape:
            raise DimensionMismatchError("WQ and WK must have equal shapes")
        if self.WV.shape[1] != self.WQ.shape[1]:
            raise DimensionMismatchError("WV input dim must match WQ/WK")
        if self.psi is not None:
            object.__setattr__(self, "psi",
                               np.asarray(self.psi, dtype=np.float64))
        if self.combine not in ("add", "mul"):
            raise HomsteerError(f"unknown combine mode {self.combine!r}")

    @property
    def scale(self) -> float:
        return 1.0 / np.sqrt(self.WQ.shape[0])


def random_attention_params(c: int, c_out: int, d_embed: int,
                            seed: int, n_psi: int | None = None,
                            freqs: tuple[int, ...] | None = None) -> AttentionParams:
    rng = np.random.default_rng(seed)
    return AttentionParams(
        WQ=rng.uniform(-1, 1, size=(d_embed, c)),
        WK=rng.uniform(-1, 1, size=(d_embed, c)),
        WV=rng.uniform(-1, 1, size=(c_out, c)),
        psi=rng.uniform(-1, 1, size=n_psi) if n_psi is not None else None,
        freqs=freqs)


def _attention_rows(logits: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Row-softmax of the logit matrix applied to value vectors."""
    return softmax(logits, axis=1) @ values


def self_attention_apply(p: AttentionParams, sf: SectionFeature) -> SectionFeature:
    """Plain permutation-equivariant softmax attention over the token set."""
    A = p.WQ.T @ p.WK
    logits = p.scale * (sf.values @ A @ sf.values.T)
    out = _attention_rows(logits, sf.values @ p.WV.T)
    sigma = trivial_rep(sf.rep.subgroup, p.WV.shape[0])
    return SectionFeature(sf.quotient, sigma, out)


def stabilizer_subgroup(group: GroupTable, n: int, point: int = 0) -> Subgroup:
    """The subgroup of S_n fixing one point."""
    act = symmetric_point_action(n)
    return Subgroup(group, tuple(int(g) for g in range(group.order)
                                 if act[g, point] == point))


def self_attention_omega(p: AttentionParams, n: int,
                         sigma: Representation | None = None,
                         rho: Representation | None = None) -> OmegaHat:
    """Lifted self-attention over S_n:

    omega_hat(f, g') = (1/Z(f)) exp{f(e)^T WQ^T WK f(g') / sqrt(d)} WV f(g')
    with Z(f) the sum of the exponentials over g'.
    """
    if not 2 <= n <= 5:
        raise HomsteerError(f"lifted self-attention supports 2 <= n <= 5, got {n}")
    grp = make_symmetric(n)
    sub = stabilizer_subgroup(grp, n)
    if rho is None:
        rho = trivial_rep(sub, p.WQ.shape[1])
    if sigma is None:
        sigma = trivial_rep(sub, p.WV.shape[0])
    if not (sigma.is_trivial() and rho.is_trivial()):
        raise UnsupportedRepsError("self-attention requires trivial representations")
    A = p.scale * (p.WQ.T @ p.WK)

    def fn_all(f: FeatureMap) -> np.ndarray:
        logits = f.values @ (A.T @ f.values[grp.identity])  # f(e)^T A f(g')
        weights = softmax(logits)
        return weights[:, None] * (f.values @ p.WV.T)

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        return fn_all(f)[gp]

    return OmegaHat(sigma, rho, fn, fn_all, name="self-attention")


def relative_bias_attention_apply(p: AttentionParams,
                                  sf: SectionFeature) -> SectionFeature:
    """Attention over Z_n with a relative positional bias psi(x' - x)."""
    n = sf.quotient.size
    if p.psi is None or len(p.psi) != n:
        raise DimensionMismatchError(f"psi must have length {n}")
    A = p.WQ.T @ p.WK
    dots = p.scale * (sf.values @ A @ sf.values.T)
    bias = np.array([[p.psi[(xp - x) % n] for xp in range(n)] for x in range(n)])
    logits = dots + bias if p.combine == "add" else dots * bias
    out = _attention_rows(logits, sf.values @ p.WV.T)
    sigma = trivial_rep(sf.rep.subgroup, p.WV.shape[0])
    return SectionFeature(sf.quotient, sigma, out)


def rel_bias_omega(p: AttentionParams, group: GroupTable,
                   combine: str | None = None) -> OmegaHat:
    """Functional-kernel form of relative-bias attention on G = Z_n:

    omega_hat(f, g') = Softmax_{g'}{f(e)^T WQ^T WK f(g')/sqrt(d) + psi(g')} WV f(g').
    """
    if p.psi is None or len(p.psi) != group.order:
        raise DimensionMismatchError(f"psi must have length {group.order}")
    mode = combine if combine is not None else p.combine
    sub = Subgroup.trivial(group)
    rho = trivial_rep(sub, p.WQ.shape[1])
    sigma = trivial_rep(sub, p.WV.shape[0])
    A = p.scale * (p.WQ.T @ p.WK)

    def fn_all(f: FeatureMap) -> np.ndarray:
        dots = f.values @ (A.T @ f.values[group.identity])  # f(e)^T A f(g')
        logits = dots + p.psi if mode == "add" else dots * p.psi
        weights = softmax(logits)
        return weights[:, None] * (f.values @ p.WV.T)

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        return fn_all(f)[gp]

    return OmegaHat(sigma, rho, fn, fn_all, name="rel-bias")


def rotary_matrices(n: int, freqs: tuple[int, ...]) -> np.ndarray:
    """R_Theta(x) for x in Z_n: block-diagonal 2x2 rotations with angles
    2 pi m x / n per frequency m."""
    return rotation_block_rep(n, list(freqs)).matrices


def rotary_relative_residual(n: int, freqs: tuple[int, ...]) -> float:
    """Max violation of R(x)^T R(x') = R(x' - x), exhaustive over (x, x')."""
    R = rotary_matrices(n, freqs)
    worst = 0.0
    for x in range(n):
        for xp in range(n):
            lhs = R[x].T @ R[xp]
            worst = max(worst, float(np.abs(lhs - R[(xp - x) % n]).max()))
    return worst


def rotary_attention_apply(p: AttentionParams,
                           sf: SectionFeature) -> SectionFeature:
    """Attention over Z_n with rotary position embeddings:
    logits(x, x') = f(x)^T WQ^T R_Theta(x' - x) WK f(x') / sqrt(d)."""
    n = sf.quotient.size
    if p.freqs is None:
        raise HomsteerError("rotary attention needs a frequency list")
    if p.WQ.shape[0] != 2 * len(p.freqs):
        raise DimensionMismatchError(
            f"embed dim {p.WQ.shape[0]} must equal 2 * number of frequencies")
    R = rotary_matrices(n, tuple(p.freqs))
    Q = sf.values @ p.WQ.T
    K = sf.values @ p.WK.T
    logits = np.empty((n, n))
    for x in range(n):
        for xp in range(n):
            logits[x, xp] = p.scale * (Q[x] @ R[(xp - x) % n] @ K[xp])
    out = _attention_rows(logits, sf.values @ p.WV.T)
    sigma = trivial_rep(sf.rep.subgroup, p.WV.shape[0])
    return SectionFeature(sf.quotient, sigma, out)


def rotary_omega(p: AttentionParams, group: GroupTable) -> OmegaHat:
    """Functional-kernel form of rotary attention on G = Z_n."""
    if p.freqs is None:
        raise HomsteerError("rotary attention needs a frequency list")
    n = group.order
    R = rotary_matrices(n, tuple(p.freqs))
    sub = Subgroup.trivial(group)
    rho = trivial_rep(sub, p.WQ.shape[1])
    sigma = trivial_rep(sub, p.WV.shape[0])

    def fn_all(f: FeatureMap) -> np.ndarray:
        q0 = p.WQ @ f.values[group.identity]
        K = f.values @ p.WK.T
        logits = p.scale * np.einsum('i,aij,aj->a', q0, R, K)
        weights = softmax(logits)
        return weights[:, None] * (f.values @ p.WV.T)

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        return fn_all(f)[gp]

    return OmegaHat(sigma, rho, fn, fn_all, name="rotary")


# ---------------------------------------------------------------------------
# LieTransformer


def lie_transformer_apply(alpha: Callable[[np.ndarray, np.ndarray, int], float],
                          WV: np.ndarray, f: FeatureMap,
                          normalization: bool = True) -> FeatureMap:
    """[Phi f](g) = (1/Z(g^-1 f)) sum_{g'} alpha(f(g), f(g'), g^-1 g') WV f(g')
    with Z(g^-1 f) = sum_{g'} alpha([g^-1 f](e), [g^-1 f](g'), g')."""
    if not f.rep.is_trivial():
        raise UnsupportedRepsError("LieTransformer requires trivial representations")
    grp = f.group
    WV = np.asarray(WV, dtype=np.float64)
    sub = f.rep.subgroup
    sigma = trivial_rep(sub, WV.shape[0])
    values = f.values @ WV.T
    out = np.empty((grp.order, WV.shape[0]))
    for g in range(grp.order):
        ginv = int(grp.inv[g])
        weights = np.array([alpha(f.values[g], f.values[gp], grp.op(ginv, gp))
                            for gp in range(grp.order)])
        if normalization:
            z = weights.sum()
            if abs(z) < 1e-12:
                raise DegenerateNormalizationError(
                    f"normalisation sum vanished at g={g}")
            weights = weights / z
        out[g] = weights @ values
    return FeatureMap(sigma, out)


def lie_omega(alpha: Callable[[np.ndarray, np.ndarray, int], float],
              WV: np.ndarray, sigma: Representation,
              rho: Representation) -> OmegaHat:
    """omega_hat(f, g') = (1/Z(f)) alpha(f(e), f(g'), g') WV f(g')."""
    if not (sigma.is_trivial() and rho.is_trivial()):
        raise UnsupportedRepsError("LieTransformer requires trivial representations")
    grp = sigma.group
    WV = np.asarray(WV, dtype=np.float64)

    def fn_all(f: FeatureMap) -> np.ndarray:
        fe = f.values[grp.identity]
        weights = np.array([alpha(fe, f.values[gp], gp)
                            for gp in range(grp.order)])
        z = weights.sum()
        if abs(z) < 1e-12:
            raise DegenerateNormalizationError("normalisation sum vanished")
        return (weights / z)[:, None] * (f.values @ WV.T)

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        return fn_all(f)[gp]

    return OmegaHat(sigma, rho, fn, fn_all, name="lie-transformer")


def dot_bias_alpha(p: AttentionParams,
                   group: GroupTable) -> Callable[[np.ndarray, np.ndarray, int], float]:
    """Scaled-dot-product-plus-bias attention weight
    alpha(v, v', g) = exp[v^T WQ^T WK v' / sqrt(d) + psi(g)]."""
    A = p.scale * (p.WQ.T @ p.WK)
    psi = p.psi if p.psi is not None else np.zeros(group.order)
    if len(psi) != group.order:
        raise DimensionMismatchError(f"psi must have length {group.order}")

    def alpha(v: np.ndarray, vp: np.ndarray, g: int) -> float:
        return float(np.exp(v @ A @ vp + psi[g]))

    return alpha


# ---------------------------------------------------------------------------
# Conjugation helpers shared by tests and the harness


def lifted_operator(omega: OmegaHat, quotient: Quotient,
                    apply_fn: Callable[[FeatureMap], FeatureMap] | None = None
                    ) -> Callable[[SectionFeature], SectionFeature]:
    """The section-level operator obtained by conjugating a dense operator
    with the lift/sink isomorphisms."""
    from .nonlinear import apply_nonlinear

    def op(sf: SectionFeature) -> SectionFeature:
        f = lift(sf)
        out = apply_fn(f) if apply_fn is not None else apply_nonlinear(omega, f)
        return sink(out, quotient)

    return op
