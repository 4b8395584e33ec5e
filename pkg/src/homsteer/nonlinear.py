"""Non-linear equivariant operators between induced representations.

The central object is a functional kernel omega_hat(f, g') that eats the
whole input feature map and one group element.  The induced operator

    [Phi f](g) = sum_{g'} omega_hat(g^-1 . f, g')

is G-equivariant by construction and lands in the output induced space
whenever omega_hat intertwines the output subgroup action.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConstraintViolationError, NotEquivariantError
from .features import FeatureMap, g_action, random_feature
from .groups import GroupTable
from .reps import Representation

OMEGA_CONSTRAINT_TOL = 1e-10
DEFAULT_TRIALS = 32


@dataclass(frozen=True)
class OmegaHat:
    """Functional kernel omega_hat: (feature map, group element) -> V_sigma.

    Membership constraint, combining output covariance (h in H) and
    input-redundancy invariance (h' in H'):

        omega_hat(h . f, h g' h') = sigma(h) omega_hat(f, g').

    (The left h on the second slot tracks the relabelling of the
    integration point; it is what the Mackey-closure and equivariance
    proofs actually use, and the sum over g' makes it invisible at the
    operator level.)
    """

    sigma: Representation
    rho: Representation
    fn: Callable[[FeatureMap, int], np.ndarray]
    fn_all: Callable[[FeatureMap], np.ndarray] | None = field(default=None)
    name: str = "omega"

    @property
    def group(self) -> GroupTable:
        return self.sigma.group

    def evaluate(self, f: FeatureMap, gp: int) -> np.ndarray:
        return np.asarray(self.fn(f, gp), dtype=np.float64)

    def evaluate_all(self, f: FeatureMap) -> np.ndarray:
        """omega_hat(f, g') for every g', shape (|G|, d_sigma)."""
        if self.fn_all is not None:
            return np.asarray(self.fn_all(f), dtype=np.float64)
        return np.array([self.evaluate(f, gp) for gp in self.group.elements()])


def apply_nonlinear(omega: OmegaHat, f: FeatureMap,
                    strict: bool = False,
                    tol: float = OMEGA_CONSTRAINT_TOL) -> FeatureMap:
    """[Phi f](g) = sum_{g'} omega_hat(g^-1 . f, g') (counting measure).

    With strict=True the kernel constraints are sampled first and a
    violating integrand is rejected.
    """
    if strict:
        h_res, hp_res = check_omega_constraints(omega, trials=4, seed=0)
        if max(h_res, hp_res) > tol:
            raise ConstraintViolationError(
                f"integrand rejected: constraint residuals "
                f"({h_res:.3e}, {hp_res:.3e}) exceed {tol:.0e}")
    grp = omega.group
    out = np.empty((grp.order, omega.sigma.dim))
    for g in range(grp.order):
        shifted = g_action(int(grp.inv[g]), f)
        out[g] = omega.evaluate_all(shifted).sum(axis=0)
    return FeatureMap(omega.sigma, out)


@dataclass(frozen=True)
class OmegaThreeArg:
    """Unreduced integrand omega(f, g, g') with [Phi f](g) = sum_{g'} omega(f, g, g').

    The middle argument transforms as omega(f, gh, g') =
    sigma(h^-1) omega(f, g, g'); invariance omega(k.f, kg, g') =
    omega(f, g, g') (the third slot untouched) makes g redundant.
    """

    sigma: Representation
    rho: Representation
    fn: Callable[[FeatureMap, int, int], np.ndarray]
    name: str = "omega3"

    @property
    def group(self) -> GroupTable:
        return self.sigma.group

    def evaluate(self, f: FeatureMap, g: int, gp: int) -> np.ndarray:
        return np.asarray(self.fn(f, g, gp), dtype=np.float64)

    def invariance_residual(self, trials: int = 4, seed: int = 0) -> float:
        """Max violation of omega(k.f, kg, g') = omega(f, g, g') over
        exhaustive (k, g, g') and sampled f."""
        grp = self.group
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            f = random_feature(self.rho, rng)
            for k in range(grp.order):
                kf = g_action(k, f)
                for g in range(grp.order):
                    kg = grp.op(k, g)
                    for gp in range(grp.order):
                        lhs = self.evaluate(kf, kg, gp)
                        rhs = self.evaluate(f, g, gp)
                        worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst


def reduce_three_to_two(omega3: OmegaThreeArg,
                        check: bool = False,
                        tol: float = OMEGA_CONSTRAINT_TOL) -> OmegaHat:
    """omega_hat(f, g') = omega(f, e, g'); for invariant integrands the
    induced operators coincide exactly."""
    if check:
        residual = omega3.invariance_residual()
        if residual > tol:
            raise ConstraintViolationError(
                f"integrand invariance residual {residual:.3e} exceeds {tol:.0e}")
    e = omega3.group.identity
    return OmegaHat(omega3.sigma, omega3.rho,
                    fn=lambda f, gp: omega3.fn(f, e, gp),
                    name=omega3.name + "-reduced")


def expand_two_to_three(omega: OmegaHat) -> OmegaThreeArg:
    """omega(f, g, g') = omega_hat(g^-1 . f, g'), the invariant extension
    that reduces back to omega_hat at g = e."""

    def fn(f: FeatureMap, g: int, gp: int) -> np.ndarray:
        return omega.evaluate(g_action(int(omega.group.inv[g]), f), gp)

    return OmegaThreeArg(omega.sigma, omega.rho, fn, name=omega.name + "-expanded")


def apply_three_arg(omega3: OmegaThreeArg, f: FeatureMap) -> FeatureMap:
    grp = omega3.group
    out = np.empty((grp.order, omega3.sigma.dim))
    for g in range(grp.order):
        out[g] = sum(omega3.evaluate(f, g, gp) for gp in range(grp.order))
    return FeatureMap(omega3.sigma, out)


def universal_from_lambda(lam: Callable[[FeatureMap], FeatureMap],
                          sigma: Representation,
                          rho: Representation,
                          trials: int = 8,
                          seed: int = 0,
                          tol: float = OMEGA_CONSTRAINT_TOL) -> OmegaHat:
    """Wrap an equivariant operator as a kernel via a discrete delta:
    omega_hat(f, g') = [g' = e] lambda[f](e).

    Under the counting measure the sum over g' collapses to one term, so
    [Phi f](g) = lambda[g^-1 . f](e) = lambda[f](g) exactly.  The operator
    must be G-equivariant; checked exhaustively over k on sampled inputs.
    """
    grp = sigma.group
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        f = random_feature(rho, rng)
        out = lam(f)
        for k in range(grp.order):
            lhs = lam(g_action(k, f)).values
            rhs = g_action(k, out).values
            dev = float(np.abs(lhs - rhs).max())
            if dev > tol:
                g_bad = int(np.abs(lhs - rhs).max(axis=1).argmax())
                raise NotEquivariantError(
                    f"operator not equivariant: k={k}, g={g_bad}, "
                    f"deviation {dev:.3e}")
    e = grp.identity
    zero = np.zeros(sigma.dim)

    def fn(f: FeatureMap, gp: int) -> np.ndarray:
        return lam(f).values[e].copy() if gp == e else zero

    def fn_all(f: FeatureMap) -> np.ndarray:
        out = np.zeros((grp.order, sigma.dim))
        out[e] = lam(f).values[e]
        return out

    return OmegaHat(sigma, rho, fn, fn_all, name="delta-lambda")


def check_omega_constraints(omega: OmegaHat,
                            trials: int = DEFAULT_TRIALS,
                            seed: int = 0) -> tuple[float, float]:
    """Residuals of the membership constraint over seeded random features,
    exhaustive over group elements.

    Returns (H residual, H' residual):
      H  part: omega_hat(h . f, h g') - sigma(h) omega_hat(f, g')
      H' part: omega_hat(f, g' h') - omega_hat(f, g')
    """
    grp = omega.group
    rng = np.random.default_rng(seed)
    h_res = 0.0
    hp_res = 0.0
    for _ in range(trials):
        f = random_feature(omega.rho, rng)
        base = omega.evaluate_all(f)
        for h in omega.sigma.subgroup.elements:
            moved = omega.evaluate_all(g_action(h, f))[grp.mult[h]]
            expected = base @ omega.sigma.mat(h).T
            h_res = max(h_res, float(np.abs(moved - expected).max()))
        for hp in omega.rho.subgroup.elements:
            shifted = base[grp.mult[:, hp]]
            hp_res = max(hp_res, float(np.abs(shifted - base).max()))
    return h_res, hp_res


def check_equivariance(op: Callable[[FeatureMap], FeatureMap],
                       rho: Representation,
                       trials: int = DEFAULT_TRIALS,
                       seed: int = 0) -> float:
    """Max over exhaustive k and seeded random f of
    |op(k . f) - k . op(f)| in the sup norm."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        f = random_feature(rho, rng)
        out = op(f)
        grp = out.group
        for k in range(grp.order):
            lhs = op(g_action(k, f))
            rhs = g_action(k, out)
            worst = max(worst, float(np.abs(lhs.values - rhs.values).max()))
    return worst
