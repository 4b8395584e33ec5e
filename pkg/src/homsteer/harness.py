"""Verification harness: runs the check matrix and assembles a report.

Each cell of the matrix is a (group, subgroup, sigma, rho) tuple plus a
list of operator instances.  Checks measure a max violation against a
named tolerance; records are sorted by check id and rendered with
canonical JSON so repeated runs with one seed produce byte-identical
reports apart from the runtime fields.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import (DEFAULT_TOLERANCES, CellSpec, CheckRecord, InstanceSpec,
                     Report, SuiteConfig)
from .errors import ConfigError
from .features import (FeatureMap, SectionFeature, g_action, lift,
                       mackey_project, random_feature, random_section_feature,
                       section_action, sink)
from .groups import (DoubleCosetSpace, GroupTable, Quotient, Subgroup,
                     double_cosets, left_cosets, twist)
from .instances import (AttentionParams, ImplicitKernelSpec, affine_context,
                        dot_bias_alpha, gcnn_omega, implicit_conv_apply,
                        implicit_omega, lie_omega, lie_transformer_apply,
                        lifted_operator, random_attention_params,
                        rel_bias_omega, relative_bias_attention_apply,
                        rotary_attention_apply, rotary_omega,
                        rotary_relative_residual, self_attention_apply,
                        self_attention_omega, symmetrize_implicit_kernel)
from .kernels import (OneArgKernel, TwoArgKernel, apply_two_arg,
                      canonical_representative, double_coset_dimension,
                      expand_to_two_arg, from_double_coset_kernel,
                      from_quotient_kernel, gcnn_apply, quotient_apply,
                      reduce_to_one_arg, solve_steerable_basis,
                      steerable_dimension_oracle, to_double_coset_kernel,
                      to_quotient_kernel)
from .nonlinear import (OmegaHat, apply_nonlinear, check_equivariance,
                        check_omega_constraints, universal_from_lambda)
from .reps import Representation, trivial_rep


def max_workers() -> int:
    """Thread cap: HOMSTEER_THREADS if set, else min(4, cpu count)."""
    raw = os.environ.get("HOMSTEER_THREADS")
    if raw is not None:
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"HOMSTEER_THREADS={raw!r} is not an integer") from exc
        if value < 1:
            raise ConfigError("HOMSTEER_THREADS must be >= 1")
        return value
    return min(4, os.cpu_count() or 1)


@dataclass
class CellContext:
    spec: CellSpec
    group: GroupTable
    subgroup: Subgroup
    sigma: Representation
    rho: Representation
    quotient: Quotient
    dcs: DoubleCosetSpace
    basis: np.ndarray | None  # steerable kernel basis, lazy for big groups


def build_cell(spec: CellSpec) -> CellContext:
    grp = spec.group.build()
    sub = spec.subgroup.build(grp)
    sigma = spec.sigma.build(sub)
    rho = spec.rho.build(sub)
    q = left_cosets(grp, sub)
    dcs = double_cosets(grp, sub, sub)
    basis = solve_steerable_basis(sigma, rho) if spec.linear_checks else None
    return CellContext(spec, grp, sub, sigma, rho, q, dcs, basis)


def seeded_kernel(ctx: CellContext, rng: np.random.Generator) -> OneArgKernel:
    """Random element of the steerable kernel space, uniform [-1, 1] coords."""
    basis = ctx.basis
    if basis is None or len(basis) == 0:
        values = np.zeros((ctx.group.order, ctx.sigma.dim, ctx.rho.dim))
    else:
        coefs = rng.uniform(-1.0, 1.0, size=len(basis))
        values = np.tensordot(coefs, basis, axes=1)
    return OneArgKernel(ctx.sigma, ctx.rho, values)


# ---------------------------------------------------------------------------
# Instance construction


@dataclass
class InstanceRuntime:
    name: str
    omega: OmegaHat
    derivation: Callable[[int, np.random.Generator], float]
    extra_checks: dict[str, tuple[float, str]]  # check_id -> (violation, tol key)


def build_instance(ctx: CellContext, ispec: InstanceSpec) -> InstanceRuntime:
    rng = np.random.default_rng(ispec.seed)
    name = ispec.instance
    params = ispec.params

    if name == "gcnn":
        kernel = seeded_kernel(ctx, rng)
        omega = gcnn_omega(kernel)

        def derivation(trials, drng):
            worst = 0.0
            for _ in range(trials):
                f = random_feature(omega.rho, drng)
                native = gcnn_apply(kernel, f)
                functional = apply_nonlinear(omega, f)
                worst = max(worst, float(
                    np.abs(native.values - functional.values).max()))
            return worst

        return InstanceRuntime(name, omega, derivation, {})

    if name == "implicit":
        n, _, _ = affine_context(ctx.group)
        table = rng.uniform(-1.0, 1.0, size=(n, ctx.sigma.dim, ctx.rho.dim))
        coefs = rng.uniform(-1.0, 1.0, size=3)

        def base(x, z1, z2):
            scalar = coefs[0] + coefs[1] * (z1 @ z2) + coefs[2] * (z1 @ z1)
            return table[x] * scalar

        spec = symmetrize_implicit_kernel(ImplicitKernelSpec(
            ctx.group, ctx.sigma, ctx.rho, ctx.rho, base))
        omega = implicit_omega(spec)
        q = spec.quotient

        def derivation(trials, drng):
            section_op = lifted_operator(omega, q)
            worst = 0.0
            for _ in range(trials):
                sf = random_section_feature(q, ctx.rho, drng)
                native = implicit_conv_apply(spec, sf)
                conj = section_op(sf)
                worst = max(worst, float(
                    np.abs(native.values - conj.values).max()))
            return worst

        extra = {"implicit-kernel-steerability":
                 (spec.constraint_residual(trials=4, seed=ispec.seed),
                  "omega_constraint")}
        return InstanceRuntime(name, omega, derivation, extra)

    if name == "self_attention":
        n = _symmetric_degree(ctx.group)
        c = params.get("c", 2)
        c_out = params.get("c_out", 2)
        d_embed = params.get("d_embed", 3)
        p = random_attention_params(c, c_out, d_embed, ispec.seed)
        omega = self_attention_omega(p, n)
        rho_in = trivial_rep(ctx.subgroup, c)
        q = ctx.quotient

        def derivation(trials, drng):
            section_op = lifted_operator(omega, q)
            worst = 0.0
            for _ in range(trials):
                sf = random_section_feature(q, rho_in, drng)
                native = self_attention_apply(p, sf)
                conj = section_op(sf)
                worst = max(worst, float(
                    np.abs(native.values - conj.values).max()))
            return worst

        return InstanceRuntime(name, omega, derivation, {})

    if name == "rel_bias":
        c = params.get("c", 2)
        c_out = params.get("c_out", 2)
        d_embed = params.get("d_embed", 4)
        p = random_attention_params(c, c_out, d_embed, ispec.seed,
                                    n_psi=ctx.group.order)
        omega = rel_bias_omega(p, ctx.group)
        sub_t = Subgroup.trivial(ctx.group)
        q = left_cosets(ctx.group, sub_t)
        rho_in = trivial_rep(sub_t, c)

        def derivation(trials, drng):
            section_op = lifted_operator(omega, q)
            worst = 0.0
            for _ in range(trials):
                sf = random_section_feature(q, rho_in, drng)
                native = relative_bias_attention_apply(p, sf)
                conj = section_op(sf)
                worst = max(worst, float(
                    np.abs(native.values - conj.values).max()))
            return worst

        return InstanceRuntime(name, omega, derivation, {})

    if name == "rotary":
        freqs = tuple(params.get("freqs", [1]))
        c = params.get("c", 2)
        c_out = params.get("c_out", 2)
        p = random_attention_params(c, c_out, 2 * len(freqs), ispec.seed,
                                    freqs=freqs)
        omega = rotary_omega(p, ctx.group)
        sub_t = Subgroup.trivial(ctx.group)
        q = left_cosets(ctx.group, sub_t)
        rho_in = trivial_rep(sub_t, c)

        def derivation(trials, drng):
            section_op = lifted_operator(omega, q)
            worst = 0.0
            for _ in range(trials):
                sf = random_section_feature(q, rho_in, drng)
                native = rotary_attention_apply(p, sf)
                conj = section_op(sf)
                worst = max(worst, float(
                    np.abs(native.values - conj.values).max()))
            return worst

        extra = {"rotary-relative-identity":
                 (rotary_relative_residual(ctx.group.order, freqs),
                  "rotary_identity")}
        return InstanceRuntime(name, omega, derivation, extra)

    if name == "lie_transformer":
        c = params.get("c", 2)
        c_out = params.get("c_out", 2)
        d_embed = params.get("d_embed", 3)
        p = random_attention_params(c, c_out, d_embed, ispec.seed,
                                    n_psi=ctx.group.order)
        alpha = dot_bias_alpha(p, ctx.group)
        sub_t = Subgroup.trivial(ctx.group)
        sigma_t = trivial_rep(sub_t, c_out)
        rho_t = trivial_rep(sub_t, c)
        omega = lie_omega(alpha, p.WV, sigma_t, rho_t)

        def derivation(trials, drng):
            worst = 0.0
            for _ in range(trials):
                f = random_feature(rho_t, drng)
                native = lie_transformer_apply(alpha, p.WV, f)
                functional = apply_nonlinear(omega, f)
                worst = max(worst, float(
                    np.abs(native.values - functional.values).max()))
            return worst

        return InstanceRuntime(name, omega, derivation, {})

    raise ConfigError(f"unknown instance {name!r}")


def _symmetric_degree(group: GroupTable) -> int:
    fact = 1
    for m in range(2, 8):
        fact *= m
        if fact == group.order:
            return m
    raise ConfigError(f"group of order {group.order} is not a symmetric group")


# ---------------------------------------------------------------------------
# Structural checks


def group_law_violations(grp: GroupTable) -> float:
    idx = np.arange(grp.order)
    bad = int(np.count_nonzero(grp.mult[grp.identity] != idx))
    bad += int(np.count_nonzero(grp.mult[:, grp.identity] != idx))
    bad += int(np.count_nonzero(grp.mult[idx, grp.inv] != grp.identity))
    bad += int(np.count_nonzero(grp.mult[grp.inv, idx] != grp.identity))
    for a in range(grp.order):
        lhs = grp.mult[grp.mult[a]]          # (a b) c
        rhs = grp.mult[a][grp.mult]          # a (b c)
        bad += int(np.count_nonzero(lhs != rhs))
    return float(bad)


def quotient_integral_violation(q: Quotient, trials: int,
                                rng: np.random.Generator) -> float:
    grp = q.group
    worst = 0.0
    for _ in range(trials):
        f = rng.uniform(-1.0, 1.0, size=grp.order)
        whole = float(f.sum())
        split = sum(float(f[grp.mult[int(q.section[x]), h]])
                    for x in range(q.size) for h in q.subgroup.elements)
        worst = max(worst, abs(whole - split))
    return worst


def twist_cocycle_violations(q: Quotient) -> float:
    grp = q.group
    bad = 0
    for x in range(q.size):
        for g1 in range(grp.order):
            t1 = twist(q, x, g1)
            x1 = q.act(g1, x)
            for g2 in range(grp.order):
                composite = twist(q, x, grp.op(g2, g1))
                chained = grp.op(twist(q, x1, g2), t1)
                if composite != chained:
                    bad += 1
    return float(bad)


def lift_sink_violation(ctx: CellContext, trials: int,
                        rng: np.random.Generator) -> float:
    q, rho, grp = ctx.quotient, ctx.rho, ctx.group
    worst = 0.0
    for _ in range(trials):
        sf = random_section_feature(q, rho, rng)
        f = lift(sf)
        worst = max(worst, f.mackey_residual())
        worst = max(worst, float(np.abs(sink(f, q).values - sf.values).max()))
        g = random_feature(rho, rng)
        worst = max(worst, float(np.abs(lift(sink(g, q)).values - g.values).max()))
        for k in range(grp.order):
            lhs = lift(section_action(k, sf))
            rhs = g_action(k, f)
            worst = max(worst, float(np.abs(lhs.values - rhs.values).max()))
    return worst


def mackey_projector_violation(ctx: CellContext, trials: int,
                               rng: np.random.Generator) -> float:
    grp, rho = ctx.group, ctx.rho
    worst = 0.0
    for _ in range(trials):
        raw = rng.uniform(-1.0, 1.0, size=(grp.order, rho.dim))
        p = mackey_project(raw, rho)
        worst = max(worst, p.mackey_residual())
        worst = max(worst, float(
            np.abs(mackey_project(p.values, rho).values - p.values).max()))
        f = random_feature(rho, rng)
        worst = max(worst, float(
            np.abs(mackey_project(f.values, rho).values - f.values).max()))
        for k in range(grp.order):
            moved = mackey_project(raw[grp.mult[int(grp.inv[k])]], rho)
            worst = max(worst, float(
                np.abs(moved.values - g_action(k, p).values).max()))
    return worst


def canonicalisation_violation(ctx: CellContext, trials: int,
                               rng: np.random.Generator) -> float:
    grp, sigma, rho = ctx.group, ctx.sigma, ctx.rho
    raw = rng.uniform(-1.0, 1.0,
                      size=(grp.order, grp.order, sigma.dim, rho.dim))
    acc = np.zeros_like(raw)
    for h in sigma.subgroup.elements:
        acc += np.einsum('ik,abkj->abij', sigma.mat(h), raw[grp.mult[:, h]])
    kappa = TwoArgKernel(sigma, rho, acc / len(sigma.subgroup))
    k0 = canonical_representative(kappa)
    worst = k0.right_covariance_residual()
    worst = max(worst, k0.left_covariance_residual())
    worst = max(worst, float(
        np.abs(canonical_representative(k0).values - k0.values).max()))
    for _ in range(trials):
        f = random_feature(rho, rng)
        lhs = apply_two_arg(kappa, f)
        rhs = apply_two_arg(k0, f)
        worst = max(worst, float(np.abs(lhs.values - rhs.values).max()))
    return worst


def invariant_kernel_violation(ctx: CellContext, trials: int,
                               rng: np.random.Generator) -> float:
    kernel = seeded_kernel(ctx, rng)
    two = expand_to_two_arg(kernel)
    worst = two.invariance_residual()
    op = lambda f: apply_two_arg(two, f)
    worst = max(worst, check_equivariance(op, ctx.rho, trials=trials,
                                          seed=int(rng.integers(2**31))))
    return worst


def basis_dimension_violation(ctx: CellContext) -> float:
    solved = 0 if ctx.basis is None else len(ctx.basis)
    oracle = steerable_dimension_oracle(ctx.sigma, ctx.rho)
    classwise = double_coset_dimension(ctx.sigma, ctx.rho, ctx.dcs)
    return float(max(abs(solved - oracle), abs(solved - classwise)))


def basis_residual_violation(ctx: CellContext) -> float:
    worst = 0.0
    for vec in (ctx.basis if ctx.basis is not None else []):
        k = OneArgKernel(ctx.sigma, ctx.rho, np.array(vec))
        worst = max(worst, k.bi_equivariance_residual())
    return worst


def gcnn_equivariance_violation(ctx: CellContext, trials: int,
                                rng: np.random.Generator) -> float:
    kernel = seeded_kernel(ctx, rng)
    op = lambda f: gcnn_apply(kernel, f)
    return check_equivariance(op, ctx.rho, trials=trials,
                              seed=int(rng.integers(2**31)))


def domain_round_trip_violation(ctx: CellContext, trials: int,
                                rng: np.random.Generator) -> float:
    kernel = seeded_kernel(ctx, rng)
    qk = to_quotient_kernel(kernel, ctx.quotient)
    worst = qk.constraint_residual()
    worst = max(worst, float(
        np.abs(from_quotient_kernel(qk).values - kernel.values).max()))
    dk = to_double_coset_kernel(kernel, ctx.dcs)
    worst = max(worst, dk.constraint_residual())
    worst = max(worst, float(
        np.abs(from_double_coset_kernel(dk).values - kernel.values).max()))
    for _ in range(trials):
        sf = random_section_feature(ctx.quotient, ctx.rho, rng)
        direct = quotient_apply(qk, sf)
        conj = sink(gcnn_apply(kernel, lift(sf)), ctx.quotient)
        worst = max(worst, float(np.abs(direct.values - conj.values).max()))
    return worst


def universality_violation(ctx: CellContext, trials: int,
                           rng: np.random.Generator) -> float:
    kernel = seeded_kernel(ctx, rng)
    op = lambda f: gcnn_apply(kernel, f)
    omega = universal_from_lambda(op, ctx.sigma, ctx.rho, trials=2,
                                  seed=int(rng.integers(2**31)))
    worst = 0.0
    for _ in range(trials):
        f = random_feature(ctx.rho, rng)
        worst = max(worst, float(
            np.abs(apply_nonlinear(omega, f).values - op(f).values).max()))
    return worst


def violation_fixture_residual(ctx: CellContext,
                               rng: np.random.Generator) -> float:
    """Deliberately broken kernel: perturbation of sup norm 1e-3 off the
    steerable subspace; the recorded residual must trip the tolerance."""
    kernel = seeded_kernel(ctx, rng)
    delta = rng.uniform(-1.0, 1.0, size=kernel.values.shape)
    delta *= 1e-3 / np.abs(delta).max()
    broken = OneArgKernel(ctx.sigma, ctx.rho, kernel.values + delta)
    projected = OneArgKernel(
        ctx.sigma, ctx.rho,
        _project_steerable(ctx, broken.values))
    residual = broken.bi_equivariance_residual()
    # guard against the perturbation accidentally landing in the subspace
    if np.abs(broken.values - projected.values).max() < 1e-6:
        raise ConfigError("violation fixture degenerate: perturbation steerable")
    return residual


def _project_steerable(ctx: CellContext, values: np.ndarray) -> np.ndarray:
    from .kernels import averaging_projector_apply
    k = OneArgKernel(ctx.sigma, ctx.rho, np.array(values))
    return averaging_projector_apply(k).values


# ---------------------------------------------------------------------------
# Orchestration


def _timed(fn: Callable[[], float]) -> tuple[float, float]:
    start = time.perf_counter()
    violation = fn()
    return violation, (time.perf_counter() - start) * 1000.0


def _record(check_id: str, group: str, instance: str | None,
            violation: float, tol_key: str, tolerances: dict,
            runtime_ms: float) -> CheckRecord:
    tol = tolerances[tol_key]
    return CheckRecord(check_id=check_id, group=group, instance=instance,
                       max_violation=float(violation), tolerance=float(tol),
                       passed=float(violation) <= float(tol),
                       runtime_ms=runtime_ms)


def run_cell(index: int, cell: CellSpec, config: SuiteConfig,
             tolerances: dict) -> list[CheckRecord]:
    ctx = build_cell(cell)
    gname = ctx.group.name
    trials = config.trials if ctx.group.order <= 60 else max(1, config.trials // 4)
    records: list[CheckRecord] = []

    def rng():
        return np.random.default_rng([config.seed, index])

    def add(check_id, tol_key, fn, instance=None):
        violation, ms = _timed(fn)
        records.append(_record(check_id, gname, instance, violation,
                               tol_key, tolerances, ms))

    add("group-laws", "exact", lambda: group_law_violations(ctx.group))
    add("quotient-integral", "float_rearrangement",
        lambda: quotient_integral_violation(ctx.quotient, trials, rng()))
    if ctx.group.order <= 48:
        add("twist-cocycle", "exact",
            lambda: twist_cocycle_violations(ctx.quotient))
    add("lift-sink-round-trip", "round_trip",
        lambda: lift_sink_violation(ctx, trials, rng()))
    add("mackey-projector", "round_trip",
        lambda: mackey_projector_violation(ctx, trials, rng()))

    if cell.linear_checks:
        add("kernel-canonicalisation", "operator_equality_tight",
            lambda: canonicalisation_violation(ctx, trials, rng()))
        add("invariant-kernel-equivariance", "equivariance",
            lambda: invariant_kernel_violation(ctx, trials, rng()))
        add("steerable-basis-dimension", "dimension_match",
            lambda: basis_dimension_violation(ctx))
        add("steerable-basis-residual", "basis_residual",
            lambda: basis_residual_violation(ctx))
        add("gcnn-equivariance", "equivariance",
            lambda: gcnn_equivariance_violation(ctx, trials, rng()))
        add("domain-round-trip", "round_trip",
            lambda: domain_round_trip_violation(ctx, trials, rng()))
        add("universality", "operator_equality_tight",
            lambda: universality_violation(ctx, max(2, trials // 2), rng()))

    for ispec in cell.instances:
        runtime = build_instance(ctx, ispec)
        iname = runtime.name
        omega = runtime.omega

        def closure():
            h_res, hp_res = check_omega_constraints(
                omega, trials=trials, seed=config.seed)
            op = lambda f: apply_nonlinear(omega, f)
            eq = check_equivariance(op, omega.rho,
                                    trials=max(1, trials // 2),
                                    seed=config.seed)
            drng = np.random.default_rng([config.seed, index, ispec.seed])
            mackey = max(apply_nonlinear(omega, random_feature(omega.rho, drng))
                         .mackey_residual() for _ in range(max(1, trials // 2)))
            return max(h_res, hp_res, eq, mackey)

        add("omega-closure", "omega_constraint", closure, instance=iname)
        add("derivation-equality", "operator_equality",
            lambda rt=runtime: rt.derivation(
                trials, np.random.default_rng([config.seed, index, 1])),
            instance=iname)
        for check_id, (violation, tol_key) in sorted(runtime.extra_checks.items()):
            records.append(_record(check_id, gname, iname, violation,
                                   tol_key, tolerances, 0.0))

    if config.violation_fixture and cell.linear_checks and index == _first_linear(config):
        add("violation-fixture", "equivariance",
            lambda: violation_fixture_residual(ctx, rng()))

    return records


def _first_linear(config: SuiteConfig) -> int:
    """Index of the first cell that can host the violation fixture: a
    trivial subgroup imposes no steerability constraint to violate."""
    for i, cell in enumerate(config.groups):
        if cell.linear_checks and cell.subgroup.kind != "trivial":
            return i
    for i, cell in enumerate(config.groups):
        if cell.linear_checks:
            return i
    return -1


def run_suite(config: SuiteConfig) -> Report:
    tolerances = {**DEFAULT_TOLERANCES, **config.tolerances}
    unknown = set(config.tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    workers = max_workers()
    jobs = list(enumerate(config.groups))
    if workers == 1 or len(jobs) == 1:
        nested = [run_cell(i, cell, config, tolerances) for i, cell in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(
                lambda job: run_cell(job[0], job[1], config, tolerances), jobs))
    records = [r for recs in nested for r in recs]
    records.sort(key=lambda r: (r.check_id, r.group, r.instance or ""))
    passed = sum(r.passed for r in records)
    summary = {"total": len(records), "passed": int(passed),
               "failed": len(records) - int(passed)}
    return Report(config=config.model_dump(), seed=config.seed,
                  records=records, summary=summary)


def report_exit_code(report: Report) -> int:
    return 0 if report.summary["failed"] == 0 else 1
