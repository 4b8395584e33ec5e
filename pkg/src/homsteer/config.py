"""Pydantic schemas for suite configuration, reports and feature files.

All external JSON (CLI configs, verification reports, serialized feature
maps) goes through these models.  canonical_dumps renders JSON with
sorted keys and a fixed 17-significant-digit float format so reports are
byte-for-byte reproducible.
"""

from __future__ import annotations

import json
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .errors import ConfigError
from .features import FeatureMap
from .groups import (GroupTable, Subgroup, make_cyclic, make_dihedral,
                     make_semidirect, make_symmetric, symmetric_point_action)
from .reps import (Representation, regular_rep, rotation_block_rep,
                   sign_rep_z2, trivial_rep)


class GroupSpec(BaseModel):
    kind: Literal["cyclic", "dihedral", "symmetric", "semidirect"]
    n: int = Field(ge=1)
    flip: bool = True  # semidirect only

    def build(self) -> GroupTable:
        if self.kind == "cyclic":
            return make_cyclic(self.n)
        if self.kind == "dihedral":
            return make_dihedral(self.n)
        if self.kind == "symmetric":
            return make_symmetric(self.n)
        return make_semidirect(self.n, self.flip)


class SubgroupSpec(BaseModel):
    kind: Literal["full", "trivial", "generated", "stabilizer", "flip"]
    generators: list[int] = []
    point: int = 0  # stabilizer only

    def build(self, group: GroupTable) -> Subgroup:
        if self.kind == "full":
            return Subgroup.full(group)
        if self.kind == "trivial":
            return Subgroup.trivial(group)
        if self.kind == "generated":
            return Subgroup.generated(group, self.generators)
        if self.kind == "flip":
            # the order-2 reflection/flip subgroup of D_n or Z_n x| Z_2
            return Subgroup(group, (group.identity, group.order // 2))
        n = next(n for n in range(1, 8) if math.factorial(n) == group.order)
        act = symmetric_point_action(n)
        elems = tuple(int(g) for g in range(group.order)
                      if act[g, self.point] == self.point)
        return Subgroup(group, elems)


class RepSpec(BaseModel):
    kind: Literal["trivial", "regular", "sign", "rotation"]
    dim: int = Field(default=1, ge=1)
    freqs: list[int] = [1]

    def build(self, subgroup: Subgroup) -> Representation:
        if self.kind == "trivial":
            return trivial_rep(subgroup, self.dim)
        if self.kind == "regular":
            return regular_rep(subgroup)
        if self.kind == "sign":
            return sign_rep_z2(subgroup)
        return rotation_block_rep(subgroup, self.freqs)


InstanceName = Literal["gcnn", "implicit", "self_attention", "rel_bias",
                       "rotary", "lie_transformer"]


class InstanceSpec(BaseModel):
    instance: InstanceName
    params: dict = {}
    seed: int = 0
    init: Literal["uniform[-1,1]"] = "uniform[-1,1]"


class CellSpec(BaseModel):
    """One (group, subgroup, reps) test cell plus the instances to run on it."""

    group: GroupSpec
    subgroup: SubgroupSpec = SubgroupSpec(kind="trivial")
    sigma: RepSpec = RepSpec(kind="trivial", dim=1)
    rho: RepSpec = RepSpec(kind="trivial", dim=1)
    instances: list[InstanceSpec] = []
    linear_checks: bool = True


class SuiteConfig(BaseModel):
    groups: list[CellSpec]
    trials: int = Field(default=8, ge=1)
    seed: int = 0
    tolerances: dict[str, float] = {}
    out: str | None = None
    violation_fixture: bool = False

    @field_validator("groups")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("group list must not be empty")
        return v


DEFAULT_TOLERANCES = {
    "exact": 0.0,
    "float_rearrangement": 1e-14,
    "round_trip": 1e-12,
    "operator_equality": 1e-10,
    "operator_equality_tight": 1e-12,
    "equivariance": 1e-10,
    "equivariance_exhaustive": 1e-11,
    "mackey": 1e-9,
    "omega_constraint": 1e-10,
    "basis_residual": 1e-10,
    "dimension_match": 0.0,
    "rotary_identity": 1e-12,
}


class CheckRecord(BaseModel):
    check_id: str
    group: str
    instance: str | None = None
    max_violation: float
    tolerance: float
    passed: bool
    runtime_ms: float

    @field_validator("passed")
    @classmethod
    def _consistent(cls, v, info):
        want = info.data["max_violation"] <= info.data["tolerance"]
        if v != want:
            raise ValueError("passed flag inconsistent with violation/tolerance")
        return v


class Report(BaseModel):
    config: dict
    seed: int
    records: list[CheckRecord]
    summary: dict[str, int]


def default_config() -> SuiteConfig:
    """The default verification matrix."""
    trivial2 = RepSpec(kind="trivial", dim=2)
    sign = RepSpec(kind="sign")
    return SuiteConfig(groups=[
        CellSpec(group=GroupSpec(kind="cyclic", n=8),
                 sigma=trivial2, rho=trivial2,
                 instances=[
                     InstanceSpec(instance="rel_bias", seed=101),
                     InstanceSpec(instance="rotary", seed=102,
                                  params={"freqs": [1, 2]}),
                     InstanceSpec(instance="lie_transformer", seed=103),
                 ]),
        CellSpec(group=GroupSpec(kind="cyclic", n=12),
                 sigma=trivial2, rho=trivial2,
                 instances=[
                     InstanceSpec(instance="rel_bias", seed=104),
                     InstanceSpec(instance="rotary", seed=105,
                                  params={"freqs": [1, 3]}),
                 ]),
        CellSpec(group=GroupSpec(kind="dihedral", n=4),
                 subgroup=SubgroupSpec(kind="flip"),
                 sigma=sign, rho=sign,
                 instances=[
                     InstanceSpec(instance="gcnn", seed=106),
                     InstanceSpec(instance="lie_transformer", seed=107),
                 ]),
        CellSpec(group=GroupSpec(kind="symmetric", n=3),
                 subgroup=SubgroupSpec(kind="generated", generators=[1]),
                 sigma=sign, rho=sign,
                 instances=[InstanceSpec(instance="gcnn", seed=108)]),
        CellSpec(group=GroupSpec(kind="symmetric", n=4),
                 subgroup=SubgroupSpec(kind="stabilizer"),
                 instances=[InstanceSpec(instance="self_attention", seed=109,
                                         params={"c": 3, "c_out": 2,
                                                 "d_embed": 4})]),
        CellSpec(group=GroupSpec(kind="semidirect", n=8),
                 subgroup=SubgroupSpec(kind="flip"),
                 sigma=sign, rho=sign,
                 instances=[InstanceSpec(instance="implicit", seed=110)]),
        CellSpec(group=GroupSpec(kind="symmetric", n=5),
                 subgroup=SubgroupSpec(kind="stabilizer"),
                 linear_checks=False,
                 instances=[InstanceSpec(instance="self_attention", seed=111,
                                         params={"c": 2, "c_out": 2,
                                                 "d_embed": 3})]),
    ])


# ---------------------------------------------------------------------------
# Canonical JSON


def _render(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(f"{json.dumps(str(k))}:{_render(v)}"
                              for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_render(v) for v in obj) + "]"
    raise ConfigError(f"cannot serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    return _render(obj)


# ---------------------------------------------------------------------------
# Feature-map serialization


class FeatureFile(BaseModel):
    group: GroupSpec
    subgroup: list[int]
    rep: RepSpec
    values: list[list[float]]

    def build(self) -> FeatureMap:
        grp = self.group.build()
        sub = Subgroup(grp, tuple(self.subgroup))
        rep = self.rep.build(sub)
        values = np.asarray(self.values, dtype=np.float64)
        return FeatureMap(rep, values)


def feature_to_dict(f: FeatureMap, group: GroupSpec, rep: RepSpec) -> dict:
    return {"group": group.model_dump(), "subgroup": list(f.subgroup.elements),
            "rep": rep.model_dump(), "values": f.values.tolist()}
