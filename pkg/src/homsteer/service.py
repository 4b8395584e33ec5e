"""HTTP service exposing verification, basis solving and layer application.

The CLI drives these endpoints in-process; the same app can be served
standalone with uvicorn.  Domain errors map to HTTP 400, schema errors to
the usual 422, so clients can distinguish configuration problems from
check failures (which are reported in the body with status 200).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .config import (CellSpec, FeatureFile, GroupSpec, Report, RepSpec,
                     SubgroupSpec, SuiteConfig)
from .errors import HomsteerError
from .harness import build_cell, build_instance, run_suite
from .kernels import OneArgKernel, solve_steerable_basis
from .nonlinear import apply_nonlinear

app = FastAPI(title="homsteer", version=__version__)


@app.exception_handler(HomsteerError)
async def _domain_error(request: Request, exc: HomsteerError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/")
def health() -> dict:
    return {"name": "homsteer", "version": __version__}


@app.post("/verify")
def verify(config: SuiteConfig) -> Report:
    return run_suite(config)


class BasisRequest(BaseModel):
    group: GroupSpec
    subgroup: SubgroupSpec = SubgroupSpec(kind="trivial")
    subgroup_right: SubgroupSpec | None = None
    sigma: RepSpec = RepSpec(kind="trivial", dim=1)
    rho: RepSpec = RepSpec(kind="trivial", dim=1)


class BasisResponse(BaseModel):
    dimension: int
    basis: list  # (n_basis, |G|, d_sigma, d_rho) nested lists
    constraint_residual: float


@app.post("/solve-basis")
def solve_basis(req: BasisRequest) -> BasisResponse:
    grp = req.group.build()
    left = req.subgroup.build(grp)
    right = (req.subgroup_right or req.subgroup).build(grp)
    sigma = req.sigma.build(left)
    rho = req.rho.build(right)
    basis = solve_steerable_basis(sigma, rho)
    residual = 0.0
    for vec in basis:
        k = OneArgKernel(sigma, rho, np.array(vec))
        residual = max(residual, k.bi_equivariance_residual())
    return BasisResponse(dimension=len(basis), basis=basis.tolist(),
                         constraint_residual=residual)


class LayerRequest(BaseModel):
    config: CellSpec
    feature: FeatureFile


class LayerResponse(BaseModel):
    feature: FeatureFile
    mackey_residual: float


@app.post("/run-layer")
def run_layer(req: LayerRequest) -> LayerResponse:
    cell = req.config
    if len(cell.instances) != 1:
        raise HomsteerError("run-layer needs exactly one instance in the config")
    ctx = build_cell(cell)
    runtime = build_instance(ctx, cell.instances[0])
    omega = runtime.omega
    f = req.feature.build()
    if f.group.order != omega.group.order:
        raise HomsteerError(
            f"feature group order {f.group.order} does not match "
            f"operator group order {omega.group.order}")
    if f.rep.dim != omega.rho.dim:
        raise HomsteerError(
            f"feature dim {f.rep.dim} does not match operator input dim "
            f"{omega.rho.dim}")
    out = apply_nonlinear(omega, f)
    if (out.rep.dim == ctx.sigma.dim
            and out.rep.subgroup.elements == ctx.subgroup.elements):
        rep_spec = cell.sigma
        sub_elems = list(ctx.subgroup.elements)
    else:
        rep_spec = RepSpec(kind="trivial", dim=out.rep.dim)
        sub_elems = list(out.rep.subgroup.elements)
    out_file = FeatureFile(group=cell.group.model_dump(), subgroup=sub_elems,
                           rep=rep_spec, values=out.values.tolist())
    return LayerResponse(feature=out_file,
                         mackey_residual=out.mackey_residual())
