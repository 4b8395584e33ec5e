"""Command-line interface.

Thin client over the HTTP service: each subcommand validates its inputs,
posts to the in-process app and writes canonical JSON output.  Exit
codes: 0 success, 1 verification failures, 2 configuration errors.
"""

from __future__ import annotations

import json
import sys

import click
from fastapi.testclient import TestClient

from .config import canonical_dumps, default_config
from .errors import ConfigError
from .service import app

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _client() -> TestClient:
    return TestClient(app, raise_server_exceptions=False)


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _parse_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON for {what}: {exc}") from exc


def _write(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(payload))
        fh.write("\n")


def _post(route: str, payload) -> dict:
    response = _client().post(route, json=payload)
    if response.status_code != 200:
        detail = response.json().get("detail", response.text)
        raise ConfigError(f"{route} rejected the request: {detail}")
    return response.json()


@click.group()
@click.version_option(package_name="homsteer")
def main() -> None:
    """Exact verification of equivariant operators on finite groups."""


@main.command()
@click.option("--config", "config_path", type=click.Path(),
              help="Suite configuration JSON; defaults to the built-in matrix.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write the canonical JSON report.")
@click.option("--seed", type=int, default=None,
              help="Override the suite seed.")
@click.option("--strict", is_flag=True,
              help="Double the sampled trials per check.")
def verify(config_path, out_path, seed, strict) -> None:
    """Run the verification matrix and write a report."""
    try:
        if config_path is None:
            payload = default_config().model_dump()
        else:
            payload = _load_json(config_path)
            if not isinstance(payload, dict):
                raise ConfigError("suite configuration must be a JSON object")
        if seed is not None:
            payload["seed"] = seed
        if strict:
            payload["trials"] = 2 * int(payload.get("trials", 8))
        report = _post("/verify", payload)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    _write(out_path, report)
    for record in report["records"]:
        status = "PASS" if record["passed"] else "FAIL"
        instance = record["instance"] or "-"
        click.echo(f"{status} {record['check_id']} [{record['group']}/"
                   f"{instance}] max_violation={record['max_violation']:.3e} "
                   f"tol={record['tolerance']:.1e}")
    summary = report["summary"]
    click.echo(f"{summary['passed']}/{summary['total']} checks passed")
    sys.exit(EXIT_OK if summary["failed"] == 0 else EXIT_CHECK_FAILED)


@main.command("solve-basis")
@click.option("--group", "group_json", required=True,
              help='Group spec JSON, e.g. \'{"kind": "symmetric", "n": 3}\'.')
@click.option("--reps", "reps_json", required=True,
              help='JSON with "sigma", "rho" and optional "subgroup", '
                   '"subgroup_right".')
@click.option("--out", "out_path", required=True, type=click.Path())
def solve_basis(group_json, reps_json, out_path) -> None:
    """Solve for the full basis of steerable kernels."""
    try:
        reps = _parse_json(reps_json, "--reps")
        if not isinstance(reps, dict):
            raise ConfigError("--reps must be a JSON object")
        payload = {"group": _parse_json(group_json, "--group"), **reps}
        result = _post("/solve-basis", payload)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    _write(out_path, result)
    click.echo(f"dimension={result['dimension']} "
               f"constraint_residual={result['constraint_residual']:.3e}")
    sys.exit(EXIT_OK)


@main.command("run-layer")
@click.option("--config", "config_path", required=True, type=click.Path(),
              help="Layer configuration JSON (group, subgroup, reps, instance).")
@click.option("--in", "in_path", required=True, type=click.Path(),
              help="Input feature map JSON.")
@click.option("--out", "out_path", required=True, type=click.Path())
def run_layer(config_path, in_path, out_path) -> None:
    """Apply one configured operator to a serialized feature map."""
    try:
        payload = {"config": _load_json(config_path),
                   "feature": _load_json(in_path)}
        result = _post("/run-layer", payload)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    _write(out_path, result)
    click.echo(f"mackey_residual={result['mackey_residual']:.3e}")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
