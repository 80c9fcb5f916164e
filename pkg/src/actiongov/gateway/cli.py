"""Command-line front end.

Subcommands: init (scaffold a runnable deployment), serve, commit (one-shot),
verify-ledger, replay, bench, attack, approve, deny. Commands that can talk
to a running gateway accept --url; otherwise they operate on the deployment
named by --config directly.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import click
import requests

from ..artifacts import ApprovalWitness, load_private_key
from ..canonical import IntentProposal
from ..config import DeploymentConfig, build_governor, tightened_program, write_demo_deployment
from ..errors import ActionGovError
from ..governor import GovernorMode
from ..harness import run_bench, run_bypass_matrix, run_baseline
from ..harness.workload import GeneratorParams
from ..ledger import LedgerStore
from ..policy import PolicyProgram, load_policy_file
from ..replay import ReplayEngine, ReplayQuery


def _coerce(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    if value in ("true", "false"):
        return value == "true"
    return value


@click.group()
def main() -> None:
    """Execution-time authorization governor."""


@main.command()
@click.option("--dir", "directory", required=True, type=click.Path(), help="Target directory.")
def init(directory: str) -> None:
    """Scaffold keys, policy, normalization tables, and config.json."""
    config_path = write_demo_deployment(directory)
    click.echo(f"wrote {config_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None, help="Override listen host.")
@click.option("--port", default=None, type=int, help="Override listen port.")
def serve(config_path: str, host: str | None, port: int | None) -> None:
    """Run the HTTP gateway."""
    from .service import build_gateway

    config = DeploymentConfig.from_file(config_path)
    governor, tokens = build_governor(config)
    server = build_gateway(
        governor,
        approver_tokens=tokens,
        operator_token=config.operator_token,
        default_tenant=config.tenants[0].tenant_id if config.tenants else "acme",
        host=host or config.listen_host,
        port=config.listen_port if port is None else port,
    )
    click.echo(f"serving on {server.base_url()}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:  # pragma: no cover - interactive path
        pass
    finally:
        server.shutdown()
        governor.close()


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--url", default=None, help="POST to a running gateway instead.")
@click.option("--tenant", default=None)
@click.option("--actor", default="cli")
@click.option("--operation", required=True)
@click.option("--resource", required=True)
@click.option("--param", "-p", "params", multiple=True, help="key=value parameter.")
@click.option("--context", "-c", "contexts", multiple=True, help="key=value context entry.")
@click.option("--mode", default="inline", type=click.Choice(["inline", "deferred", "shadow"]))
@click.option("--deadline-ms", default=None, type=float)
def commit(config_path, url, tenant, actor, operation, resource, params, contexts, mode, deadline_ms):
    """One-shot commit of a single intent."""
    payload: dict = {"operation": operation, "resource": resource}
    parameters = {k: _coerce(v) for k, v in (p.split("=", 1) for p in params)}
    context = {k: _coerce(v) for k, v in (c.split("=", 1) for c in contexts)}
    if parameters:
        payload["parameters"] = parameters
    if context:
        payload["context"] = context

    if url:
        body = dict(payload, actor=actor, mode=mode)
        if tenant:
            body["tenant"] = tenant
        if deadline_ms is not None:
            body["deadline_ms"] = deadline_ms
        resp = requests.post(f"{url}/v1/action/commit", json=body, timeout=600)
        click.echo(json.dumps(resp.json(), indent=2))
        sys.exit(0 if resp.status_code == 200 else 1)

    if not config_path:
        raise click.UsageError("either --config or --url is required")
    config = DeploymentConfig.from_file(config_path)
    governor, _ = build_governor(config)
    try:
        tenant = tenant or (config.tenants[0].tenant_id if config.tenants else "acme")
        proposal = IntentProposal(tenant, actor, payload, origin="cli")
        deadline = None if deadline_ms is None else deadline_ms / 1000.0
        outcome = governor.commit(proposal, GovernorMode(mode), deadline)
        result = {
            "decision": outcome.decision.outcome.value.lower(),
            "explanation": outcome.decision.explanation,
            "hash": outcome.h.hex if outcome.h else None,
            "seq": outcome.record.seq if outcome.record else None,
            "deduplicated": outcome.deduplicated,
            "pending": outcome.pending,
        }
        if outcome.artifact is not None:
            result["artifact"] = outcome.artifact.token()
        click.echo(json.dumps(result, indent=2))
    except ActionGovError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    finally:
        governor.close()


@main.command("verify-ledger")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--ledger-dir", default=None, type=click.Path())
@click.option("--tenant", default="acme")
def verify_ledger(config_path, ledger_dir, tenant) -> None:
    """Recompute the hash chain; exit 0 iff intact."""
    if ledger_dir is None:
        if not config_path:
            raise click.UsageError("either --config or --ledger-dir is required")
        config = DeploymentConfig.from_file(config_path)
        ledger_dir = config.resolve(config.ledger_dir)
    store = LedgerStore(ledger_dir, fsync=False)
    report = store.verify_chain(tenant)
    if report.ok:
        click.echo(f"ok {report.records_checked} records")
        sys.exit(0)
    click.echo(f"broken at seq {report.first_broken_seq} ({report.records_checked} checked)")
    sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--ledger-dir", default=None, type=click.Path())
@click.option("--tenant", default="acme")
@click.option("--range", "seq_range", default="all", help="all or LO:HI.")
@click.option("--hash", "h_a_hex", default=None, help="Replay one canonical hash.")
@click.option("--policy", "policy_version", default=None, help="Published policy version id.")
@click.option("--policy-file", default=None, type=click.Path(exists=True))
@click.option("--tightened", is_flag=True, help="Replay under the tightened demo transform.")
@click.option("--state-file", default=None, type=click.Path(exists=True), help="JSON entries for S'.")
def replay(config_path, ledger_dir, tenant, seq_range, h_a_hex, policy_version, policy_file, tightened, state_file) -> None:
    """Counterfactual re-evaluation over recorded decisions; prints a flip report."""
    if ledger_dir is None:
        if not config_path:
            raise click.UsageError("either --config or --ledger-dir is required")
        config = DeploymentConfig.from_file(config_path)
        ledger_dir = config.resolve(config.ledger_dir)
    store = LedgerStore(ledger_dir, fsync=False)
    engine = ReplayEngine(store)

    policy: str | PolicyProgram | None = policy_version
    if policy_file:
        policy = load_policy_file(policy_file)
    if tightened:
        source = store.get_policy_source(tenant, policy_version) if policy_version else None
        base = PolicyProgram.from_dict(source) if source else None
        if base is None:
            versions = sorted({r.v_p for r in store.read_records(tenant)})
            if not versions:
                click.echo("empty ledger", err=True)
                sys.exit(1)
            base = PolicyProgram.from_dict(store.get_policy_source(tenant, versions[0]))
        policy = tightened_program(base)

    rng: tuple[int, int] | None = None
    if h_a_hex is None and seq_range != "all":
        lo, hi = seq_range.split(":", 1)
        rng = (int(lo), int(hi))
    query = ReplayQuery(tenant=tenant, h_a_hex=h_a_hex, seq_range=rng, policy=policy)
    try:
        results = engine.replay(query)
    except ActionGovError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    for line in engine.report_lines(results):
        click.echo(line)
    flips = [r for r in results if r.flipped]
    click.echo(f"replayed {len(results)} records, {len(flips)} flipped")


@main.command()
@click.option("--n", default=10_000, type=int)
@click.option("--m", default=6, type=int)
@click.option("--seed", default=1, type=int)
@click.option("--probes", default=0, type=int)
@click.option("--out", default=None, type=click.Path(), help="Write the JSON report here.")
@click.option("--store-dir", default=None, type=click.Path())
def bench(n, m, seed, probes, out, store_dir) -> None:
    """Latency / determinism / fail-closed / coverage micro-benchmark."""
    params = GeneratorParams(actions=n, mutations=m)
    root = store_dir or tempfile.mkdtemp(prefix="actiongov-bench-")
    report = run_bench(params, seed, root, probes=probes)
    click.echo(report.summary())
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        click.echo(f"report written to {out}")


@main.command()
@click.option("--scale", default="desk", type=click.Choice(["smoke", "desk"]),
              help="smoke: hundreds of attempts; desk: the full acceptance volumes.")
@click.option("--workers", default=16, type=int)
@click.option("--store-dir", default=None, type=click.Path())
@click.option("--out", default=None, type=click.Path())
def attack(scale, workers, store_dir, out) -> None:
    """Run the bypass-attack matrix; exit 0 iff every class has zero successes."""
    from ..artifacts import generate_keypair
    from ..config import default_normalization, demo_policy_program, demo_state_entries
    from ..governor import Governor

    volumes = None
    if scale == "smoke":
        volumes = {
            "direct-call": 500, "alternate-route": 500, "cached-token-replay": 500,
            "concurrent-duplicate": 2_000, "stale-policy": 300,
        }
    root = store_dir or tempfile.mkdtemp(prefix="actiongov-attack-")
    signing_key, _ = generate_keypair()
    governor = Governor(LedgerStore(Path(root) / "attack"), signing_key, default_normalization())
    governor.register_tenant("acme", demo_policy_program(), demo_state_entries())
    try:
        outcomes = run_bypass_matrix(governor, "acme", volumes=volumes, workers=workers)
    finally:
        governor.close()
    rows = [o.to_dict() for o in outcomes]
    for o in outcomes:
        click.echo(f"{o.attack_class:22s} attempts={o.attempts:7d} successes={o.successes}")
    if out:
        Path(out).write_text(json.dumps(rows, indent=2), encoding="utf-8")
    sys.exit(0 if all(o.successes == 0 for o in outcomes) else 1)


@main.command()
@click.option("--mode", default="all",
              type=click.Choice(["all", "logging-only", "tool-local", "protocol-embedded", "aab"]))
@click.option("--n", default=200, type=int)
@click.option("--seed", default=1, type=int)
@click.option("--store-dir", default=None, type=click.Path())
def baseline(mode, n, seed, store_dir) -> None:
    """Demonstrate which enforcement invariant each baseline violates."""
    modes = ["logging-only", "tool-local", "protocol-embedded", "aab"] if mode == "all" else [mode]
    for m in modes:
        root = store_dir or tempfile.mkdtemp(prefix="actiongov-baseline-")
        result = run_baseline(m, n, seed, root)
        click.echo(json.dumps(result.guarantees_row()))


def _resolve_common(config_path, url, h_hex, verdict, approver, tenant):
    if url:
        config = DeploymentConfig.from_file(config_path) if config_path else None
        token = None
        if config:
            for name, spec in config.approvers.items():
                if approver in (None, name):
                    token = spec.get("token")
                    break
        if token is None:
            raise click.UsageError("no approver token available; pass --config with approvers")
        resp = requests.post(
            f"{url}/v1/approvals/{h_hex}/resolve",
            json={"verdict": verdict, **({"tenant": tenant} if tenant else {})},
            headers={"Authorization": f"Bearer {token}"},
            timeout=60,
        )
        click.echo(json.dumps(resp.json(), indent=2))
        sys.exit(0 if resp.status_code == 200 else 1)

    if not config_path:
        raise click.UsageError("either --config or --url is required")
    config = DeploymentConfig.from_file(config_path)
    governor, _ = build_governor(config)
    try:
        tenant = tenant or (config.tenants[0].tenant_id if config.tenants else "acme")
        name = approver or next(iter(config.approvers), None)
        if name is None:
            raise click.UsageError("deployment has no approvers configured")
        key = load_private_key(config.resolve(config.approvers[name]["key_path"]))
        witness = ApprovalWitness.create(key, h_hex, name, verdict)
        outcome = governor.resolve_approval(tenant, witness)
        click.echo(
            json.dumps(
                {
                    "decision": outcome.decision.outcome.value.lower(),
                    "explanation": outcome.decision.explanation,
                    "already_resolved": outcome.deduplicated,
                },
                indent=2,
            )
        )
    except ActionGovError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    finally:
        governor.close()


@main.command()
@click.argument("h_hex")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--url", default=None)
@click.option("--approver", default=None)
@click.option("--tenant", default=None)
def approve(h_hex, config_path, url, approver, tenant) -> None:
    """Resolve a deferred action with an approve witness."""
    _resolve_common(config_path, url, h_hex, "approve", approver, tenant)


@main.command()
@click.argument("h_hex")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--url", default=None)
@click.option("--approver", default=None)
@click.option("--tenant", default=None)
def deny(h_hex, config_path, url, approver, tenant) -> None:
    """Resolve a deferred action with a reject witness."""
    _resolve_common(config_path, url, h_hex, "reject", approver, tenant)


if __name__ == "__main__":
    main()
