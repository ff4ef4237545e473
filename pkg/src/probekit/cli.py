"""Command-line client for the probing service.

Every subcommand except `serve` talks HTTP to a running service (start one
with `probekit serve`); the server address comes from --server or the
PROBEKIT_SERVER environment variable.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import httpx

DEFAULT_SERVER = "http://127.0.0.1:8731"


class Client:
    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")
        self.http = httpx.Client(base_url=self.base_url, timeout=600.0)

    def call(self, method: str, path: str, payload: dict | None = None) -> dict:
        try:
            response = self.http.request(method, path, json=payload)
        except httpx.ConnectError:
            raise click.ClickException(
                f"cannot reach {self.base_url}; start the service with 'probekit serve'"
            )
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"server error ({response.status_code}): {detail}")
        return response.json()


def _config_ref(config: str, seed: int | None, out: str | None) -> dict:
    ref: dict = {"config_path": str(Path(config).resolve())}
    if seed is not None:
        ref["seed"] = seed
    if out is not None:
        ref["out_dir"] = str(Path(out).resolve())
    return ref


@click.group()
@click.option("--server", envvar="PROBEKIT_SERVER", default=DEFAULT_SERVER,
              show_default=True, help="Service base URL.")
@click.pass_context
def main(ctx, server):
    """Probing-task toolkit client."""
    ctx.obj = server


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8731, show_default=True, type=int)
def serve(host, port):
    """Run the probing service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


def _client(ctx) -> Client:
    return Client(ctx.obj)


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", type=click.Path(), default=None, help="Override the output directory.")
@click.option("--task", "tasks", multiple=True, help="Only these tasks.")
@click.option("--language", "languages", multiple=True, help="Only these languages.")
@click.pass_context
def generate(ctx, config, seed, out, tasks, languages):
    """Generate probing datasets (TSV + metadata sidecars)."""
    payload = _config_ref(config, seed, out)
    if tasks:
        payload["tasks"] = list(tasks)
    if languages:
        payload["languages"] = list(languages)
    result = _client(ctx).call("POST", "/datasets/generate", payload)
    for ds in result["datasets"]:
        click.echo(
            f"{ds['language']}/{ds['task']}: {ds['size']} instances, "
            f"balance {ds['balance']} -> {ds['path']}"
        )


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--task", "tasks", multiple=True)
@click.option("--language", "languages", multiple=True)
@click.option("--encoder", "encoders", multiple=True)
@click.pass_context
def encode(ctx, config, seed, out, tasks, languages, encoders):
    """Write embedding interchange files for configured encoders."""
    payload = _config_ref(config, seed, out)
    if tasks:
        payload["tasks"] = list(tasks)
    if languages:
        payload["languages"] = list(languages)
    if encoders:
        payload["encoders"] = list(encoders)
    result = _client(ctx).call("POST", "/embeddings/encode", payload)
    for f in result["files"]:
        click.echo(
            f"{f['language']}/{f['task']}/{f['encoder']}: {f['rows']} x {f['dim']} "
            f"-> {f['path']}"
        )


def _run_matrix_command(ctx, config, seed, out, jobs, resume, only):
    client = _client(ctx)
    payload = _config_ref(config, seed, out)
    payload.update({"only": only, "jobs": jobs, "resume": resume})
    job_id = client.call("POST", "/jobs/matrix", payload)["job_id"]
    click.echo(f"job {job_id} submitted")
    last = None
    while True:
        info = client.call("GET", f"/jobs/{job_id}")
        state = (info["status"], info.get("completed_cells"), info.get("total_cells"))
        if state != last:
            done, total = info.get("completed_cells"), info.get("total_cells")
            suffix = f" ({done}/{total} cells)" if total is not None else ""
            click.echo(f"  {info['status']}{suffix}")
            last = state
        if info["status"] in ("done", "failed"):
            break
        time.sleep(0.3)
    if info["status"] == "failed":
        raise click.ClickException(info.get("error") or "matrix job failed")
    if info["failures"]:
        click.echo(f"{len(info['failures'])} cells failed:", err=True)
        for failure in info["failures"]:
            click.echo(f"  {failure}", err=True)
        sys.exit(1)
    click.echo(f"results: {info['results_csv']}")


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--resume", is_flag=True, help="Skip cells already in the results store.")
@click.pass_context
def probe(ctx, config, seed, out, jobs, resume):
    """Run the probing-task evaluation matrix."""
    _run_matrix_command(ctx, config, seed, out, jobs, resume, "probing")


@main.command()
@click.option("--config", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--resume", is_flag=True)
@click.pass_context
def downstream(ctx, config, seed, out, jobs, resume):
    """Run the downstream-task evaluation matrix."""
    _run_matrix_command(ctx, config, seed, out, jobs, resume, "downstream")


@main.command()
@click.option("--results", required=True, type=click.Path(exists=True),
              help="results.csv produced by probe/downstream.")
@click.option("--method", type=click.Choice(["pearson", "spearman"]),
              default="pearson", show_default=True)
@click.option("--downstream-task", "downstream_tasks", multiple=True,
              help="Task names to treat as downstream.")
@click.option("--size", "sizes", multiple=True, type=int,
              help="Probing sweep sizes (default: inferred).")
@click.pass_context
def analyze(ctx, results, method, downstream_tasks, sizes):
    """Compute stability analytics from a results store."""
    payload = {
        "results_csv": str(Path(results).resolve()),
        "method": method,
    }
    if downstream_tasks:
        payload["downstream_tasks"] = list(downstream_tasks)
    if sizes:
        payload["probing_sizes"] = list(sizes)
    result = _client(ctx).call("POST", "/analyze", payload)
    for summary in result["languages"]:
        click.echo(f"[{summary['language']}] most stable (classifier, size) by mu:")
        for row in summary["mu_table"][:6]:
            click.echo(f"  {row['classifier']:>4} / {row['size']:>6}  mu = {row['mu']:.2f}")
        click.echo("  cross-size min/avg per classifier:")
        for clf, ma in summary["cross_size_minavg"].items():
            click.echo(f"  {clf:>4}  min {ma['min']:.3f}  avg {ma['avg']:.3f}")
    for name, reason in result["skipped"].items():
        click.echo(f"skipped {name}: {reason}", err=True)


@main.command()
@click.option("--results", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--method", type=click.Choice(["pearson", "spearman"]),
              default="pearson", show_default=True)
@click.option("--downstream-task", "downstream_tasks", multiple=True)
@click.option("--size", "sizes", multiple=True, type=int)
@click.option("--profile-classifier", default="lr", show_default=True)
@click.option("--profile-size", type=int, default=None)
@click.pass_context
def report(ctx, results, out, method, downstream_tasks, sizes,
           profile_classifier, profile_size):
    """Render CSV tables, SVG heatmaps, and a markdown summary."""
    payload = {
        "results_csv": str(Path(results).resolve()),
        "out_dir": str(Path(out).resolve()),
        "method": method,
        "profile_classifier": profile_classifier,
    }
    if downstream_tasks:
        payload["downstream_tasks"] = list(downstream_tasks)
    if sizes:
        payload["probing_sizes"] = list(sizes)
    if profile_size is not None:
        payload["profile_size"] = profile_size
    result = _client(ctx).call("POST", "/report", payload)
    for path in result["written"]:
        click.echo(path)
    for name, reason in result["skipped"].items():
        click.echo(f"skipped {name}: {reason}", err=True)


if __name__ == "__main__":
    main()
