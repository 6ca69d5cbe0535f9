"""Command-line surface.

Exit codes: 0 ok, 2 usage error, 3 format error, 4 numeric failure. Errors
print one machine-parsable category line to stderr followed by detail.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import os
import sys

import click
import numpy as np

from . import container
from .compare import compare_baselines
from .config import effective_config_json, load_config, phantom_config, unroll_config
from .errors import ConfigError, FormatError, NumericError
from .graph import estimate_weights
from .metrics import snr_db
from .operators import apply_A
from .phantom import generate_phantom, simulate_navigators
from .sampling import golden_angle_pattern, navigator_lines
from .unroll import reconstruct, train


def _fail(category: str, detail: str, code: int):
    click.echo(f"{category}: {detail}", err=True)
    sys.exit(code)


def handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as exc:
            _fail("usage-error", str(exc), 2)
        except FormatError as exc:
            _fail("format-error", str(exc), 3)
        except NumericError as exc:
            _fail("numeric-failure", str(exc), 4)
        except ValueError as exc:
            _fail("usage-error", str(exc), 2)

    return wrapper


def _write_text(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


@click.group()
def main():
    """Dynamic-series reconstruction from undersampled Fourier data."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@handle_errors
def simulate(config_path, out_dir):
    """Generate a phantom series, its phase record and navigator signals."""
    cfg = load_config(config_path)
    pc = phantom_config(cfg)
    os.makedirs(out_dir, exist_ok=True)
    series, phases = generate_phantom(pc)
    nav = simulate_navigators(
        series, navigator_lines(pc.height, pc.width, cfg["sampling"]["navigator_lines"])
    )
    container.write_series(os.path.join(out_dir, "phantom.mdst"), series)
    container.write_phases(os.path.join(out_dir, "phases.mdst"), phases)
    container.write_navigators(os.path.join(out_dir, "navigators.mdst"), nav)
    _write_text(os.path.join(out_dir, "effective-config.json"), effective_config_json(cfg))
    click.echo(f"wrote phantom ({pc.nframes} frames) to {out_dir}")


@main.command()
@click.option("--in", "series_path", type=click.Path(exists=True), required=True)
@click.option("--lines", type=int, required=True, help="golden-angle lines per frame")
@click.option("--navigators", "nnav", type=int, default=0, help="navigator line count")
@click.option("--start-index", type=int, default=1, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--nav-out", type=click.Path(), default=None,
              help="where to store navigator signals (kept out of the k-space file)")
@handle_errors
def sample(series_path, lines, nnav, start_index, out_path, nav_out):
    """Undersample a series with golden-angle masks; extract navigators."""
    series = container.read_series(series_path)
    t, h, w = series.shape
    pattern = golden_angle_pattern(t, h, w, lines, start_index)
    container.write_kspace(out_path, apply_A(series, pattern))
    if nnav > 0:
        if nav_out is None:
            raise ConfigError("--nav-out is required when --navigators > 0")
        nav = simulate_navigators(series, navigator_lines(h, w, nnav))
        container.write_navigators(nav_out, nav)
    click.echo(f"sampled {t} frames at {lines} lines/frame -> {out_path}")


@main.command()
@click.option("--navigators", "nav_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=10, show_default=True)
@click.option("--sigma", type=float, default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def graph(nav_path, k, sigma, out_path):
    """Estimate the frame-similarity graph from navigator signals."""
    nav = container.read_navigators(nav_path)
    g = estimate_weights(nav, sigma=sigma, k=k)
    container.write_graph(out_path, g)
    click.echo(f"graph over {g.nframes} frames -> {out_path}")


@main.command(name="train")
@click.option("--kspace", "kspace_path", type=click.Path(exists=True), required=True)
@click.option("--target", "target_path", type=click.Path(exists=True), required=True)
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--history", "history_path", type=click.Path(), default=None)
@handle_errors
def train_cmd(kspace_path, target_path, graph_path, config_path, out_path, history_path):
    """Train the unrolled network with the lagged manifold schedule."""
    cfg = load_config(config_path)
    b = container.read_kspace(kspace_path)
    target = container.read_series(target_path)
    g = container.read_graph(graph_path)
    ucfg = unroll_config(cfg)

    def stream(record):
        click.echo(json.dumps(record, sort_keys=True))

    result = train(b, target, g, ucfg, on_epoch=stream)
    container.write_params(out_path, result.params, result.lam1, result.lam2)
    if history_path is not None:
        lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in result.history)
        container.write_history(history_path, lines)
    click.echo(f"trained parameters -> {out_path}")


@main.command(name="reconstruct")
@click.option("--kspace", "kspace_path", type=click.Path(exists=True), required=True)
@click.option("--graph", "graph_path", type=click.Path(exists=True), default=None)
@click.option("--params", "params_path", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def reconstruct_cmd(kspace_path, graph_path, params_path, config_path, out_path):
    """Run the unrolled reconstruction with trained parameters."""
    cfg = load_config(config_path)
    b = container.read_kspace(kspace_path)
    p, lam1, lam2 = container.read_params(params_path)
    g = container.read_graph(graph_path) if graph_path else None
    ucfg = dataclasses.replace(unroll_config(cfg), lam1=lam1, lam2=lam2)
    x, _ = reconstruct(b, g, p, ucfg)
    container.write_series(out_path, x)
    click.echo(f"reconstruction -> {out_path}")


@main.command()
@click.option("--recon", "recon_path", type=click.Path(exists=True), required=True)
@click.option("--ref", "ref_path", type=click.Path(exists=True), required=True)
@handle_errors
def evaluate(recon_path, ref_path):
    """Print the SNR of a reconstruction against a reference."""
    x = container.read_series(recon_path)
    ref = container.read_series(ref_path)
    value = snr_db(x, ref)
    click.echo(f"SNR_dB={'inf' if np.isinf(value) else f'{value:.6f}'}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@handle_errors
def compare(config_path, out_dir):
    """Gridding vs. CNN-only vs. full pipeline on a held-out phantom."""
    cfg = load_config(config_path)
    report = compare_baselines(cfg, out_dir)
    click.echo(report["table"], nl=False)


if __name__ == "__main__":
    main()
