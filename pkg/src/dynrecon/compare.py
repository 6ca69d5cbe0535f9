"""Baseline comparison harness: gridding vs. CNN-only vs. the full
graph-regularized unrolled reconstruction on a held-out phantom.

Both learned methods are trained on one phantom seed and evaluated on a
different one; the graph is always estimated from the evaluation data's own
navigators, since frame similarity is dataset specific.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np

from . import container
from .config import effective_config_json, phantom_config, unroll_config
from .graph import estimate_weights
from .metrics import snr_db
from .operators import apply_A, apply_A_star
from .phantom import generate_phantom, simulate_navigators
from .sampling import golden_angle_pattern, navigator_lines
from .unroll import reconstruct, train


def write_pgm(path, image: np.ndarray) -> None:
    """8-bit binary PGM of a real nonnegative image, normalized to its max."""
    img = np.asarray(image, dtype=float)
    peak = img.max()
    if peak > 0:
        img = img / peak
    data = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(header + data.tobytes())
    os.replace(tmp, path)


def temporal_profile(series: np.ndarray, row: int | None = None) -> np.ndarray:
    """Magnitude of one spatial row against time: shape (frames, width)."""
    if row is None:
        row = series.shape[1] // 2
    return np.abs(series[:, row, :])


def _make_dataset(cfg: dict, seed: int):
    pc = dataclasses.replace(phantom_config(cfg), seed=seed)
    truth, phases = generate_phantom(pc)
    samp = cfg["sampling"]
    pattern = golden_angle_pattern(
        pc.nframes, pc.height, pc.width, samp["lines_per_frame"], samp["start_index"]
    )
    b = apply_A(truth, pattern)
    nav = simulate_navigators(
        truth, navigator_lines(pc.height, pc.width, samp["navigator_lines"])
    )
    gcfg = cfg["graph"]
    k = min(gcfg["k"], pc.nframes - 1)
    graph = estimate_weights(nav, sigma=gcfg["sigma"], k=k)
    return truth, phases, b, graph


def compare_baselines(cfg: dict, out_dir: str) -> dict:
    """Train both models, reconstruct the held-out dataset, emit the report."""
    os.makedirs(out_dir, exist_ok=True)
    train_seed = cfg["compare"]["train_seed"]
    test_seed = cfg["compare"]["test_seed"]

    truth_tr, _, b_tr, graph_tr = _make_dataset(cfg, train_seed)
    ucfg = unroll_config(cfg)
    full = train(b_tr, truth_tr, graph_tr, ucfg)
    cnn_cfg = dataclasses.replace(ucfg, lam2=0.0, train_lam2=False)
    cnn = train(b_tr, truth_tr, graph_tr, cnn_cfg)

    truth_te, _, b_te, graph_te = _make_dataset(cfg, test_seed)
    gridding = apply_A_star(b_te)
    recon_cnn, _ = reconstruct(
        b_te,
        None,
        cnn.params,
        dataclasses.replace(cnn_cfg, lam1=cnn.lam1, lam2=0.0),
    )
    recon_full, _ = reconstruct(
        b_te,
        graph_te,
        full.params,
        dataclasses.replace(ucfg, lam1=full.lam1, lam2=full.lam2),
    )

    results = {
        "gridding": gridding,
        "cnn_only": recon_cnn,
        "full": recon_full,
    }
    snrs = {name: snr_db(series, truth_te) for name, series in results.items()}

    container.write_series(os.path.join(out_dir, "reference.mdst"), truth_te)
    for name, series in results.items():
        container.write_series(os.path.join(out_dir, f"recon_{name}.mdst"), series)
        write_pgm(os.path.join(out_dir, f"profile_{name}.pgm"), temporal_profile(series))
        np.save(os.path.join(out_dir, f"profile_{name}.npy"), temporal_profile(series))
    write_pgm(os.path.join(out_dir, "profile_reference.pgm"), temporal_profile(truth_te))
    np.save(os.path.join(out_dir, "profile_reference.npy"), temporal_profile(truth_te))

    report = {
        "snr_db": {k: (v if np.isfinite(v) else "inf") for k, v in snrs.items()},
        "trained": {
            "full": {"lam1": full.lam1, "lam2": full.lam2},
            "cnn_only": {"lam1": cnn.lam1, "lam2": cnn.lam2},
        },
        "train_seed": train_seed,
        "test_seed": test_seed,
    }
    with open(os.path.join(out_dir, "report.json.tmp"), "w", encoding="utf-8") as f:
        f.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    os.replace(
        os.path.join(out_dir, "report.json.tmp"), os.path.join(out_dir, "report.json")
    )
    with open(os.path.join(out_dir, "effective-config.json.tmp"), "w", encoding="utf-8") as f:
        f.write(effective_config_json(cfg))
    os.replace(
        os.path.join(out_dir, "effective-config.json.tmp"),
        os.path.join(out_dir, "effective-config.json"),
    )

    table = ["method          SNR (dB)"]
    for name in ("gridding", "cnn_only", "full"):
        table.append(f"{name:<15} {snrs[name]:8.3f}")
    text = "\n".join(table) + "\n"
    with open(os.path.join(out_dir, "snr_table.txt.tmp"), "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(
        os.path.join(out_dir, "snr_table.txt.tmp"), os.path.join(out_dir, "snr_table.txt")
    )
    report["snr_values"] = snrs
    report["table"] = text
    return report
