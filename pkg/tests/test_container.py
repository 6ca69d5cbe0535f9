import json

import numpy as np
import pytest

from dynrecon import (
    FormatError,
    KSpaceData,
    PhaseRecord,
    apply_A,
    estimate_weights,
    golden_angle_pattern,
    init_denoiser,
)
from dynrecon.container import (
    KIND_SERIES,
    PREC_F64,
    read_container,
    read_graph,
    read_history,
    read_kspace,
    read_navigators,
    read_params,
    read_phases,
    read_series,
    write_container,
    write_graph,
    write_history,
    write_kspace,
    write_navigators,
    write_params,
    write_phases,
    write_series,
)
from dynrecon.denoiser import param_arrays

from conftest import random_series


def test_series_roundtrip_bit_exact(tmp_path, rng):
    x = random_series(rng, 3, 8, 8)
    p = tmp_path / "x.mdst"
    write_series(p, x)
    back = read_series(p)
    assert back.dtype == x.dtype
    assert np.array_equal(back, x)


def test_series_f32_roundtrip_preserves_dtype(tmp_path, rng):
    x = random_series(rng, 2, 4, 4).astype(np.complex64)
    p = tmp_path / "x.mdst"
    write_series(p, x)
    back = read_series(p)
    assert back.dtype == np.complex64
    assert np.array_equal(back, x)


def test_navigators_roundtrip(tmp_path, rng):
    nav = rng.normal(size=(5, 16)) + 1j * rng.normal(size=(5, 16))
    p = tmp_path / "nav.mdst"
    write_navigators(p, nav)
    assert np.array_equal(read_navigators(p), nav)


def test_kspace_roundtrip(tmp_path, rng):
    pat = golden_angle_pattern(3, 8, 8, 3, 1)
    b = apply_A(random_series(rng, 3, 8, 8), pat)
    p = tmp_path / "b.mdst"
    write_kspace(p, b)
    back = read_kspace(p)
    assert np.array_equal(back.values, b.values)
    assert np.array_equal(back.pattern.masks, pat.masks)
    assert back.pattern.lines_per_frame == pat.lines_per_frame


def test_graph_roundtrip(tmp_path, rng):
    nav = rng.normal(size=(6, 10)) + 1j * rng.normal(size=(6, 10))
    g = estimate_weights(nav, k=3)
    p = tmp_path / "g.mdst"
    write_graph(p, g)
    assert np.array_equal(read_graph(p).weights, g.weights)


def test_phases_roundtrip(tmp_path, rng):
    rec = PhaseRecord(cardiac=rng.uniform(0, 6, 8), respiratory=rng.uniform(0, 6, 8))
    p = tmp_path / "ph.mdst"
    write_phases(p, rec)
    back = read_phases(p)
    assert np.array_equal(back.cardiac, rec.cardiac)
    assert np.array_equal(back.respiratory, rec.respiratory)


@pytest.mark.parametrize("use_norm", [False, True])
def test_params_roundtrip(tmp_path, rng, use_norm):
    params = init_denoiser(nlayers=3, width=4, use_norm=use_norm, seed=3)
    p = tmp_path / "w.mdst"
    write_params(p, params, 0.125, 0.0625)
    back, lam1, lam2 = read_params(p)
    assert lam1 == 0.125 and lam2 == 0.0625
    assert len(back.layers) == len(params.layers)
    for a, e in zip(param_arrays(back), param_arrays(params)):
        assert np.array_equal(a, e)
    for la, le in zip(back.layers, params.layers):
        assert la.relu == le.relu
        assert (la.scale is None) == (le.scale is None)


def test_history_roundtrip(tmp_path):
    lines = "\n".join(
        json.dumps({"outer": 0, "epoch": e, "loss": 0.1 / (e + 1)}) for e in range(3)
    )
    p = tmp_path / "h.mdst"
    write_history(p, lines)
    assert read_history(p) == lines


class TestCorruption:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.mdst"
        p.write_bytes(b"NOPE" + b"\x00" * 30)
        with pytest.raises(FormatError, match="magic"):
            read_container(p)

    def test_crc_mismatch(self, tmp_path, rng):
        p = tmp_path / "x.mdst"
        write_series(p, random_series(rng, 2, 4, 4))
        raw = bytearray(p.read_bytes())
        raw[40] ^= 0xFF  # flip a payload byte
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="CRC"):
            read_series(p)

    def test_truncated_file(self, tmp_path, rng):
        p = tmp_path / "x.mdst"
        write_series(p, random_series(rng, 2, 4, 4))
        p.write_bytes(p.read_bytes()[:10])
        with pytest.raises(FormatError):
            read_series(p)

    def test_wrong_kind(self, tmp_path, rng):
        p = tmp_path / "x.mdst"
        write_series(p, random_series(rng, 2, 4, 4))
        with pytest.raises(FormatError, match="kind"):
            read_graph(p)

    def test_payload_dimension_mismatch(self, tmp_path):
        p = tmp_path / "x.mdst"
        write_container(p, KIND_SERIES, PREC_F64, (2, 4, 4), b"\x00" * 8)
        with pytest.raises(FormatError, match="length"):
            read_series(p)

    def test_unsupported_version(self, tmp_path, rng):
        p = tmp_path / "x.mdst"
        write_series(p, random_series(rng, 2, 4, 4))
        raw = bytearray(p.read_bytes())
        raw[4] = 99
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="version"):
            read_series(p)


def test_atomic_write_leaves_no_temp_files(tmp_path, rng):
    p = tmp_path / "x.mdst"
    write_series(p, random_series(rng, 2, 4, 4))
    leftovers = [f for f in tmp_path.iterdir() if f.name.startswith(".tmp-mdst-")]
    assert leftovers == []
