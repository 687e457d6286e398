import numpy as np
import pytest

from mtdswarm.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from mtdswarm.config import Rng
from mtdswarm.policy import HEAD_KEYS, SHARED_KEYS, PolicyParams


def make_params(seed):
    return PolicyParams.init(17, (64, 64), Rng(seed).split("init"))


def test_round_trip(tmp_path):
    params = [make_params(s) for s in range(5)]
    path = tmp_path / "agents.ckpt"
    save_checkpoint(path, params, meta={"attacker": "fixed", "seed": 1})
    loaded, meta = load_checkpoint(path)
    assert meta == {"attacker": "fixed", "seed": 1}
    assert len(loaded) == 5
    for a, b in zip(params, loaded):
        for key in SHARED_KEYS + HEAD_KEYS:
            assert np.array_equal(a[key], b[key])


def test_bad_magic_names_file(tmp_path):
    path = tmp_path / "bogus.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 64)
    with pytest.raises(CheckpointError, match="bogus.ckpt"):
        load_checkpoint(path)


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "agents.ckpt"
    save_checkpoint(path, [make_params(1)], meta={})
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "nope.ckpt")


def test_unsupported_version_rejected(tmp_path):
    import struct

    path = tmp_path / "agents.ckpt"
    save_checkpoint(path, [make_params(1)], meta={})
    data = bytearray(path.read_bytes())
    data[8:12] = struct.pack("<I", 99)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)
