import json
import struct

import numpy as np
import pytest

from corp.errors import (
    BadMagic,
    CorruptHeader,
    DuplicateName,
    TruncatedPayload,
    UnknownDtype,
    ValidationError,
)
from corp.tensorfile import (
    PruneConfig,
    load_config,
    read_tensorfile,
    save_config,
    write_tensorfile,
)


def test_empty_container_bytes(tmp_path):
    path = tmp_path / "empty.ctf"
    write_tensorfile(path, {})
    raw = path.read_bytes()
    assert raw == b"CTF1" + (2).to_bytes(8, "little") + b"{}"


def test_single_tensor_payload(tmp_path):
    path = tmp_path / "one.ctf"
    write_tensorfile(path, {"w": np.array([[1.0, 2.0], [3.0, 4.0]])})
    raw = path.read_bytes()
    assert raw[:4] == b"CTF1"
    hlen = int.from_bytes(raw[4:12], "little")
    header = json.loads(raw[12 : 12 + hlen])
    assert header["w"] == {"dtype": "f32", "shape": [2, 2], "offset": 0, "length": 16}
    payload = raw[-16:]
    assert payload == struct.pack("<4f", 1.0, 2.0, 3.0, 4.0)


def test_round_trip_three_tensors(tmp_path):
    rng = np.random.default_rng(0)
    entries = {
        "a": rng.normal(size=(3, 4)).astype(np.float32),
        "b.c": rng.normal(size=7).astype(np.float32),
        "z": rng.normal(size=(2, 2, 2)).astype(np.float32),
    }
    path = tmp_path / "m.ctf"
    write_tensorfile(path, entries)
    tf = read_tensorfile(path)
    assert tf.names() == sorted(entries)
    for name, arr in entries.items():
        assert tf[name].shape == arr.shape
        assert np.array_equal(tf[name], arr)


def test_rewrite_is_byte_identical(tmp_path):
    rng = np.random.default_rng(1)
    entries = {f"t{i}": rng.normal(size=(i + 1, 3)).astype(np.float32) for i in range(5)}
    p1, p2 = tmp_path / "a.ctf", tmp_path / "b.ctf"
    write_tensorfile(p1, entries)
    write_tensorfile(p2, read_tensorfile(p1).arrays)
    assert p1.read_bytes() == p2.read_bytes()


def test_header_is_name_sorted(tmp_path):
    path = tmp_path / "s.ctf"
    write_tensorfile(path, [("zz", np.zeros(1)), ("aa", np.zeros(1))])
    raw = path.read_bytes()
    hlen = int.from_bytes(raw[4:12], "little")
    header_text = raw[12 : 12 + hlen].decode()
    assert header_text.index('"aa"') < header_text.index('"zz"')


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ctf"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagic):
        read_tensorfile(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "t.ctf"
    write_tensorfile(path, {"w": np.zeros((4, 4), dtype=np.float32)})
    raw = path.read_bytes()
    (tmp_path / "short.ctf").write_bytes(raw[:-8])
    with pytest.raises(TruncatedPayload):
        read_tensorfile(tmp_path / "short.ctf")


def test_corrupt_header(tmp_path):
    path = tmp_path / "c.ctf"
    body = b"{not json"
    path.write_bytes(b"CTF1" + len(body).to_bytes(8, "little") + body)
    with pytest.raises(CorruptHeader):
        read_tensorfile(path)


def test_unknown_dtype(tmp_path):
    header = json.dumps(
        {"w": {"dtype": "f64", "shape": [1], "offset": 0, "length": 8}}
    ).encode()
    path = tmp_path / "d.ctf"
    pad = b"\x00" * ((-(12 + len(header))) % 8)
    path.write_bytes(b"CTF1" + len(header).to_bytes(8, "little") + header + pad + b"\x00" * 8)
    with pytest.raises(UnknownDtype):
        read_tensorfile(path)


def test_duplicate_name():
    with pytest.raises(DuplicateName):
        write_tensorfile("/dev/null", [("w", np.zeros(1)), ("w", np.ones(1))])


def test_bad_names():
    with pytest.raises(ValidationError):
        write_tensorfile("/dev/null", {"": np.zeros(1)})
    with pytest.raises(ValidationError):
        write_tensorfile("/dev/null", {"wé": np.zeros(1)})


def test_random_round_trips(tmp_path):
    rng = np.random.default_rng(2)
    for trial in range(10):
        n = int(rng.integers(0, 6))
        entries = {}
        for i in range(n):
            dims = tuple(int(d) for d in rng.integers(1, 5, size=int(rng.integers(1, 4))))
            entries[f"e{trial}.{i}"] = rng.normal(size=dims).astype(np.float32)
        path = tmp_path / f"r{trial}.ctf"
        write_tensorfile(path, entries)
        back = read_tensorfile(path)
        assert set(back.arrays) == set(entries)
        for name in entries:
            assert np.array_equal(back[name], entries[name])


def test_config_round_trip(tmp_path):
    cfg = PruneConfig(mlp_sparsity=0.5, attn_sparsity=0.25, lambda_mlp=0.1,
                      lambda_attn=0.2, ranking="magnitude", seed=7, calib_batch=16)
    path = tmp_path / "cfg.json"
    save_config(path, cfg)
    assert load_config(path) == cfg


@pytest.mark.parametrize("field,value", [
    ("mlp_sparsity", 1.0),
    ("mlp_sparsity", -0.1),
    ("attn_sparsity", 1.5),
    ("lambda_mlp", 0.0),
    ("lambda_attn", -1.0),
    ("ranking", "entropy"),
    ("calib_batch", 0),
])
def test_config_validation(field, value):
    cfg = PruneConfig()
    setattr(cfg, field, value)
    with pytest.raises(ValidationError):
        cfg.validate()


def test_config_unknown_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"mlp_sparsity": 0.5, "bogus": 1}')
    with pytest.raises(ValidationError):
        load_config(path)
