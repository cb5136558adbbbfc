import struct

import numpy as np
import pytest

from lexipivot.errors import FormatError, InputError
from lexipivot.numerics import ParamStore, Tensor


def build_store():
    rng = np.random.default_rng(42)
    store = ParamStore(rng_seed=42)
    store.add("zeta", Tensor(rng.normal(size=(3, 2))))
    store.add("alpha.weight", Tensor(rng.normal(size=5)))
    store.add("mid", Tensor(np.array(3.14159)))
    return store


def test_names_are_unique():
    store = build_store()
    with pytest.raises(InputError, match="zeta"):
        store.add("zeta", Tensor(np.zeros(1)))


def test_iteration_sorted_by_name():
    assert [n for n, _ in build_store().items()] == ["alpha.weight", "mid", "zeta"]


def test_round_trip_bit_exact(tmp_path):
    store = build_store()
    p1 = tmp_path / "a.lxpv"
    p2 = tmp_path / "b.lxpv"
    store.save(p1)
    loaded = ParamStore.load(p1)
    for (n1, t1), (n2, t2) in zip(store.items(), loaded.items()):
        assert n1 == n2
        assert t1.data.shape == t2.data.shape
        assert np.array_equal(t1.data, t2.data)
    loaded.save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_header_layout(tmp_path):
    store = build_store()
    path = tmp_path / "s.lxpv"
    store.save(path)
    blob = path.read_bytes()
    assert blob[:4] == b"LXPV"
    version, count = struct.unpack_from("<II", blob, 4)
    assert version == 1 and count == 3
    (name_len,) = struct.unpack_from("<I", blob, 12)
    assert blob[16:16 + name_len].decode() == "alpha.weight"


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.lxpv"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(FormatError, match="magic"):
        ParamStore.load(path)


def test_truncated_file(tmp_path):
    store = build_store()
    path = tmp_path / "t.lxpv"
    store.save(path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-7])
    with pytest.raises(FormatError):
        ParamStore.load(path)


def test_trailing_bytes(tmp_path):
    store = build_store()
    path = tmp_path / "x.lxpv"
    store.save(path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        ParamStore.load(path)


def test_snapshot_restore_preserves_identity():
    store = build_store()
    tensors = {n: t for n, t in store.items()}
    snap = store.state_arrays()
    store["zeta"].data[...] = 0.0
    store.load_state_arrays(snap)
    assert store["zeta"] is tensors["zeta"]
    assert np.array_equal(store["zeta"].data, snap["zeta"])
