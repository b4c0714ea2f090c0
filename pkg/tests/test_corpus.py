import json

import numpy as np
import pytest

from blurlab.blurspace import ALL_PAIRS, EClass, PClass
from blurlab.corpus import (
    KERNEL_MAGIC,
    generate_corpus,
    kernel_from_bytes,
    kernel_to_bytes,
    read_kernel,
    write_kernel,
)
from blurlab.kernels import generate_kernel


def test_bytes_roundtrip():
    k = generate_kernel(PClass.P1, EClass.E3, 9)
    blob = kernel_to_bytes(k)
    assert blob[:4] == KERNEL_MAGIC
    back = kernel_from_bytes(blob)
    assert np.array_equal(back.weights, k.weights)
    assert (back.width, back.height) == (128, 128)


def test_file_roundtrip_with_sidecar(tmp_path):
    k = generate_kernel(PClass.P2, EClass.E5, 4)
    path = tmp_path / "k.bfk"
    write_kernel(path, k)
    back = read_kernel(path)
    assert np.array_equal(back.weights, k.weights)
    assert back.meta == k.meta
    side = json.loads((tmp_path / "k.json").read_text())
    assert side["p_class"] == "P2"
    assert side["e_class"] == "E5"
    assert side["seed"] == 4
    assert side["centered"] is True
    assert side["extents"] == k.meta.extents.as_list()


def test_bad_magic_rejected():
    with pytest.raises(ValueError):
        kernel_from_bytes(b"NOPE" + b"\x00" * 16)


def test_truncated_payload_rejected():
    k = generate_kernel(PClass.P1, EClass.E1, 0)
    with pytest.raises(ValueError):
        kernel_from_bytes(kernel_to_bytes(k)[:-8])


def test_corpus_counts_all_pairs(tmp_path):
    manifest = generate_corpus(2, 7, tmp_path / "corpus")
    assert len(manifest["kernels"]) == 2 * len(ALL_PAIRS) == 30
    files = sorted((tmp_path / "corpus").glob("*.bfk"))
    assert len(files) == 30
    assert manifest["complete"]


def test_corpus_deterministic_bytes(tmp_path):
    generate_corpus(2, 7, tmp_path / "a", pairs=((PClass.P1, EClass.E5),))
    generate_corpus(2, 7, tmp_path / "b", pairs=((PClass.P1, EClass.E5),))
    for name in ("P1_E5_00000.bfk", "P1_E5_00001.bfk", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_corpus_parallel_matches_serial(tmp_path):
    generate_corpus(3, 11, tmp_path / "serial", pairs=((PClass.P2, EClass.E2),), jobs=1)
    generate_corpus(3, 11, tmp_path / "par", pairs=((PClass.P2, EClass.E2),), jobs=3)
    for f in sorted((tmp_path / "serial").iterdir()):
        assert f.read_bytes() == (tmp_path / "par" / f.name).read_bytes()


def test_empty_corpus(tmp_path):
    manifest = generate_corpus(0, 1, tmp_path / "empty")
    assert manifest["kernels"] == []
    assert manifest["complete"]
    assert list((tmp_path / "empty").glob("*.bfk")) == []


def test_corpus_seeds_independent_of_order(tmp_path):
    # The same (pair, index) must produce the same bytes regardless of which
    # other pairs are generated alongside it.
    generate_corpus(1, 5, tmp_path / "single", pairs=((PClass.P3, EClass.E4),))
    generate_corpus(1, 5, tmp_path / "full")
    name = "P3_E4_00000.bfk"
    assert (tmp_path / "single" / name).read_bytes() == (tmp_path / "full" / name).read_bytes()
