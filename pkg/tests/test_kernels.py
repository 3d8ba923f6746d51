"""Backend parity: the numba kernels and the numpy fallbacks must agree."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import dl_distance_matrix
from placeref import _kernels as kernels


@pytest.fixture(scope="module")
def clouds():
    rng = np.random.default_rng(42)
    out = []
    for n in (2, 3, 17, 120, 400):
        out.append((rng.uniform(0, 3000, n), rng.uniform(0, 3000, n)))
    return out


@pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba unavailable")
def test_annulus_counts_backends_agree(clouds):
    for xs, ys in clouds:
        edges = (np.arange(1, 50, dtype=np.float64)) * 100.0
        nb = kernels.annulus_counts_numba(xs, ys, edges, 0, xs.size)
        np_ = kernels.annulus_counts_numpy(xs, ys, edges, 0, xs.size)
        assert np.array_equal(nb, np_)


@pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba unavailable")
def test_max_pairwise_distance_backends_agree(clouds):
    for xs, ys in clouds:
        assert kernels.max_pairwise_distance_numba(xs, ys) == kernels.max_pairwise_distance_numpy(xs, ys)


@pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba unavailable")
def test_single_linkage_backends_agree(clouds):
    def canonical(labels):
        remap = {}
        return [remap.setdefault(int(v), len(remap)) for v in labels]

    for xs, ys in clouds:
        for cutoff in (50.0, 200.0, 1000.0):
            nb = canonical(kernels.single_linkage_numba(xs, ys, cutoff))
            np_ = canonical(kernels.single_linkage_numpy(xs, ys, cutoff))
            assert nb == np_


def test_chunked_annulus_counts_sum_to_full():
    rng = np.random.default_rng(3)
    xs, ys = rng.uniform(0, 2000, 150), rng.uniform(0, 2000, 150)
    edges = (np.arange(1, 30, dtype=np.float64)) * 100.0
    full = kernels.annulus_counts(xs, ys, edges)
    bounds = [0, 40, 90, 150]
    parts = [kernels.annulus_counts(xs, ys, edges, s, e) for s, e in zip(bounds[:-1], bounds[1:])]
    assert np.array_equal(full, np.sum(parts, axis=0))


def test_single_linkage_labels_are_canonical():
    xs = np.array([0.0, 1.0, 100.0, 101.0, 500.0])
    ys = np.zeros(5)
    labels = kernels.single_linkage_labels(xs, ys, 5.0)
    assert labels.tolist() == [0, 0, 1, 1, 2]


def test_damerau_levenshtein_known_values():
    assert kernels.damerau_levenshtein("kitten", "sitting") == 3
    assert kernels.damerau_levenshtein("kitten", "kittne") == 1  # transposition
    assert kernels.damerau_levenshtein("", "") == 0
    assert kernels.damerau_levenshtein("abc", "") == 3
    assert kernels.damerau_levenshtein("fed", "federation") == 7


def test_damerau_levenshtein_matches_matrix_oracle():
    rng = np.random.default_rng(11)
    alphabet = "abcdefg '"
    for _ in range(300):
        a = "".join(rng.choice(list(alphabet), rng.integers(0, 12)))
        b = "".join(rng.choice(list(alphabet), rng.integers(0, 12)))
        assert kernels.damerau_levenshtein(a, b) == dl_distance_matrix(a, b)


def test_damerau_levenshtein_symmetry_and_identity():
    words = ["station", "square", "fed", "federation", "st", "paul's"]
    for a in words:
        assert kernels.damerau_levenshtein(a, a) == 0
        for b in words:
            assert kernels.damerau_levenshtein(a, b) == kernels.damerau_levenshtein(b, a)


def test_backend_name_reports_choice():
    assert kernels.backend_name() in ("numba", "numpy")


def test_env_flag_selects_numpy_backend():
    import subprocess
    import sys

    probe = "from placeref import _kernels; print(_kernels.backend_name())"
    out = subprocess.run(
        [sys.executable, "-c", probe],
        env={"PLACEREF_NUMBA": "0", "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
