"""Reproducible generation of dictionaries and observations.

All randomness is drawn from the Philox4x64-10 counter-based generator
keyed directly by a 64-bit seed.  Raw 64-bit outputs ``r`` are mapped to
uniforms on the open unit interval by

    u = (floor(r / 2^11) + 0.5) * 2^-53

and standard normals are the inverse normal CDF of those uniforms.  No
rejection step is involved anywhere, so a seed fully determines the stream
and the same (kind, seed, m, n) always reproduces the same matrix.

Four dictionary families are supported, all column-normalized:

* ``gaussian``  - i.i.d. standard normal entries,
* ``uniform``   - i.i.d. uniform entries on [0, 1],
* ``dct``       - m distinct rows of the n-by-n orthonormal DCT-II matrix,
                  sampled uniformly without replacement,
* ``toeplitz``  - row i is a discretized Gaussian bell of width n/20
                  centered at i*n/m (deterministic, seed unused).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

VARIANTS = ("gaussian", "uniform", "dct", "toeplitz")

_MASK64 = (1 << 64) - 1


def _splitmix64(x):
    """One round of the SplitMix64 mixer (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base, *indices):
    """Fold trial/stream indices into a base seed, SplitMix64 style.

    Used by the experiment drivers so that every (trial, purpose) pair gets
    an independent, reproducible 64-bit seed.
    """
    h = _splitmix64(int(base) & _MASK64)
    for v in indices:
        h = _splitmix64(h ^ ((int(v) + 0x9E3779B97F4A7C15) & _MASK64))
    return h


class UniformStream:
    """Stateful stream of open-interval uniforms from a keyed Philox generator."""

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed <= _MASK64:
            raise ValueError("seed must fit in 64 bits")
        self._bg = np.random.Philox(key=seed)

    def uniforms(self, count):
        raw = self._bg.random_raw(count)
        return ((raw >> np.uint64(11)) + 0.5) * 2.0**-53

    def normals(self, count):
        return ndtri(self.uniforms(count))


@dataclass(frozen=True)
class DictionaryKind:
    """Dictionary family plus the seed that fully determines the draw."""

    variant: str
    seed: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown dictionary variant {self.variant!r}")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError("seed must fit in 64 bits")


def _dct_matrix(n):
    """Orthonormal DCT-II matrix of order n (rows indexed by frequency)."""
    k = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    D = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * j + 1) * k / (2.0 * n))
    D[0] /= np.sqrt(2.0)
    return D


def _raw_dictionary(kind, m, n, stream):
    variant = kind.variant
    if variant == "gaussian":
        return stream.normals(m * n).reshape(m, n)
    if variant == "uniform":
        return stream.uniforms(m * n).reshape(m, n)
    if variant == "dct":
        # Uniform m-subset of rows: argsort of i.i.d. uniforms is a uniform
        # random permutation; keep the first m, in frequency order.
        perm = np.argsort(stream.uniforms(n), kind="stable")
        rows = np.sort(perm[:m])
        return _dct_matrix(n)[rows]
    if variant == "toeplitz":
        sigma = n / 20.0
        centers = np.arange(m)[:, None] * (n / m)
        j = np.arange(n)[None, :]
        return np.exp(-((j - centers) ** 2) / (2.0 * sigma**2))
    raise ValueError(f"unknown dictionary variant {variant!r}")


def generate_dictionary(kind, m, n):
    """Draw an m-by-n dictionary of the requested family, unit-norm columns."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if kind.variant == "dct" and m > n:
        raise ValueError("dct sampling without replacement requires m <= n")
    stream = UniformStream(kind.seed)
    X = _raw_dictionary(kind, m, n, stream)
    norms = np.linalg.norm(X, axis=0)
    # A zero column can only arise for degenerate seeds; redraw until sound.
    for _ in range(100):
        if np.all(norms > 0.0):
            break
        if kind.variant in ("gaussian", "uniform"):
            bad = np.flatnonzero(norms == 0.0)
            draws = stream.normals if kind.variant == "gaussian" else stream.uniforms
            X[:, bad] = draws(m * bad.size).reshape(m, bad.size)
        elif kind.variant == "dct":
            X = _raw_dictionary(kind, m, n, stream)
        else:
            raise RuntimeError("toeplitz dictionaries cannot contain zero columns")
        norms = np.linalg.norm(X, axis=0)
    else:
        raise RuntimeError("could not draw a dictionary without zero columns")
    return X / norms


def generate_observation(seed, m):
    """Length-m standard normal observation, fully determined by the seed."""
    if m < 1:
        raise ValueError("m must be positive")
    return UniformStream(seed).normals(m)


def write_matrix_csv(path, X):
    """Write a matrix as CSV: first line "m,n", then row-major 17-digit floats."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m, n = X.shape
    with open(path, "w") as fh:
        fh.write(f"{m},{n}\n")
        for row in X:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix_csv(path):
    """Read a matrix written by :func:`write_matrix_csv`."""
    with open(path) as fh:
        header = fh.readline().strip()
        try:
            m, n = (int(tok) for tok in header.split(","))
        except ValueError as exc:
            raise ValueError(f"{path}:1: expected header 'm,n', got {header!r}") from exc
        X = np.empty((m, n))
        for i in range(m):
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}:{i + 2}: expected {m} data rows, got {i}")
            values = line.strip().split(",")
            if len(values) != n:
                raise ValueError(f"{path}:{i + 2}: expected {n} values, got {len(values)}")
            X[i] = [float(v) for v in values]
    return X
