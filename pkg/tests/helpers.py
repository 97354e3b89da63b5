"""Seeded random generators shared across the test modules."""

import numpy as np

from cohist import Ket, Operator, make_pd


def random_unitary(rng, d):
    """Haar-random unitary via QR with the standard phase fix."""
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(a)
    phases = np.diag(r).copy()
    phases = phases / np.abs(phases)
    return Operator(q * phases, (d,), flavor="unitary")


def random_ket(rng, d, dims=None):
    amp = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return Ket(amp / np.linalg.norm(amp), dims)


def random_partition(rng, d, n_blocks=None):
    """Sizes of a random partition of d into nonempty blocks."""
    if n_blocks is None:
        n_blocks = int(rng.integers(1, d + 1))
    cuts = sorted(rng.choice(np.arange(1, d), size=n_blocks - 1, replace=False))
    bounds = [0] + list(cuts) + [d]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def random_pd(rng, d, n_blocks=None, dims=None):
    """Random projective decomposition from grouped columns of a random unitary."""
    u = random_unitary(rng, d).matrix
    sizes = random_partition(rng, d, n_blocks)
    projs = []
    start = 0
    for size in sizes:
        cols = u[:, start:start + size]
        projs.append(Operator(cols @ cols.conj().T, dims, flavor="projector"))
        start += size
    return make_pd(projs)


def random_projector(rng, d, rank):
    u = random_unitary(rng, d).matrix
    cols = u[:, :rank]
    return Operator(cols @ cols.conj().T, (d,), flavor="projector")
