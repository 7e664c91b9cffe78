"""Deterministic seed derivation.

All randomness in the toolkit flows from a single root seed through named
derivation: a child stream is identified by the root seed plus a path of
labels (e.g. ``("gof", replicate_index)``).  Derived streams are therefore
invariant to evaluation order and worker count, which is what makes the
bootstrap contracts reproducible bit-for-bit.
"""

import hashlib

import numpy as np


def derive_seed(root_seed, *path):
    """Derive a 64-bit child seed from ``root_seed`` and a label path.

    The derivation hashes the decimal rendering of the root seed together
    with each path element (ints, floats, strings), so child streams for
    distinct paths are independent for all practical purposes.
    """
    h = hashlib.sha256()
    h.update(str(int(root_seed)).encode())
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest()[:8], "big")


def rng_from(root_seed, *path):
    """A ``numpy.random.Generator`` seeded by `derive_seed(root_seed, *path)`."""
    return np.random.default_rng(derive_seed(root_seed, *path))
