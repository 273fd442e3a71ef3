"""Named random substreams derived from one master seed.

Every stochastic step asks for ``make_rng(seed, "stage", index, ...)``; the
key path is hashed into a Philox4x64-10 key so results do not depend on call
order or on how work is scheduled across threads.
"""
import hashlib

import numpy as np

ALGORITHM = "philox4x64-10"


def derive_seed(seed, *keys):
    """64-bit seed for the substream named by ``keys`` under ``seed``."""
    text = "/".join([str(int(seed))] + [str(k) for k in keys])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed, *keys):
    if keys:
        seed = derive_seed(seed, *keys)
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
