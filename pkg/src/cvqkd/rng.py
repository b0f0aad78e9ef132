"""Named, splittable random streams.

Every random draw in the simulator comes from a Philox stream addressed by
(master seed, label path).  Streams are independent of each other and of the
order in which they are created, so the in-process pipeline and the two-party
networked session can replay each other bit for bit.
"""

import hashlib

import numpy as np


def _label_key(label):
    digest = hashlib.blake2s(str(label).encode(), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def stream(seed, *labels):
    """Return a ``numpy.random.Generator`` for the stream named by *labels*.

    The same (seed, labels) always yields the same stream; distinct label
    paths yield statistically independent streams.
    """
    key = tuple(_label_key(lab) for lab in labels)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
