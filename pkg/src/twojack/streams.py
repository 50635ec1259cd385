"""Deterministic random substreams.

Every replicate draws from its own generator, keyed by ``(seed, *key)``
through numpy's ``SeedSequence`` spawn keys.  Streams for distinct keys are
statistically independent, and a replicate's stream does not depend on how
work is split between processes, so serial and parallel runs agree exactly.
"""

import numpy as np

GENERATOR = f"numpy-{np.__version__}/PCG64/SeedSequence(spawn_key)"


def substream(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))
