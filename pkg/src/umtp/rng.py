"""Counter-based random streams.

Every random quantity in the library is drawn from a Philox4x64-10 stream
keyed by ``(seed, index)`` with a small integer ``purpose`` tag placed in the
high word of the counter.  Draw ``index`` of a sampler is therefore a pure
function of ``(seed, index)`` and can be evaluated in any order, on any
worker.
"""

import numpy as np

PRNG_NAME = "Philox4x64-10 (numpy.random.Philox), key=(seed, index)"

_MASK64 = (1 << 64) - 1

# purpose tags, one per independent consumer of a draw's randomness
STRUCTURE = 0
ROOT = 1
WALK = 2
LABELS = 3
REJECT = 4
PERMUTE = 5


def stream(seed, index=0, purpose=STRUCTURE):
    """Return a ``numpy.random.Generator`` for ``(seed, index, purpose)``."""
    key = ((int(seed) & _MASK64) << 64) | (int(index) & _MASK64)
    bitgen = np.random.Philox(key=key, counter=[0, 0, 0, int(purpose)])
    return np.random.Generator(bitgen)


def derive_seed(*parts):
    """Mix integers into a fresh 64-bit seed (for composed samplers)."""
    ss = np.random.SeedSequence([int(p) & _MASK64 for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class UniformBuffer:
    """Python floats pulled from a generator in blocks.

    Tight Python loops (walks, loop-erased walks) call ``next()`` millions
    of times; going through numpy per draw would dominate the runtime.
    """

    __slots__ = ("_gen", "_buf", "_pos", "_block")

    def __init__(self, gen, block=4096):
        self._gen = gen
        self._block = block
        self._buf = []
        self._pos = 0

    def next(self):
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u
