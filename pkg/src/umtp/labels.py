"""Independent uniform edge labels stored as 63-bit integers.

A label ``L`` stands for the uniform value ``L / 2**63``.  Edge ``e`` is open
at parameter ``p`` when ``L < open_threshold(p)``, so ``p = 0`` opens nothing,
``p = 1`` opens everything and the open set grows with ``p``.
"""

import math
from fractions import Fraction

import numpy as np

LABEL_BITS = 63
LABEL_SCALE = 1 << LABEL_BITS


def draw_labels(gen, m):
    """``m`` pairwise distinct labels; collisions are redrawn."""
    labels = gen.integers(0, LABEL_SCALE, size=m, dtype=np.int64).tolist()
    seen = set()
    for i, x in enumerate(labels):
        while x in seen:
            x = int(gen.integers(0, LABEL_SCALE, dtype=np.int64))
        labels[i] = x
        seen.add(x)
    return labels


def label_value(label):
    return label / LABEL_SCALE


def open_threshold(p):
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    return math.ceil(Fraction(p) * LABEL_SCALE)


def threshold_value(t):
    """Smallest ``p`` (as a float) whose threshold exceeds label ``t``."""
    return min(1.0, (t + 1) / LABEL_SCALE)


class LazyLabels:
    """Labels assigned to edge ids in order of first request."""

    __slots__ = ("_gen", "_labels", "_buf", "_pos")

    def __init__(self, gen):
        self._gen = gen
        self._labels = {}
        self._buf = []
        self._pos = 0

    def __call__(self, eid):
        x = self._labels.get(eid)
        if x is None:
            if self._pos >= len(self._buf):
                self._buf = self._gen.integers(0, LABEL_SCALE, size=1024, dtype=np.int64).tolist()
                self._pos = 0
            x = self._labels[eid] = self._buf[self._pos]
            self._pos += 1
        return x
