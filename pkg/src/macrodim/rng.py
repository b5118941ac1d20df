"""Deterministic random streams.

Every stochastic routine takes a master seed and derives its own
``numpy.random.Generator`` from ``(master_seed, stream, replica)`` through
``SeedSequence`` spawn keys, so parallel replicas never share state.
"""
from __future__ import annotations

import zlib

import numpy as np

_STREAMS: dict[str, int] = {}


def stream_id(name: str) -> int:
    """Stable 32-bit integer for a stream label."""
    if name not in _STREAMS:
        _STREAMS[name] = zlib.crc32(name.encode("utf-8"))
    return _STREAMS[name]


def make_rng(seed: int, stream: str | int = 0, replica: int = 0) -> np.random.Generator:
    """Return an independent generator for ``(seed, stream, replica)``.

    Parameters
    ----------
    seed : int
        Master seed (non-negative).
    stream : str or int
        Label of the consumer, e.g. ``"ou"`` or ``"she-noise"``.
    replica : int
        Replica index.
    """
    if isinstance(stream, str):
        stream = stream_id(stream)
    if seed < 0 or replica < 0:
        raise ValueError("seed and replica must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(replica)))
    return np.random.Generator(np.random.PCG64(ss))
