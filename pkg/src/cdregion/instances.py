"""Ready-made channels and random scheme generators."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .channel import (AUX_VARS, CHANNEL_KERNELS, ENCODER_ARGS, ENCODER_OUTPUT, SCHEME_KERNELS,
                      ChannelSpec, SchemeSpec)

PROBE, SILENT = 0, 1
ERASURE = 2


def hamming(n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return 1.0 - np.eye(n, m)


def _sizes(**overrides) -> dict[str, int]:
    sizes = {v: 1 for v in ("S", "S1", "S2", "X1", "X2", "Y1", "Y2", "Y", "S_R")}
    sizes.update(overrides)
    sizes.setdefault("S_hat", sizes["S"])
    return sizes


def monostatic_channel(p_y: np.ndarray, p_s) -> ChannelSpec:
    """Monostatic-uplink channel from ``p_y[x1, x2, s, y]``.

    Encoder 2 is the sensing transmitter: it sees ``Y`` as perfect feedback
    (``Y2 = Y``) and the receiver knows its signal (``S_R = X2``).
    """
    p_y = np.asarray(p_y, dtype=float)
    nx1, nx2, ns, ny = p_y.shape
    sizes = _sizes(S=ns, X1=nx1, X2=nx2, Y=ny, Y2=ny, S_R=nx2)
    p_out = np.zeros((nx1, nx2, ns, 1, ny, ny, nx2))
    for x2 in range(nx2):
        for y in range(ny):
            p_out[:, x2, :, 0, y, y, x2] = p_y[:, x2, :, y]
    return ChannelSpec(sizes, np.asarray(p_s, float), np.ones((ns, 1, 1)), p_out, hamming(ns))


def probe_erasure_channel(p_target=0.3, erase_if_target=0.8, erase_if_clear=0.1,
                          erase_silent=0.05) -> ChannelSpec:
    """Uplink bit through an erasure link whose erasures reveal the target.

    When the base station probes (``X2 = 0``) the echo blocks the uplink with
    a probability that depends on the target state ``S``; when silent
    (``X2 = 1``) erasures are rarer and independent of ``S``.
    ``Y`` takes values {0, 1, erasure}.
    """
    p_y = np.zeros((2, 2, 2, 3))
    for x1 in range(2):
        for s in range(2):
            e = erase_if_target if s else erase_if_clear
            p_y[x1, PROBE, s, x1] = 1 - e
            p_y[x1, PROBE, s, ERASURE] = e
            p_y[x1, SILENT, s, x1] = 1 - erase_silent
            p_y[x1, SILENT, s, ERASURE] = erase_silent
    return monostatic_channel(p_y, [1 - p_target, p_target])


def bsc_monostatic_channel(flip=0.1, p_target=0.3) -> ChannelSpec:
    """State-independent BSC uplink; the sensing signal carries no state information."""
    p_y = np.zeros((2, 1, 2, 2))
    for x1 in range(2):
        p_y[x1, 0, :, x1] = 1 - flip
        p_y[x1, 0, :, 1 - x1] = flip
    return monostatic_channel(p_y, [1 - p_target, p_target])


def _random_rows(rng, shape, concentration=1.0):
    return rng.dirichlet(np.full(shape[-1], concentration), size=shape[:-1])


def random_channel(rng: np.random.Generator, sizes: Mapping[str, int] | None = None,
                   concentration=1.0) -> ChannelSpec:
    """Channel with Dirichlet-random kernels and Hamming-like random distortion."""
    s = _sizes(S=2, S1=2, S2=2, X1=2, X2=2, Y1=2, Y2=2, Y=2, S_R=2)
    if sizes:
        s.update(sizes)
    s["S_hat"] = (sizes or {}).get("S_hat", s["S"])
    ks = {}
    for name, (given, target) in CHANNEL_KERNELS.items():
        shape = tuple(s[v] for v in given) + (int(np.prod([s[v] for v in target])),)
        rows = _random_rows(rng, shape, concentration)
        ks[name] = rows.reshape(tuple(s[v] for v in given + target))
    d = rng.uniform(0.5, 1.5, size=(s["S"], s["S_hat"]))
    k = min(s["S"], s["S_hat"])
    d[np.arange(k), np.arange(k)] = 0.0
    return ChannelSpec(s, ks["p_s"], ks["p_s1s2"], ks["p_out"], d)


def random_monostatic_channel(rng: np.random.Generator, n_s=2, n_y=2, n_x1=2, n_x2=2,
                              concentration=1.0) -> ChannelSpec:
    p_y = _random_rows(rng, (n_x1, n_x2, n_s, n_y), concentration)
    p_s = rng.dirichlet(np.ones(n_s))
    return monostatic_channel(p_y, p_s)


DESCRIPTION_KERNELS = ("p_t1", "p_t2", "p_v1", "p_v2")


def random_scheme(rng: np.random.Generator, channel: ChannelSpec,
                  sizes: Mapping[str, int] | None = None, *, mode="causal",
                  concentration=1.0, description_weight=1.0) -> SchemeSpec:
    """Dirichlet-random scheme with random encoder tables.

    ``description_weight`` blends every description kernel row with one
    parent-independent row: at 0 the descriptions carry no information, at 1
    the rows are fully random. Small weights keep description costs below the
    packing bounds, so the region is usually non-empty.
    """
    s = {v: 2 for v in AUX_VARS}
    if sizes:
        s.update(sizes)
    allsz = dict(channel.sizes)
    allsz.update(s)
    ks = {}
    for name, (given, target) in SCHEME_KERNELS.items():
        shape = tuple(allsz[v] for v in given + target)
        ks[name] = _random_rows(rng, shape, concentration)
        if name in DESCRIPTION_KERNELS and description_weight < 1:
            shared = _random_rows(rng, (shape[-1],), concentration)
            ks[name] = description_weight * ks[name] + (1 - description_weight) * shared
    fs = {}
    for fname, args in ENCODER_ARGS.items():
        shape = tuple(allsz[a] for a in args)
        table = rng.integers(0, allsz[ENCODER_OUTPUT[fname]], size=shape)
        if mode == "strictly_causal":
            table = np.broadcast_to(table[..., :1], shape).copy()
        fs[fname] = table
    return SchemeSpec(sizes=s, mode=mode, **fs, **ks)
