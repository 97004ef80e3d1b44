"""Optimal symbol-by-symbol state estimation.

For an observation ``W = w`` the Bayes estimator picks the reconstruction
symbol minimizing ``sum_s P(s | w) d(s, s_hat)``. Cells with zero probability
get the symbol that is optimal under the prior; ties go to the smallest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelSpec, _as_joint, distortion_of
from .errors import ArgumentError

TIE_TOL = 1e-15


@dataclass(frozen=True)
class Estimator:
    conditioning: tuple[str, ...]
    table: np.ndarray
    expected_distortion: float

    def __call__(self, *observations):
        """Vectorized lookup: one integer array per conditioning variable."""
        if len(observations) != len(self.conditioning):
            raise ArgumentError(
                f"expected {len(self.conditioning)} observation arrays, got {len(observations)}")
        return self.table[tuple(np.asarray(o) for o in observations)]


def _argmin_first(risk: np.ndarray) -> np.ndarray:
    """Row-wise argmin over the last axis, ties broken to the smallest index."""
    best = risk.min(axis=-1, keepdims=True)
    near = risk <= best + TIE_TOL * np.maximum(1.0, np.abs(best))
    return np.argmax(near, axis=-1)


def optimal_estimator(joint, channel: ChannelSpec, conditioning: Sequence[str]) -> Estimator:
    j = _as_joint(joint)
    conditioning = tuple(dict.fromkeys(conditioning))
    if "S" in conditioning or "S_hat" in conditioning:
        raise ArgumentError("conditioning set must exclude S and S_hat")
    d = channel.distortion
    p = j.marginal_array(("S",) + conditioning)
    # risk[w, s_hat] = sum_s P(s, w) d(s, s_hat)
    risk = np.tensordot(np.moveaxis(p, 0, -1), d, axes=([-1], [0]))
    mass = p.sum(axis=0)
    prior_best = int(_argmin_first(j.marginal_array(["S"]) @ d))
    table = np.where(mass > 0, _argmin_first(risk), prior_best).astype(np.int64)
    table.setflags(write=False)
    value = distortion_of(channel, table, j, conditioning)
    return Estimator(conditioning, table, value)


def min_distortion(joint, channel: ChannelSpec, conditioning: Sequence[str]) -> float:
    return optimal_estimator(joint, channel, conditioning).expected_distortion
