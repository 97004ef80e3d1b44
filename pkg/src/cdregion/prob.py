"""Exact finite-alphabet probability engine.

Joint laws are dense numpy tensors with one named axis per random variable.
Every information measure is computed from exact marginals in bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, UnknownVariableError, ZeroMassError

NORM_TOL = 1e-12
MI_CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class Alphabet:
    name: str
    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) < 1:
            raise ArgumentError(f"alphabet {self.name!r} must have size >= 1, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.size:
                raise ArgumentError(
                    f"alphabet {self.name!r}: {len(labels)} labels for size {self.size}"
                )
            object.__setattr__(self, "labels", labels)


def _names(vars_: Iterable[str] | str) -> list[str]:
    if isinstance(vars_, str):
        return [vars_]
    out = []
    for v in vars_:
        if v not in out:
            out.append(v)
    return out


def entropy_of(p: np.ndarray) -> float:
    """Shannon entropy in bits of a probability array (any shape)."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


class JointDistribution:
    """Dense joint law over an ordered list of named finite variables.

    Instances are immutable; marginal entropies are memoized per variable set.
    """

    def __init__(self, variables: Sequence[Alphabet], probs, *, check: bool = True):
        variables = tuple(variables)
        names = [a.name for a in variables]
        if len(set(names)) != len(names):
            raise ArgumentError(f"duplicate variable names in {names}")
        probs = np.array(probs, dtype=float)
        shape = tuple(a.size for a in variables)
        if probs.shape != shape:
            if probs.size != int(np.prod(shape, dtype=np.int64)):
                raise ArgumentError(f"probability tensor of shape {probs.shape} does not fit {shape}")
            probs = probs.reshape(shape)
        if check:
            if np.any(probs < 0) or not np.all(np.isfinite(probs)):
                raise ArgumentError("probabilities must be finite and nonnegative")
            total = probs.sum()
            if abs(total - 1.0) > NORM_TOL:
                raise ArgumentError(f"probabilities sum to {total!r}, not 1")
        probs.setflags(write=False)
        self.variables = variables
        self.probs = probs
        self._index = {n: i for i, n in enumerate(names)}
        self._hcache: dict[frozenset, float] = {}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    def __repr__(self):
        inner = ", ".join(f"{a.name}:{a.size}" for a in self.variables)
        return f"JointDistribution({inner})"

    def alphabet(self, name: str) -> Alphabet:
        return self.variables[self.axis(name)]

    def axis(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariableError(f"unknown variable {name!r}; have {list(self.names)}") from None

    def marginal_array(self, keep: Iterable[str] | str) -> np.ndarray:
        """Marginal tensor with axes in the order given by ``keep``."""
        keep = _names(keep)
        axes = [self.axis(n) for n in keep]
        drop = tuple(i for i in range(self.probs.ndim) if i not in axes)
        m = self.probs.sum(axis=drop) if drop else self.probs
        kept_sorted = sorted(axes)
        return np.transpose(m, [kept_sorted.index(a) for a in axes])

    def marginalize(self, keep: Iterable[str] | str) -> "JointDistribution":
        keep = set(_names(keep))
        for n in keep:
            self.axis(n)
        ordered = [n for n in self.names if n in keep]
        return JointDistribution(
            [self.alphabet(n) for n in ordered], self.marginal_array(ordered), check=False
        )

    def condition(self, assignment: Mapping[str, int]) -> "JointDistribution":
        idx: list = [slice(None)] * self.probs.ndim
        for name, value in assignment.items():
            ax = self.axis(name)
            if not 0 <= int(value) < self.variables[ax].size:
                raise ArgumentError(f"value {value} out of range for {name!r}")
            idx[ax] = int(value)
        sliced = self.probs[tuple(idx)]
        mass = sliced.sum()
        if mass <= 0:
            raise ZeroMassError(f"P({dict(assignment)}) = 0")
        rest = [a for a in self.variables if a.name not in assignment]
        return JointDistribution(rest, sliced / mass, check=False)

    def entropy(self, vars_: Iterable[str] | str) -> float:
        names = _names(vars_)
        key = frozenset(names)
        if not key:
            return 0.0
        if key not in self._hcache:
            self._hcache[key] = entropy_of(self.marginal_array(sorted(key, key=self.axis)))
        return self._hcache[key]

    def mutual_information(self, a, b, given=()) -> float:
        a, b, c = set(_names(a)), set(_names(b)), set(_names(given))
        if a & b or a & c or b & c:
            raise ArgumentError(f"variable sets overlap: {sorted(a)}, {sorted(b)}, {sorted(c)}")
        for n in a | b | c:
            self.axis(n)
        if not a or not b:
            return 0.0
        val = (self.entropy(a | c) + self.entropy(b | c)
               - self.entropy(a | b | c) - self.entropy(c))
        if val < 0:
            if val < -MI_CLAMP_TOL:
                raise FloatingPointError(f"negative mutual information {val!r}")
            val = 0.0
        return val

    def conditional_entropy(self, a, given=()) -> float:
        a, c = set(_names(a)), set(_names(given))
        return self.entropy(a | c) - self.entropy(c)

    def conditional_array(self, target: Sequence[str], given: Sequence[str]) -> np.ndarray:
        """P(target | given) as a tensor of shape given + target.

        Rows for zero-probability parents are uniform.
        """
        target, given = _names(target), _names(given)
        m = self.marginal_array(list(given) + list(target))
        nt = len(target)
        axes = tuple(range(m.ndim - nt, m.ndim))
        norm = m.sum(axis=axes, keepdims=True)
        width = int(np.prod(m.shape[m.ndim - nt:], dtype=np.int64))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(norm > 0, m / np.where(norm > 0, norm, 1.0), 1.0 / width)
        return out


def marginalize(j: JointDistribution, keep) -> JointDistribution:
    return j.marginalize(keep)


def condition(j: JointDistribution, on, value=None) -> JointDistribution:
    """Condition on ``on``; pass a mapping or a name list plus value tuple."""
    if value is None:
        assignment = dict(on)
    else:
        names = _names(on)
        values = [value] if np.isscalar(value) else list(value)
        if len(values) != len(names):
            raise ArgumentError("assignment length does not match variable list")
        assignment = dict(zip(names, values))
    return j.condition(assignment)


def entropy(j: JointDistribution, vars_) -> float:
    return j.entropy(vars_)


def mutual_information(j: JointDistribution, a, b, given=()) -> float:
    return j.mutual_information(a, b, given)


class ConditionalKernel:
    """P(target | given) stored as a tensor of shape given + target."""

    def __init__(self, given: Sequence[Alphabet], target: Sequence[Alphabet], probs):
        self.given = tuple(given)
        self.target = tuple(target)
        shape = tuple(a.size for a in self.given + self.target)
        probs = np.asarray(probs, dtype=float)
        if probs.shape != shape and probs.size == int(np.prod(shape, dtype=np.int64)):
            probs = probs.reshape(shape)
        self.probs = probs

    @property
    def shape(self):
        return tuple(a.size for a in self.given + self.target)

    def violations(self, label: str) -> list[tuple[str, str]]:
        """(code, message) pairs; empty when the kernel is a valid conditional law."""
        if self.probs.shape != self.shape:
            return [("ShapeViolation", f"{label}: shape {self.probs.shape}, expected {self.shape}")]
        out = []
        if not np.all(np.isfinite(self.probs)) or np.any(self.probs < 0):
            out.append(("NegativeProbability", f"{label}: entries must be finite and >= 0"))
        nt = len(self.target)
        sums = self.probs.sum(axis=tuple(range(len(self.given), len(self.given) + nt)))
        bad = np.abs(sums - 1.0) > NORM_TOL
        if np.any(bad):
            first = np.argwhere(np.atleast_1d(bad))[0]
            row = tuple(int(i) for i in first)
            val = float(np.atleast_1d(sums)[tuple(first)]) if sums.ndim else float(sums)
            out.append((
                "NormalizationViolation",
                f"{label}: {int(bad.sum())} row(s) not normalized, e.g. row {row} sums to {val:.12g}",
            ))
        return out
