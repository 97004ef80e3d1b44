"""Channel and scheme specifications and the joint law they induce.

A :class:`ChannelSpec` describes the state-dependent MAC with generalized
feedback: state law, encoder side information, the output kernel for
``(Y1, Y2, Y, S_R)`` and the distortion table. The decoder output ``Z`` is
never a variable of its own; it is always the pair ``(Y, S_R)``.

A :class:`SchemeSpec` fixes the auxiliary variables, their kernels and the two
encoder lookup tables. :func:`build_joint` multiplies everything into one
dense tensor over the 18 system variables.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ArgumentError, CapacityError, ValidationError
from .prob import Alphabet, ConditionalKernel, JointDistribution

CHANNEL_VARS = ("S", "S1", "S2", "X1", "X2", "Y1", "Y2", "Y", "S_R", "S_hat")
AUX_VARS = ("U", "W1", "W2", "U1", "U2", "T1", "T2", "V1", "V2")
JOINT_ORDER = ("S", "S1", "S2", "U", "W1", "W2", "U1", "U2", "X1", "X2",
               "Y", "S_R", "Y1", "Y2", "T1", "T2", "V1", "V2")
Z = ("Y", "S_R")
OMEGA = AUX_VARS

# (given, target) for every kernel, in tensor axis order
CHANNEL_KERNELS = {
    "p_s": ((), ("S",)),
    "p_s1s2": (("S",), ("S1", "S2")),
    "p_out": (("X1", "X2", "S"), ("Y1", "Y2", "Y", "S_R")),
}
SCHEME_KERNELS = {
    "p_u": ((), ("U",)),
    "p_w1": (("U",), ("W1",)),
    "p_w2": (("U",), ("W2",)),
    "p_u1": (("U", "W1"), ("U1",)),
    "p_u2": (("U", "W2"), ("U2",)),
    "p_t1": (("S1", "Y1"), ("T1",)),
    "p_t2": (("S2", "Y2"), ("T2",)),
    "p_v1": (("S1", "U", "W1", "W2", "U1", "Y1", "T1"), ("V1",)),
    "p_v2": (("S2", "U", "W1", "W2", "U2", "Y2", "T2"), ("V2",)),
}
ENCODER_ARGS = {
    "f1": ("U", "W1", "U1", "S1"),
    "f2": ("U", "W2", "U2", "S2"),
}
ENCODER_OUTPUT = {"f1": "X1", "f2": "X2"}
ENCODER_STATE = {"f1": "S1", "f2": "S2"}

DEFAULT_CAP = 2 ** 27
MODES = ("causal", "strictly_causal")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ChannelSpec:
    """The state-dependent MAC. Kernel axes follow ``CHANNEL_KERNELS``."""

    sizes: Mapping[str, int]
    p_s: np.ndarray
    p_s1s2: np.ndarray
    p_out: np.ndarray
    distortion: np.ndarray
    labels: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        sizes = {k: int(v) for k, v in self.sizes.items()}
        object.__setattr__(self, "sizes", sizes)
        for name in ("p_s", "p_s1s2", "p_out", "distortion"):
            arr = np.array(getattr(self, name), dtype=float)
            shape = self._shape(name, sizes)
            if shape is not None and arr.shape != shape and arr.size == int(np.prod(shape)):
                arr = arr.reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @staticmethod
    def _shape(name, sizes):
        try:
            if name == "distortion":
                return (sizes["S"], sizes["S_hat"])
            given, target = CHANNEL_KERNELS[name]
            return tuple(sizes[v] for v in given + target)
        except KeyError:
            return None

    def alphabet(self, name: str) -> Alphabet:
        return Alphabet(name, self.sizes[name], self.labels.get(name))

    def kernel(self, name: str) -> ConditionalKernel:
        given, target = CHANNEL_KERNELS[name]
        return ConditionalKernel([self.alphabet(v) for v in given],
                                 [self.alphabet(v) for v in target], getattr(self, name))


@dataclass(frozen=True)
class SchemeSpec:
    """One candidate auxiliary structure with deterministic encoder maps.

    ``f1[u, w1, u1, s1]`` and ``f2[u, w2, u2, s2]`` are integer lookup tables.
    """

    sizes: Mapping[str, int]
    p_u: np.ndarray
    p_w1: np.ndarray
    p_w2: np.ndarray
    p_u1: np.ndarray
    p_u2: np.ndarray
    p_t1: np.ndarray
    p_t2: np.ndarray
    p_v1: np.ndarray
    p_v2: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    mode: str = "causal"

    def __post_init__(self):
        object.__setattr__(self, "sizes", {k: int(v) for k, v in self.sizes.items()})
        for name in SCHEME_KERNELS:
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("f1", "f2"):
            raw = np.array(getattr(self, name))
            as_float = raw.astype(float)
            if np.all(np.isfinite(as_float)) and np.all(as_float == np.round(as_float)):
                raw = as_float.astype(np.int64)
            raw.setflags(write=False)
            object.__setattr__(self, name, raw)

    def kernel(self, name: str, channel: ChannelSpec) -> ConditionalKernel:
        given, target = SCHEME_KERNELS[name]
        alph = lambda v: Alphabet(v, self.sizes[v]) if v in AUX_VARS else channel.alphabet(v)
        return ConditionalKernel([alph(v) for v in given], [alph(v) for v in target],
                                 getattr(self, name))

    def with_mode(self, mode: str) -> "SchemeSpec":
        return replace(self, mode=mode)

    def digest(self) -> str:
        """Short content hash (sizes, kernels, maps, mode)."""
        h = hashlib.sha256()
        h.update(repr(sorted(self.sizes.items())).encode())
        h.update(self.mode.encode())
        for name in list(SCHEME_KERNELS) + ["f1", "f2"]:
            arr = np.ascontiguousarray(getattr(self, name))
            h.update(name.encode())
            h.update(repr(arr.shape).encode())
            h.update(arr.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class SystemJoint:
    """Joint law of all system variables together with the specs that built it."""

    joint: JointDistribution
    channel: ChannelSpec
    scheme: SchemeSpec

    def __getattr__(self, item):
        # delegate information measures to the underlying distribution
        if item.startswith("_") or item in ("joint", "channel", "scheme"):
            raise AttributeError(item)
        return getattr(self.joint, item)


def _all_sizes(channel: ChannelSpec, scheme: SchemeSpec) -> dict[str, int]:
    sizes = dict(channel.sizes)
    sizes.update({k: v for k, v in scheme.sizes.items() if k in AUX_VARS})
    return sizes


def validate(channel: ChannelSpec, scheme: SchemeSpec) -> list[Violation]:
    """Every structural problem of the pair; empty when the pair is usable."""
    out: list[Violation] = []
    missing = [v for v in CHANNEL_VARS if v not in channel.sizes]
    missing += [v for v in AUX_VARS if v not in scheme.sizes]
    if missing:
        return [Violation("AlphabetMissing", f"no alphabet declared for {missing}")]
    sizes = _all_sizes(channel, scheme)
    bad = [k for k, v in sizes.items() if v < 1]
    if bad:
        return [Violation("AlphabetSize", f"alphabet sizes must be >= 1: {bad}")]

    for name in CHANNEL_KERNELS:
        out += [Violation(c, m) for c, m in channel.kernel(name).violations(name)]
    for name in SCHEME_KERNELS:
        out += [Violation(c, m) for c, m in scheme.kernel(name, channel).violations(name)]

    d = channel.distortion
    if d.shape != (sizes["S"], sizes["S_hat"]):
        out.append(Violation("ShapeViolation",
                             f"distortion: shape {d.shape}, expected {(sizes['S'], sizes['S_hat'])}"))
    elif not np.all(np.isfinite(d)) or np.any(d < 0):
        out.append(Violation("DistortionViolation", "distortion entries must be finite and >= 0"))

    if scheme.mode not in MODES:
        out.append(Violation("ModeViolation", f"mode must be one of {MODES}, got {scheme.mode!r}"))
    for fname, args in ENCODER_ARGS.items():
        table = getattr(scheme, fname)
        shape = tuple(sizes[a] for a in args)
        xs = sizes[ENCODER_OUTPUT[fname]]
        if table.shape != shape:
            out.append(Violation("ShapeViolation", f"{fname}: shape {table.shape}, expected {shape}"))
            continue
        if table.dtype.kind != "i" or np.any(table < 0) or np.any(table >= xs):
            out.append(Violation(
                "EncoderRangeViolation",
                f"{fname} must map into {ENCODER_OUTPUT[fname]} indices 0..{xs - 1}",
            ))
            continue
        if scheme.mode == "strictly_causal":
            s_axis = args.index(ENCODER_STATE[fname])
            ref = np.take(table, [0], axis=s_axis)
            if not np.all(table == ref):
                out.append(Violation(
                    "CausalityViolation",
                    f"{fname} depends on {ENCODER_STATE[fname]} under strictly causal side information",
                ))
    return out


def _indicator(table: np.ndarray, out_size: int) -> np.ndarray:
    return (table[..., None] == np.arange(out_size)).astype(float)


def _factors(channel: ChannelSpec, scheme: SchemeSpec):
    sizes = _all_sizes(channel, scheme)
    for name, (given, target) in CHANNEL_KERNELS.items():
        yield given + target, getattr(channel, name)
    for name, (given, target) in SCHEME_KERNELS.items():
        yield given + target, scheme.kernel(name, channel).probs
    for fname, args in ENCODER_ARGS.items():
        out = ENCODER_OUTPUT[fname]
        yield args + (out,), _indicator(getattr(scheme, fname), sizes[out])


def product_of_factors(factors, order: Sequence[str], sizes: Mapping[str, int]) -> np.ndarray:
    """Multiply named factor tensors into one tensor with axes ``order``."""
    shape = tuple(sizes[v] for v in order)
    result = np.ones(shape)
    for names, arr in factors:
        arr = np.asarray(arr, dtype=float)
        perm = sorted(range(len(names)), key=lambda i: order.index(names[i]))
        arr = np.transpose(arr, perm)
        present = [names[i] for i in perm]
        bshape = [sizes[v] if v in present else 1 for v in order]
        result *= arr.reshape(bshape)
    return result


def build_joint(channel: ChannelSpec, scheme: SchemeSpec, cap: int = DEFAULT_CAP) -> SystemJoint:
    violations = validate(channel, scheme)
    if violations:
        raise ValidationError(violations)
    sizes = _all_sizes(channel, scheme)
    total = int(np.prod([sizes[v] for v in JOINT_ORDER], dtype=object))
    if total > cap:
        raise CapacityError(f"joint tensor needs {total} entries, cap is {cap}", size=total)
    probs = product_of_factors(_factors(channel, scheme), JOINT_ORDER, sizes)
    variables = [channel.alphabet(v) if v in channel.sizes and v not in AUX_VARS
                 else Alphabet(v, sizes[v]) for v in JOINT_ORDER]
    return SystemJoint(JointDistribution(variables, probs), channel, scheme)


def _as_joint(joint) -> JointDistribution:
    return joint.joint if isinstance(joint, SystemJoint) else joint


def distortion_of(channel: ChannelSpec, estimator, joint, conditioning: Sequence[str]) -> float:
    """Expected distortion of a deterministic estimator table.

    ``estimator`` is an integer array indexed by the conditioning variables
    (in the given order) holding S_hat symbols.
    """
    j = _as_joint(joint)
    conditioning = list(conditioning)
    if "S" in conditioning:
        raise ArgumentError("conditioning set must not contain S")
    table = np.asarray(estimator)
    shape = tuple(j.alphabet(v).size for v in conditioning)
    if table.shape != shape:
        raise ArgumentError(f"estimator table has shape {table.shape}, expected {shape}")
    if np.any(table < 0) or np.any(table >= channel.sizes["S_hat"]):
        raise ArgumentError("estimator table holds invalid S_hat symbols")
    p = j.marginal_array(["S"] + conditioning)
    # d(s, table[w]) broadcast over s and every conditioning cell
    cost = channel.distortion[:, table]
    return float((p * cost).sum())


def simple_scheme(channel: ChannelSpec, sizes: Mapping[str, int] | None = None, *,
                  p_u1=None, p_u2=None, f1=None, f2=None, mode: str = "causal",
                  **kernels) -> SchemeSpec:
    """Scheme with uniform kernels unless overridden; handy for tests and scripts.

    Default encoders send ``U1`` (resp. ``U2``) reduced modulo the input size.
    """
    s = {v: 1 for v in AUX_VARS}
    if sizes:
        s.update(sizes)
    allsz = dict(channel.sizes)
    allsz.update(s)

    def uniform(name):
        given, target = SCHEME_KERNELS[name]
        shape = tuple(allsz[v] for v in given + target)
        width = int(np.prod([allsz[v] for v in target]))
        return np.full(shape, 1.0 / width)

    ks = {name: uniform(name) for name in SCHEME_KERNELS}
    if p_u1 is not None:
        ks["p_u1"] = np.broadcast_to(np.asarray(p_u1, float), ks["p_u1"].shape).copy()
    if p_u2 is not None:
        ks["p_u2"] = np.broadcast_to(np.asarray(p_u2, float), ks["p_u2"].shape).copy()
    for k, v in kernels.items():
        if k not in SCHEME_KERNELS:
            raise ArgumentError(f"unknown kernel {k!r}")
        ks[k] = np.asarray(v, float)
    if f1 is None:
        shape = tuple(allsz[a] for a in ENCODER_ARGS["f1"])
        f1 = np.broadcast_to((np.arange(allsz["U1"]) % allsz["X1"])[None, None, :, None], shape)
    if f2 is None:
        shape = tuple(allsz[a] for a in ENCODER_ARGS["f2"])
        f2 = np.broadcast_to((np.arange(allsz["U2"]) % allsz["X2"])[None, None, :, None], shape)
    return SchemeSpec(sizes=s, f1=np.array(f1), f2=np.array(f2), mode=mode, **ks)
