"""Monte-Carlo simulation of the block-Markov joint message/state scheme.

Each trial draws fresh random codebooks and runs B+4 blocks:

* blocks 1..B+1 carry messages. Every message is split into a part the other
  encoder decodes over the feedback link and a private part. The encoders
  also quantize their observations ``(S_q, Y_q)`` twice, first with ``T_q``
  (bin index ``k``, in-bin index ``l``) and then with ``V_q`` (``j``, ``o``).
  The bin indices ``k, j`` ride on the next block's private codeword.
* blocks B+2 and B+3 carry the last bin indices of encoders 1 and 2.
* block B+4 carries a lossless description of encoder 1's observation in
  block B+3.

The decoder works backward from block B+4 to block 1 and then recovers the
in-bin second descriptions forward. Finally it estimates the state symbol by
symbol with the optimal estimator on all auxiliaries plus ``Z = (Y, S_R)``.

All decoders are exhaustive robust-typicality searches, so only desk-scale
block lengths and rates are practical. Indices are 0-based internally; the
"index 1" fallback for failed decodes is index 0 here.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .channel import AUX_VARS, Z, ChannelSpec, SchemeSpec, build_joint
from .errors import ArgumentError, CapacityError
from .estimation import optimal_estimator
from .prob import JointDistribution

CATEGORIES = ("feedback", "covering", "backward", "forward", "undetected")


@dataclass(frozen=True)
class SimRates:
    """Full rate vector in bits per channel use.

    ``R1p``/``R1pp`` split message 1 into its cooperative and private parts.
    ``Rs1`` is the first-description bin rate and ``Rs1p`` the in-bin rate;
    ``Rt1``/``Rt1p`` are the same for the second description.
    """

    R0: float = 0.0
    R1p: float = 0.0
    R1pp: float = 0.0
    R2p: float = 0.0
    R2pp: float = 0.0
    Rs1: float = 0.0
    Rs1p: float = 0.0
    Rs2: float = 0.0
    Rs2p: float = 0.0
    Rt1: float = 0.0
    Rt1p: float = 0.0
    Rt2: float = 0.0
    Rt2p: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v >= 0 and math.isfinite(v)):
                raise ArgumentError(f"rate {f.name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelSpec
    scheme: SchemeSpec
    rates: SimRates
    n: int
    B: int = 1
    epsilon: float = 0.5
    delta: float = 0.1
    alpha1: float | None = None
    alpha2: float | None = None
    trials: int = 100
    seed: int = 0
    codebook_cap: int = 2 ** 16
    search_cap: int = 2 ** 20
    workers: int = 1

    def __post_init__(self):
        if self.n < 1 or self.B < 1 or self.trials < 1:
            raise ArgumentError("n, B and trials must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ArgumentError("epsilon must lie in (0, 1)")
        if self.delta <= 0:
            raise ArgumentError("delta must be > 0")
        for a in (self.alpha1, self.alpha2):
            if a is not None and a <= 0:
                raise ArgumentError("alpha1, alpha2 must be > 0")


def codebook_size(rate: float, length: int) -> int:
    """ceil(2^(length * rate)), at least 1."""
    return max(1, math.ceil(2.0 ** (length * rate) - 1e-9))


# ---------------------------------------------------------------------------
# typicality

def _flat_probs(law: JointDistribution) -> np.ndarray:
    return np.asarray(law.probs, dtype=float).ravel()


def typical_flat(atoms: np.ndarray, probs: np.ndarray, epsilon: float) -> np.ndarray:
    """Robust typicality of flat atom sequences ``atoms[..., n]``.

    True where every empirical frequency is within ``epsilon * P(a)`` of
    ``P(a)`` and no zero-probability atom occurs. Empty sequences are typical.
    """
    atoms = np.asarray(atoms)
    batch = atoms.shape[:-1]
    n = atoms.shape[-1]
    if n == 0:
        return np.ones(batch, dtype=bool)
    A = probs.size
    flat = atoms.reshape(-1, n)
    rows = flat.shape[0]
    counts = np.bincount((np.arange(rows)[:, None] * A + flat).ravel(),
                         minlength=rows * A).reshape(rows, A)
    freq = counts / n
    ok = np.all(np.abs(freq - probs) <= epsilon * probs + 1e-12, axis=1)
    return ok.reshape(batch)


def typical(sequences: Sequence, law: JointDistribution, epsilon: float):
    """Joint robust typicality of one symbol sequence per law variable.

    Sequences may carry leading batch axes (they broadcast); the result has the
    batch shape.
    """
    seqs = [np.asarray(s) for s in sequences]
    if len(seqs) != len(law.variables):
        raise ArgumentError(f"need {len(law.variables)} sequences, got {len(seqs)}")
    lengths = {s.shape[-1] if s.ndim else 0 for s in seqs}
    if len(lengths) != 1:
        raise ArgumentError(f"sequence lengths differ: {sorted(lengths)}")
    atoms = np.ravel_multi_index(np.broadcast_arrays(*seqs), law.shape)
    out = typical_flat(atoms, _flat_probs(law), epsilon)
    return bool(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sampling helpers

def _sample(rng: np.random.Generator, cond: np.ndarray, parents: Sequence[np.ndarray],
            shape: tuple) -> np.ndarray:
    """Draw from ``cond[parents..., :]`` independently for every cell of ``shape``."""
    cdf = np.cumsum(cond, axis=-1)
    cdf[..., -1] = 1.0
    if parents:
        parents = np.broadcast_arrays(*[np.broadcast_to(p, shape) for p in parents])
        rows = cdf[tuple(parents)]
    else:
        rows = np.broadcast_to(cdf, shape + cdf.shape[-1:])
    u = rng.random(shape)
    return (u[..., None] >= rows).sum(axis=-1).clip(max=cond.shape[-1] - 1)


def _unique_hit(mask: np.ndarray) -> tuple[int | None, bool]:
    """(flat index, ok): ok only when exactly one candidate is typical.

    A search over a single candidate always returns it; declaring failure would
    substitute the same index, so nothing is flagged.
    """
    if mask.size == 1:
        return 0, True
    hits = np.flatnonzero(mask)
    if len(hits) == 1:
        return int(hits[0]), True
    return None, False


def _first_hit(mask: np.ndarray) -> int | None:
    if mask.size == 1:
        return 0
    hits = np.flatnonzero(mask)
    return int(hits[0]) if len(hits) else None


# ---------------------------------------------------------------------------
# per-configuration context

@dataclass
class _Context:
    cfg: SimConfig
    sizes: dict
    laws: dict
    kern: dict
    counts: dict
    lengths: dict
    estimator: object
    typset: np.ndarray
    alpha: tuple


def _sizes(cfg: SimConfig) -> dict:
    s = dict(cfg.channel.sizes)
    s.update({k: v for k, v in cfg.scheme.sizes.items() if k in AUX_VARS})
    return s


def guard_information(joint) -> tuple[float, float]:
    """Information terms that the two special-block lengths are sized against."""
    j = joint.joint if hasattr(joint, "joint") else joint
    g1 = j.mutual_information(("W1", "U1"), Z, ("U", "W2", "U2"))
    g2 = j.mutual_information(("W2", "U2"), Z + ("S1", "Y1"), ("U", "W1", "U1"))
    return g1, g2


def resolve_alphas(cfg: SimConfig, joint) -> tuple[float, float]:
    g1, g2 = guard_information(joint)
    alphas = []
    for given, g, rate, q in ((cfg.alpha1, g1, cfg.rates.Rs1, 1), (cfg.alpha2, g2, cfg.rates.Rs2, 2)):
        if given is not None:
            alphas.append(float(given))
        elif g > 0:
            alphas.append(0.1 * g)
        elif rate > 0:
            raise ArgumentError(
                f"encoder {q}'s special block cannot be sized: its guard information is zero")
        else:
            alphas.append(1.0)
    return alphas[0], alphas[1]


def _law(j: JointDistribution, order) -> JointDistribution:
    return JointDistribution([j.alphabet(v) for v in order], j.marginal_array(order), check=False)


def _build_context(cfg: SimConfig) -> _Context:
    sj = build_joint(cfg.channel, cfg.scheme)
    j = sj.joint
    sizes = _sizes(cfg)
    r = cfg.rates
    n = cfg.n
    a1, a2 = resolve_alphas(cfg, j)

    orders = {
        "fb1": ("U", "W1", "W2", "U1", "S1", "Y1"),
        "fb2": ("U", "W1", "W2", "U2", "S2", "Y2"),
        "cov_t1": ("S1", "Y1", "T1"), "cov_t2": ("S2", "Y2", "T2"),
        "cov_v1": ("S1", "Y1", "V1"), "cov_v2": ("S2", "Y2", "V2"),
        "dec_l": ("Y", "S_R", "T1", "T2"),
        "dec_msg": ("U", "W1", "W2", "U1", "U2", "Y", "S_R", "T1", "T2"),
        "dec_o": ("Y", "S_R", "V1", "V2"),
        "dec_k1": ("U1", "Y", "S_R"),
        "dec_k2": ("S1", "U2", "Y", "S_R"),
        "src": ("S1", "Y1"),
    }
    laws = {key: _law(j, order) for key, order in orders.items()}

    sch, ch = cfg.scheme, cfg.channel
    p_w1u1 = sch.kernel("p_w1", ch).probs[:, :, None] * sch.kernel("p_u1", ch).probs
    p_w2u2 = sch.kernel("p_w2", ch).probs[:, :, None] * sch.kernel("p_u2", ch).probs
    kern = {
        "p_s": ch.p_s,
        "p_s1s2": ch.p_s1s2.reshape(sizes["S"], -1),
        "p_out": ch.p_out.reshape(sizes["X1"], sizes["X2"], sizes["S"], -1),
        "p_u": sch.kernel("p_u", ch).probs,
        "p_w1": sch.kernel("p_w1", ch).probs,
        "p_w2": sch.kernel("p_w2", ch).probs,
        "p_u1": sch.kernel("p_u1", ch).probs,
        "p_u2": sch.kernel("p_u2", ch).probs,
        "p_t1": j.marginal_array(["T1"]),
        "p_t2": j.marginal_array(["T2"]),
        "p_v1": j.conditional_array(["V1"], ["U", "W1", "W2", "U1", "T1"]),
        "p_v2": j.conditional_array(["V2"], ["U", "W1", "W2", "U2", "T2"]),
        "p_w1u1": p_w1u1.reshape(sizes["U"], -1),
        "p_w2u2": p_w2u2.reshape(sizes["U"], -1),
        "f1": sch.f1,
        "f2": sch.f2,
    }

    N = codebook_size
    counts = {
        "N0": N(r.R0, n), "N1p": N(r.R1p, n), "N2p": N(r.R2p, n),
        "N1pp": N(r.R1pp, n), "N2pp": N(r.R2pp, n),
        "K1": N(r.Rs1, n), "K2": N(r.Rs2, n), "L1": N(r.Rs1p, n), "L2": N(r.Rs2p, n),
        "J1": N(r.Rt1, n), "J2": N(r.Rt2, n), "O1": N(r.Rt1p, n), "O2": N(r.Rt2p, n),
    }
    counts["Nc"] = counts["N0"] * counts["N1p"] * counts["N2p"]
    n1 = math.ceil(n * r.Rs1 / a1 - 1e-9) if r.Rs1 > 0 else 0
    n2 = math.ceil(n * r.Rs2 / a2 - 1e-9) if r.Rs2 > 0 else 0
    h_src = j.entropy(("S1", "Y1"))
    n3 = math.ceil(n2 * (h_src + cfg.delta) / a1 - 1e-9) if n2 > 0 else 0
    counts["K3"] = N(h_src + cfg.delta, n2) if n2 > 0 else 1
    lengths = {"n": n, "n1": n1, "n2": n2, "n3": n3}

    _check_caps(cfg, counts, sizes, n2)

    src_atoms = laws["src"].probs.size
    if n2 > 0:
        seqs = np.array(np.unravel_index(np.arange(src_atoms ** n2), (src_atoms,) * n2)).T
        mask = typical_flat(seqs, _flat_probs(laws["src"]), cfg.epsilon)
        typset = np.flatnonzero(mask)
    else:
        typset = np.zeros(1, dtype=np.int64)

    est = optimal_estimator(j, ch, AUX_VARS + Z)
    return _Context(cfg, sizes, laws, kern, counts, lengths, est, typset, (a1, a2))


def _check_caps(cfg, c, sizes, n2):
    cap = cfg.codebook_cap
    books = {
        "u": c["Nc"], "w1": c["Nc"] * c["N1p"], "w2": c["Nc"] * c["N2p"],
        "t1": c["K1"] * c["L1"], "t2": c["K2"] * c["L2"],
        "u1": c["Nc"] * c["N1p"] * c["N1pp"] * c["K1"] * c["J1"],
        "u2": c["Nc"] * c["N2p"] * c["N2pp"] * c["K2"] * c["J2"],
        "v1": c["J1"] * c["O1"], "v2": c["J2"] * c["O2"],
        "k3": c["K3"],
    }
    for name, size in books.items():
        if size > cap:
            raise CapacityError(f"codebook {name} needs {size} codewords, cap is {cap}", size=size)
    search = c["Nc"] * c["N1pp"] * c["K1"] * c["J1"] * c["N2pp"] * c["K2"] * c["J2"]
    for name, size in (("message search", search), ("in-bin search", c["L1"] * c["L2"]),
                       ("refinement search", c["O1"] * c["O2"])):
        if size > cfg.search_cap:
            raise CapacityError(f"{name} has {size} candidates, cap is {cfg.search_cap}", size=size)
    src = (sizes["S1"] * sizes["Y1"]) ** n2
    if n2 > 0 and src > cfg.search_cap:
        raise CapacityError(f"lossless stage enumerates {src} sequences, cap is {cfg.search_cap}",
                            size=src)


# ---------------------------------------------------------------------------
# one trial

@dataclass
class TrialOutcome:
    error: bool
    distortion: float
    events: dict
    category: str | None
    trace: dict | None = None


class _Trial:
    def __init__(self, ctx: _Context, index: int, keep_trace: bool):
        self.ctx = ctx
        self.cfg = ctx.cfg
        self.index = index
        self.rng = np.random.default_rng(np.random.SeedSequence(self.cfg.seed, spawn_key=(index, 0)))
        self.events = {c: 0 for c in CATEGORIES[:-1]}
        self.keep_trace = keep_trace
        self.trace = {"blocks": {}} if keep_trace else None
        self._v_cache: dict = {}

    # -- codebooks -----------------------------------------------------------
    def _codebooks(self):
        ctx, rng, c, n = self.ctx, self.rng, self.ctx.counts, self.cfg.n
        k = ctx.kern
        B = self.cfg.B
        books = {}
        for b in range(1, B + 2):
            u = _sample(rng, k["p_u"], (), (c["Nc"], n))
            w1 = _sample(rng, k["p_w1"], (u[:, None, :],), (c["Nc"], c["N1p"], n))
            w2 = _sample(rng, k["p_w2"], (u[:, None, :],), (c["Nc"], c["N2p"], n))
            t1 = _sample(rng, k["p_t1"], (), (c["K1"], c["L1"], n))
            t2 = _sample(rng, k["p_t2"], (), (c["K2"], c["L2"], n))
            a1 = c["N1pp"] * c["K1"] * c["J1"]
            a2 = c["N2pp"] * c["K2"] * c["J2"]
            u1 = _sample(rng, k["p_u1"], (u[:, None, None, :], w1[:, :, None, :]),
                         (c["Nc"], c["N1p"], a1, n))
            u2 = _sample(rng, k["p_u2"], (u[:, None, None, :], w2[:, :, None, :]),
                         (c["Nc"], c["N2p"], a2, n))
            books[b] = {"u": u, "w1": w1, "w2": w2, "t1": t1, "t2": t2, "u1": u1, "u2": u2}
        return books

    def _special_books(self):
        ctx, rng, c = self.ctx, self.rng, self.ctx.counts
        k, L = ctx.kern, ctx.lengths
        sp = {}
        n1, n2, n3 = L["n1"], L["n2"], L["n3"]
        nu1, nu2 = self.ctx.sizes["U1"], self.ctx.sizes["U2"]
        # block B+2: encoder 2 fixed, encoder 1 indexes k_{1,B+1}
        u = _sample(rng, k["p_u"], (), (n1,))
        w2 = _sample(rng, k["p_w2"], (u,), (n1,))
        u2 = _sample(rng, k["p_u2"], (u, w2), (n1,))
        pair = _sample(rng, k["p_w1u1"], (u[None, :],), (c["K1"], n1))
        sp["B2"] = {"u": u, "w2": w2, "u2": u2, "w1": pair // nu1, "u1": pair % nu1}
        # block B+3: encoder 1 fixed, encoder 2 indexes k_{2,B+1}
        u = _sample(rng, k["p_u"], (), (n2,))
        w1 = _sample(rng, k["p_w1"], (u,), (n2,))
        u1 = _sample(rng, k["p_u1"], (u, w1), (n2,))
        pair = _sample(rng, k["p_w2u2"], (u[None, :],), (c["K2"], n2))
        sp["B3"] = {"u": u, "w1": w1, "u1": u1, "w2": pair // nu2, "u2": pair % nu2}
        # block B+4: encoder 2 fixed, encoder 1 indexes the compressed observation
        u = _sample(rng, k["p_u"], (), (n3,))
        w2 = _sample(rng, k["p_w2"], (u,), (n3,))
        u2 = _sample(rng, k["p_u2"], (u, w2), (n3,))
        pair = _sample(rng, k["p_w1u1"], (u[None, :],), (c["K3"], n3))
        sp["B4"] = {"u": u, "w2": w2, "u2": u2, "w1": pair // nu1, "u1": pair % nu1}
        return sp

    def _v_book(self, b, q, key, cond):
        """Second-description codebook for one conditioning index tuple.

        Drawn from its own seed stream so encoder and decoder regenerate it
        identically from the same indices, in any order.
        """
        full = (b, q) + tuple(int(x) for x in key)
        if full not in self._v_cache:
            c = self.ctx.counts
            ss = np.random.SeedSequence(self.cfg.seed, spawn_key=(self.index, 1) + full)
            rng = np.random.default_rng(ss)
            shape = (c[f"J{q}"], c[f"O{q}"], self.cfg.n)
            self._v_cache[full] = _sample(rng, self.ctx.kern[f"p_v{q}"], cond, shape)
        return self._v_cache[full]

    # -- channel -------------------------------------------------------------
    def _state(self, length):
        k = self.ctx.kern
        s = _sample(self.rng, k["p_s"], (), (length,))
        pair = _sample(self.rng, k["p_s1s2"], (s,), (length,))
        s2n = self.ctx.sizes["S2"]
        return s, pair // s2n, pair % s2n

    def _channel(self, x1, x2, s):
        sz = self.ctx.sizes
        out = _sample(self.rng, self.ctx.kern["p_out"], (x1, x2, s), (len(s),))
        y1, y2, y, sr = np.unravel_index(out, (sz["Y1"], sz["Y2"], sz["Y"], sz["S_R"]))
        return y1, y2, y, sr

    def _flag(self, category):
        self.events[category] += 1

    # -- the scheme ----------------------------------------------------------
    def run(self) -> TrialOutcome:
        cfg, ctx, c = self.cfg, self.ctx, self.ctx.counts
        B, n, eps = cfg.B, cfg.n, cfg.epsilon
        rng = self.rng
        books = self._codebooks()
        sp = self._special_books()
        k_f1, k_f2 = ctx.kern["f1"], ctx.kern["f2"]

        # messages; cooperative parts of block 0 and B+1 are fixed to index 0
        m0 = np.zeros(B + 2, dtype=int)
        mp = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        mpp = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        for b in range(1, B + 2):
            m0[b] = rng.integers(c["N0"])
            for q in (1, 2):
                mpp[q][b] = rng.integers(c[f"N{q}pp"])
                if b <= B:
                    mp[q][b] = rng.integers(c[f"N{q}p"])

        # encoder state: estimate of the other's cooperative message, descriptions
        other = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        kk = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        ll = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        jj = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        oo = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        obs = {}
        truth = {}

        def mc_index(m0b, m1, m2):
            return int(np.ravel_multi_index((m0b, m1, m2), (c["N0"], c["N1p"], c["N2p"])))

        def a_index(q, mppq, kprev, jprev):
            return int(np.ravel_multi_index((mppq, kprev, jprev),
                                            (c[f"N{q}pp"], c[f"K{q}"], c[f"J{q}"])))

        for b in range(1, B + 2):
            bk = books[b]
            s, s1, s2 = self._state(n)
            sq = {1: s1, 2: s2}
            view = {1: mc_index(m0[b], mp[1][b - 1], other[1][b - 1]),
                    2: mc_index(m0[b], other[2][b - 1], mp[2][b - 1])}
            seq = {}
            for q in (1, 2):
                mc = view[q]
                u = bk["u"][mc]
                w = bk[f"w{q}"][mc, mp[q][b]]
                uq = bk[f"u{q}"][mc, mp[q][b], a_index(q, mpp[q][b], kk[q][b - 1], jj[q][b - 1])]
                seq[q] = (u, w, uq)
            x1 = k_f1[seq[1][0], seq[1][1], seq[1][2], s1]
            x2 = k_f2[seq[2][0], seq[2][1], seq[2][2], s2]
            y1, y2, y, sr = self._channel(x1, x2, s)
            yq = {1: y1, 2: y2}

            for q in (1, 2):
                qo = 3 - q
                mc = view[q]
                u, w, uq = seq[q]
                # cooperative message of the other encoder, over the feedback link
                if b <= B:
                    cands = bk[f"w{qo}"][mc]                    # (N_qo', n)
                    w1 = w[None, :] if q == 1 else cands
                    w2 = cands if q == 1 else w[None, :]
                    mask = typical((u, w1, w2, uq, sq[q], yq[q]), ctx.laws[f"fb{q}"], eps)
                    hit, ok = _unique_hit(mask)
                    other[q][b] = hit if ok else 0
                    if not ok or other[q][b] != mp[qo][b]:
                        self._flag("feedback")
                # first description: first (k, l) in lexicographic order
                tb = bk[f"t{q}"]
                mask = typical((sq[q], yq[q], tb), ctx.laws[f"cov_t{q}"], eps)
                hit = _first_hit(mask)
                if hit is None:
                    self._flag("covering")
                    hit = 0
                kk[q][b], ll[q][b] = np.unravel_index(hit, tb.shape[:2])
                # second description (unused after block B)
                if b <= B:
                    wq1 = w if q == 1 else bk["w1"][mc, other[q][b]]
                    wq2 = w if q == 2 else bk["w2"][mc, other[q][b]]
                    m1b = mp[1][b] if q == 1 else other[q][b]
                    m2b = mp[2][b] if q == 2 else other[q][b]
                    key = (mc, m1b, m2b, mpp[q][b], kk[q][b - 1], jj[q][b - 1], kk[q][b], ll[q][b])
                    t = tb[kk[q][b], ll[q][b]]
                    vb = self._v_book(b, q, key, (u, wq1, wq2, uq, t))
                    mask = typical((sq[q], yq[q], vb), ctx.laws[f"cov_v{q}"], eps)
                    hit = _first_hit(mask)
                    if hit is None:
                        self._flag("covering")
                        hit = 0
                    jj[q][b], oo[q][b] = np.unravel_index(hit, vb.shape[:2])
            obs[b] = {"y": y, "sr": sr}
            if b <= B:
                v = {}
                for q in (1, 2):
                    mc = view[q]
                    wq1 = seq[1][1] if q == 1 else bk["w1"][mc, other[q][b]]
                    wq2 = seq[2][1] if q == 2 else bk["w2"][mc, other[q][b]]
                    m1b = mp[1][b] if q == 1 else other[q][b]
                    m2b = mp[2][b] if q == 2 else other[q][b]
                    key = (mc, m1b, m2b, mpp[q][b], kk[q][b - 1], jj[q][b - 1], kk[q][b], ll[q][b])
                    t = bk[f"t{q}"][kk[q][b], ll[q][b]]
                    v[q] = self._v_book(b, q, key, (seq[q][0], wq1, wq2, seq[q][2], t))[jj[q][b], oo[q][b]]
                truth[b] = {
                    "s": s, "u": seq[1][0], "w1": seq[1][1], "w2": seq[2][1],
                    "u1": seq[1][2], "u2": seq[2][2],
                    "t1": bk["t1"][kk[1][b], ll[1][b]], "t2": bk["t2"][kk[2][b], ll[2][b]],
                    "v1": v[1], "v2": v[2], "y": y, "sr": sr,
                }
            if self.keep_trace:
                self.trace["blocks"][b] = {
                    "view": dict(view), "s1": s1, "s2": s2, "x1": x1, "x2": x2,
                    "seq1": seq[1], "seq2": seq[2],
                    "a1": a_index(1, mpp[1][b], kk[1][b - 1], jj[1][b - 1]),
                    "a2": a_index(2, mpp[2][b], kk[2][b - 1], jj[2][b - 1]),
                    "mp1": int(mp[1][b]), "mp2": int(mp[2][b]),
                }

        # special blocks
        L = ctx.lengths
        blk = sp["B2"]
        s, s1, s2 = self._state(L["n1"])
        k1 = kk[1][B + 1]
        x1 = k_f1[blk["u"], blk["w1"][k1], blk["u1"][k1], s1]
        x2 = k_f2[blk["u"], blk["w2"], blk["u2"], s2]
        _, _, y, sr = self._channel(x1, x2, s)
        obs["B2"] = (y, sr)

        blk = sp["B3"]
        s, s1, s2 = self._state(L["n2"])
        k2 = kk[2][B + 1]
        x1 = k_f1[blk["u"], blk["w1"], blk["u1"], s1]
        x2 = k_f2[blk["u"], blk["w2"][k2], blk["u2"][k2], s2]
        y1, _, y, sr = self._channel(x1, x2, s)
        obs["B3"] = (y, sr)
        src = np.ravel_multi_index((s1, y1), (ctx.sizes["S1"], ctx.sizes["Y1"]))
        # lossless description: rank within the typical set
        code = 0
        if L["n2"] > 0:
            seq_id = int(np.ravel_multi_index(src, (ctx.laws["src"].probs.size,) * L["n2"]))
            pos = int(np.searchsorted(ctx.typset, seq_id))
            if pos < len(ctx.typset) and ctx.typset[pos] == seq_id and pos < c["K3"]:
                code = pos
            else:
                self._flag("covering")

        blk = sp["B4"]
        s, s1, s2 = self._state(L["n3"])
        x1 = k_f1[blk["u"], blk["w1"][code], blk["u1"][code], s1]
        x2 = k_f2[blk["u"], blk["w2"], blk["u2"], s2]
        _, _, y, sr = self._channel(x1, x2, s)
        obs["B4"] = (y, sr)

        # ---------------- decoder ----------------
        dec = self._decode(books, sp, obs, B)

        error = bool(
            any(dec["m0"][b] != m0[b] for b in range(1, B + 2))
            or any(dec["mpp"][q][b] != mpp[q][b] for q in (1, 2) for b in range(1, B + 2))
            or any(dec["mp"][q][b] != mp[q][b] for q in (1, 2) for b in range(1, B + 1))
        )

        # state estimates on blocks 1..B
        est = ctx.estimator
        d = self.cfg.channel.distortion
        total = 0.0
        for b in range(1, B + 1):
            om = dec["omega"][b]
            shat = est(om["u"], om["w1"], om["w2"], om["u1"], om["u2"], om["t1"], om["t2"],
                       om["v1"], om["v2"], om["y"], om["sr"])
            tr = truth[b]
            total += float(d[tr["s"], shat].mean())
            if self.keep_trace:
                true_shat = est(tr["u"], tr["w1"], tr["w2"], tr["u1"], tr["u2"], tr["t1"],
                                tr["t2"], tr["v1"], tr["v2"], tr["y"], tr["sr"])
                self.trace["blocks"][b].update(estimate=shat, true_estimate=true_shat,
                                               s=tr["s"])
        distortion = total / B
        if self.keep_trace:
            self.trace.update(books=books, clean=dec["clean"], error=error,
                              events=dict(self.events))

        category = None
        if error or any(self.events.values()):
            category = next((k for k in CATEGORIES[:-1] if self.events[k]), "undetected")
        return TrialOutcome(error, distortion, dict(self.events), category, self.trace)

    def _decode(self, books, sp, obs, B):
        ctx, c, eps = self.ctx, self.ctx.counts, self.cfg.epsilon
        laws = ctx.laws
        clean = True

        def fail():
            nonlocal clean
            clean = False
            self._flag("backward")

        # block B+4: compressed encoder-1 observation of block B+3
        y, sr = obs["B4"]
        mask = typical((sp["B4"]["u1"], y, sr), laws["dec_k1"], eps)
        code, ok = _unique_hit(mask)
        if not ok:
            fail()
            code = 0
        n2 = ctx.lengths["n2"]
        if n2 > 0:
            seq_id = int(ctx.typset[code]) if code < len(ctx.typset) else 0
            src = np.array(np.unravel_index(seq_id, (laws["src"].probs.size,) * n2))
        else:
            src = np.zeros(0, dtype=int)
        s1_hat, y1_hat = np.unravel_index(src, (ctx.sizes["S1"], ctx.sizes["Y1"]))

        # block B+3: last bin index of encoder 2
        y, sr = obs["B3"]
        mask = typical((s1_hat, sp["B3"]["u2"], y, sr), laws["dec_k2"], eps)
        k2, ok = _unique_hit(mask)
        if not ok:
            fail()
            k2 = 0
        # block B+2: last bin index of encoder 1
        y, sr = obs["B2"]
        mask = typical((sp["B2"]["u1"], y, sr), laws["dec_k1"], eps)
        k1, ok = _unique_hit(mask)
        if not ok:
            fail()
            k1 = 0
        del y1_hat

        m0 = np.zeros(B + 2, dtype=int)
        mp = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        mpp = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        kk = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        ll = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        jj = {q: np.zeros(B + 2, dtype=int) for q in (1, 2)}
        kk[1][B + 1], kk[2][B + 1] = k1, k2
        shape1 = (c["N1pp"], c["K1"], c["J1"])
        shape2 = (c["N2pp"], c["K2"], c["J2"])
        msg_law = laws["dec_msg"]
        msg_probs = _flat_probs(msg_law)

        for b in range(B + 1, 0, -1):
            bk = books[b]
            y, sr = obs[b]["y"], obs[b]["sr"]
            # in-bin indices of both first descriptions
            t1c = bk["t1"][kk[1][b]]                               # (L1, n)
            t2c = bk["t2"][kk[2][b]]                               # (L2, n)
            mask = typical((y, sr, t1c[:, None, :], t2c[None, :, :]), laws["dec_l"], eps)
            hit, ok = _unique_hit(mask)
            if not ok:
                fail()
                hit = 0
            ll[1][b], ll[2][b] = np.unravel_index(hit, mask.shape)
            t1 = t1c[ll[1][b]]
            t2 = t2c[ll[2][b]]

            # everything carried by the block, jointly
            if b == 1:
                mcs = np.array([mc for mc in range(c["Nc"])
                                if np.unravel_index(mc, (c["N0"], c["N1p"], c["N2p"]))[1:] == (0, 0)])
                a1s = np.ravel_multi_index((np.arange(c["N1pp"]), 0, 0), shape1)
                a2s = np.ravel_multi_index((np.arange(c["N2pp"]), 0, 0), shape2)
            else:
                mcs = np.arange(c["Nc"])
                a1s = np.arange(int(np.prod(shape1)))
                a2s = np.arange(int(np.prod(shape2)))
            found = []
            for mc in mcs:
                u = bk["u"][mc]
                w1 = bk["w1"][mc, mp[1][b]]
                w2 = bk["w2"][mc, mp[2][b]]
                u1 = bk["u1"][mc, mp[1][b]][a1s]                   # (A1, n)
                u2 = bk["u2"][mc, mp[2][b]][a2s]                   # (A2, n)
                atoms = np.ravel_multi_index(np.broadcast_arrays(
                    u, w1, w2, u1[:, None, :], u2[None, :, :], y, sr, t1, t2), msg_law.shape)
                mask = typical_flat(atoms, msg_probs, eps)
                for i1, i2 in np.argwhere(mask):
                    found.append((int(mc), int(a1s[i1]), int(a2s[i2])))
                    if len(found) > 1:
                        break
                if len(found) > 1:
                    break
            if len(found) == 1:
                mc, a1, a2 = found[0]
            else:
                fail()
                mc, a1, a2 = 0, 0, 0
            m0[b], mp[1][b - 1], mp[2][b - 1] = np.unravel_index(mc, (c["N0"], c["N1p"], c["N2p"]))
            mpp[1][b], kk[1][b - 1], jj[1][b - 1] = np.unravel_index(a1, shape1)
            mpp[2][b], kk[2][b - 1], jj[2][b - 1] = np.unravel_index(a2, shape2)
            obs[b]["mc"] = mc
            obs[b]["a"] = (a1, a2)

        # second descriptions, forward
        omega = {}
        for b in range(1, B + 1):
            bk = books[b]
            y, sr = obs[b]["y"], obs[b]["sr"]
            mc = obs[b]["mc"]
            a1, a2 = obs[b]["a"]
            u = bk["u"][mc]
            w1 = bk["w1"][mc, mp[1][b]]
            w2 = bk["w2"][mc, mp[2][b]]
            u1 = bk["u1"][mc, mp[1][b], a1]
            u2 = bk["u2"][mc, mp[2][b], a2]
            t1 = bk["t1"][kk[1][b], ll[1][b]]
            t2 = bk["t2"][kk[2][b], ll[2][b]]
            key1 = (mc, mp[1][b], mp[2][b], mpp[1][b], kk[1][b - 1], jj[1][b - 1], kk[1][b], ll[1][b])
            key2 = (mc, mp[1][b], mp[2][b], mpp[2][b], kk[2][b - 1], jj[2][b - 1], kk[2][b], ll[2][b])
            v1c = self._v_book(b, 1, key1, (u, w1, w2, u1, t1))[jj[1][b]]   # (O1, n)
            v2c = self._v_book(b, 2, key2, (u, w1, w2, u2, t2))[jj[2][b]]   # (O2, n)
            mask = typical((y, sr, v1c[:, None, :], v2c[None, :, :]), laws["dec_o"], eps)
            hit, ok = _unique_hit(mask)
            if not ok:
                clean = False
                self._flag("forward")
                hit = 0
            o1, o2 = np.unravel_index(hit, mask.shape)
            omega[b] = {"u": u, "w1": w1, "w2": w2, "u1": u1, "u2": u2, "t1": t1, "t2": t2,
                        "v1": v1c[o1], "v2": v2c[o2], "y": y, "sr": sr}
        return {"m0": m0, "mp": mp, "mpp": mpp, "omega": omega, "clean": clean}


def _run_chunk(args):
    cfg, indices, keep_trace = args
    ctx = _build_context(cfg)
    return [_Trial(ctx, i, keep_trace).run() for i in indices]


# ---------------------------------------------------------------------------
# aggregation

@dataclass
class SimReport:
    n: int
    trials: int
    errors: np.ndarray
    distortions: np.ndarray
    error_rate: float
    ci_low: float
    ci_high: float
    mean_distortion: float
    stderr: float
    taxonomy: dict
    event_counts: dict
    lengths: dict = field(default_factory=dict)
    traces: list | None = None

    def row(self) -> dict:
        return {"n": self.n, "trials": self.trials, "error_rate": self.error_rate,
                "ci_low": self.ci_low, "ci_high": self.ci_high,
                "mean_distortion": self.mean_distortion, "stderr": self.stderr}

    def summary(self) -> dict:
        out = self.row()
        out.update(taxonomy=self.taxonomy, event_counts=self.event_counts, lengths=self.lengths)
        return out


def _aggregate(cfg: SimConfig, ctx_lengths: dict, outcomes: list[TrialOutcome],
               keep_trace: bool) -> SimReport:
    errors = np.array([o.error for o in outcomes], dtype=bool)
    dist = np.array([o.distortion for o in outcomes], dtype=float)
    k, t = int(errors.sum()), len(outcomes)
    ci = binomtest(k, t).proportion_ci(confidence_level=0.95, method="wilson")
    taxonomy = {c: 0 for c in CATEGORIES}
    events = {c: 0 for c in CATEGORIES[:-1]}
    for o in outcomes:
        if o.category:
            taxonomy[o.category] += 1
        for key, v in o.events.items():
            events[key] += v
    se = float(dist.std(ddof=1) / math.sqrt(t)) if t > 1 else 0.0
    return SimReport(
        n=cfg.n, trials=t, errors=errors, distortions=dist, error_rate=k / t,
        ci_low=float(ci.low), ci_high=float(ci.high), mean_distortion=float(dist.mean()),
        stderr=se, taxonomy=taxonomy, event_counts=events, lengths=dict(ctx_lengths),
        traces=[o.trace for o in outcomes] if keep_trace else None,
    )


def preflight(config: SimConfig) -> dict:
    """Check caps and size the special blocks without running a trial."""
    return dict(_build_context(config).lengths)


def run(config: SimConfig, *, keep_trace: bool = False) -> SimReport:
    ctx = _build_context(config)  # raises CapacityError before any trial
    indices = list(range(config.trials))
    if config.workers > 1:
        chunks = [indices[i::config.workers] for i in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, ch, keep_trace) for ch in chunks]))
        by_index = {}
        for ch, res in zip(chunks, parts):
            by_index.update(zip(ch, res))
        outcomes = [by_index[i] for i in indices]
    else:
        outcomes = [_Trial(ctx, i, keep_trace).run() for i in indices]
    return _aggregate(config, ctx.lengths, outcomes, keep_trace)


def sweep(config: SimConfig, n_values: Sequence[int]) -> list[SimReport]:
    return [run(replace(config, n=int(n))) for n in n_values]


SWEEP_COLUMNS = ("n", "trials", "error_rate", "ci_low", "ci_high", "mean_distortion", "stderr")


def sweep_csv(reports: Sequence[SimReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in reports:
        row = r.row()
        w.writerow([row["n"], row["trials"]] + [repr(float(row[c])) for c in SWEEP_COLUMNS[2:]])
    return buf.getvalue()


def report_json(reports: Sequence[SimReport]) -> str:
    return json.dumps([r.summary() for r in reports], indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# rate bookkeeping

@dataclass(frozen=True)
class RateCheck:
    name: str
    lhs: float
    rhs: float
    sense: str          # "<": lhs must stay below rhs; ">": lhs must exceed rhs
    slack: float

    @property
    def satisfied(self) -> bool:
        # a zero rate means a single codeword, which needs no strict margin
        return self.slack > 0 or (self.lhs == 0 and self.slack >= 0)


@dataclass
class FeasibilityReport:
    checks: list[RateCheck]
    guards: list[RateCheck]
    alpha: tuple[float, float]

    @property
    def feasible(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def by_name(self) -> dict[str, RateCheck]:
        return {c.name: c for c in self.checks + self.guards}


def rate_feasibility_report(config: SimConfig) -> FeasibilityReport:
    """Slack of every packing/covering/binning condition the scheme relies on."""
    j = build_joint(config.channel, config.scheme).joint
    I = j.mutual_information
    r = config.rates
    TZ = ("T1", "T2") + Z
    base = ("U", "W1", "W2", "U1", "U2", "T1", "T2")
    checks = []

    def below(name, lhs, rhs):
        checks.append(RateCheck(name, lhs, rhs, "<", rhs - lhs))

    def above(name, lhs, rhs):
        checks.append(RateCheck(name, lhs, rhs, ">", lhs - rhs))

    below("feedback_packing_1", r.R1p, I("W1", ("Y2", "S2"), ("U", "W2", "U2")))
    below("feedback_packing_2", r.R2p, I("W2", ("Y1", "S1"), ("U", "W1", "U1")))
    above("first_covering_1", r.Rs1 + r.Rs1p, I("T1", ("S1", "Y1")))
    above("first_covering_2", r.Rs2 + r.Rs2p, I("T2", ("S2", "Y2")))
    above("second_covering_1", r.Rt1 + r.Rt1p, I("V1", ("S1", "Y1"), ("U", "W1", "W2", "U1", "T1")))
    above("second_covering_2", r.Rt2 + r.Rt2p, I("V2", ("S2", "Y2"), ("U", "W1", "W2", "U2", "T2")))
    below("common_packing", r.R0 + r.R1p + r.R2p, I("U", TZ))
    below("cooperative_packing_1", r.R1p, I("W1", TZ, ("U", "W2")))
    below("cooperative_packing_2", r.R2p, I("W2", TZ, ("U", "W1")))
    below("cooperative_packing_sum", r.R1p + r.R2p, I(("W1", "W2"), TZ, ("U",)))
    below("private_packing_1", r.R1pp + r.Rs1 + r.Rt1, I("U1", TZ, ("U", "W1", "W2", "U2")))
    below("private_packing_2", r.R2pp + r.Rs2 + r.Rt2, I("U2", TZ, ("U", "W1", "W2", "U1")))
    below("private_packing_sum", r.R1pp + r.Rs1 + r.Rt1 + r.R2pp + r.Rs2 + r.Rt2,
          I(("U1", "U2"), TZ, ("U", "W1", "W2")))
    a, bb = I("T1", ("T2",) + Z), I("T2", ("T1",) + Z)
    below("binning_1", r.Rs1p, a)
    below("binning_2", r.Rs2p, bb)
    below("binning_sum", r.Rs1p + r.Rs2p, a + bb - I("T1", "T2", Z))
    a = I("V1", ("V2",) + Z, base)
    bb = I("V2", ("V1",) + Z, base)
    below("refinement_binning_1", r.Rt1p, a)
    below("refinement_binning_2", r.Rt2p, bb)
    below("refinement_binning_sum", r.Rt1p + r.Rt2p, a + bb - I("V1", "V2", base + Z))

    g1, g2 = guard_information(j)
    a1, a2 = resolve_alphas(config, j) if (r.Rs1 == 0 or g1 > 0 or config.alpha1) and \
        (r.Rs2 == 0 or g2 > 0 or config.alpha2) else (config.alpha1 or 0.0, config.alpha2 or 0.0)
    guards = [RateCheck("guard_alpha1", a1, g1, "<", g1 - a1),
              RateCheck("guard_alpha2", a2, g2, "<", g2 - a2)]
    return FeasibilityReport(checks, guards, (a1, a2))
