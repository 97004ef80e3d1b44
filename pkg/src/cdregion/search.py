"""Search over schemes at fixed auxiliary cardinalities.

Each kernel row is parameterized by real logits pushed through a softmax, and
the encoder maps are integer tables. A candidate scheme is feasible when the
optimal estimator on all auxiliaries plus ``Z`` meets the distortion cap; its
value is the best weighted sum rate over the vertices of its region polytope.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channel import (AUX_VARS, ENCODER_ARGS, ENCODER_OUTPUT, SCHEME_KERNELS, Z, ChannelSpec,
                      SchemeSpec, build_joint, validate)
from .errors import ArgumentError, EmptyResult
from .estimation import Estimator, optimal_estimator
from .region import RateTriple, eliminate, evaluate_bounds

STRATEGIES = ("random_restart", "coordinate_ascent", "exhaustive_deterministic")
FEAS_TOL = 1e-12
_FLOOR = -30.0          # logit used in place of -inf before a line move


@dataclass(frozen=True)
class SearchConfig:
    cardinalities: Mapping[str, int] = field(default_factory=dict)
    weights: tuple[float, float, float] = (0.0, 1.0, 0.0)
    distortion_cap: float = math.inf
    strategy: str = "coordinate_ascent"
    budget: int = 200
    seed: int = 0
    mode: str = "causal"
    workers: int = 1

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if len(w) != 3 or min(w) < 0 or max(w) == 0:
            raise ArgumentError("weights must be three nonnegative numbers, not all zero")
        object.__setattr__(self, "weights", w)
        if not self.distortion_cap >= 0:
            raise ArgumentError("distortion cap must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ArgumentError(f"strategy must be one of {STRATEGIES}")
        if int(self.budget) < 1:
            raise ArgumentError("budget must be >= 1")
        bad = set(self.cardinalities) - set(AUX_VARS)
        if bad:
            raise ArgumentError(f"cardinalities for unknown auxiliaries {sorted(bad)}")
        if any(int(v) < 1 for v in self.cardinalities.values()):
            raise ArgumentError("cardinalities must be >= 1")
        object.__setattr__(self, "cardinalities",
                           {k: int(v) for k, v in self.cardinalities.items()})


def resolve_sizes(channel: ChannelSpec, config: SearchConfig) -> dict[str, int]:
    """Auxiliary cardinalities: 2 unless configured."""
    s = {v: 2 for v in AUX_VARS}
    s.update(config.cardinalities)
    return s


# ---------------------------------------------------------------------------
# parameterization

@dataclass
class Params:
    logits: dict          # kernel name -> (rows, width)
    f1: np.ndarray
    f2: np.ndarray

    def copy(self) -> "Params":
        return Params({k: v.copy() for k, v in self.logits.items()}, self.f1.copy(), self.f2.copy())


class _Space:
    """Shapes of every searchable piece for one channel and cardinality choice."""

    def __init__(self, channel: ChannelSpec, sizes: Mapping[str, int], mode: str):
        self.channel = channel
        self.sizes = dict(sizes)
        self.mode = mode
        allsz = dict(channel.sizes)
        allsz.update(sizes)
        self.allsz = allsz
        self.kshape = {}
        for name, (given, target) in SCHEME_KERNELS.items():
            full = tuple(allsz[v] for v in given + target)
            rows = int(np.prod([allsz[v] for v in given], dtype=np.int64))
            width = int(np.prod([allsz[v] for v in target], dtype=np.int64))
            self.kshape[name] = (full, rows, width)
        self.fshape = {f: tuple(allsz[a] for a in args) for f, args in ENCODER_ARGS.items()}
        self.fout = {f: allsz[ENCODER_OUTPUT[f]] for f in ENCODER_ARGS}

    def f_cells(self, f):
        """Free cells of an encoder table; strictly causal maps ignore their state axis."""
        shape = self.fshape[f]
        if self.mode == "strictly_causal":
            shape = shape[:-1]
        return int(np.prod(shape, dtype=np.int64))

    def f_table(self, f, free: np.ndarray) -> np.ndarray:
        shape = self.fshape[f]
        if self.mode == "strictly_causal":
            t = free.reshape(shape[:-1])
            return np.broadcast_to(t[..., None], shape).copy()
        return free.reshape(shape)

    def f_free(self, f, table: np.ndarray) -> np.ndarray:
        return (table[..., 0] if self.mode == "strictly_causal" else table).ravel().copy()

    def random(self, rng: np.random.Generator) -> Params:
        logits = {k: rng.normal(size=(rows, w)) for k, (_, rows, w) in self.kshape.items()}
        fs = {f: self.f_table(f, rng.integers(0, self.fout[f], size=self.f_cells(f)))
              for f in ENCODER_ARGS}
        return Params(logits, fs["f1"], fs["f2"])

    def scheme(self, p: Params) -> SchemeSpec:
        ks = {}
        for k, (full, _, _) in self.kshape.items():
            z = p.logits[k] - p.logits[k].max(axis=1, keepdims=True)
            e = np.exp(z)
            ks[k] = (e / e.sum(axis=1, keepdims=True)).reshape(full)
        return SchemeSpec(sizes=self.sizes, f1=p.f1, f2=p.f2, mode=self.mode, **ks)


def _one_hot_logits(width: int, k: int) -> np.ndarray:
    row = np.full(width, -np.inf)
    row[k] = 0.0
    return row


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class Evaluation:
    scheme: SchemeSpec
    distortion: float
    feasible: bool
    objective: float
    rate: RateTriple | None

    @property
    def score(self) -> float:
        """Single number for comparisons: feasible points always beat infeasible ones."""
        if self.feasible:
            return self.objective
        return -1e6 - self.distortion


def evaluate_scheme(channel: ChannelSpec, scheme: SchemeSpec, weights, cap: float) -> Evaluation:
    j = build_joint(channel, scheme)
    dist = optimal_estimator(j, channel, AUX_VARS + Z).expected_distortion
    if dist > cap + FEAS_TOL:
        return Evaluation(scheme, dist, False, -math.inf, None)
    poly = eliminate(evaluate_bounds(j))
    if poly.empty:
        return Evaluation(scheme, dist, False, -math.inf, None)
    val, vertex = poly.maximize(weights)
    return Evaluation(scheme, dist, True, val, RateTriple(*[float(x) for x in vertex]))


class _Tracker:
    def __init__(self, channel, space, config):
        self.channel, self.space, self.config = channel, space, config
        self.evals = 0
        self.best: Evaluation | None = None       # best feasible
        self.closest: Evaluation | None = None    # lowest distortion seen

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.config.budget

    def __call__(self, params: Params) -> float:
        ev = evaluate_scheme(self.channel, self.space.scheme(params),
                             self.config.weights, self.config.distortion_cap)
        self.evals += 1
        if ev.feasible and (self.best is None or ev.objective > self.best.objective):
            self.best = ev
        if self.closest is None or ev.distortion < self.closest.distortion:
            self.closest = ev
        return ev.score


# ---------------------------------------------------------------------------
# strategies

def _random_restart(track: _Tracker, rng):
    while not track.exhausted:
        track(track.space.random(rng))


def _golden(fn, lo, hi, iters):
    """Golden-section maximization of ``fn`` on [lo, hi]; returns (t, value)."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    return (c, fc) if fc >= fd else (d, fd)


def _coordinate_ascent(track: _Tracker, rng, line_iters=5, span=6.0):
    space = track.space
    while not track.exhausted:
        cur = space.random(rng)
        cur_val = track(cur)
        improved = True
        while improved and not track.exhausted:
            improved = False
            for name, (_, rows, width) in space.kshape.items():
                if width == 1:
                    continue
                for r in range(rows):
                    if track.exhausted:
                        return
                    # snap candidates: each one-hot row and the uniform row
                    for cand in [_one_hot_logits(width, k) for k in range(width)] + [np.zeros(width)]:
                        if track.exhausted:
                            return
                        trial = cur.copy()
                        trial.logits[name][r] = cand
                        v = track(trial)
                        if v > cur_val + 1e-12:
                            cur, cur_val, improved = trial, v, True
                    # golden-section along a random direction
                    base = np.maximum(cur.logits[name][r], _FLOOR)
                    direction = rng.normal(size=width)

                    def along(t, name=name, r=r, base=base, direction=direction):
                        trial = cur.copy()
                        trial.logits[name][r] = base + t * direction
                        return track(trial) if not track.exhausted else -math.inf

                    t, v = _golden(along, -span, span, line_iters)
                    if v > cur_val + 1e-12:
                        cur = cur.copy()
                        cur.logits[name][r] = base + t * direction
                        cur_val, improved = v, True
            for f in ENCODER_ARGS:
                free = space.f_free(f, getattr(cur, f))
                for cell in range(len(free)):
                    for val in range(space.fout[f]):
                        if val == free[cell] or track.exhausted:
                            continue
                        trial = cur.copy()
                        nf = free.copy()
                        nf[cell] = val
                        setattr(trial, f, space.f_table(f, nf))
                        v = track(trial)
                        if v > cur_val + 1e-12:
                            cur, cur_val, improved = trial, v, True
                            free = nf


def _exhaustive(track: _Tracker, rng):
    """Enumerate encoder maps jointly with every kernel row in {one-hot, uniform}.

    The mixed-radix enumeration runs in index order; when it is larger than
    the budget, a uniformly random subset of indices is visited (sorted).
    """
    space = track.space
    digits = []           # (kind, name, row_or_cell, radix)
    for name, (_, rows, width) in space.kshape.items():
        if width > 1:
            digits += [("k", name, r, width + 1) for r in range(rows)]
    for f in ENCODER_ARGS:
        digits += [("f", f, c, space.fout[f]) for c in range(space.f_cells(f))]
    radices = [d[3] for d in digits]
    total = math.prod(radices)
    budget = track.config.budget
    if total <= budget:
        order = range(total)
    elif total < 2 ** 62:
        order = np.sort(rng.choice(total, size=budget, replace=False)).tolist()
    else:
        order = None
    count = 0
    while not track.exhausted and count < min(total, budget):
        if order is not None:
            idx = int(order[count])
            code = []
            for rad in reversed(radices):
                idx, rem = divmod(idx, rad)
                code.append(rem)
            code = code[::-1]
        else:
            code = [int(rng.integers(rad)) for rad in radices]
        count += 1
        logits = {k: np.zeros((rows, w)) for k, (_, rows, w) in space.kshape.items()}
        frees = {f: np.zeros(space.f_cells(f), dtype=np.int64) for f in ENCODER_ARGS}
        for (kind, name, pos, rad), c in zip(digits, code):
            if kind == "k":
                logits[name][pos] = np.zeros(rad - 1) if c == rad - 1 else _one_hot_logits(rad - 1, c)
            else:
                frees[name][pos] = c
        track(Params(logits, space.f_table("f1", frees["f1"]), space.f_table("f2", frees["f2"])))


_STRATEGY = {
    "random_restart": _random_restart,
    "coordinate_ascent": _coordinate_ascent,
    "exhaustive_deterministic": _exhaustive,
}


@dataclass
class SearchResult:
    rate: RateTriple
    objective: float
    scheme: SchemeSpec
    estimator: Estimator
    distortion: float
    evaluations: int

    def __iter__(self):
        return iter((self.rate, self.scheme, self.estimator))


def best_rate(channel: ChannelSpec, config: SearchConfig, *, stream: int = 0,
              warm_start: Sequence[SchemeSpec] = ()) -> SearchResult:
    """Best scheme found within the evaluation budget.

    ``stream`` selects an independent RNG stream (the grid point index in a
    trade-off sweep). Warm-start schemes are evaluated first and count
    against the budget.
    """
    space = _Space(channel, resolve_sizes(channel, config), config.mode)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(stream,)))
    track = _Tracker(channel, space, config)
    for sch in warm_start:
        ev = evaluate_scheme(channel, sch, config.weights, config.distortion_cap)
        track.evals += 1
        if ev.feasible and (track.best is None or ev.objective > track.best.objective):
            track.best = ev
        if track.closest is None or ev.distortion < track.closest.distortion:
            track.closest = ev
    if not track.exhausted:
        _STRATEGY[config.strategy](track, rng)
    if track.best is None:
        best = track.closest.scheme if track.closest else None
        raise EmptyResult(
            f"no scheme meets distortion {config.distortion_cap} within {config.budget} evaluations",
            best=best)
    ev = track.best
    est = optimal_estimator(build_joint(channel, ev.scheme), channel, AUX_VARS + Z)
    return SearchResult(ev.rate, ev.objective, ev.scheme, est, ev.distortion, track.evals)


# ---------------------------------------------------------------------------
# trade-off curves

@dataclass
class TradeoffPoint:
    D: float
    raw: float            # best objective found at this D (nan if none)
    rate: float           # running maximum over grid points up to D
    digest: str           # scheme achieving ``rate``
    distortion: float     # that scheme's distortion
    scheme: SchemeSpec | None = None


@dataclass
class TradeoffCurve:
    points: list[TradeoffPoint]

    @property
    def D(self) -> np.ndarray:
        return np.array([p.D for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    def hull(self) -> np.ndarray:
        """Upper concave envelope of the raw points, evaluated on the grid.

        This is the time-sharing closure of the found points; it is reported
        separately and never mixed into ``rates``.
        """
        pts = [(p.D, p.raw) for p in self.points if not math.isnan(p.raw)]
        out = np.full(len(self.points), np.nan)
        if not pts:
            return out
        upper = []
        for pt in sorted(pts):
            while len(upper) >= 2:
                (x1, y1), (x2, y2) = upper[-2], upper[-1]
                if (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1) >= 0:
                    upper.pop()
                else:
                    break
            upper.append(pt)
        xs, ys = np.array(upper).T
        for i, p in enumerate(self.points):
            if p.D >= xs[0]:
                out[i] = np.interp(p.D, xs, ys) if p.D <= xs[-1] else ys[-1]
        # time-sharing never beats the monotone curve's own points
        return np.fmax(out, self.rates)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["D", "rate", "scheme_digest", "raw_rate", "hull_rate", "distortion"])
        for p, h in zip(self.points, self.hull()):
            w.writerow([repr(float(p.D)), repr(float(p.rate)), p.digest, repr(float(p.raw)),
                        repr(float(h)), repr(float(p.distortion))])
        return buf.getvalue()


def _point(args):
    channel, config, i, D = args
    cfg = SearchConfig(config.cardinalities, config.weights, float(D), config.strategy,
                       config.budget, config.seed, config.mode, 1)
    try:
        res = best_rate(channel, cfg, stream=i)
        return res.objective, res.scheme, res.distortion
    except EmptyResult:
        return math.nan, None, math.nan


def tradeoff(channel: ChannelSpec, config: SearchConfig, D_grid: Sequence[float]) -> TradeoffCurve:
    grid = sorted(float(d) for d in D_grid)
    jobs = [(channel, config, i, D) for i, D in enumerate(grid)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_point, jobs))
    else:
        results = [_point(j) for j in jobs]
    points = []
    best = (math.nan, None, math.nan)
    for D, res in zip(grid, results):
        raw = res[0]
        if not math.isnan(raw) and (math.isnan(best[0]) or raw > best[0]):
            best = res
        sch = best[1]
        points.append(TradeoffPoint(D, raw, best[0], sch.digest() if sch else "", best[2], sch))
    return TradeoffCurve(points)


# ---------------------------------------------------------------------------
# nested cardinalities

def embed_scheme(scheme: SchemeSpec, channel: ChannelSpec, sizes: Mapping[str, int]) -> SchemeSpec:
    """Same scheme over larger auxiliary alphabets; new symbols get zero mass.

    Rows conditioned on new symbols copy the row of symbol 0, and encoder maps
    do likewise, so the induced law on the old support (and hence every
    information measure) is unchanged.
    """
    new = dict(scheme.sizes)
    for k, v in sizes.items():
        if v < new.get(k, 1):
            raise ArgumentError(f"cannot shrink {k} from {new[k]} to {v}")
        new[k] = int(v)
    allsz = dict(channel.sizes)
    allsz.update(new)

    def grow(arr, variables, pad_zero):
        arr = np.asarray(arr)
        for ax, v in enumerate(variables):
            extra = allsz[v] - arr.shape[ax]
            if extra <= 0:
                continue
            if ax in pad_zero:
                widths = [(0, 0)] * arr.ndim
                widths[ax] = (0, extra)
                arr = np.pad(arr, widths)
            else:
                first = np.take(arr, [0], axis=ax)
                arr = np.concatenate([arr] + [first] * extra, axis=ax)
        return arr

    ks = {}
    for name, (given, target) in SCHEME_KERNELS.items():
        variables = given + target
        ks[name] = grow(scheme.kernel(name, channel).probs, variables,
                        pad_zero=set(range(len(given), len(variables))))
    fs = {f: grow(getattr(scheme, f), args, pad_zero=set()) for f, args in ENCODER_ARGS.items()}
    out = SchemeSpec(sizes=new, mode=scheme.mode, **fs, **ks)
    assert not validate(channel, out)
    return out
