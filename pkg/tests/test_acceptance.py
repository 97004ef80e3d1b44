"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even under
capture) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import contextlib
import io
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from cdregion.channel import AUX_VARS, Z, build_joint
from cdregion.config import SCHEMA, canonical, channel_to_dict, scheme_to_dict
from cdregion.estimation import min_distortion, optimal_estimator
from cdregion.instances import (probe_erasure_channel, random_channel, random_monostatic_channel,
                                random_scheme)
from cdregion.prob import Alphabet, JointDistribution
from cdregion.region import (eliminate, evaluate_bounds, lemma_checks, membership_margin,
                             monostatic_scheme, multisensor_region)
from cdregion.simulator import SimConfig, SimRates, run

SEED = 20240611


class _Printer:
    def __init__(self, capsys=None):
        self.capsys = capsys

    def __call__(self, k, ok, detail):
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        if self.capsys is None:
            print(line)
        else:
            with self.capsys.disabled():
                print("\n" + line)


@pytest.fixture
def say(capsys):
    return _Printer(capsys)


def _h(p):
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


# ---------------------------------------------------------------------------

def test_criterion_1_information_measures(say):
    t0 = time.perf_counter()
    flip = 0.1
    bsc = JointDistribution([Alphabet("X", 2), Alphabet("Y", 2)],
                            0.5 * np.array([[1 - flip, flip], [flip, 1 - flip]]))
    mi = bsc.mutual_information("X", "Y")
    ok_bsc = abs(mi - 0.5310044065) < 1e-9
    rng = np.random.default_rng(SEED)
    chain_bad = dp_bad = 0
    for _ in range(100):
        sizes = tuple(rng.integers(1, 4, size=4))
        names = ("A", "B", "C", "D")
        j = JointDistribution([Alphabet(n, s) for n, s in zip(names, sizes)],
                              rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes))
        lhs = j.mutual_information("A", ("B", "C"), "D")
        rhs = j.mutual_information("A", "B", "D") + j.mutual_information("A", "C", ("B", "D"))
        chain_bad += abs(lhs - rhs) > 1e-9
        # X -> Y -> Z
        nx, ny, nz = rng.integers(1, 4, size=3)
        p = (rng.dirichlet(np.ones(nx))[:, None, None]
             * rng.dirichlet(np.ones(ny), size=nx)[:, :, None]
             * rng.dirichlet(np.ones(nz), size=ny)[None, :, :])
        m = JointDistribution([Alphabet("X", nx), Alphabet("Y", ny), Alphabet("Z", nz)], p)
        dp_bad += m.mutual_information("X", "Z") > m.mutual_information("X", "Y") + 1e-12
    dt = time.perf_counter() - t0
    ok = ok_bsc and chain_bad == 0 and dp_bad == 0 and dt < 10
    say(1, ok, f"BSC I={mi:.10f}, chain-rule failures {chain_bad}/100, "
               f"data-processing failures {dp_bad}/100, {dt:.2f}s")
    assert ok


# ---------------------------------------------------------------------------

def _best_deterministic(j, channel, cond):
    p = j.marginal_array(("S",) + tuple(cond)).reshape(channel.sizes["S"], -1)
    risk = p.T @ channel.distortion                     # (cells, S_hat)
    cells, k = risk.shape
    tables = np.array(np.unravel_index(np.arange(k ** cells), (k,) * cells)).T
    return float(risk[np.arange(cells), tables].sum(axis=1).min())


def test_criterion_2_estimator_optimality(say):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 2)
    candidates = ("S1", "S2", "X1", "X2", "Y1", "Y2", "Y", "S_R") + AUX_VARS
    beaten, systems = 0, 0
    while systems < 50:
        shat = int(rng.integers(2, 4))
        ch = random_channel(rng, {"S": int(rng.integers(2, 4)), "S_hat": shat})
        sc = random_scheme(rng, ch)
        j = build_joint(ch, sc).joint
        k = int(rng.integers(1, 5))
        cond = tuple(rng.choice(candidates, size=k, replace=False))
        cells = int(np.prod([j.alphabet(v).size for v in cond]))
        if cells > 16 or shat ** cells > 2 ** 20:
            continue
        systems += 1
        opt = optimal_estimator(j, ch, cond).expected_distortion
        beaten += _best_deterministic(j, ch, cond) < opt - 1e-12
    dt = time.perf_counter() - t0
    ok = beaten == 0 and dt < 60
    say(2, ok, f"{systems} systems, exhaustive tables beat the optimal estimator {beaten} times, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------

def test_criterion_3_monostatic_consistency(say):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 3)
    worst_rate = worst_dist = 0.0
    for _ in range(6):
        ch = random_monostatic_channel(rng, n_s=2, n_y=3)
        x1_law = rng.dirichlet(np.ones(2))[None, :]
        policy = rng.dirichlet(np.ones(2))[None, :]
        kernels = {"p_t2": rng.dirichlet(np.ones(2), size=(1, 3)),
                   "p_v2": rng.dirichlet(np.ones(2), size=(1, 1, 1, 1, 2, 3, 2))}
        sc = monostatic_scheme(ch, x1_law, policy, **kernels)
        sj = build_joint(ch, sc)
        target = sj.joint.mutual_information("X1", "Y", ("X2",))
        poly = eliminate(evaluate_bounds(sj))
        best_r1 = poly.maximize([0, 1, 0])[0]
        # the maximum is attained with R0 = R2 = 0 by downward closure
        on_axis = poly.contains([0.0, best_r1, 0.0])
        worst_rate = max(worst_rate, abs(best_r1 - target) if on_axis else math.inf)
        full = min_distortion(sj, ch, AUX_VARS + Z)
        reduced = min_distortion(sj, ch, ("X1", "X2", "Y"))
        worst_dist = max(worst_dist, abs(full - reduced))
    dt = time.perf_counter() - t0
    ok = worst_rate < 1e-9 and worst_dist < 1e-9 and dt < 300
    say(3, ok, f"6 channels, max |maxR1 - I(X1;Y|X2)| = {worst_rate:.2e}, "
               f"max distortion gap = {worst_dist:.2e}, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------

def _nonempty_binary_schemes(rng, count, sizes=None, max_weight=0.1):
    """First ``count`` random binary systems whose region has a non-origin vertex."""
    out, drawn = [], 0
    while len(out) < count:
        drawn += 1
        ch = random_channel(rng)
        sc = random_scheme(rng, ch, sizes, description_weight=rng.uniform(0, max_weight))
        sj = build_joint(ch, sc)
        bounds = evaluate_bounds(sj)
        poly = eliminate(bounds)
        if not poly.empty and poly.maximize([1, 1, 1])[0] > 1e-3:
            out.append((sj, bounds, poly))
    return out, drawn


def _grid_member(r, bd, step):
    """Independent oracle: grid over cooperative rates, closed form for descriptions."""
    R0, R1, R2 = r
    if min(r) < 0:
        return False
    g1 = np.arange(0, R1 + step / 2, step)
    g2 = np.arange(0, R2 + step / 2, step)
    a, b = np.meshgrid(np.append(g1, R1), np.append(g2, R2), indexing="ij")
    ok = ((a + b <= bd.common - R0) & (a <= min(bd.feedback1, bd.cooperative1))
          & (b <= min(bd.feedback2, bd.cooperative2)) & (a + b <= bd.cooperative_sum))
    p1 = bd.private1 - R1 + a
    p2 = bd.private2 - R2 + b
    ps = bd.private_sum - R1 - R2 + a + b
    lo1 = bd.desc1 + bd.refine1
    lo2 = bd.desc2 + bd.refine2
    lo_sum = max(bd.desc_sum, bd.desc1 + bd.desc2) + max(bd.refine_sum, bd.refine1 + bd.refine2)
    ok &= (lo1 <= p1) & (lo2 <= p2) & (lo_sum <= ps) & (lo_sum <= p1 + p2) & (lo1 + lo2 <= ps)
    return bool(ok.any())


def test_criterion_4_elimination_soundness(say):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 4)
    systems, drawn = _nonempty_binary_schemes(rng, 10)
    lp_disagree = grid_disagree = grid_compared = closure_bad = members = 0
    for sj, bounds, poly in systems:
        scale = poly.vertices.max(axis=0)
        step = float(scale.max()) / 512
        for r in rng.uniform(0, 1, size=(1000, 3)) * (1.3 * scale + 1e-3):
            inside = poly.contains(r)
            margin = membership_margin(r, bounds)
            lp_disagree += inside != (margin >= -1e-9)
            if abs(margin) > 4 * step:
                grid_compared += 1
                grid_disagree += inside != _grid_member(r, bounds, step)
            if inside:
                members += 1
                shrunk = r * rng.uniform(0, 1, size=3)
                closure_bad += not (poly.contains(shrunk) and membership_margin(shrunk, bounds) >= -1e-9)
    dt = time.perf_counter() - t0
    ok = lp_disagree == 0 and grid_disagree == 0 and closure_bad == 0 and dt < 300
    say(4, ok, f"10 schemes ({drawn} drawn), 10^4 triples: LP disagreements {lp_disagree}, "
               f"grid disagreements {grid_disagree}/{grid_compared}, "
               f"closure failures {closure_bad}/{members} members, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------

def test_criterion_5_lemma_guards(say):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 5)
    general, _ = _nonempty_binary_schemes(rng, 10)
    # with U2 and W2 trivial the second sender has no private packing room, so
    # only uninformative descriptions leave the region non-empty
    silent2, _ = _nonempty_binary_schemes(rng, 10, {"W2": 1, "U2": 1}, max_weight=0.0)
    violations = triggered = 0
    for sj, bounds, _ in general + silent2:
        rep = lemma_checks(bounds, sj)
        violations += len(rep.violations)
        triggered += rep.lemma2_triggered
    dt = time.perf_counter() - t0
    ok = violations == 0 and triggered >= 10 and dt < 120
    say(5, ok, f"20 schemes, {violations} violations, R2-forced-zero case triggered in {triggered}, {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------

def test_criterion_6_simulator(say):
    t0 = time.perf_counter()
    ch = probe_erasure_channel()
    sc = monostatic_scheme(ch, [[0.5, 0.5]], [[1.0, 0.0]])
    j = build_joint(ch, sc).joint
    rate = j.mutual_information("X1", "Y", ("X2",))
    target = min_distortion(j, ch, ("X1", "X2", "Y"))
    reports = [run(SimConfig(ch, sc, SimRates(R1pp=0.8 * rate), n=n, B=1, epsilon=0.9,
                             trials=500, seed=7)) for n in (8, 12, 16)]
    errs = [r.error_rate for r in reports]
    zs = [abs(r.mean_distortion - target) / r.stderr for r in reports]
    dt = time.perf_counter() - t0
    ok = all(a > b for a, b in zip(errs, errs[1:])) and max(zs) <= 3 and dt < 900
    say(6, ok, f"error rates {errs} for n=8,12,16; distortion z-scores "
               f"{[round(z, 2) for z in zs]} vs {target:.4f}; {dt:.1f}s")
    assert ok


# ---------------------------------------------------------------------------

def test_criterion_7_reproducibility(say, tmp_path):
    from cdregion.cli import main
    ch = probe_erasure_channel()
    sc = monostatic_scheme(ch, [[0.5, 0.5]], [[1.0, 0.0]])
    f = {"channel": tmp_path / "c.json", "scheme": tmp_path / "s.json",
         "search": tmp_path / "q.json", "sim": tmp_path / "m.json"}
    f["channel"].write_text(canonical(channel_to_dict(ch)))
    f["scheme"].write_text(canonical(scheme_to_dict(sc)))
    f["search"].write_text(canonical({
        "schema": SCHEMA, "kind": "search", "strategy": "coordinate_ascent", "budget": 40,
        "cardinalities": {"U": 1, "W1": 1, "W2": 1, "T1": 1, "T2": 1, "V1": 1, "V2": 1},
        "d_grid": [0.13, 0.2, 0.3]}))
    f["sim"].write_text(canonical({"schema": SCHEMA, "kind": "simulation",
                                   "rates": {"R1pp": 0.55}, "n_sweep": [8, 10],
                                   "epsilon": 0.9, "trials": 30}))
    f = {k: str(v) for k, v in f.items()}
    commands = {
        "validate": ["validate", "--channel", f["channel"], "--scheme", f["scheme"]],
        "region": ["region", "--channel", f["channel"], "--scheme", f["scheme"]],
        "estimate": ["estimate", "--channel", f["channel"], "--scheme", f["scheme"]],
        "tradeoff": ["tradeoff", "--channel", f["channel"], "--config", f["search"], "--seed", "5"],
        "simulate": ["simulate", "--channel", f["channel"], "--scheme", f["scheme"],
                     "--config", f["sim"], "--seed", "5"],
    }
    mismatched, compared = [], 0
    for name, argv in commands.items():
        outs = [tmp_path / f"{name}_{i}" for i in range(2)]
        with contextlib.redirect_stdout(io.StringIO()):
            codes = [main(argv + ["--out", str(o)]) for o in outs]
        if codes != [0, 0]:
            mismatched.append(f"{name}: exit {codes}")
            continue
        for p in sorted(outs[0].glob("*.csv")):
            compared += 1
            if p.read_bytes() != (outs[1] / p.name).read_bytes():
                mismatched.append(f"{name}/{p.name}")
    ok = not mismatched and compared > 0
    say(7, ok, f"{len(commands)} subcommands, {compared} CSV files compared, mismatches: {mismatched or 'none'}")
    assert ok


# ---------------------------------------------------------------------------

def _hand_multisensor_joint(ch, sc):
    """Multi-sensor joint assembled directly from the kernels (no feedback, no W)."""
    sq = lambda a, axes: np.asarray(a).reshape([s for i, s in enumerate(np.shape(a)) if i not in axes])
    p_s = ch.p_s
    p_s1s2 = ch.p_s1s2                                  # (S, S1, S2)
    p_out = ch.p_out[:, :, :, 0, 0]                     # (X1, X2, S, Y, S_R)
    p_u = sc.p_u
    p_u1 = sq(sc.p_u1, (1,))                            # (U, U1)
    p_u2 = sq(sc.p_u2, (1,))
    p_t1 = sq(sc.p_t1, (1,))                            # (S1, T1)
    p_t2 = sq(sc.p_t2, (1,))
    p_v1 = sq(sc.p_v1, (2, 3, 5))                       # (S1, U, U1, T1, V1)
    p_v2 = sq(sc.p_v2, (2, 3, 5))                       # (S2, U, U2, T2, V2)
    nx1, nx2 = ch.sizes["X1"], ch.sizes["X2"]
    x1 = (sq(sc.f1, (1,))[..., None] == np.arange(nx1)).astype(float)   # (U, U1, S1, X1)
    x2 = (sq(sc.f2, (1,))[..., None] == np.arange(nx2)).astype(float)   # (U, U2, S2, X2)
    names = "S S1 S2 U U1 U2 X1 X2 Y SR T1 T2 V1 V2".split()
    letters = dict(zip(names, "abcdefghijklmn"))
    spec = lambda *vs: "".join(letters[v] for v in vs)
    terms = [(p_s, ("S",)), (p_s1s2, ("S", "S1", "S2")), (p_u, ("U",)), (p_u1, ("U", "U1")),
             (p_u2, ("U", "U2")), (x1, ("U", "U1", "S1", "X1")), (x2, ("U", "U2", "S2", "X2")),
             (p_out, ("X1", "X2", "S", "Y", "SR")), (p_t1, ("S1", "T1")), (p_t2, ("S2", "T2")),
             (p_v1, ("S1", "U", "U1", "T1", "V1")), (p_v2, ("S2", "U", "U2", "T2", "V2"))]
    expr = ",".join(spec(*v) for _, v in terms) + "->" + spec(*names)
    return names, np.einsum(expr, *[t for t, _ in terms])


def _hand_mi(names, p, a, b, c=()):
    def h(vs):
        drop = tuple(i for i, n in enumerate(names) if n not in vs)
        return _h(p.sum(axis=drop))
    return h(set(a) | set(c)) + h(set(b) | set(c)) - h(set(a) | set(b) | set(c)) - h(set(c))


HAND_TERMS = {
    "common": (("U",), ("Y", "SR"), ("T1", "T2")),
    "private1": (("U1",), ("Y", "SR"), ("U", "U2", "T1", "T2")),
    "private2": (("U2",), ("Y", "SR"), ("U", "U1", "T1", "T2")),
    "private_sum": (("U1", "U2"), ("Y", "SR"), ("U", "T1", "T2")),
    "desc1": (("T1",), ("S1",), ("T2", "Y", "SR")),
    "desc2": (("T2",), ("S2",), ("T1", "Y", "SR")),
    "desc_sum": (("T1", "T2"), ("S1", "S2"), ("Y", "SR")),
    "refine1": (("V1",), ("S1",), ("U", "U1", "U2", "T1", "T2", "V2", "Y", "SR")),
    "refine2": (("V2",), ("S2",), ("U", "U1", "U2", "T1", "T2", "V1", "Y", "SR")),
    "refine_sum": (("V1", "V2"), ("S1", "S2"), ("U", "U1", "U2", "T1", "T2", "Y", "SR")),
}


def test_criterion_8_multisensor(say):
    rng = np.random.default_rng(SEED + 8)
    worst = 0.0
    notes = []
    for _ in range(3):
        ch = random_channel(rng, {"Y1": 1, "Y2": 1})
        sc = random_scheme(rng, ch, {"W1": 1, "W2": 1})
        got = multisensor_region(ch, sc)
        names, p = _hand_multisensor_joint(ch, sc)
        for term, args in HAND_TERMS.items():
            worst = max(worst, abs(got.values[term] - _hand_mi(names, p, *args)))
        notes = got.discrepancies
    ok = worst < 1e-9 and len(notes) > 0
    listed = "; ".join(f"{d.term}: printed {d.printed} ({d.note})" for d in notes)
    say(8, ok, f"3 instances x {len(HAND_TERMS)} terms, max deviation {worst:.2e}; "
               f"reported printed-form differences: {listed}")
    assert ok


if __name__ == "__main__":
    import tempfile
    printer = _Printer()
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(printer, Path(d))
            else:
                fn(printer)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
