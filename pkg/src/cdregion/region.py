"""Rate region of a fixed scheme.

The region is first stated with eight hidden rates (message splits and two
layers of state-description rates). :func:`eliminate` projects them out with
Fourier-Motzkin elimination and returns a polytope in ``(R0, R1, R2)``;
:func:`membership` decides the same question directly with a linear program.
The two routes are cross-checked in the test suite.

Strict lower bounds on description rates are treated as non-strict: the
capacity-distortion region is a closure, so boundary points belong to it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, fields
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .channel import (AUX_VARS, Z, ChannelSpec, SchemeSpec, SystemJoint, build_joint,
                      simple_scheme)
from .errors import TemplateError
from .estimation import min_distortion

TOL = 1e-9

TZ = ("T1", "T2") + Z

# name -> (first argument, second argument, conditioning)
BOUND_TERMS = {
    "common": (("U",), TZ, ()),
    "feedback1": (("W1",), ("S2", "Y2"), ("U", "W2", "U2")),
    "feedback2": (("W2",), ("S1", "Y1"), ("U", "W1", "U1")),
    "cooperative1": (("W1",), TZ, ("U", "W2")),
    "cooperative2": (("W2",), TZ, ("U", "W1")),
    "cooperative_sum": (("W1", "W2"), TZ, ("U",)),
    "private1": (("U1",), TZ, ("U", "W1", "W2", "U2")),
    "private2": (("U2",), TZ, ("U", "W1", "W2", "U1")),
    "private_sum": (("U1", "U2"), TZ, ("U", "W1", "W2")),
    "desc1": (("T1",), ("S1", "Y1"), ("T2",) + Z),
    "desc2": (("T2",), ("S2", "Y2"), ("T1",) + Z),
    "desc_sum": (("T1", "T2"), ("S1", "Y1", "S2", "Y2"), Z),
    "refine1": (("V1",), ("S1", "Y1"), ("U", "W1", "W2", "U1", "U2", "T1", "T2", "V2") + Z),
    "refine2": (("V2",), ("S2", "Y2"), ("U", "W1", "W2", "U1", "U2", "T1", "T2", "V1") + Z),
    "refine_sum": (("V1", "V2"), ("S1", "Y1", "S2", "Y2"),
                   ("U", "W1", "W2", "U1", "U2", "T1", "T2") + Z),
}
BOUND_NAMES = tuple(BOUND_TERMS)


@dataclass(frozen=True)
class RateTriple:
    R0: float
    R1: float
    R2: float

    def __iter__(self):
        return iter((self.R0, self.R1, self.R2))

    def as_array(self):
        return np.array([self.R0, self.R1, self.R2], dtype=float)


@dataclass(frozen=True)
class AuxiliaryRates:
    R1p: float
    R1pp: float
    R2p: float
    R2pp: float
    Rs1: float
    Rs2: float
    Rt1: float
    Rt2: float


@dataclass(frozen=True)
class BoundSet:
    """Right-hand sides of the region's information inequalities (bits)."""

    common: float
    feedback1: float
    feedback2: float
    cooperative1: float
    cooperative2: float
    cooperative_sum: float
    private1: float
    private2: float
    private_sum: float
    desc1: float
    desc2: float
    desc_sum: float
    refine1: float
    refine2: float
    refine_sum: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in BOUND_NAMES], dtype=float)

    @classmethod
    def from_mapping(cls, values) -> "BoundSet":
        return cls(**{n: float(values[n]) for n in BOUND_NAMES})


def evaluate_bounds(joint) -> BoundSet:
    j = joint.joint if isinstance(joint, SystemJoint) else joint
    return BoundSet(**{name: j.mutual_information(a, b, c)
                       for name, (a, b, c) in BOUND_TERMS.items()})


# ---------------------------------------------------------------------------
# symbolic elimination

ELIM_VARS = ("R0", "R1", "R2", "R1p", "R2p", "Rs1", "Rs2", "Rt1", "Rt2")
_ELIMINATION_ORDER = ("Rt1", "Rt2", "Rs1", "Rs2", "R1p", "R2p")


def _row(coefs: dict, bound: dict, label: str):
    a = np.zeros(len(ELIM_VARS))
    for k, v in coefs.items():
        a[ELIM_VARS.index(k)] = v
    b = np.zeros(len(BOUND_NAMES))
    for k, v in bound.items():
        b[BOUND_NAMES.index(k)] = v
    return a, b, frozenset([label])


def _lifted_system():
    """All inequalities ``a . x <= b . bounds`` before elimination.

    The private rate splits are substituted: R1'' = R1 - R1', R2'' = R2 - R2'.
    """
    rows = [
        _row({"R0": -1}, {}, "R0>=0"),
        _row({"R1": -1}, {}, "R1>=0"),
        _row({"R2": -1}, {}, "R2>=0"),
        _row({"R1p": -1}, {}, "R1'>=0"),
        _row({"R2p": -1}, {}, "R2'>=0"),
        _row({"R1p": 1, "R1": -1}, {}, "R1''>=0"),
        _row({"R2p": 1, "R2": -1}, {}, "R2''>=0"),
        _row({"Rs1": -1}, {}, "Rs1>=0"),
        _row({"Rs2": -1}, {}, "Rs2>=0"),
        _row({"Rt1": -1}, {}, "Rt1>=0"),
        _row({"Rt2": -1}, {}, "Rt2>=0"),
        _row({"R0": 1, "R1p": 1, "R2p": 1}, {"common": 1}, "common"),
        _row({"R1p": 1}, {"feedback1": 1}, "feedback1"),
        _row({"R2p": 1}, {"feedback2": 1}, "feedback2"),
        _row({"R1p": 1}, {"cooperative1": 1}, "cooperative1"),
        _row({"R2p": 1}, {"cooperative2": 1}, "cooperative2"),
        _row({"R1p": 1, "R2p": 1}, {"cooperative_sum": 1}, "cooperative_sum"),
        _row({"R1": 1, "R1p": -1, "Rs1": 1, "Rt1": 1}, {"private1": 1}, "private1"),
        _row({"R2": 1, "R2p": -1, "Rs2": 1, "Rt2": 1}, {"private2": 1}, "private2"),
        _row({"R1": 1, "R1p": -1, "R2": 1, "R2p": -1, "Rs1": 1, "Rt1": 1, "Rs2": 1, "Rt2": 1},
             {"private_sum": 1}, "private_sum"),
        _row({"Rs1": -1}, {"desc1": -1}, "desc1"),
        _row({"Rs2": -1}, {"desc2": -1}, "desc2"),
        _row({"Rs1": -1, "Rs2": -1}, {"desc_sum": -1}, "desc_sum"),
        _row({"Rt1": -1}, {"refine1": -1}, "refine1"),
        _row({"Rt2": -1}, {"refine2": -1}, "refine2"),
        _row({"Rt1": -1, "Rt2": -1}, {"refine_sum": -1}, "refine_sum"),
    ]
    return rows


def _normalize(a, b):
    ints = [int(round(x)) for x in a if round(x) != 0]
    g = math.gcd(*ints) if ints else 1
    if g > 1:
        a, b = a / g, b / g
    return a, b


def _is_nonnegativity(a, b) -> bool:
    return not np.any(b) and np.count_nonzero(a) == 1 and a.min() == -1


def _prune(rows):
    """Drop duplicate and symbolically dominated rows.

    Bounds are nonnegative, so for equal left-hand sides a row whose bound
    coefficients are componentwise larger is implied by the smaller one.
    Rows with only nonpositive coefficients and nonnegative right-hand side
    follow from nonnegativity of every rate and every bound.
    """
    groups: dict[tuple, list] = {}
    for a, b, prov in rows:
        if (not _is_nonnegativity(a, b)) and np.all(a <= 0) and np.all(b >= 0):
            continue
        groups.setdefault(tuple(np.round(a, 9)), []).append((a, b, prov))
    out = []
    for members in groups.values():
        keep = []
        for cand in sorted(members, key=lambda r: (r[1].sum(), tuple(r[1]))):
            if any(np.all(k[1] <= cand[1] + 1e-12) for k in keep):
                continue
            keep.append(cand)
        out += keep
    return out


@lru_cache(maxsize=None)
def symbolic_region(history_rule: bool = True):
    """Fourier-Motzkin projection onto (R0, R1, R2), with symbolic right sides.

    Returns ``(A, Bcoef, provenance)``: the region is ``A r <= Bcoef @ bounds``.
    """
    rows = [(a, b, p) for a, b, p in _lifted_system()]
    for step, var in enumerate(_ELIMINATION_ORDER, start=1):
        k = ELIM_VARS.index(var)
        pos = [r for r in rows if r[0][k] > 0]
        neg = [r for r in rows if r[0][k] < 0]
        rest = [r for r in rows if r[0][k] == 0]
        for (ap, bp, pp), (an, bn, pn) in itertools.product(pos, neg):
            cp, cn = ap[k], -an[k]
            a = cn * ap + cp * an
            b = cn * bp + cp * bn
            a[k] = 0.0
            hist = pp | pn
            if history_rule and len(hist) > step + 1:
                continue  # Chernikov: more than step+1 ancestors means redundant
            a, b = _normalize(a, b)
            rest.append((a, b, hist))
        rows = _prune(rest)
    A = np.array([r[0][:3] for r in rows])
    B = np.array([r[1] for r in rows])
    prov = [tuple(sorted(r[2])) for r in rows]
    return A, B, prov


@dataclass(frozen=True)
class Inequality:
    coef: tuple[float, float, float]
    rhs: float
    provenance: tuple[str, ...]

    def slack(self, r) -> float:
        return self.rhs - float(np.dot(self.coef, list(r)))


@dataclass
class RegionPolytope:
    """``{r : A r <= b}`` in (R0, R1, R2) plus its vertex list."""

    A: np.ndarray
    b: np.ndarray
    provenance: list
    conditions: list = field(default_factory=list)  # rate-free constraints 0 <= value
    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))

    @property
    def empty(self) -> bool:
        return len(self.vertices) == 0

    @property
    def inequalities(self) -> list[Inequality]:
        return [Inequality(tuple(float(x) for x in a), float(c), p)
                for a, c, p in zip(self.A, self.b, self.provenance)]

    def contains(self, r, tol: float = TOL) -> bool:
        if self.empty:
            return False
        r = np.asarray(list(r), dtype=float)
        return bool(np.all(self.A @ r <= self.b + tol))

    def contains_many(self, R: np.ndarray, tol: float = TOL) -> np.ndarray:
        R = np.atleast_2d(R)
        if self.empty:
            return np.zeros(len(R), dtype=bool)
        return np.all(R @ self.A.T <= self.b + tol, axis=1)

    def maximize(self, weights) -> tuple[float, np.ndarray | None]:
        if self.empty:
            return -math.inf, None
        vals = self.vertices @ np.asarray(weights, dtype=float)
        i = int(np.argmax(vals))
        return float(vals[i]), self.vertices[i]

    def most_violated(self, r) -> Inequality | None:
        r = np.asarray(list(r), dtype=float)
        if len(self.A) == 0:
            return None
        excess = self.A @ r - self.b
        i = int(np.argmax(excess))
        if excess[i] <= TOL:
            return None
        return self.inequalities[i]

    def slice_vertices(self, r0: float) -> np.ndarray:
        """Vertices (R1, R2) of the section at fixed R0, counter-clockwise."""
        if self.empty:
            return np.zeros((0, 2))
        A2 = self.A[:, 1:]
        b2 = self.b - self.A[:, 0] * r0
        pts = _enumerate_vertices(A2, b2)
        if len(pts) > 2:
            c = pts.mean(axis=0)
            pts = pts[np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))]
        return pts


def _enumerate_vertices(A: np.ndarray, b: np.ndarray, tol: float = TOL) -> np.ndarray:
    d = A.shape[1]
    m = len(A)
    if m < d:
        return np.zeros((0, d))
    combos = np.array(list(itertools.combinations(range(m), d)))
    M = A[combos]
    rhs = b[combos]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    if not np.any(ok):
        return np.zeros((0, d))
    sol = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    feas = np.all(sol @ A.T <= b + tol, axis=1)
    sol = sol[feas]
    if len(sol) == 0:
        return np.zeros((0, d))
    sol[np.abs(sol) < tol] = 0.0
    # merge duplicates within tol
    sol = sol[np.lexsort(sol.T[::-1])]
    keep = [sol[0]]
    for v in sol[1:]:
        if not any(np.max(np.abs(v - k)) <= tol for k in keep):
            keep.append(v)
    return np.array(keep)


def eliminate(bounds: BoundSet) -> RegionPolytope:
    A, B, prov = symbolic_region()
    b = B @ bounds.as_array()
    zero = np.all(A == 0, axis=1)
    conditions = [(float(v), p) for v, p, z in zip(b, prov, zero) if z]
    A, b = A[~zero], b[~zero]
    prov = [p for p, z in zip(prov, zero) if not z]

    # pairwise dominance: identical directions keep the tightest right-hand side
    best: dict[tuple, int] = {}
    for i, a in enumerate(A):
        key = tuple(a)
        if key not in best or b[i] < b[best[key]]:
            best[key] = i
    idx = sorted(best.values())
    A, b, prov = A[idx], b[idx], [prov[i] for i in idx]

    if any(v < -TOL for v, _ in conditions):
        return RegionPolytope(A, b, prov, conditions)
    verts = _enumerate_vertices(A, b)
    if len(verts):
        # rows never tight at a vertex are redundant for a bounded polytope
        nonneg = np.array([np.count_nonzero(a) == 1 and a.min() < 0 and c == 0
                           for a, c in zip(A, b)])
        tight = np.any(np.abs(verts @ A.T - b) <= 1e-8, axis=0)
        keep = tight | nonneg
        A, b, prov = A[keep], b[keep], [p for p, k in zip(prov, keep) if k]
    return RegionPolytope(A, b, prov, conditions, verts)


# ---------------------------------------------------------------------------
# direct membership

@dataclass(frozen=True)
class MembershipResult:
    member: bool
    margin: float
    witness: AuxiliaryRates | None = None
    certificate: Inequality | None = None

    def __bool__(self):
        return self.member


def _direct_system(r, bd: BoundSet):
    """Inequalities G x <= h over x = (R1', R2', Rs1, Rs2, Rt1, Rt2) at fixed r."""
    R0, R1, R2 = (float(v) for v in r)
    G, h = [], []

    def le(coef, rhs):
        G.append(coef)
        h.append(rhs)

    #     R1'  R2'  Rs1 Rs2 Rt1 Rt2
    for i in range(6):
        e = [0.0] * 6
        e[i] = -1.0
        le(e, 0.0)
    le([1, 0, 0, 0, 0, 0], R1)                       # R1'' >= 0
    le([0, 1, 0, 0, 0, 0], R2)                       # R2'' >= 0
    le([1, 1, 0, 0, 0, 0], bd.common - R0)
    le([1, 0, 0, 0, 0, 0], bd.feedback1)
    le([0, 1, 0, 0, 0, 0], bd.feedback2)
    le([1, 0, 0, 0, 0, 0], bd.cooperative1)
    le([0, 1, 0, 0, 0, 0], bd.cooperative2)
    le([1, 1, 0, 0, 0, 0], bd.cooperative_sum)
    le([-1, 0, 1, 0, 1, 0], bd.private1 - R1)
    le([0, -1, 0, 1, 0, 1], bd.private2 - R2)
    le([-1, -1, 1, 1, 1, 1], bd.private_sum - R1 - R2)
    le([0, 0, -1, 0, 0, 0], -bd.desc1)
    le([0, 0, 0, -1, 0, 0], -bd.desc2)
    le([0, 0, -1, -1, 0, 0], -bd.desc_sum)
    le([0, 0, 0, 0, -1, 0], -bd.refine1)
    le([0, 0, 0, 0, 0, -1], -bd.refine2)
    le([0, 0, 0, 0, -1, -1], -bd.refine_sum)
    # rate triple itself must be nonnegative; folded in as rows without x
    for v in (R0, R1, R2):
        le([0] * 6, v)
    return np.array(G, dtype=float), np.array(h, dtype=float)


def membership_margin(r, bounds: BoundSet) -> float:
    """Largest uniform slack ``t`` with which the hidden-rate system is solvable."""
    G, h = _direct_system(r, bounds)
    Ax = np.hstack([G, np.ones((len(G), 1))])
    c = np.zeros(7)
    c[-1] = -1.0
    res = linprog(c, A_ub=Ax, b_ub=h, bounds=[(None, None)] * 6 + [(None, 1.0)],
                  method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"margin LP failed: {res.message}")
    return float(res.x[-1])


def membership(triple, bounds: BoundSet, tol: float = TOL) -> MembershipResult:
    r = list(triple)
    margin = membership_margin(r, bounds)
    if margin >= -tol:
        G, h = _direct_system(r, bounds)
        # smallest description rates that still fit
        c = np.array([0, 0, 1, 1, 1, 1], dtype=float)
        res = linprog(c, A_ub=G, b_ub=h + max(tol, -margin), bounds=[(None, None)] * 6,
                      method="highs-ds")
        x = np.clip(res.x, 0.0, None) if res.status == 0 else np.zeros(6)
        x[0], x[1] = min(x[0], r[1]), min(x[1], r[2])
        w = AuxiliaryRates(R1p=x[0], R1pp=r[1] - x[0], R2p=x[1], R2pp=r[2] - x[1],
                           Rs1=x[2], Rs2=x[3], Rt1=x[4], Rt2=x[5])
        return MembershipResult(True, margin, witness=w)
    cert = eliminate(bounds).most_violated(r)
    return MembershipResult(False, margin, certificate=cert)


# ---------------------------------------------------------------------------
# lemma guards

@dataclass
class LemmaReport:
    sum_bound: float
    total_bound: float
    lemma2_information: float
    lemma2_triggered: bool
    max_r2: float
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def lemma_checks(bounds: BoundSet, joint, tol: float = TOL) -> LemmaReport:
    j = joint.joint if isinstance(joint, SystemJoint) else joint
    sum_bound = j.mutual_information(("W1", "W2", "U1", "U2"), Z, ("U",))
    total_bound = j.mutual_information(("U", "W1", "W2", "U1", "U2"), Z)
    l2 = j.mutual_information(("W2", "U2"), Z + ("S1", "Y1"), ("U", "W1", "U1"))
    poly = eliminate(bounds)
    violations = []
    max_r2 = poly.maximize([0, 0, 1])[0] if not poly.empty else 0.0
    for v in poly.vertices:
        if v[1] + v[2] > sum_bound + tol:
            violations.append(f"vertex {v.tolist()}: R1+R2 exceeds {sum_bound:.12g}")
        if v.sum() > total_bound + tol:
            violations.append(f"vertex {v.tolist()}: R0+R1+R2 exceeds {total_bound:.12g}")
    triggered = l2 <= tol
    if triggered and max_r2 > tol:
        violations.append(f"max R2 = {max_r2:.12g} although the R2 information term vanishes")
    return LemmaReport(sum_bound, total_bound, l2, triggered, max_r2, violations)


# ---------------------------------------------------------------------------
# monostatic uplink

@dataclass(frozen=True)
class MonostaticPoint:
    rate_bound: float
    distortion: float


def check_monostatic(channel: ChannelSpec) -> None:
    """Raise TemplateError unless Y2 copies Y and S_R copies X2 with no SIT/Y1."""
    sz = channel.sizes
    problems = [v for v in ("S1", "S2", "Y1") if sz[v] != 1]
    if problems:
        raise TemplateError(f"monostatic template needs trivial {problems}")
    if sz["Y2"] != sz["Y"] or sz["S_R"] != sz["X2"]:
        raise TemplateError("monostatic template needs |Y2| = |Y| and |S_R| = |X2|")
    p = channel.p_out  # (X1, X2, S, Y1, Y2, Y, S_R)
    y2_eq_y = np.eye(sz["Y"], dtype=bool)[:, :, None]          # (Y2, Y, 1)
    sr_eq_x2 = np.eye(sz["X2"], dtype=bool)                      # (X2, S_R)
    allowed = y2_eq_y[None, None, None, None] & sr_eq_x2[None, :, None, None, None, None, :]
    if np.any(p[~np.broadcast_to(allowed, p.shape)] > 0):
        raise TemplateError("monostatic template needs Y2 = Y and S_R = X2 deterministically")


def monostatic_scheme(channel: ChannelSpec, input_law, policy, **kernels) -> SchemeSpec:
    """Scheme with U = W1 = W2 trivial, U1 = X1 and U2 = X2."""
    check_monostatic(channel)
    sizes = {"U1": channel.sizes["X1"], "U2": channel.sizes["X2"]}
    for k, arr in kernels.items():
        if k in ("p_t1", "p_t2", "p_v1", "p_v2"):
            sizes[k[2:].upper()] = np.asarray(arr).shape[-1]
    return simple_scheme(channel, sizes, p_u1=input_law, p_u2=policy, **kernels)


def monostatic_region(channel: ChannelSpec, input_law, policy) -> MonostaticPoint:
    scheme = monostatic_scheme(channel, input_law, policy)
    j = build_joint(channel, scheme).joint
    rate = j.mutual_information("X1", "Y", ("X2",))
    dist = min_distortion(j, channel, ("X1", "X2", "Y"))
    return MonostaticPoint(rate, dist)


# ---------------------------------------------------------------------------
# multi-sensor network (no feedback, no cooperative layer)

MULTISENSOR_TERMS = {
    "common": (("U",), Z, ("T1", "T2")),
    "private1": (("U1",), Z, ("U", "U2", "T1", "T2")),
    "private2": (("U2",), Z, ("U", "U1", "T1", "T2")),
    "private_sum": (("U1", "U2"), Z, ("U", "T1", "T2")),
    "desc1": (("T1",), ("S1",), ("T2",) + Z),
    "desc2": (("T2",), ("S2",), ("T1",) + Z),
    "desc_sum": (("T1", "T2"), ("S1", "S2"), Z),
    "refine1": (("V1",), ("S1",), ("U", "U1", "U2", "T1", "T2", "V2") + Z),
    "refine2": (("V2",), ("S2",), ("U", "U1", "U2", "T1", "T2", "V1") + Z),
    "refine_sum": (("V1", "V2"), ("S1", "S2"), ("U", "U1", "U2", "T1", "T2") + Z),
}

# terms whose published form differs from what the general bounds reduce to
PRINTED_VARIANTS = {
    "private1": ("I(U1; Z | U, U1, T1, T2)", None,
                 "conditions on U1 itself; the general bound conditions on U2"),
    "private2": ("I(U2; Z | U, U2, T1, T2)", None,
                 "conditions on U2 itself; the general bound conditions on U1"),
    "desc_sum": ("I(T1, T2; S2 | Z)", (("T1", "T2"), ("S2",), Z),
                 "general bound describes (S1, S2), not S2 alone"),
    "refine_sum": ("I(V1, V2; S2 | U, U1, U2, T1, T2, Z)",
                   (("V1", "V2"), ("S2",), ("U", "U1", "U2", "T1", "T2") + Z),
                   "general bound describes (S1, S2), not S2 alone"),
}


@dataclass(frozen=True)
class Discrepancy:
    term: str
    printed: str
    used_value: float
    printed_value: float | None
    note: str


@dataclass
class MultisensorBounds:
    values: dict[str, float]
    distortion: float
    discrepancies: list[Discrepancy]


def check_multisensor(channel: ChannelSpec, scheme: SchemeSpec) -> None:
    if channel.sizes["Y1"] != 1 or channel.sizes["Y2"] != 1:
        raise TemplateError("multi-sensor template has no feedback: |Y1| = |Y2| = 1")
    if scheme.sizes["W1"] != 1 or scheme.sizes["W2"] != 1:
        raise TemplateError("multi-sensor template needs trivial W1, W2")


def multisensor_region(channel: ChannelSpec, scheme: SchemeSpec) -> MultisensorBounds:
    """Multi-sensor bounds obtained from the general bound set by substitution."""
    check_multisensor(channel, scheme)
    sj = build_joint(channel, scheme)
    general = evaluate_bounds(sj).as_dict()
    values = {name: general[name] for name in MULTISENSOR_TERMS}
    dist = min_distortion(sj, channel, AUX_VARS + Z)
    notes = []
    for term, (printed, spec, note) in PRINTED_VARIANTS.items():
        pv = None if spec is None else sj.joint.mutual_information(*spec)
        notes.append(Discrepancy(term, printed, values[term], pv, note))
    return MultisensorBounds(values, dist, notes)
