import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdregion.channel import build_joint, simple_scheme
from cdregion.errors import TemplateError
from cdregion.instances import (PROBE, SILENT, bsc_monostatic_channel, probe_erasure_channel,
                                random_channel, random_scheme)
from cdregion.region import (BOUND_NAMES, BoundSet, _direct_system, check_monostatic, eliminate,
                             evaluate_bounds, lemma_checks, membership, membership_margin,
                             monostatic_region, multisensor_region, symbolic_region)

bound_sets = st.lists(st.floats(0, 1, allow_nan=False), min_size=15, max_size=15).map(
    lambda v: BoundSet.from_mapping(dict(zip(BOUND_NAMES, v))))


def _points(rng, poly, k=200):
    hi = poly.vertices.max(axis=0) * 1.3 + 0.05 if not poly.empty else np.full(3, 1.0)
    return rng.uniform(0, 1, size=(k, 3)) * hi


def test_fifteen_bounds():
    assert len(BOUND_NAMES) == 15


def test_constant_auxiliaries_give_origin_only():
    ch = probe_erasure_channel()
    sc = simple_scheme(ch, {"U1": 1, "U2": 1})
    poly = eliminate(evaluate_bounds(build_joint(ch, sc)))
    np.testing.assert_allclose(poly.vertices, [[0, 0, 0]])


def test_pruned_projection_matches_unpruned(rng):
    A1, B1, _ = symbolic_region(True)
    A0, B0, _ = symbolic_region(False)
    assert len(A1) < len(A0)
    for _ in range(30):
        b = rng.uniform(0, 1, size=15)
        pts = rng.uniform(-0.1, 1.0, size=(300, 3))
        inside1 = np.all(pts @ A1.T <= B1 @ b + 1e-12, axis=1)
        inside0 = np.all(pts @ A0.T <= B0 @ b + 1e-12, axis=1)
        np.testing.assert_array_equal(inside1, inside0)


@settings(max_examples=40, deadline=None)
@given(bound_sets, st.integers(0, 2 ** 32 - 1))
def test_elimination_agrees_with_lp(bounds, seed):
    rng = np.random.default_rng(seed)
    poly = eliminate(bounds)
    for r in _points(rng, poly, 50):
        m = membership_margin(r, bounds)
        if abs(m) < 1e-7:
            continue
        assert poly.contains(r) == (m >= 0)


@settings(max_examples=30, deadline=None)
@given(bound_sets, st.integers(0, 2 ** 32 - 1))
def test_downward_closed(bounds, seed):
    rng = np.random.default_rng(seed)
    poly = eliminate(bounds)
    for v in poly.vertices:
        for _ in range(5):
            assert poly.contains(v * rng.uniform(0, 1, size=3))


def test_membership_witness_and_certificate(rng):
    bounds = BoundSet.from_mapping(dict(zip(BOUND_NAMES, rng.uniform(0.2, 1, 15))))
    bounds = BoundSet.from_mapping({**bounds.as_dict(), "desc1": 0.05, "desc2": 0.05,
                                    "desc_sum": 0.1, "refine1": 0.0, "refine2": 0.0,
                                    "refine_sum": 0.0})
    poly = eliminate(bounds)
    assert not poly.empty
    inside = poly.vertices.mean(axis=0)
    res = membership(inside, bounds)
    assert res.member
    w = res.witness
    G, h = _direct_system(inside, bounds)
    x = np.array([w.R1p, w.R2p, w.Rs1, w.Rs2, w.Rt1, w.Rt2])
    assert np.all(G @ x <= h + 1e-7)
    outside = poly.vertices.max(axis=0) + 0.5
    res = membership(outside, bounds)
    assert not res.member and res.certificate is not None
    assert res.certificate.slack(outside) < 0


@pytest.mark.parametrize("policy, rate, dist", [(PROBE, 0.69, 0.13), (SILENT, 0.95, 0.30)])
def test_probe_toy_closed_form(policy, rate, dist):
    ch = probe_erasure_channel()
    pol = np.eye(2)[policy][None, :]
    pt = monostatic_region(ch, [[0.5, 0.5]], pol)
    assert pt.rate_bound == pytest.approx(rate, abs=1e-12)
    assert pt.distortion == pytest.approx(dist, abs=1e-12)


def test_bsc_uplink_rate():
    ch = bsc_monostatic_channel(0.1)
    pt = monostatic_region(ch, [[0.5, 0.5]], [[1.0]])
    assert pt.rate_bound == pytest.approx(0.5310044065, abs=1e-9)
    assert pt.distortion == pytest.approx(0.3, abs=1e-12)


def test_template_rejects_general_channel(rng):
    with pytest.raises(TemplateError):
        check_monostatic(random_channel(rng))


def test_lemma_guards_random(rng):
    for _ in range(5):
        ch = random_channel(rng)
        sc = random_scheme(rng, ch, description_weight=0.05)
        sj = build_joint(ch, sc)
        rep = lemma_checks(evaluate_bounds(sj), sj)
        assert rep.ok, rep.violations


def test_lemma_two_trigger(rng):
    ch = random_channel(rng)
    sc = random_scheme(rng, ch, {"W2": 1, "U2": 1}, description_weight=0.05)
    sj = build_joint(ch, sc)
    rep = lemma_checks(evaluate_bounds(sj), sj)
    assert rep.lemma2_triggered and rep.max_r2 <= 1e-9 and rep.ok


def test_multisensor_requires_template(rng):
    with pytest.raises(TemplateError):
        multisensor_region(random_channel(rng), random_scheme(rng, random_channel(rng)))


def test_multisensor_reports_printed_differences(rng):
    ch = random_channel(rng, {"Y1": 1, "Y2": 1})
    sc = random_scheme(rng, ch, {"W1": 1, "W2": 1})
    res = multisensor_region(ch, sc)
    j = build_joint(ch, sc).joint
    # with no feedback the description terms lose their Y_q arguments
    assert res.values["desc1"] == pytest.approx(
        j.mutual_information("T1", "S1", ("T2", "Y", "S_R")), abs=1e-12)
    terms = {d.term for d in res.discrepancies}
    assert {"desc_sum", "refine_sum"} <= terms
    ds = next(d for d in res.discrepancies if d.term == "desc_sum")
    # describing S2 alone can never cost more than describing (S1, S2)
    assert ds.printed_value <= ds.used_value + 1e-12
