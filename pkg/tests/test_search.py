import numpy as np
import pytest

from cdregion.channel import AUX_VARS, Z, build_joint, validate
from cdregion.errors import ArgumentError, EmptyResult
from cdregion.estimation import min_distortion
from cdregion.instances import bsc_monostatic_channel, monostatic_channel, probe_erasure_channel
from cdregion.search import SearchConfig, best_rate, embed_scheme, evaluate_scheme, tradeoff

SMALL = {"U": 1, "W1": 1, "W2": 1, "U1": 2, "U2": 2, "T1": 1, "T2": 1, "V1": 1, "V2": 1}


def noiseless_channel():
    p_y = np.zeros((2, 1, 2, 2))
    for x1 in range(2):
        p_y[x1, 0, :, x1] = 1.0
    return monostatic_channel(p_y, [0.5, 0.5])


def test_config_invariants():
    with pytest.raises(ArgumentError):
        SearchConfig(weights=(0, 0, 0))
    with pytest.raises(ArgumentError):
        SearchConfig(distortion_cap=-1)
    with pytest.raises(ArgumentError):
        SearchConfig(budget=0)
    with pytest.raises(ArgumentError):
        SearchConfig(strategy="annealing")


@pytest.mark.parametrize("strategy", ["exhaustive_deterministic", "coordinate_ascent", "random_restart"])
def test_noiseless_uplink_reaches_one_bit(strategy):
    cfg = SearchConfig({**SMALL, "U2": 1}, strategy=strategy, budget=120, seed=3)
    res = best_rate(noiseless_channel(), cfg)
    assert res.rate.R1 == pytest.approx(1.0, abs=1e-6 if strategy != "random_restart" else 0.05)


def test_unreachable_distortion_is_empty():
    ch = bsc_monostatic_channel(0.1)
    cfg = SearchConfig({**SMALL, "U2": 1}, distortion_cap=0.0, strategy="random_restart", budget=10)
    with pytest.raises(EmptyResult) as err:
        best_rate(ch, cfg)
    assert err.value.best is not None
    assert validate(ch, err.value.best) == []


def test_probe_toy_endpoints():
    ch = probe_erasure_channel()
    cfg = SearchConfig(SMALL, strategy="exhaustive_deterministic", budget=200, seed=0)
    curve = tradeoff(ch, cfg, [0.3, 0.13])
    assert [p.D for p in curve.points] == [0.13, 0.3]
    assert curve.rates == pytest.approx([0.69, 0.95], abs=1e-9)


def test_curve_points_are_feasible_and_monotone():
    ch = probe_erasure_channel()
    cfg = SearchConfig(SMALL, strategy="coordinate_ascent", budget=60, seed=5)
    grid = [0.13, 0.2, 0.25, 0.3]
    curve = tradeoff(ch, cfg, grid)
    assert np.all(np.diff(curve.rates) >= 0)
    assert np.all(curve.hull() >= curve.rates - 1e-12)
    for p in curve.points:
        assert validate(ch, p.scheme) == []
        d = min_distortion(build_joint(ch, p.scheme), ch, AUX_VARS + Z)
        assert d == pytest.approx(p.distortion, abs=1e-9)
        assert d <= p.D + 1e-12
    assert tradeoff(ch, cfg, grid).to_csv() == curve.to_csv()


def test_state_independent_channel_gives_flat_curve():
    ch = bsc_monostatic_channel(0.1)
    cfg = SearchConfig({**SMALL, "U2": 1}, strategy="exhaustive_deterministic", budget=50)
    curve = tradeoff(ch, cfg, [0.3, 0.4, 0.5])
    assert curve.rates == pytest.approx([0.5310044065] * 3, abs=1e-9)


def test_embedding_preserves_objective():
    ch = probe_erasure_channel()
    res = best_rate(ch, SearchConfig(SMALL, strategy="exhaustive_deterministic", budget=50))
    big = embed_scheme(res.scheme, ch, {"U": 2, "W1": 2, "W2": 2, "U1": 3, "T1": 2, "V2": 2})
    for w in [(0, 1, 0), (1, 1, 1), (0.5, 0, 2)]:
        a = evaluate_scheme(ch, res.scheme, w, np.inf)
        b = evaluate_scheme(ch, big, w, np.inf)
        assert a.objective == pytest.approx(b.objective, abs=1e-9)
        assert a.distortion == pytest.approx(b.distortion, abs=1e-12)


def test_warm_start_never_loses():
    ch = probe_erasure_channel()
    seed_res = best_rate(ch, SearchConfig(SMALL, distortion_cap=0.3,
                                          strategy="exhaustive_deterministic", budget=200))
    big = embed_scheme(seed_res.scheme, ch, {"U1": 3})
    cfg = SearchConfig({**SMALL, "U1": 3}, distortion_cap=0.3, strategy="random_restart", budget=5)
    res = best_rate(ch, cfg, warm_start=[big])
    assert res.objective >= seed_res.objective - 1e-9
