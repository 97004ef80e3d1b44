import csv
import json

import numpy as np
import pytest

from cdregion.cli import main
from cdregion.config import SCHEMA, canonical, channel_to_dict, load_channel, load_scheme, scheme_to_dict
from cdregion.channel import simple_scheme
from cdregion.instances import bsc_monostatic_channel, probe_erasure_channel, random_channel, random_scheme
from cdregion.region import monostatic_region, monostatic_scheme


@pytest.fixture
def files(tmp_path):
    ch = probe_erasure_channel()
    sc = monostatic_scheme(ch, [[0.5, 0.5]], [[1.0, 0.0]])
    paths = {
        "channel": tmp_path / "channel.json",
        "scheme": tmp_path / "scheme.json",
        "search": tmp_path / "search.json",
        "sim": tmp_path / "sim.json",
    }
    paths["channel"].write_text(canonical(channel_to_dict(ch)))
    paths["scheme"].write_text(canonical(scheme_to_dict(sc)))
    paths["search"].write_text(canonical({
        "schema": SCHEMA, "kind": "search", "strategy": "exhaustive_deterministic", "budget": 40,
        "cardinalities": {"U": 1, "W1": 1, "W2": 1, "U1": 2, "U2": 2, "T1": 1, "T2": 1, "V1": 1, "V2": 1},
        "d_grid": [0.13, 0.3]}))
    paths["sim"].write_text(canonical({
        "schema": SCHEMA, "kind": "simulation", "rates": {"R1pp": 0.5}, "n_sweep": [8],
        "epsilon": 0.9, "trials": 10, "seed": 3}))
    return paths


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_roundtrip(files):
    ch = load_channel(files["channel"])
    sc = load_scheme(files["scheme"])
    assert scheme_to_dict(sc) == json.loads(files["scheme"].read_text())
    assert channel_to_dict(ch) == json.loads(files["channel"].read_text())


def test_validate_exit_codes(files, tmp_path):
    assert main(["validate", "--channel", str(files["channel"]), "--scheme", str(files["scheme"])]) == 0
    doc = json.loads(files["scheme"].read_text())
    doc["kernels"]["p_u1"] = [[[0.5, 0.6]]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--channel", str(files["channel"]), "--scheme", str(bad)]) == 2
    assert main(["validate", "--channel", str(tmp_path / "missing.json")]) == 1
    bad.write_text("{not json")
    assert main(["validate", "--channel", str(bad)]) == 2


def test_strictly_causal_flag(tmp_path):
    rng = np.random.default_rng(0)
    ch = random_channel(rng)
    sc = random_scheme(rng, ch)
    (tmp_path / "c.json").write_text(canonical(channel_to_dict(ch)))
    (tmp_path / "s.json").write_text(canonical(scheme_to_dict(sc)))
    args = ["validate", "--channel", str(tmp_path / "c.json"), "--scheme", str(tmp_path / "s.json")]
    assert main(args) == 0
    assert main(args + ["--strictly-causal"]) == 2


def test_region_monostatic(files, tmp_path, capsys):
    out = tmp_path / "region"
    assert main(["region", "--channel", str(files["channel"]), "--scheme", str(files["scheme"]),
                 "--out", str(out)]) == 0
    rows = read_csv(out / "vertices.csv")
    best = max(float(r[1]) for r in rows[1:])
    expect = monostatic_region(probe_erasure_channel(), [[0.5, 0.5]], [[1.0, 0.0]]).rate_bound
    assert best == pytest.approx(expect, abs=1e-12)
    assert json.loads((out / "manifest.json").read_text())["status"] == "ok"


def test_region_constant_scheme_is_origin(tmp_path):
    ch = bsc_monostatic_channel()
    sc = simple_scheme(ch)
    (tmp_path / "c.json").write_text(canonical(channel_to_dict(ch)))
    (tmp_path / "s.json").write_text(canonical(scheme_to_dict(sc)))
    assert main(["region", "--channel", str(tmp_path / "c.json"), "--scheme", str(tmp_path / "s.json"),
                 "--out", str(tmp_path / "o")]) == 0
    assert read_csv(tmp_path / "o" / "vertices.csv")[1:] == [["0.0", "0.0", "0.0"]]


def test_capacity_and_empty_codes(files, tmp_path):
    args = ["region", "--channel", str(files["channel"]), "--scheme", str(files["scheme"]),
            "--out", str(tmp_path / "o"), "--cap", "10"]
    assert main(args) == 3
    args = ["tradeoff", "--channel", str(files["channel"]), "--config", str(files["search"]),
            "--d-grid", "0.01", "--out", str(tmp_path / "t")]
    assert main(args) == 4
    args = ["simulate", "--channel", str(files["channel"]), "--scheme", str(files["scheme"]),
            "--config", str(files["sim"]), "--cap", "4", "--out", str(tmp_path / "s")]
    assert main(args) == 3


SUBCOMMANDS = {
    "region": lambda f: ["region", "--channel", f["channel"], "--scheme", f["scheme"]],
    "estimate": lambda f: ["estimate", "--channel", f["channel"], "--scheme", f["scheme"],
                           "--conditioning", "X1,X2,Y"],
    "tradeoff": lambda f: ["tradeoff", "--channel", f["channel"], "--config", f["search"], "--seed", "9"],
    "simulate": lambda f: ["simulate", "--channel", f["channel"], "--scheme", f["scheme"],
                           "--config", f["sim"], "--seed", "9"],
}


@pytest.mark.parametrize("name", sorted(SUBCOMMANDS))
def test_byte_identical_rerun(name, files, tmp_path):
    f = {k: str(v) for k, v in files.items()}
    outs = []
    for rep in range(2):
        out = tmp_path / f"{name}{rep}"
        assert main(SUBCOMMANDS[name](f) + ["--out", str(out)]) == 0
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    assert csvs
    for n in csvs + ["resolved_config.json"]:
        assert (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
    m0 = json.loads((outs[0] / "manifest.json").read_text())
    m1 = json.loads((outs[1] / "manifest.json").read_text())
    assert m0["config_hash"] == m1["config_hash"]
