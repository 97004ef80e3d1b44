"""JSON documents for channels, schemes, searches and simulations.

Every document carries ``"schema": "cdregion-spec-1"`` and a ``"kind"``.
Arrays are row-major nested lists, or flat lists that reshape to the declared
alphabets. Example channel::

    {"schema": "cdregion-spec-1", "kind": "channel",
     "alphabets": {"S": 2, "S_hat": 2, "S1": 1, ...},
     "p_s": [0.7, 0.3], "p_s1s2": [...], "p_out": [...],
     "distortion": [[0, 1], [1, 0]]}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import fields
from pathlib import Path

import numpy as np

from .channel import AUX_VARS, CHANNEL_KERNELS, CHANNEL_VARS, SCHEME_KERNELS, ChannelSpec, SchemeSpec, Violation
from .errors import ValidationError
from .search import SearchConfig
from .simulator import SimRates

SCHEMA = "cdregion-spec-1"


def _fail(msg):
    raise ValidationError([Violation("SchemaViolation", msg)])


def read_document(path, kind: str) -> dict:
    """Parse a JSON file and check its schema tag and kind.

    Missing or unreadable files raise OSError; malformed content raises
    ValidationError.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        _fail(f"{path}: not valid JSON ({e.msg} at line {e.lineno})")
    if not isinstance(doc, dict):
        _fail(f"{path}: top level must be an object")
    if doc.get("schema") != SCHEMA:
        _fail(f"{path}: schema must be {SCHEMA!r}, got {doc.get('schema')!r}")
    if doc.get("kind") != kind:
        _fail(f"{path}: expected kind {kind!r}, got {doc.get('kind')!r}")
    return doc


def _alphabets(doc, names):
    raw = doc.get("alphabets")
    if not isinstance(raw, dict):
        _fail("'alphabets' must be an object")
    sizes, labels = {}, {}
    for k, v in raw.items():
        if isinstance(v, dict):
            sizes[k] = v.get("size")
            if "labels" in v:
                labels[k] = tuple(v["labels"])
        else:
            sizes[k] = v
    for k, v in sizes.items():
        if not isinstance(v, int) or isinstance(v, bool):
            _fail(f"alphabet {k!r}: size must be an integer")
    unknown = set(sizes) - set(names)
    if unknown:
        _fail(f"unknown alphabets {sorted(unknown)}")
    return sizes, labels


def _array(doc, key, dtype=float):
    if key not in doc:
        _fail(f"missing array {key!r}")
    try:
        return np.array(doc[key], dtype=dtype)
    except (TypeError, ValueError):
        _fail(f"array {key!r} is ragged or non-numeric")


def channel_from_dict(doc: dict) -> ChannelSpec:
    sizes, labels = _alphabets(doc, CHANNEL_VARS)
    sizes.setdefault("S_hat", sizes.get("S"))
    arrays = {k: _array(doc, k) for k in list(CHANNEL_KERNELS) + ["distortion"]}
    return ChannelSpec(sizes, labels=labels, **arrays)


def scheme_from_dict(doc: dict) -> SchemeSpec:
    sizes, _ = _alphabets(doc, AUX_VARS)
    kernels = doc.get("kernels", {})
    if not isinstance(kernels, dict):
        _fail("'kernels' must be an object")
    arrays = {k: _array(kernels, k) for k in SCHEME_KERNELS}
    maps = {k: _array(doc, k) for k in ("f1", "f2")}
    return SchemeSpec(sizes=sizes, mode=doc.get("mode", "causal"), **maps, **arrays)


def load_channel(path) -> ChannelSpec:
    return channel_from_dict(read_document(path, "channel"))


def load_scheme(path) -> SchemeSpec:
    return scheme_from_dict(read_document(path, "scheme"))


def channel_to_dict(ch: ChannelSpec) -> dict:
    alph = {}
    for k, v in ch.sizes.items():
        alph[k] = {"size": v, "labels": list(ch.labels[k])} if k in ch.labels else v
    out = {"schema": SCHEMA, "kind": "channel", "alphabets": alph}
    for k in list(CHANNEL_KERNELS) + ["distortion"]:
        out[k] = np.asarray(getattr(ch, k)).tolist()
    return out


def scheme_to_dict(sc: SchemeSpec) -> dict:
    return {
        "schema": SCHEMA, "kind": "scheme", "mode": sc.mode,
        "alphabets": dict(sc.sizes),
        "kernels": {k: np.asarray(getattr(sc, k)).tolist() for k in SCHEME_KERNELS},
        "f1": np.asarray(sc.f1).tolist(), "f2": np.asarray(sc.f2).tolist(),
    }


def search_from_dict(doc: dict) -> tuple[SearchConfig, list[float]]:
    allowed = {f.name for f in fields(SearchConfig)} | {"schema", "kind", "d_grid"}
    extra = set(doc) - allowed
    if extra:
        _fail(f"unknown search fields {sorted(extra)}")
    kw = {k: v for k, v in doc.items() if k not in ("schema", "kind", "d_grid")}
    if "weights" in kw:
        kw["weights"] = tuple(kw["weights"])
    return SearchConfig(**kw), [float(x) for x in doc.get("d_grid", [])]


SIM_FIELDS = ("n_sweep", "B", "epsilon", "delta", "alpha1", "alpha2", "trials", "seed",
              "codebook_cap", "search_cap", "workers")


def simulation_from_dict(doc: dict) -> tuple[SimRates, dict]:
    extra = set(doc) - set(SIM_FIELDS) - {"schema", "kind", "rates"}
    if extra:
        _fail(f"unknown simulation fields {sorted(extra)}")
    rates = doc.get("rates", {})
    bad = set(rates) - {f.name for f in fields(SimRates)}
    if bad:
        _fail(f"unknown rates {sorted(bad)}")
    return SimRates(**rates), {k: doc[k] for k in SIM_FIELDS if k in doc}


def canonical(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()
