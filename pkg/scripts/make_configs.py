"""Write the example channel/scheme/search/simulation documents used by the README."""

from pathlib import Path

import numpy as np

from cdregion.config import SCHEMA, canonical, channel_to_dict, scheme_to_dict
from cdregion.instances import probe_erasure_channel
from cdregion.region import monostatic_scheme

OUT = Path(__file__).resolve().parent / "configs"


def main():
    OUT.mkdir(exist_ok=True)
    ch = probe_erasure_channel()
    probe = monostatic_scheme(ch, [[0.5, 0.5]], np.array([[1.0, 0.0]]))
    (OUT / "probe_channel.json").write_text(canonical(channel_to_dict(ch)))
    (OUT / "probe_scheme.json").write_text(canonical(scheme_to_dict(probe)))
    search = {
        "schema": SCHEMA, "kind": "search",
        "cardinalities": {"U": 1, "W1": 1, "W2": 1, "U1": 2, "U2": 2,
                          "T1": 1, "T2": 1, "V1": 1, "V2": 1},
        "weights": [0.0, 1.0, 0.0], "strategy": "coordinate_ascent",
        "budget": 150, "seed": 2024,
        "d_grid": [0.13, 0.17, 0.21, 0.25, 0.3],
    }
    (OUT / "probe_search.json").write_text(canonical(search))
    sim = {
        "schema": SCHEMA, "kind": "simulation",
        "rates": {"R1pp": 0.8 * 0.69},
        "n_sweep": [8, 12, 16], "B": 1, "epsilon": 0.9, "trials": 500, "seed": 7,
    }
    (OUT / "probe_simulation.json").write_text(canonical(sim))


if __name__ == "__main__":
    main()
