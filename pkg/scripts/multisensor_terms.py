"""Multi-sensor bound values on a random instance, with printed-form differences.

    python3 scripts/multisensor_terms.py --seed 3
"""

import argparse

import numpy as np

from cdregion.instances import random_channel, random_scheme
from cdregion.region import multisensor_region


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    ch = random_channel(rng, {"Y1": 1, "Y2": 1})
    sc = random_scheme(rng, ch, {"W1": 1, "W2": 1})
    res = multisensor_region(ch, sc)
    for k, v in res.values.items():
        print(f"{k:12s} {v:.6f}")
    print(f"{'distortion':12s} {res.distortion:.6f}")
    for d in res.discrepancies:
        pv = "n/a" if d.printed_value is None else f"{d.printed_value:.6f}"
        print(f"{d.term}: used {d.used_value:.6f}, printed form {d.printed} = {pv} ({d.note})")


if __name__ == "__main__":
    main()
