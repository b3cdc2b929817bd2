"""Fates of the discretised free equation over energies and random seeds.

    python scripts/lattice_demo.py [--seeds 100] [--eta 1]
"""
import argparse
from collections import Counter

import numpy as np

from qnl.lattice import classify_trajectory, ratio_fixed_points


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--eta", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    pairs = np.exp(rng.uniform(-5, 5, size=(args.seeds, 2)))
    for c in (-0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0):
        fp = ratio_fixed_points(c)
        fates = Counter()
        depth = []
        for p0, p1 in pairs:
            tr = classify_trajectory(args.eta, c, float(p0), float(p1), window=5000)
            fates[tr.classification.value] += 1
            if tr.truncation_index is not None:
                depth.append(-tr.truncation_index)
        pts = ", ".join(f"{t:.4f}{'(s)' if s else '(u)'}" for t, s in zip(fp.fixed_points, fp.stable)) or "none"
        trunc = f", truncation depth {min(depth)}..{max(depth)}" if depth else ""
        print(f"e_ratio={c:+.1f}: fixed points {pts}; fates {dict(fates)}{trunc}")


if __name__ == "__main__":
    main()
