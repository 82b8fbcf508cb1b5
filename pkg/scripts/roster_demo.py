"""Disguise every model system by a random change of unknowns, then recover it.

    python scripts/roster_demo.py --seed 3

Prints the scrambled coefficients, the detected family and model, and the
residual of the recovered reduction.
"""
import argparse

import numpy as np

from nlkg.classifier import classify
from nlkg.cubic_system import ALL_MODELS, GL2Transform, model_catalog, transform_by_substitution
from nlkg.reducer import reduce


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    np.set_printoptions(precision=3, suppress=True, linewidth=120)
    for model in ALL_MODELS:
        while True:
            m = rng.normal(size=(2, 2))
            if 0.1 <= abs(np.linalg.det(m)) <= 10:
                break
        c = transform_by_substitution(model_catalog(model), GL2Transform(*m.ravel()))
        label = classify(c)
        res = reduce(c)
        print(f"{str(model):16s} {np.array(c.as_array())}  -> {label.family:8s} {str(res.model):16s}"
              f" residual {float(res.residual):.1e}")


if __name__ == "__main__":
    main()
