"""Measure how long RK4 keeps the limit-ODE invariants of each model within a tolerance.

For each model, integrates a batch of random initial states with
|α1|² + |α2|² ≤ 1 and reports the first s at which some conserved quantity
drifts past the tolerance (inf if it never does before --s-end).

    python scripts/ode_horizon.py --s-end 20 --dt 1e-3 --tol 1e-8
"""
import argparse
import math

import numpy as np

from nlkg.cubic_system import NAMED_MODELS, model_catalog
from nlkg.errors import BlowUpError
from nlkg.limit_ode import RECOMMENDED_S_MAX, conserved_quantities, integrate


def horizon(model, a0, s_end, dt, tol):
    c = model_catalog(model)
    try:
        tr = integrate(c, a0, s_end, dt)
        s, path = tr.s, tr.alpha
    except BlowUpError as err:
        s, path = err.partial
    path = path.transpose(1, 0, 2)
    drift = np.zeros(len(s))
    for q in conserved_quantities(c):
        drift = np.maximum(drift, np.max(np.abs(q.value_at(path) - q.value_at(a0)), axis=-1))
    over = np.nonzero(drift > tol)[0]
    return (float(s[over[0]]) if len(over) else math.inf), float(drift.max())


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--s-end", type=float, default=20.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    r = np.sqrt(rng.uniform(0, 1, (2, args.samples)))
    a0 = r * np.exp(2j * np.pi * rng.uniform(0, 1, (2, args.samples))) / math.sqrt(2)
    print(f"{'model':16s} {'horizon':>10s} {'max drift':>10s} {'recommended':>12s}")
    for model in NAMED_MODELS:
        h, worst = horizon(model, a0, args.s_end, args.dt, args.tol)
        print(f"{str(model):16s} {h:10.3g} {worst:10.2e} {RECOMMENDED_S_MAX[model.kind]:12.3g}")


if __name__ == "__main__":
    main()
