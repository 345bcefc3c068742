"""Pilot run that pins the trained-chain RMSE threshold for the cubic example.

Trains the 10-layer one-neuron chain on x^3 - 0.25x + 0.2 sampled every
0.01 on [1, 2] with five seeds and records the per-seed RMSE. The
acceptance threshold is twice the pilot mean.

    python scripts/pilot_fig3.py [--out src/s3kit/data/fig3_pilot.json]
"""

import argparse
from pathlib import Path

import numpy as np

from s3kit.builtins import cubic_fig3
from s3kit.io import write_json
from s3kit.piecewise import fit_uniform
from s3kit.training import TrainConfig, train_chain

LAYERS = 10
CONFIG = dict(learning_rate=1e-3, epochs=20_000, init_scale=0.1)
SEEDS = range(5)
SAFETY = 2.0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).parents[1] / "src/s3kit/data/fig3_pilot.json"))
    args = ap.parse_args()

    x = np.array(fit_uniform(lambda v: 0.0, (1.0, 2.0), 0.01).breakpoints)
    y = cubic_fig3(x)
    rmses = []
    for seed in SEEDS:
        net, hist = train_chain(LAYERS, x, y, TrainConfig(seed=seed, **CONFIG), domain=(1.0, 2.0))
        rmse = float(np.sqrt(np.mean((net(x) - y) ** 2)))
        rmses.append(rmse)
        print(f"seed {seed}: rmse {rmse:.6g}")
    mean = float(np.mean(rmses))
    record = {
        "layers": LAYERS,
        "config": CONFIG,
        "seeds": list(SEEDS),
        "rmse": rmses,
        "mean_rmse": mean,
        "safety_factor": SAFETY,
        "tau": SAFETY * mean,
    }
    write_json(args.out, record)
    print(f"tau = {SAFETY} x {mean:.6g} = {SAFETY * mean:.6g} -> {args.out}")


if __name__ == "__main__":
    main()
