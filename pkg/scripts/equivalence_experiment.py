"""Desk-scale equivalence experiment: six random members with six hidden
neurons, trained 20 times each on synthetic piecewise-linear regression,
compared pairwise with Welch's t-test.

    python scripts/equivalence_experiment.py [--trials 20] [--out results/]
"""

import argparse
from pathlib import Path

from s3kit.io import write_json
from s3kit.stats import column_means, pairwise_welch
from s3kit.training import PwlTask, TrainConfig, equivalence_experiment, random_distinct_topologies

N_HIDDEN = 6
N_NETWORKS = 6
CONFIG = TrainConfig(learning_rate=1e-2, epochs=5000, seed=0, init_scale=0.1)


def run(trials=20, topology_seed=0, workers=None):
    tops = random_distinct_topologies(N_HIDDEN, N_NETWORKS, topology_seed)
    names = ["I", "II", "III", "IV", "V", "VI"]
    result = equivalence_experiment(tops, PwlTask(), trials, CONFIG, names=names, workers=workers)
    return tops, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--topology-seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    tops, result = run(args.trials, args.topology_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.table.write_csv(out / "equivalence_rmse.csv")
    pvals = {f"{a}-{b}": r.p for (a, b), r in pairwise_welch(result.table).items()}
    for name, t in zip(result.table, tops):
        print(f"network {name:>3}: {t.to_text()}")
    for k, p in pvals.items():
        print(f"{k:>7}: p = {p:.4f}")
    above = sum(p > 0.05 for p in pvals.values())
    print(f"{above}/{len(pvals)} p-values above 0.05; failures: {result.failures}")
    write_json(out / "equivalence_summary.json", {
        "topologies": [t.to_text() for t in tops],
        "means": column_means(result.table),
        "p_values": pvals,
        "above_0.05": above,
        "failures": result.failures,
    })


if __name__ == "__main__":
    main()
