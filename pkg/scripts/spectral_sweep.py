"""Spectral radius of every labeled tree on 3..8 vertices; stars should be
the unique maximisers with radius sqrt(n - 1).

    python scripts/spectral_sweep.py [--n-max 8]
"""

import argparse
import math
import time

from s3kit.spectral import extremal_sweep


def main(n_max=8):
    for n in range(3, n_max + 1):
        t0 = time.perf_counter()
        row, _ = extremal_sweep(n)
        print(f"n={n}: {row.n_trees:>7} trees  max rho={row.max_radius:.12f}  sqrt(n-1)={math.sqrt(n - 1):.12f}  "
              f"maximisers={row.maximisers} stars={row.star_count} only_stars={row.maximisers_all_stars}  "
              f"({time.perf_counter() - t0:.2f}s)")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=8, help="largest vertex count (at most 9)")
    main(ap.parse_args().n_max)
