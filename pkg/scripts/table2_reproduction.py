"""Recompute pairwise Welch p-values and column means from the bundled
CIFAR-10 error-rate table and set them against the printed values."""

from s3kit.stats import column_means, load_table1, pairwise_welch

PRINTED_P = {
    ("I", "II"): 0.8765, ("I", "III"): 0.1030, ("I", "IV"): 1.0, ("I", "V"): 0.2723, ("I", "VI"): 0.4743,
    ("II", "III"): 0.0671, ("II", "IV"): 0.8738, ("II", "V"): 0.2179, ("II", "VI"): 0.4439,
    ("III", "IV"): 0.1007, ("III", "V"): 0.4857, ("III", "VI"): 0.2179,
    ("IV", "V"): 0.2684, ("IV", "VI"): 0.4701,
    ("V", "VI"): 0.5856,
}
PRINTED_MEANS = {"I": 0.1050, "II": 0.1049, "III": 0.1033, "IV": 0.1050, "V": 0.1039, "VI": 0.1044}


def main():
    table = load_table1()
    print(f"{'pair':>8} {'printed':>8} {'welch':>8}  match(+-0.005)")
    for (a, b), r in pairwise_welch(table).items():
        p0 = PRINTED_P[(a, b)]
        print(f"{a + '-' + b:>8} {p0:8.4f} {r.p:8.4f}  {abs(r.p - p0) <= 0.005}")
    print(f"{'column':>8} {'printed':>8} {'mean':>8}  match(+-5e-5)")
    for k, m in column_means(table).items():
        print(f"{k:>8} {PRINTED_MEANS[k]:8.4f} {m:8.5f}  {abs(m - PRINTED_MEANS[k]) <= 5e-5}")


if __name__ == "__main__":
    main()
