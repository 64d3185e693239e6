"""Brute-force posterior of the tiny test fixtures, written independently of
the C++ code. Output: config_id,probability with config ids built from the
base-S digits of X in time-major order (cell t*N + j is digit t*N + j)."""

import argparse
import itertools
import math

FIXTURES = {
    # S=2 SIS: 0 susceptible, 1 infective.
    "sis": dict(
        S=2, N=2, T=3, initial=[0.7, 0.3], target={1}, se=0.8, sp=0.9,
        obs={(0, 0): 0, (1, 1): 1, (2, 0): 1, (2, 1): 0},
        rates=lambda r, n: {1: 0.8 * n[1]} if r == 0 else {0: 0.5},
    ),
    # SIR: 0 susceptible, 1 infective, 2 recovered.
    "sir": dict(
        S=3, N=2, T=3, initial=[0.6, 0.4, 0.0], target={1}, se=0.85, sp=0.9,
        obs={(0, 1): 1, (1, 0): 1, (2, 1): 0},
        rates=lambda r, n: {1: 0.9 * n[1]} if r == 0 else ({2: 0.6} if r == 1 else {}),
    ),
}


def transition(r, s, counts, rates):
    out = rates(r, counts)
    total = sum(out.values())
    if s == r:
        return math.exp(-total)
    if total == 0.0:
        return 0.0
    return (1.0 - math.exp(-total)) * out.get(s, 0.0) / total


def emission(y, s, f):
    if s in f["target"]:
        return f["se"] if y == 1 else 1.0 - f["se"]
    return f["sp"] if y == 0 else 1.0 - f["sp"]


def enumerate_fixture(f):
    S, N, T = f["S"], f["N"], f["T"]
    weights = []
    for digits in itertools.product(range(S), repeat=N * T):
        # itertools varies the last digit fastest; reverse so digit 0 is least significant.
        cells = digits[::-1]
        x = [[cells[t * N + j] for j in range(N)] for t in range(T)]
        w = 1.0
        for j in range(N):
            w *= f["initial"][x[0][j]]
        for t in range(T - 1):
            counts = [sum(1 for j in range(N) if x[t][j] == s) for s in range(S)]
            for j in range(N):
                w *= transition(x[t][j], x[t + 1][j], counts, f["rates"])
        for (t, j), y in f["obs"].items():
            w *= emission(y, x[t][j], f)
        weights.append(w)
    total = sum(weights)
    return [w / total for w in weights]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("fixture", choices=sorted(FIXTURES))
    args = parser.parse_args()
    probs = enumerate_fixture(FIXTURES[args.fixture])
    print("config_id,probability")
    for k, p in enumerate(probs):
        print(f"{k},{p:.17g}")


if __name__ == "__main__":
    main()
