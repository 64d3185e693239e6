"""Golden single-cell ripple on the committed sir-5.2 dataset, computed without
the C++ code.

Reads data/sir-5.2/X.csv, builds U as the midpoint of every cell's reproducing
interval, moves one susceptible cell's u into its complement, and re-runs the
non-centred map forward. Writes the proposed U* and the resulting X*."""

import csv
import math
import sys

BETA, GAMMA = 1 / 80, 1 / 10


def read_grid(path):
    rows = list(csv.DictReader(open(path)))
    T = max(int(r["t"]) for r in rows)
    N = max(int(r["j"]) for r in rows)
    x = [[0] * N for _ in range(T)]
    for r in rows:
        x[int(r["t"]) - 1][int(r["j"]) - 1] = int(r["value"]) - 1
    return x


def initial_row(j):
    return [0.0, 1.0, 0.0] if j == 0 else [1.0, 0.0, 0.0]


def transition_row(state, infectives):
    if state == 0:
        return [math.exp(-BETA * infectives), -math.expm1(-BETA * infectives), 0.0]
    if state == 1:
        return [0.0, math.exp(-GAMMA), -math.expm1(-GAMMA)]
    return [0.0, 0.0, 1.0]


def interval(probs, s):
    lower = sum(probs[:s])
    last = max(k for k, p in enumerate(probs) if p > 0)
    upper = 1.0 if s == last else lower + probs[s]
    return lower, upper


def pick(u, probs):
    last = max(k for k, p in enumerate(probs) if p > 0)
    cum = 0.0
    for s, p in enumerate(probs):
        cum += p
        if s == last or u < cum:
            return s
    return last


def rows_for(x, t, j):
    if t == 0:
        return initial_row(j)
    infectives = sum(1 for v in x[t - 1] if v == 1)
    return transition_row(x[t - 1][j], infectives)


def main(data_dir, out_dir):
    x = read_grid(f"{data_dir}/X.csv")
    T, N = len(x), len(x[0])
    u = [[0.0] * N for _ in range(T)]
    for t in range(T):
        for j in range(N):
            lo, hi = interval(rows_for(x, t, j), x[t][j])
            u[t][j] = (lo + hi) / 2
    # First susceptible who stays susceptible while someone is infective.
    cell = next((t, j) for t in range(1, T) for j in range(N)
                if x[t - 1][j] == 0 and x[t][j] == 0 and any(v == 1 for v in x[t - 1]))
    t0, j0 = cell
    lo, hi = interval(rows_for(x, t0, j0), 0)
    u[t0][j0] = (hi + 1.0) / 2  # inside [upper, 1): infection
    xs = [[0] * N for _ in range(T)]
    for t in range(T):
        for j in range(N):
            xs[t][j] = pick(u[t][j], rows_for(xs, t, j))
    with open(f"{out_dir}/sir52_ustar.csv", "w") as f:
        f.write("t,j,value\n")
        for t in range(T):
            for j in range(N):
                f.write(f"{t + 1},{j + 1},{u[t][j]!r}\n")
    with open(f"{out_dir}/sir52_xstar.csv", "w") as f:
        f.write("t,j,value\n")
        for t in range(T):
            for j in range(N):
                f.write(f"{t + 1},{j + 1},{xs[t][j] + 1}\n")
    changed = sum(xs[t][j] != x[t][j] for t in range(T) for j in range(N))
    print(f"changed cell t={t0 + 1} j={j0 + 1}; {changed} cells differ", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/sir-5.2", sys.argv[2] if len(sys.argv) > 2 else "tests/data")
