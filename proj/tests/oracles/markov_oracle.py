"""Exact-rational oracle for the two-form learner chain.

Builds the transition matrix straight from the update rule, solves
pi (A - I) = 0, sum(pi) = 1 by Gaussian elimination over Fractions and
prints the stationary vector and its weighted average.  Independent of
the C++ solver and of the closed-form expression.
"""
from fractions import Fraction as F
import itertools
import sys


def update(units, j):
    units = list(units)
    moved = 0
    for i in range(len(units)):
        if i != j and units[i] > 0:
            units[i] -= 1
            moved += 1
    units[j] += moved
    return tuple(units)


def states(m, total):
    out = []
    for c in itertools.product(range(total + 1), repeat=m):
        if sum(c) == total:
            out.append(c)
    return sorted(out)


def solve(m, L, nu):
    total = L * (m - 1)
    st = states(m, total)
    idx = {s: k for k, s in enumerate(st)}
    n = len(st)
    A = [[F(0)] * n for _ in range(n)]
    for s in st:
        for j in range(m):
            A[idx[s]][idx[update(s, j)]] += nu[j]
    # rows of (A^T - I), last replaced by ones
    M = [[A[c][r] - (1 if r == c else 0) for c in range(n)] + [F(0)] for r in range(n)]
    M[-1] = [F(1)] * n + [F(1)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    pi = [M[r][n] / M[r][r] for r in range(n)]
    freqs = [sum(p * F(s[i], total) for p, s in zip(pi, st)) for i in range(m)]
    return st, pi, freqs


if __name__ == "__main__":
    st, pi, fr = solve(2, 2, [F(7, 10), F(3, 10)])
    print("L=2 nu=0.7 pi", pi, "P", fr[0], float(fr[0]))
    st, pi, fr = solve(2, 10, [F(7, 10), F(3, 10)])
    print("L=10 nu=0.7 P", float(fr[0]))
    st, pi, fr = solve(2, 20, [F(7, 10), F(3, 10)])
    print("L=20 nu=0.7 pi", [float(p) for p in pi])
    st, pi, fr = solve(3, 2, [F(1, 3)] * 3)
    print("M=3 L=2 states", len(st), "freqs", fr)
    st, pi, fr = solve(3, 4, [F(2, 5), F(3, 10), F(3, 10)])
    print("M=3 L=4 (0.4,0.3,0.3)", [float(x) for x in fr])
    st, pi, fr = solve(3, 3, [F(2, 5), F(1, 4), F(7, 20)])
    print("M=3 L=3 (0.4,0.25,0.35)", [float(x) for x in fr])
    sys.stdout.flush()
