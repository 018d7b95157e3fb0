"""Brute-force max-sum dispersion vs greedy farthest-sum, seeded instances.

Confirms the greedy/exact ratio stays above one half on the instance
families the acceptance suite uses before freezing that bound.
"""
import itertools
import math
import random


def objective(d, subset):
    return sum(d[i][j] for i, j in itertools.combinations(subset, 2))


def exact(d, k):
    best, arg = -1.0, None
    for s in itertools.combinations(range(len(d)), k):
        v = objective(d, s)
        if v > best + 1e-12 * max(1.0, abs(best)):
            best, arg = v, s
    return best, arg


def greedy(d, k):
    n = len(d)
    if k == 1:
        return (0,)
    best, pair = -1.0, None
    for i, j in itertools.combinations(range(n), 2):
        if d[i][j] > best + 1e-12 * max(1.0, best):
            best, pair = d[i][j], (i, j)
    sel = list(pair)
    while len(sel) < k:
        bv, bi = -1.0, None
        for c in range(n):
            if c in sel:
                continue
            v = sum(d[c][s] for s in sel)
            if v > bv + 1e-12 * max(1.0, bv):
                bv, bi = v, c
        sel.append(bi)
    return tuple(sorted(sel))


def uniform_matrix(rng, n):
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d[i][j] = d[j][i] = rng.uniform(0.0, 2.0)
    return d


def embedding_matrix(rng, n):
    dim = rng.randint(2, 8)
    vs = [[rng.gauss(0, 1) for _ in range(dim)] for _ in range(n)]
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            a, b = vs[i], vs[j]
            c = sum(x * y for x, y in zip(a, b)) / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))
            d[i][j] = d[j][i] = 1.0 - c
    return d


if __name__ == "__main__":
    rng = random.Random(7)
    worst = 1.0
    for t in range(200):
        n = rng.randint(2, 10)
        k = rng.randint(1, min(5, n))
        d = uniform_matrix(rng, n) if t % 2 == 0 else embedding_matrix(rng, n)
        ev, _ = exact(d, k)
        gv = objective(d, greedy(d, k))
        if ev > 0:
            worst = min(worst, gv / ev)
    print("worst greedy/exact ratio over 200 instances:", worst)
