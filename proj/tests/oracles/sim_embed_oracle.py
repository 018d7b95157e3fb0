"""Independent reference for the hash-projection embedder.

Recomputes the bag-of-words projection from its definition and prints the
values frozen into tests/unit/sim_target_test.cpp, plus the Monte-Carlo
bound for disjoint-vocabulary cosine similarity.
"""
import math
import random

MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def words(text):
    out, cur = [], ""
    for ch in text.lower():
        if ch.isascii() and ch.isalnum():
            cur += ch
        else:
            if cur:
                out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def sim_embed(text, dim, seed):
    v = [0.0] * dim
    for w in words(text):
        h = splitmix64(fnv1a64(w.encode()) ^ splitmix64(seed & MASK))
        idx = h % dim
        sign = -1.0 if (h >> 63) else 1.0
        v[idx] += sign
    n = math.sqrt(sum(x * x for x in v))
    if n == 0.0:
        v = [0.0] * dim
        v[0] = 1.0
        return v
    return [x / n for x in v]


def cos(a, b):
    return sum(x * y for x, y in zip(a, b))


if __name__ == "__main__":
    for text in ["abc", "abc def abc", "Step by step, verify."]:
        print(repr(text), [repr(x) for x in sim_embed(text, 8, 0)])
    print("abc seed 7", sim_embed("abc", 8, 7))

    rng = random.Random(20240611)
    alphabet = "abcdefghijklmnopqrstuvwxyz"
    below = 0
    worst = 0.0
    trials = 1000
    for _ in range(trials):
        while True:
            wa = ["".join(rng.choice(alphabet) for _ in range(rng.randint(3, 9))) for _ in range(5)]
            wb = ["".join(rng.choice(alphabet) for _ in range(rng.randint(3, 9))) for _ in range(5)]
            if not set(wa) & set(wb):
                break
        c = abs(cos(sim_embed(" ".join(wa), 256, 0), sim_embed(" ".join(wb), 256, 0)))
        worst = max(worst, c)
        if c < 0.3:
            below += 1
    print("disjoint 5-word texts, dim 256: fraction |cos|<0.3 =", below / trials, "worst", worst)
