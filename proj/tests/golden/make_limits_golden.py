"""Regenerates limits_table6.csv from the closed-form sums, evaluated here
independently of the C++ code. Run from this directory."""

from math import log2

S_TABLE = [0.05, 0.2, 0.45, 0.7, 0.85, 0.95]
RATE = 3.37
ROWS = [(2, 1), (4, 2), (6, 3), (4, 1)]


def S(x):
    return S_TABLE[x] if x < len(S_TABLE) else 1.0


def h(p):
    return 0.0 if p in (0.0, 1.0) else -(p * log2(p) + (1 - p) * log2(1 - p))


def q(i, g):
    return 0.0 if S(i) >= 1 else h((S(i + g) - S(i)) / (1 - S(i)))


def crw_dir(n, g, lead):
    return (g - sum(S(i) for i in range(lead))
            + sum((1 - S(i)) * (1 - S(i + lead)) for i in range(n - g)))


def jfc_dir(n, g, lead):
    return (sum(h(S(i)) for i in range(g - lead))
            + sum((1 - S(i)) * h(S(i + g - lead)) for i in range(lead))
            + sum((1 - S(i)) * (1 - S(i + lead)) * q(i, g) for i in range(n - g)))


def rows():
    n = len(S_TABLE)
    for g, tau in ROWS:
        yield "trad", g, tau, sum(h(S(i)) for i in range(n))
        yield "srw1", g, tau, n - sum(S(i) for i in range(n - g))
        yield "srw2", g, tau, g + n - sum(S(i) for i in range(n))
        yield "crw", g, tau, (crw_dir(n, g, tau) + crw_dir(n, g, g - tau)) / 2
        yield "jfs", g, tau, (sum(h(S(i)) for i in range(g))
                              + sum((1 - S(i)) * q(i, g) for i in range(n - g)))
        yield "jfc", g, tau, (jfc_dir(n, g, tau) + jfc_dir(n, g, g - tau)) / 2


with open("limits_table6.csv", "w") as f:
    f.write("scheme,gT,gTau,bits,bits_per_period\n")
    for name, g, tau, bits in rows():
        f.write(f"{name},{g},{tau},{bits:.6f},{bits * RATE / g:.6f}\n")
