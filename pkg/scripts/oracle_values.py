"""Independent brute-force evaluation of the reference example values.

Uses only the standard library plus mpmath (50 digits) and never imports
``bamc``.  Stationary vectors come from exact Gaussian elimination over
``Fraction``; allocations from enumerating every integer split.  The output
is frozen into ``tests/data/oracle_values.json``.

    python scripts/oracle_values.py > tests/data/oracle_values.json
"""

import itertools
import json
from fractions import Fraction

import mpmath as mp

mp.mp.dps = 50


def beta(n, delta, K, S, c):
    ratio = mp.log(n) / mp.log(c)
    return c * mp.log(mp.ceil(ratio) * 6 * K * S**2 / delta)


def stationary_exact(P):
    # pi (P - I) = 0, sum(pi) = 1, solved with exact rationals
    S = len(P)
    rows = [[P[j][i] - (1 if i == j else 0) for j in range(S)] for i in range(S)]
    rows[-1] = [Fraction(1)] * S
    rhs = [Fraction(0)] * (S - 1) + [Fraction(1)]
    A = [r[:] + [b] for r, b in zip(rows, rhs)]
    for col in range(S):
        piv = next(r for r in range(col, S) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        for r in range(S):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [A[i][S] / A[i][i] for i in range(S)]


def index_value(visits, N, beta_, alpha, S):
    T = sum(visits)
    gini = dev = corr = mp.mpf(0)
    for x in range(S):
        Tx = visits[x]
        denom = alpha * S + Tx
        row = [(alpha + N[x][y]) / denom for y in range(S)]
        if Tx > 0:
            gini += sum(p * (1 - p) for p in row)
            corr += 1 / denom
        dev += mp.mpf(Tx) ** 1.5 / denom**2 * sum(mp.sqrt(p * (1 - p)) for p in row)
    gini *= 2 * beta_ / T
    dev *= mp.mpf("6.6") * beta_**1.5 / T
    corr *= 28 * beta_**2 * S / T
    return gini, dev, corr, gini + dev + corr


def bernstein_radius(p, S, alpha, Tx, zeta):
    d = Tx + alpha * S
    return mp.sqrt((Tx / d) * 2 * p * (1 - p) * zeta / d) + (zeta / 3 + alpha * abs(1 - S * p)) / d


def eb_constants(zeta, alpha, S):
    zp = zeta / 3 + alpha * (S - 1)
    c1 = mp.sqrt(8 * zeta) * (2 * zeta + zp)
    c2 = zp**2 + 4 * zeta * (4 * zeta + zp + 2 * mp.sqrt(zeta * zp)) + zp * mp.sqrt(8 * zeta) * (
        mp.mpf("5.3") * mp.sqrt(zeta) + mp.sqrt(2 * zp)
    )
    return zp, c1, c2


def stationary_radius(pi_x, gamma, n, delta, pi_min):
    e = mp.log((1 / delta) * mp.sqrt(2 / pi_min))
    return mp.sqrt(8 * pi_x * (1 - pi_x) * e / (gamma * n)) + 20 * e / (gamma * n)


def best_allocation(weights, n):
    """Enumerate all splits; pick the one closest (L1) to n*eta, lexicographically
    preferring extra units on lower indices among ties."""
    total = sum(weights)
    target = [Fraction(w, 1) * n / total for w in weights]
    best = None
    for split in itertools.product(range(1, n + 1), repeat=len(weights) - 1):
        last = n - sum(split)
        if last < 1:
            continue
        alloc = list(split) + [last]
        err = sum(abs(a - t) for a, t in zip(alloc, target))
        key = (err, [-a for a in alloc])
        if best is None or key < best[0]:
            best = (key, alloc)
    return best[1]


def n_cutoff(K, gps, pimin, delta):
    inner = 300 / (gps * pimin) * mp.log(2 * K / delta * mp.sqrt(1 / pimin))
    return mp.ceil(K * inner**2)


def main():
    third = mp.mpf(1) / 6  # alpha = 1/(3S) at S = 2
    b = beta(mp.mpf(10) ** 5, mp.mpf("0.05"), 3, 3, mp.mpf("1.1"))
    g, d, c, total = index_value([2, 0], [[1, 0], [0, 0]], mp.mpf(2), third, 2)
    zp, c1, c2 = eb_constants(mp.mpf(10), third, 2)
    pi = stationary_exact([[Fraction(9, 10), Fraction(1, 10)], [Fraction(2, 10), Fraction(8, 10)]])
    eps = Fraction(1, 10)
    pi_lazy = stationary_exact([[Fraction(1, 2), Fraction(1, 2)], [eps, 1 - eps]])
    out = {
        "beta_n1e5_d005_K3_S3": float(b),
        "beta_n2_ceiling": int(mp.ceil(mp.log(2) / mp.log(mp.mpf("1.1")))),
        "beta_n3_ceiling": int(mp.ceil(mp.log(3) / mp.log(mp.mpf("1.1")))),
        "index_term_gini": float(g),
        "index_term_deviation": float(d),
        "index_term_correction": float(c),
        "index_b": float(total),
        "bernstein_radius": float(bernstein_radius(mp.mpf("0.5"), 2, third, 100, mp.mpf(10))),
        "stationary_radius": float(
            stationary_radius(mp.mpf("0.5"), mp.mpf("0.3"), 1000, mp.mpf("0.1"), mp.mpf("0.5"))
        ),
        "eb_zeta_prime": float(zp),
        "eb_c1": float(c1),
        "eb_c2": float(c2),
        "stationary_09_02": [float(p) for p in pi],
        "stationary_lazy_eps01": [float(p) for p in pi_lazy],
        "H_lazy_eps01": float(sum(1 / p for p in pi_lazy)),
        "allocation_1_3_n100": best_allocation([1, 3], 100),
        "allocation_1_1_1_n100": best_allocation([1, 1, 1], 100),
        "n_cutoff_K2_gps03_pimin02_d005": int(n_cutoff(2, mp.mpf("0.3"), mp.mpf("0.2"), mp.mpf("0.05"))),
        "thm1_bound_n1e5_K3_S3": float(304 * 3 * 9 * b**2 / mp.mpf(10) ** 5),
        "thm2_main_lambda2_n1e5": float(2 * b * 2 / mp.mpf(10) ** 5),
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
