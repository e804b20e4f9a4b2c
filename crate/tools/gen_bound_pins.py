#!/usr/bin/env python3
"""Regenerate the high-precision pinned values for the bound-calculator tests.

Evaluates every bound formula with mpmath at 60 decimal digits on 100
randomized constant bundles and freezes inputs plus expected outputs into
crates/core/tests/data/bound_pins.json. Inputs are dyadic rationals (multiples
of 2^-20) so both this script and the f64 test read bit-identical values.

Run from the repository root:  python3 tools/gen_bound_pins.py
"""

import json
import math
import os

from mpmath import mp, mpf, exp, log, sqrt

mp.dps = 60

MASK = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


class Rng:
    def __init__(self, seed):
        self.state = seed

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        x = self.state
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
        return x ^ (x >> 31)

    def uniform(self, lo, hi):
        u = self.next_u64() / 2.0**64
        # snap to a dyadic grid so the decimal repr is exact in f64
        v = lo + (hi - lo) * u
        return round(v * 2**20) / 2**20

    def int_range(self, lo, hi):
        return lo + self.next_u64() % (hi - lo + 1)


E = exp(mpf(1))


def log_dim_factor(l1, n, d):
    ld = log(mpf(d))
    return (5 * sqrt(ld) + 4 * E * ld / sqrt(mpf(n))) ** 2


def convex_stability(c, n, d, eps_t):
    l0, l1, l2, lam, D = c["l0"], c["l1"], c["l2"], c["lambda"], c["diameter"]
    sqrt_eps = 4 * sqrt(mpf(2)) * l0 * (lam + 4 * D * l2) / lam ** mpf("1.5") * sqrt(eps_t)
    brace = l0 + 64 * l0**2 * l2**2 * D / lam**3 + 16 * l1**2 * D / lam * log_dim_factor(l1, n, d)
    return sqrt_eps + 8 * l0 / (n * lam) * brace


def good_event(c, n, d):
    l0, l1, l2, lam = c["l0"], c["l1"], c["l2"], c["lambda"]
    return 512 * l0**2 * l2**2 / (n * lam**4) + 128 * l1**2 / (n * lam**2) * log_dim_factor(l1, n, d)


def min_3d(c):
    if c["l2"] == 0:
        return 3 * c["diameter"]
    return min(3 * c["diameter"], mpf(3) / 2 * c["lambda"] / c["l2"])


def local_minima_gen(c, n, d):
    l0, l1, l2, lam = c["l0"], c["l1"], c["l2"], c["lambda"]
    inner = 64 * l0**2 * l2**2 / lam**3 + 16 * l1**2 / lam * log_dim_factor(l1, n, d)
    return 8 * l0 / (n * lam) * (l0 + inner * min_3d(c))


def xi_terms(c, n, d):
    l0, l1, l2, lam, alpha, D, K = (
        c["l0"], c["l1"], c["l2"], c["lambda"], c["alpha"], c["diameter"], c["k"],
    )
    xi1 = K * good_event(c, n, d)
    r_curv = lam / (8 * l2) if l2 > 0 else mpf("inf")
    r = min(r_curv, alpha**2 / (16 * l0 * l1))
    if r >= 3 * D:
        cover = mpf(1)
    else:
        cover = (3 * D / r) ** d
    xi2 = 2 * cover * exp(-n * alpha**4 / (256 * l0**4)) + 4 * d * cover * exp(
        -n * lam**2 / (256 * l1**2)
    )
    return xi1, xi2, r


def nonconvex_gen(c, n, d, zeta, delta, delta_prime, spurious):
    l0, lam, D, K, M = c["l0"], c["lambda"], c["diameter"], c["k"], c["m"]
    xi1, xi2, _ = xi_terms(c, n, d)
    if spurious:
        return (
            8 * l0 / lam * zeta
            + 2 * l0 * D * delta
            + 2 * K * M / sqrt(mpf(n))
            + 8 * K * l0**2 / (n * lam)
            + (l0 * min_3d(c) + 2 * M) * xi1
            + 2 * M * xi2
        )
    return (
        8 * l0 / lam * zeta
        + 2 * l0 * D * delta
        + 6 * M * delta_prime
        + 8 * (K + 4) * l0**2 / (n * lam)
        + ((K + 4) * l0 / K * min_3d(c) + 6 * M) * xi1
        + 6 * M * xi2
    )


def nonconvex_excess(c, n, d, zeta, delta, delta_prime, opt_gap, spurious):
    l0, lam, D, K, M = c["l0"], c["lambda"], c["diameter"], c["k"], c["m"]
    xi1, xi2, _ = xi_terms(c, n, d)
    if spurious:
        return (
            4 * l0 / lam * zeta
            + l0 * D * delta
            + 2 * K * M / sqrt(mpf(n))
            + 8 * K * l0**2 / (n * lam)
            + (l0 * min_3d(c) + 2 * M) * xi1
            + 2 * M * xi2
            + opt_gap
        )
    return (
        4 * l0 / lam * zeta
        + l0 * D * delta
        + 8 * M * delta_prime
        + 8 * (K + 4) * l0**2 / (n * lam)
        + ((K + 4) * l0 / K * min_3d(c) + 8 * M) * xi1
        + 8 * M * xi2
    )


def main():
    rng = Rng(0x5EED_B0B5)
    rows = []
    attempts = 0
    while len(rows) < 100 and attempts < 10000:
        attempts += 1
        l1 = rng.uniform(0.5, 4.0)
        lam = rng.uniform(0.05, min(1.0, 0.9 * l1))
        c = {
            "l0": mpf(repr(rng.uniform(0.3, 3.0))),
            "l1": mpf(repr(l1)),
            "l2": mpf(0) if rng.next_u64() % 5 == 0 else mpf(repr(rng.uniform(0.1, 8.0))),
            "lambda": mpf(repr(lam)),
            "alpha": mpf(repr(rng.uniform(0.05, 1.0))),
            "m": mpf(repr(rng.uniform(0.2, 5.0))),
            "diameter": mpf(repr(rng.uniform(0.5, 6.0))),
            "k": rng.int_range(1, 6),
        }
        n = rng.int_range(50, 100_000)
        d = rng.int_range(2, 32)
        t = rng.int_range(1, 100_000)
        eps_t = mpf(repr(rng.uniform(0.0, 1.0)))
        zeta = mpf(repr(rng.uniform(0.0, 0.5)))
        delta = mpf(repr(rng.uniform(0.0, 0.2)))
        delta_prime = mpf(repr(rng.uniform(0.0, 0.2)))
        opt_gap = mpf(repr(rng.uniform(0.0, 1.0)))
        eps = mpf(repr(rng.uniform(0.001, 0.5)))
        # tail deltas chosen so exponents stay in f64 range
        u_g = rng.uniform(0.01, 1.0)
        delta_g = sqrt(mpf(repr(u_g)) * 600 * 16 * c["l0"] ** 4 / n)
        u_h = rng.uniform(0.01, 1.0)
        delta_h = sqrt(mpf(repr(u_h)) * 600 * 16 * c["l1"] ** 2 / n)
        # snap the derived deltas to exact dyadics as well
        delta_g = mpf(repr(round(float(delta_g) * 2**20) / 2**20))
        delta_h = mpf(repr(round(float(delta_h) * 2**20) / 2**20))
        if delta_g <= 0 or delta_h <= 0:
            continue

        xi1, xi2, r = xi_terms(c, n, d)
        # keep every pinned value in comfortable f64 territory
        if xi2 != 0 and (xi2 < mpf("1e-280") or xi2 > mpf("1e280")):
            continue

        expected = {
            "convex_stability": convex_stability(c, n, d, eps_t),
            "convex_excess": eps_t + convex_stability(c, n, d, eps_t),
            "gd_opt": c["diameter"] ** 2 * c["l1"] / (2 * t),
            "sgd_opt": c["diameter"]
            * (c["l1"] ** 2 + 2 * c["l0"] ** 2)
            / (2 * c["l1"] * sqrt(mpf(t + 1)))
            * (1 + log(mpf(t + 1))),
            "good_event": good_event(c, n, d),
            "local_minima_gen": local_minima_gen(c, n, d),
            "xi1": xi1,
            "xi2": xi2,
            "r": r,
            "nonconvex_gen_with": nonconvex_gen(c, n, d, zeta, delta, delta_prime, True),
            "nonconvex_gen_without": nonconvex_gen(c, n, d, zeta, delta, delta_prime, False),
            "nonconvex_excess_with": nonconvex_excess(
                c, n, d, zeta, delta, delta_prime, opt_gap, True
            ),
            "nonconvex_excess_without": nonconvex_excess(
                c, n, d, zeta, delta, delta_prime, opt_gap, False
            ),
            "pgd_iter_statement": 2 * c["m"] * max(2 * c["l1"] / eps**2, 256 * c["l2"] ** 2 / (9 * eps)),
            "pgd_iter_proof": 2 * c["m"] * max(4 * c["l1"] / eps**2, 256 * c["l2"] ** 2 / (9 * eps)),
            "tail_gradient_inner": 2 * exp(-n * delta_g**2 / (16 * c["l0"] ** 4)),
            "tail_hessian": 2 * d * exp(-n * delta_h**2 / (16 * c["l1"] ** 2)),
            "gradient_moment": c["l0"] ** 2 / n,
            "hessian_moment": (
                10 * sqrt(log(mpf(d))) * c["l1"] + 8 * E * log(mpf(d)) * c["l1"] / sqrt(mpf(n))
            )
            ** 2
            / n,
        }
        rows.append(
            {
                "inputs": {
                    "l0": float(c["l0"]),
                    "l1": float(c["l1"]),
                    "l2": float(c["l2"]),
                    "lambda": float(c["lambda"]),
                    "alpha": float(c["alpha"]),
                    "m": float(c["m"]),
                    "diameter": float(c["diameter"]),
                    "k": c["k"],
                    "n": n,
                    "d": d,
                    "t": t,
                    "eps_t": float(eps_t),
                    "zeta": float(zeta),
                    "delta": float(delta),
                    "delta_prime": float(delta_prime),
                    "opt_gap": float(opt_gap),
                    "eps": float(eps),
                    "delta_g": float(delta_g),
                    "delta_h": float(delta_h),
                },
                "expected": {k: float(v) for k, v in expected.items()},
            }
        )

    out = {
        "generator": "tools/gen_bound_pins.py (mpmath dps=60, splitmix64 seed 0x5EEDB0B5)",
        "rows": rows,
    }
    path = os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        "crates",
        "core",
        "tests",
        "data",
        "bound_pins.json",
    )
    with open(path, "w") as f:
        json.dump(out, f, indent=1)
    print(f"wrote {len(rows)} rows to {path}")


if __name__ == "__main__":
    main()
