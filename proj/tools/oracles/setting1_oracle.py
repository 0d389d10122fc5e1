"""Backward-induction oracle for simulation setting 1, derived independently of the C++ code.

Only X1..X6 enter the rewards. With e ~ N(0, s^2) at every stage:
  stage 4: R4 = (R3 - 0.5) A4 + e, so A4 = sign(R3 - 0.5) and E[R4 | R3] = |R3 - 0.5|.
  stage 3: R3 = m3 + e with m3 = g (R2 + X4) A3 + X5^2 + X6, so
           V3(a3) = m3 + E|m3 - 0.5 + e| (closed form for a folded normal).
  stage 2: R2 = b2 + e with b2 = (R1 + X2^2 + X3^2 - 0.8) A2, so
           V2(a2) = b2 + E_e[max_a3 V3(a3; R2 = b2 + e)]   (Gauss-Hermite quadrature).
  stage 1: R1 = X1 A1 + e, V1(a1) = X1 a1 + E_e[max_a2 V2(a2; R1 = X1 a1 + e)].
The optimal value is E_X[max_a1 V1(a1)]. Prints it, next to a direct rollout of
the resulting rule and of the stagewise-greedy sign rule, for r3 gains 1 and 2.

usage: python3 setting1_oracle.py [n_draws]
"""
import sys

import numpy as np
from scipy.special import erf

NODES, WEIGHTS = np.polynomial.hermite_e.hermegauss(24)
WEIGHTS = WEIGHTS / WEIGHTS.sum()


def folded_mean(mu, s):
    z = mu / s
    return mu * erf(z / np.sqrt(2.0)) + 2.0 * s / np.sqrt(2.0 * np.pi) * np.exp(-0.5 * z * z)


def v3(r2, x, a3, g, s):
    m = g * (r2 + x[..., 3]) * a3 + x[..., 4] ** 2 + x[..., 5]
    return m + folded_mean(m - 0.5, s)


def best3(r2, x, g, s):
    return np.maximum(v3(r2, x, 1, g, s), v3(r2, x, -1, g, s))


def v2(r1, x, a2, g, s):
    b = (r1 + x[:, 1] ** 2 + x[:, 2] ** 2 - 0.8) * a2
    r2 = b[:, None] + s * NODES[None, :]
    return b + (best3(r2, x[:, None, :], g, s) * WEIGHTS).sum(axis=1)


def best2(r1, x, g, s):
    return np.maximum(v2(r1, x, 1, g, s), v2(r1, x, -1, g, s))


def v1(x, a1, g, s):
    b = x[:, 0] * a1
    total = b.copy()
    for node, w in zip(NODES, WEIGHTS):
        total += w * best2(b + s * node, x, g, s)
    return total


def features(rng, n):
    cov = np.eye(6)
    cov[:6, :6] += 0.2 * (1 - np.eye(6))  # the first ten columns are equicorrelated at 0.2
    return rng.multivariate_normal(np.zeros(6), cov, size=n)


def rollout(x, rng, g, s, rule):
    e = rng.normal(0.0, s, size=(len(x), 4))
    a1 = rule(0, x, None)
    r1 = x[:, 0] * a1 + e[:, 0]
    a2 = rule(1, x, r1)
    r2 = (r1 + x[:, 1] ** 2 + x[:, 2] ** 2 - 0.8) * a2 + e[:, 1]
    a3 = rule(2, x, r2)
    r3 = g * (r2 + x[:, 3]) * a3 + x[:, 4] ** 2 + x[:, 5] + e[:, 2]
    a4 = np.where(r3 - 0.5 >= 0, 1, -1)
    r4 = (r3 - 0.5) * a4 + e[:, 3]
    return r1 + r2 + r3 + r4


def sign(v):
    return np.where(v >= 0, 1, -1)


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    s = 1.0
    for g in (1.0, 2.0):
        rng = np.random.default_rng(1)
        x = features(rng, n)
        plus, minus = v1(x, 1, g, s), v1(x, -1, g, s)
        value = np.maximum(plus, minus)

        def dp_rule(stage, xs, r):
            if stage == 0:
                return sign(v1(xs, 1, g, s) - v1(xs, -1, g, s))
            if stage == 1:
                return sign(v2(r, xs, 1, g, s) - v2(r, xs, -1, g, s))
            return sign(v3(r, xs, 1, g, s) - v3(r, xs, -1, g, s))

        def greedy_rule(stage, xs, r):
            if stage == 0:
                return sign(xs[:, 0])
            if stage == 1:
                return sign(r + xs[:, 1] ** 2 + xs[:, 2] ** 2 - 0.8)
            return sign(r + xs[:, 3])

        dp = rollout(x, rng, g, s, dp_rule)
        greedy = rollout(x, rng, g, s, greedy_rule)
        se = value.std() / np.sqrt(n)
        print(f"gain {g:g}: optimal value {value.mean():.4f} (se {se:.4f}); "
              f"rollout dp {dp.mean():.4f}, greedy {greedy.mean():.4f}")


if __name__ == "__main__":
    main()
