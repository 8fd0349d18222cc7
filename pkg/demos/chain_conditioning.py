"""Condition a three-node chain 1 -> 2 -> 3 on a middle value.

X2 = max(2 Z1, Z2), X3 = max(3 X2, Z3). Given X2 = 4 the downstream node has
an atom at 12, and X1 and X3 become conditionally independent, while they
are dependent unconditionally.

Run: python3 demos/chain_conditioning.py
"""

import numpy as np

from maxlinear import (
    ConditionalSampler,
    ConditioningEvent,
    MaxLinearNetwork,
    cdf,
    ci_test_mc,
    sample_conditional,
)


def main():
    chain = MaxLinearNetwork.from_edges(3, [(0, 1, 2.0), (1, 2, 3.0)])
    print(f"P(X <= (1, 2, 6)) = {cdf(chain, [1.0, 2.0, 6.0]):.12f} (exp(-5/3) = {np.exp(-5 / 3):.12f})")

    event = ConditioningEvent((1,), [4.0])
    sampler = ConditionalSampler(chain.Cstar, event, chain.innovations)
    draws = sample_conditional(sampler, 10_000, seed=7)
    print(f"scenarios: {len(sampler.scenarios)}; P(X3 = 12 | X2 = 4) ~ {np.mean(draws.X[:, 2] == 12.0):.3f} "
          f"(exact {np.exp(-1 / 12):.3f})")

    cond = ci_test_mc(chain, [0], [2], [1], [4.0], m=2000, perms=499, seed=11)
    marg = ci_test_mc(chain, [0], [2], m=2000, perms=499, seed=11)
    print(f"X1 vs X3 given X2 = 4: p = {cond.p_value:.3f}; unconditional: p = {marg.p_value:.3f}")


if __name__ == "__main__":
    main()
