#!/usr/bin/env python3
"""Walk the benchmark instance across penalty costs and show how the optimal
policy moves between the three regimes, cross-checked against enumeration."""

from stockrationing import SystemParams, brute_force_optimal, global_optimal

BASE = SystemParams(
    lam=3, mu1=4, mu2=2, capacity=100, threshold=15,
    c_hold=1, c_lost1=4, c_lost2=1, c_buy=5, c_opp=1, price=15, penalty=10,
)


def main():
    print(f"{'penalty':>8} {'region':>12} {'eta':>10}  policy (1 = serve Class 2)")
    for pen in (0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.5, 8.0, 10.0):
        p = BASE.with_penalty(pen)
        res = global_optimal(p)
        _, bf_eta = brute_force_optimal(p)
        tag = "" if abs(bf_eta - res.eta) <= 1e-9 * max(1, abs(bf_eta)) else "  ENUM DISAGREES"
        bits = "".join(str(d) for d in res.policy.decisions)
        print(f"{pen:8.2f} {res.region:>12} {res.eta:10.4f}  {bits}{tag}")


if __name__ == "__main__":
    main()
