#!/usr/bin/env python3
"""Produce the sweep data behind the threshold / supply-rate / penalty plots.

Writes three CSVs into results/: the static-threshold profit curve at two
penalties, the profit-vs-supply-rate curves for both extreme policies, and
the profit-vs-penalty lines showing the affine dependence.
"""

import csv
import dataclasses
import pathlib

from stockrationing import Policy, SystemParams, average_profit, static_profit_closed_form

BASE = SystemParams(
    lam=3, mu1=4, mu2=2, capacity=100, threshold=15,
    c_hold=1, c_lost1=4, c_lost2=1, c_buy=5, c_opp=1, price=15, penalty=10,
)


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def main():
    out = pathlib.Path("results")
    out.mkdir(exist_ok=True)

    rows = []
    for pen in (10.0, 0.1):
        p = BASE.with_penalty(pen)
        for theta in range(1, p.threshold + 2):
            rows.append((pen, theta, static_profit_closed_form(p, theta)))
    write(out / "threshold_sweep.csv", ["penalty", "theta", "eta"], rows)

    rows = []
    for pen, pol in ((10.0, Policy.all_zeros(15)), (0.1, Policy.all_ones(15))):
        for lam in range(1, 67):
            p = dataclasses.replace(BASE, lam=float(lam), penalty=pen)
            rows.append((pen, lam, average_profit(p, pol)))
    write(out / "supply_rate_sweep.csv", ["penalty", "lambda", "eta"], rows)

    rows = []
    for name, pol in (("zeros", Policy.all_zeros(15)), ("ones", Policy.all_ones(15))):
        for pen in range(0, 51, 2):
            rows.append((name, pen, average_profit(BASE.with_penalty(float(pen)), pol)))
    write(out / "penalty_sweep.csv", ["policy", "penalty", "eta"], rows)


if __name__ == "__main__":
    main()
