"""Stationary discounted control on the scalar linear benchmark.

Equilibrates the forward sweep, then the gamma-discounted reverse
sweep with frozen forward moments, and extracts the stationary gain
A_eq.  For the linear problem the exact answer comes from the scalar
stationary Riccati equation

    R q^2 + (gamma - 2a) q - 1/S = 0,    A_eq = -q,

so the particle result can be checked line by line.  Heavier
discounting makes the controller lazier: |A_eq| shrinks toward 0 as
gamma grows, and at gamma = 0.5 the root is exactly q = 0.5.

Run:  python3 demos/infinite_horizon.py
"""

import numpy as np

from mkvcontrol import HorizonConfig, get_scenario, stationary_solve

A_COEF = -0.5  # drift coefficient b(x) = a x


def riccati_root(gamma):
    return (-(gamma - 2 * A_COEF)
            + np.sqrt((gamma - 2 * A_COEF) ** 2 + 4.0)) / 2.0


def main():
    sc = get_scenario("lq")
    problem = sc.make_problem()

    print(f"{'gamma':>6} {'A_eq (particle)':>16} {'A_eq (Riccati)':>15} "
          f"{'rel err':>8} {'fwd/rev steps':>14}")
    for gamma in (0.1, 0.5, 2.0, 10.0):
        cfg = sc.default_config()
        cfg.ensemble_size = 16
        gain, diag = stationary_solve(problem,
                                      HorizonConfig(gamma=gamma, base=cfg))
        a_eq = gain.A[0, 0]
        a_th = -riccati_root(gamma)
        print(f"{gamma:6.1f} {a_eq:16.5f} {a_th:15.5f} "
              f"{abs(a_eq - a_th) / abs(a_th):8.2%} "
              f"{diag['forward_steps']:>6}/{diag['reverse_steps']}")

    print("\nlarger gamma discounts the future away, so the stationary")
    print("controller intervenes less and |A_eq| falls toward zero.")


if __name__ == "__main__":
    main()
