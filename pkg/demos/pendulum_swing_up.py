"""Pendulum swing-up with three particles.

Computes the affine feedback schedule for the noisy pendulum started
hanging down at (pi, 0.1) and then applies it to the deterministic
pendulum (noise off).  The closed loop swings the pendulum up to the
unstable upright equilibrium (0, 0) at the final time.

Run:  python3 demos/pendulum_swing_up.py
"""

import numpy as np

from mkvcontrol import get_scenario, simulate_controlled, solve


def main():
    sc = get_scenario("pendulum")
    problem = sc.make_problem()
    cfg = sc.default_config()
    print(f"solving {sc.name}: M={cfg.ensemble_size}, dt={cfg.dt}, "
          f"T={problem.horizon}")
    sched, record = solve(problem, cfg)

    print("\nforward ensemble mean stays near the stable equilibrium:")
    for frac in (0.0, 0.5, 1.0):
        n = int(frac * (len(record.times) - 1))
        m = record.bar_means[n]
        print(f"  t={record.times[n]:4.2f}  mean=({m[0]: .3f}, {m[1]: .3f})")

    times, states, controls = simulate_controlled(problem, sched, rho=0.0,
                                                  n_paths=1)
    print("\ncontrolled deterministic trajectory:")
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        n = int(frac * (len(times) - 1))
        th, om = states[0, n]
        print(f"  t={times[n]:4.2f}  theta={th: .4f}  omega={om: .4f}  "
              f"u={controls[0, n, 0]: .2f}")

    final = states[0, -1]
    print(f"\nfinal state ({final[0]:.4f}, {final[1]:.4f}); "
          f"upright target is (0, 0)")


if __name__ == "__main__":
    main()
